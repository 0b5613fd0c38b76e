#pragma once

// Transverse-field Ising reservoir: Hamiltonian, input injection and the
// time-averaged Pauli observables read out after every injection step.

#include <qrc/error.hpp>
#include <qrc/quantum_core.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qrc {

struct ReservoirConfig {
  int n_qubits = 6;
  double h = 10.0;       // transverse field, units of j_scale
  double j_scale = 1.0;  // coupling scale J_s, sets the energy unit
  double dt = 10.0;      // evolution time between injections, units of 1/J_s
  std::uint64_t coupling_seed = 20220311;

  void validate() const {
    if (n_qubits < 2 || n_qubits > 10)
      throw Error(Errc::invalid_config, "n_qubits must be in [2, 10]");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(Errc::invalid_config, "dt must be > 0");
    if (!std::isfinite(h) || !std::isfinite(j_scale))
      throw Error(Errc::invalid_config, "h and j_scale must be finite");
  }

  [[nodiscard]] Eigen::Index dim() const { return Eigen::Index{1} << n_qubits; }
};

inline std::size_t pair_count(int n) { return static_cast<std::size_t>(n) * (n - 1) / 2; }

/// Position of the unordered pair (i, j), i < j, in lexicographic order.
inline std::size_t pair_index(int n, int i, int j) {
  return static_cast<std::size_t>(i) * (2 * n - i - 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

/// Position of the ordered pair (i, j), i != j, with i major and j minor.
inline std::size_t ordered_pair_index(int n, int i, int j) {
  return static_cast<std::size_t>(i) * (n - 1) + static_cast<std::size_t>(j < i ? j : j - 1);
}

/// J_ij for i < j, stored in lexicographic pair order.
class CouplingMatrix {
 public:
  CouplingMatrix(int n_qubits, std::vector<double> values)
      : n_(n_qubits), values_(std::move(values)) {
    if (values_.size() != pair_count(n_))
      throw Error(Errc::shape_mismatch, "coupling count does not match qubit count");
  }

  [[nodiscard]] int n_qubits() const { return n_; }
  [[nodiscard]] double operator()(int i, int j) const {
    return i < j ? values_[pair_index(n_, i, j)] : values_[pair_index(n_, j, i)];
  }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

 private:
  int n_;
  std::vector<double> values_;
};

/// Couplings drawn once, i.i.d. uniform on [-J_s/2, J_s/2].
inline CouplingMatrix sample_couplings(const ReservoirConfig& config) {
  config.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(config.coupling_seed),
                    static_cast<std::uint32_t>(config.coupling_seed >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> uniform(-0.5 * config.j_scale, 0.5 * config.j_scale);
  std::vector<double> values(pair_count(config.n_qubits));
  for (auto& v : values) v = uniform(rng);
  return {config.n_qubits, std::move(values)};
}

/// H = (h/2) sum_i Z_i + sum_{i<j} J_ij X_i X_j.
inline ComplexMatrix build_hamiltonian(const ReservoirConfig& config,
                                       const CouplingMatrix& couplings) {
  config.validate();
  const int n = config.n_qubits;
  ComplexMatrix hamiltonian = ComplexMatrix::Zero(config.dim(), config.dim());
  for (int i = 0; i < n; ++i)
    hamiltonian += 0.5 * config.h * pauli_string(n, {{i, Axis::z}});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      hamiltonian += couplings(i, j) * pauli_string(n, {{i, Axis::x}, {j, Axis::x}});
  return hamiltonian;
}

inline constexpr double kInputSlack = 1e-12;

/// Amplitudes (sqrt(1-s), sqrt(s)) of the injected qubit.
inline std::pair<double, double> input_amplitudes(double s) {
  if (!(s >= -kInputSlack && s <= 1.0 + kInputSlack))
    throw Error(Errc::input_out_of_range, "input " + std::to_string(s) + " outside [0, 1]");
  s = std::clamp(s, 0.0, 1.0);
  return {std::sqrt(1.0 - s), std::sqrt(s)};
}

/// |psi><psi| with |psi> = sqrt(1-s)|0> + sqrt(s)|1>.
inline DensityMatrix encode_input(double s) {
  const auto [a0, a1] = input_amplitudes(s);
  ComplexVector psi(2);
  psi << a0, a1;
  return DensityMatrix::trusted(psi * psi.adjoint());
}

/// |0...0><0...0|.
inline DensityMatrix reset_state(const ReservoirConfig& config) {
  config.validate();
  ComplexMatrix rho = ComplexMatrix::Zero(config.dim(), config.dim());
  rho(0, 0) = 1.0;
  return DensityMatrix::trusted(std::move(rho));
}

/// One injection step rho' = U (|psi><psi| (x) Tr_1 rho) U^dagger, evaluated as
/// W sigma W^dagger with W = psi_0 U[:, :d/2] + psi_1 U[:, d/2:]. Owns scratch
/// buffers, so one kernel per thread.
class StepKernel {
 public:
  explicit StepKernel(const UnitaryPropagator& u)
      : half_(u.dim() / 2),
        u0_(u.matrix().leftCols(half_)),
        u1_(u.matrix().rightCols(half_)),
        w_(u.dim(), half_),
        x_(u.dim(), half_) {
    if (u.dim() < 4) throw Error(Errc::dimension_too_small, "reservoir needs at least two qubits");
  }

  [[nodiscard]] Eigen::Index dim() const { return 2 * half_; }

  /// sigma is the reduced state of qubits 1..n-1; writes the full post-step state.
  void apply(const ComplexMatrix& sigma, double s, ComplexMatrix& rho_out) {
    const auto [a0, a1] = input_amplitudes(s);
    w_.noalias() = a0 * u0_ + a1 * u1_;
    x_.noalias() = w_ * sigma;
    rho_out.resize(dim(), dim());
    rho_out.triangularView<Eigen::Lower>() = x_ * w_.adjoint();
    hermitize_and_normalize(rho_out);
  }

 private:
  Eigen::Index half_;
  ComplexMatrix u0_;
  ComplexMatrix u1_;
  ComplexMatrix w_;
  ComplexMatrix x_;
};

inline DensityMatrix step(const DensityMatrix& rho, double s, const UnitaryPropagator& u) {
  if (rho.dim() != u.dim())
    throw Error(Errc::dimension_mismatch, "state and propagator dimensions differ");
  StepKernel kernel(u);
  const DensityMatrix reduced = partial_trace_first_qubit(rho);
  ComplexMatrix out;
  kernel.apply(reduced.matrix(), s, out);
  return DensityMatrix::trusted(std::move(out));
}

/// Time-averaged expectations. Layout:
///   single    [3N]         site-major, axis x,y,z minor
///   two_same  [3 N(N-1)/2] pair (i<j, lexicographic) major, xx,yy,zz minor
///   two_mixed [3 N(N-1)]   ordered pair (i!=j, i major) major, xy,yz,zx minor
struct RawObservables {
  int n_qubits = 0;
  std::vector<double> single;
  std::vector<double> two_same;
  std::vector<double> two_mixed;

  [[nodiscard]] std::size_t size() const {
    return single.size() + two_same.size() + two_mixed.size();
  }

  [[nodiscard]] double single_at(int i, Axis a) const {
    return single[3 * static_cast<std::size_t>(i) + static_cast<std::size_t>(a)];
  }
  [[nodiscard]] double same_at(int i, int j, Axis a) const {
    return two_same[3 * pair_index(n_qubits, i, j) + static_cast<std::size_t>(a)];
  }
  /// term 0: x_i y_j, 1: y_i z_j, 2: z_i x_j
  [[nodiscard]] double mixed_at(int i, int j, int term) const {
    return two_mixed[3 * ordered_pair_index(n_qubits, i, j) + static_cast<std::size_t>(term)];
  }
};

inline constexpr std::array<std::pair<Axis, Axis>, 3> kMixedAxes{
    {{Axis::x, Axis::y}, {Axis::y, Axis::z}, {Axis::z, Axis::x}}};

/// All Pauli strings read out by the reservoir, in RawObservables order.
class ObservableCache {
 public:
  explicit ObservableCache(int n_qubits) : n_(n_qubits) {
    constexpr std::array<Axis, 3> axes{Axis::x, Axis::y, Axis::z};
    for (int i = 0; i < n_; ++i)
      for (Axis a : axes) add(single_, {{i, a}});
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j)
        for (Axis a : axes) add(same_, {{i, a}, {j, a}});
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        if (i == j) continue;
        for (const auto& [a, b] : kMixedAxes) add(mixed_, {{i, a}, {j, b}});
      }
  }

  [[nodiscard]] int n_qubits() const { return n_; }
  [[nodiscard]] std::size_t size() const { return single_.size() + same_.size() + mixed_.size(); }

  [[nodiscard]] RawObservables evaluate(const ComplexMatrix& rho) const {
    RawObservables out;
    out.n_qubits = n_;
    out.single = evaluate_all(single_, rho);
    out.two_same = evaluate_all(same_, rho);
    out.two_mixed = evaluate_all(mixed_, rho);
    return out;
  }

 private:
  void add(std::vector<SparsePauli>& into, std::initializer_list<PauliFactor> factors) {
    into.emplace_back(n_, std::span<const PauliFactor>(factors.begin(), factors.size()));
  }

  static std::vector<double> evaluate_all(const std::vector<SparsePauli>& ops,
                                          const ComplexMatrix& rho) {
    std::vector<double> values;
    values.reserve(ops.size());
    for (const auto& op : ops) values.push_back(op.expectation(rho));
    return values;
  }

  int n_;
  std::vector<SparsePauli> single_;
  std::vector<SparsePauli> same_;
  std::vector<SparsePauli> mixed_;
};

/// Called after step k (1-based) with the post-step state.
using StepObserver = std::function<void(std::size_t, const ComplexMatrix&)>;

/// Feeds s_k = V_k / v_max into the reset reservoir in order and returns the
/// expectations averaged over all K steps. Expectations are linear in the
/// state, so they are taken once on the step-averaged density matrix.
inline RawObservables run_instance(std::span<const double> potential, double v_max,
                                   const UnitaryPropagator& u, const ObservableCache& cache,
                                   const StepObserver& observer = {}) {
  if (potential.empty()) throw Error(Errc::empty_potential, "potential has no points");
  if (!(v_max > 0.0) || !std::isfinite(v_max))
    throw Error(Errc::vmax_violated, "v_max must be positive and finite");
  if (u.dim() != (Eigen::Index{1} << cache.n_qubits()))
    throw Error(Errc::dimension_mismatch, "propagator and observable cache disagree");
  for (std::size_t k = 0; k < potential.size(); ++k) {
    const double v = potential[k];
    if (!(v <= v_max))
      throw Error(Errc::vmax_violated, "V[" + std::to_string(k) + "] = " + std::to_string(v) +
                                           " exceeds v_max = " + std::to_string(v_max));
    if (!(v >= 0.0))
      throw Error(Errc::input_out_of_range, "V[" + std::to_string(k) + "] is negative");
  }

  StepKernel kernel(u);
  const Eigen::Index d = u.dim();
  const Eigen::Index half = d / 2;
  ComplexMatrix sigma = ComplexMatrix::Zero(half, half);
  sigma(0, 0) = 1.0;
  ComplexMatrix rho(d, d);
  ComplexMatrix accumulated = ComplexMatrix::Zero(d, d);
  for (std::size_t k = 0; k < potential.size(); ++k) {
    kernel.apply(sigma, potential[k] / v_max, rho);
    accumulated += rho;
    sigma.noalias() = rho.topLeftCorner(half, half) + rho.bottomRightCorner(half, half);
    if (observer) observer(k + 1, rho);
  }
  accumulated /= static_cast<double>(potential.size());
  return cache.evaluate(accumulated);
}

/// Couplings, Hamiltonian, propagator and observable cache for one config.
/// Immutable after construction; share read-only between workers.
class Reservoir {
 public:
  explicit Reservoir(const ReservoirConfig& config)
      : config_(config),
        couplings_(sample_couplings(config)),
        hamiltonian_(build_hamiltonian(config, couplings_)),
        propagator_(propagator(hamiltonian_, config.dt)),
        cache_(config.n_qubits) {}

  [[nodiscard]] const ReservoirConfig& config() const { return config_; }
  [[nodiscard]] const CouplingMatrix& couplings() const { return couplings_; }
  [[nodiscard]] const ComplexMatrix& hamiltonian() const { return hamiltonian_; }
  [[nodiscard]] const UnitaryPropagator& unitary() const { return propagator_; }
  [[nodiscard]] const ObservableCache& observables() const { return cache_; }

  [[nodiscard]] RawObservables run(std::span<const double> potential, double v_max,
                                   const StepObserver& observer = {}) const {
    return run_instance(potential, v_max, propagator_, cache_, observer);
  }

 private:
  ReservoirConfig config_;
  CouplingMatrix couplings_;
  ComplexMatrix hamiltonian_;
  UnitaryPropagator propagator_;
  ObservableCache cache_;
};

}  // namespace qrc
