#pragma once

// Dense quantum-state primitives for small spin registers.
//
// Basis convention: computational basis with qubit 0 as the most significant
// tensor factor, so the basis index of |b_0 b_1 ... b_{n-1}> is
// sum_q b_q 2^(n-1-q). sigma^z|0> = |0>, sigma^z|1> = -|1>.

#include <qrc/error.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace qrc {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermiticityTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kImaginaryResidueTol = 1e-10;

namespace detail {

inline bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(Eigen::Index n) {
  int bits = 0;
  while ((Eigen::Index{1} << bits) < n) ++bits;
  return bits;
}

}  // namespace detail

/// Largest entry of |m - m^dagger|.
inline double hermiticity_error(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

struct EigenDecomposition {
  RealVector eigenvalues;      // ascending
  ComplexMatrix eigenvectors;  // columns
};

inline EigenDecomposition hermitian_eig(const ComplexMatrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0)
    throw Error(Errc::not_hermitian, "matrix is not square");
  const double err = hermiticity_error(h);
  if (!(err <= kHermiticityTol))
    throw Error(Errc::not_hermitian, "||h - h^dagger||_max = " + std::to_string(err));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  if (solver.info() != Eigen::Success)
    throw Error(Errc::not_hermitian, "eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

class UnitaryPropagator {
 public:
  UnitaryPropagator(ComplexMatrix u, double dt) : matrix_(std::move(u)), dt_(dt) {}

  [[nodiscard]] const ComplexMatrix& matrix() const { return matrix_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] Eigen::Index dim() const { return matrix_.rows(); }

  [[nodiscard]] double unitarity_error() const {
    const ComplexMatrix id = ComplexMatrix::Identity(dim(), dim());
    return max_abs_diff(matrix_ * matrix_.adjoint(), id);
  }

 private:
  ComplexMatrix matrix_;
  double dt_;
};

/// exp(-i h dt) from the spectral decomposition of h.
inline UnitaryPropagator propagator(const ComplexMatrix& h, double dt) {
  const auto eig = hermitian_eig(h);
  ComplexVector phases(eig.eigenvalues.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k)
    phases(k) = std::polar(1.0, -eig.eigenvalues(k) * dt);
  ComplexMatrix u = eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
  return {std::move(u), dt};
}

/// Re-Hermitize from the lower triangle and renormalize the trace to one.
inline void hermitize_and_normalize(ComplexMatrix& m) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index c = 0; c < d; ++c) {
    m(c, c) = Complex(m(c, c).real(), 0.0);
    for (Eigen::Index r = c + 1; r < d; ++r) m(c, r) = std::conj(m(r, c));
  }
  const double tr = m.diagonal().real().sum();
  m /= tr;
}

class DensityMatrix {
 public:
  struct InvariantReport {
    double hermiticity_error = 0.0;
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;

    [[nodiscard]] bool ok() const {
      return hermiticity_error <= kHermiticityTol && trace_error <= kTraceTol &&
             min_eigenvalue >= -kPsdTol;
    }
  };

  /// Validates Hermiticity, unit trace and positivity.
  static DensityMatrix checked(ComplexMatrix m) {
    if (m.rows() != m.cols() || !detail::is_power_of_two(m.rows()))
      throw Error(Errc::dimension_mismatch, "density matrix dimension must be a power of two");
    DensityMatrix rho(std::move(m));
    const auto report = rho.check();
    if (report.hermiticity_error > kHermiticityTol)
      throw Error(Errc::not_hermitian, "density matrix is not Hermitian");
    if (!report.ok())
      throw Error(Errc::non_finite_input, "density matrix violates trace or positivity");
    return rho;
  }

  /// For matrices produced by trace- and Hermiticity-preserving maps.
  static DensityMatrix trusted(ComplexMatrix m) { return DensityMatrix(std::move(m)); }

  static DensityMatrix pure(const ComplexVector& psi) {
    return DensityMatrix(psi * psi.adjoint() / psi.squaredNorm());
  }

  [[nodiscard]] const ComplexMatrix& matrix() const { return matrix_; }
  [[nodiscard]] Eigen::Index dim() const { return matrix_.rows(); }
  [[nodiscard]] int n_qubits() const { return detail::log2_exact(dim()); }
  [[nodiscard]] double trace() const { return matrix_.diagonal().real().sum(); }
  [[nodiscard]] double purity() const { return (matrix_ * matrix_).trace().real(); }

  [[nodiscard]] InvariantReport check() const {
    InvariantReport r;
    r.hermiticity_error = hermiticity_error(matrix_);
    r.trace_error = std::abs(matrix_.trace() - Complex(1.0, 0.0));
    const ComplexMatrix sym = 0.5 * (matrix_ + matrix_.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym, Eigen::EigenvaluesOnly);
    r.min_eigenvalue = solver.eigenvalues()(0);
    return r;
  }

 private:
  explicit DensityMatrix(ComplexMatrix m) : matrix_(std::move(m)) {}

  ComplexMatrix matrix_;
};

/// Traces out qubit 0 (the most significant factor).
inline DensityMatrix partial_trace_first_qubit(const DensityMatrix& rho) {
  const Eigen::Index d = rho.dim();
  if (d < 4) throw Error(Errc::dimension_too_small, "partial trace needs at least two qubits");
  const Eigen::Index half = d / 2;
  const auto& m = rho.matrix();
  ComplexMatrix reduced = m.topLeftCorner(half, half) + m.bottomRightCorner(half, half);
  return DensityMatrix::trusted(std::move(reduced));
}

/// Tr(rho obs) = sum_ij rho_ij obs_ji.
inline double expectation(const ComplexMatrix& rho, const ComplexMatrix& obs) {
  if (rho.rows() != obs.cols() || rho.cols() != obs.rows())
    throw Error(Errc::dimension_mismatch, "observable and state dimensions differ");
  const Complex value = rho.cwiseProduct(obs.transpose()).sum();
  if (std::abs(value.imag()) > kImaginaryResidueTol)
    throw Error(Errc::non_real_expectation, "imaginary part " + std::to_string(value.imag()));
  return value.real();
}

inline double expectation(const DensityMatrix& rho, const ComplexMatrix& obs) {
  return expectation(rho.matrix(), obs);
}

enum class Axis : std::uint8_t { x, y, z };

inline constexpr char axis_name(Axis a) { return a == Axis::x ? 'x' : a == Axis::y ? 'y' : 'z'; }

struct PauliFactor {
  int site;  // 0-based, 0 = most significant qubit
  Axis axis;
};

/// A Pauli string stored as a bit-flip mask plus one phase per column:
/// P(c ^ flip, c) = phase[c], every other entry zero.
class SparsePauli {
 public:
  SparsePauli(int n_qubits, std::span<const PauliFactor> factors) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 20)
      throw Error(Errc::site_out_of_range, "qubit count must be in [1, 20]");
    std::uint64_t z_mask = 0;
    std::uint64_t y_mask = 0;
    std::uint64_t seen = 0;
    for (const auto& f : factors) {
      if (f.site < 0 || f.site >= n_qubits)
        throw Error(Errc::site_out_of_range, "site " + std::to_string(f.site));
      const std::uint64_t bit = std::uint64_t{1} << (n_qubits - 1 - f.site);
      if (seen & bit) throw Error(Errc::duplicate_site, "site " + std::to_string(f.site));
      seen |= bit;
      switch (f.axis) {
        case Axis::x: flip_ |= bit; break;
        case Axis::y: flip_ |= bit; y_mask |= bit; break;
        case Axis::z: z_mask |= bit; break;
      }
    }
    const std::size_t dim = std::size_t{1} << n_qubits;
    phase_.resize(dim);
    for (std::size_t col = 0; col < dim; ++col) {
      Complex value(1.0, 0.0);
      if (std::popcount(col & z_mask) % 2 == 1) value = -value;
      // sigma^y|0> = i|1>, sigma^y|1> = -i|0>
      for (std::uint64_t bits = y_mask; bits != 0; bits &= bits - 1) {
        const std::uint64_t b = bits & (~bits + 1);
        value *= (col & b) ? Complex(0.0, -1.0) : Complex(0.0, 1.0);
      }
      phase_[col] = value;
    }
  }

  [[nodiscard]] int n_qubits() const { return n_qubits_; }

  [[nodiscard]] ComplexMatrix dense() const {
    const auto dim = static_cast<Eigen::Index>(phase_.size());
    ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c)
      p(static_cast<Eigen::Index>(static_cast<std::uint64_t>(c) ^ flip_), c) = phase_[c];
    return p;
  }

  /// Tr(rho P) = sum_c rho(c, c ^ flip) phase[c].
  [[nodiscard]] double expectation(const ComplexMatrix& rho) const {
    const auto dim = static_cast<Eigen::Index>(phase_.size());
    if (rho.rows() != dim || rho.cols() != dim)
      throw Error(Errc::dimension_mismatch, "observable and state dimensions differ");
    Complex value(0.0, 0.0);
    for (Eigen::Index c = 0; c < dim; ++c)
      value += rho(c, static_cast<Eigen::Index>(static_cast<std::uint64_t>(c) ^ flip_)) * phase_[c];
    if (std::abs(value.imag()) > kImaginaryResidueTol)
      throw Error(Errc::non_real_expectation, "imaginary part " + std::to_string(value.imag()));
    return value.real();
  }

 private:
  int n_qubits_;
  std::uint64_t flip_ = 0;
  std::vector<Complex> phase_;
};

/// Pauli matrices on the listed sites, identity elsewhere.
inline ComplexMatrix pauli_string(int n_qubits, std::span<const PauliFactor> factors) {
  return SparsePauli(n_qubits, factors).dense();
}

inline ComplexMatrix pauli_string(int n_qubits, std::initializer_list<PauliFactor> factors) {
  return pauli_string(n_qubits, std::span<const PauliFactor>(factors.begin(), factors.size()));
}

}  // namespace qrc
