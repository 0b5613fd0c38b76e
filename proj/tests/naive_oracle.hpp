#pragma once

// Independent reference implementation for oracle tests. Plain row-major
// std::vector matrices and explicit index loops; shares no code with the
// library (no Eigen, no qrc headers). The propagator uses a Taylor series
// with scaling and squaring rather than an eigendecomposition.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace naive {

using cx = std::complex<double>;

struct Mat {
  std::size_t n = 0;
  std::vector<cx> a;

  Mat() = default;
  explicit Mat(std::size_t dim) : n(dim), a(dim * dim, cx(0.0, 0.0)) {}
  cx& operator()(std::size_t r, std::size_t c) { return a[r * n + c]; }
  cx operator()(std::size_t r, std::size_t c) const { return a[r * n + c]; }
};

inline Mat identity(std::size_t n) {
  Mat m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

inline Mat mul(const Mat& x, const Mat& y) {
  Mat out(x.n);
  for (std::size_t i = 0; i < x.n; ++i)
    for (std::size_t k = 0; k < x.n; ++k)
      for (std::size_t j = 0; j < x.n; ++j) out(i, j) += x(i, k) * y(k, j);
  return out;
}

inline Mat adjoint(const Mat& x) {
  Mat out(x.n);
  for (std::size_t i = 0; i < x.n; ++i)
    for (std::size_t j = 0; j < x.n; ++j) out(i, j) = std::conj(x(j, i));
  return out;
}

inline Mat add(const Mat& x, const Mat& y, cx scale = 1.0) {
  Mat out = x;
  for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] += scale * y.a[i];
  return out;
}

inline Mat kron(const Mat& x, const Mat& y) {
  Mat out(x.n * y.n);
  for (std::size_t i = 0; i < x.n; ++i)
    for (std::size_t j = 0; j < x.n; ++j)
      for (std::size_t k = 0; k < y.n; ++k)
        for (std::size_t l = 0; l < y.n; ++l) out(i * y.n + k, j * y.n + l) = x(i, j) * y(k, l);
  return out;
}

inline Mat pauli(char axis) {
  Mat m(2);
  switch (axis) {
    case 'x': m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case 'y': m(0, 1) = cx(0.0, -1.0); m(1, 0) = cx(0.0, 1.0); break;
    case 'z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    default: m = identity(2);
  }
  return m;
}

/// axes[q] in {'x','y','z','i'} for qubit q (q = 0 is the leftmost factor).
inline Mat pauli_chain(const std::vector<char>& axes) {
  Mat out = identity(1);
  for (char a : axes) out = kron(out, pauli(a));
  return out;
}

inline double norm1(const Mat& m) {
  double best = 0.0;
  for (std::size_t j = 0; j < m.n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

/// exp(-i h t) by scaling and squaring of a truncated Taylor series.
inline Mat expm_minus_i(const Mat& h, double t) {
  Mat a(h.n);
  for (std::size_t i = 0; i < h.a.size(); ++i) a.a[i] = cx(0.0, -t) * h.a[i];
  int squarings = 0;
  double nrm = norm1(a);
  while (nrm > 0.25) {
    nrm *= 0.5;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (auto& v : a.a) v *= scale;
  Mat result = identity(h.n);
  Mat term = identity(h.n);
  for (int k = 1; k <= 30; ++k) {
    term = mul(term, a);
    for (auto& v : term.a) v /= static_cast<double>(k);
    result = add(result, term);
  }
  for (int s = 0; s < squarings; ++s) result = mul(result, result);
  return result;
}

inline Mat ising_hamiltonian(int n, double h, const std::vector<std::vector<double>>& j) {
  Mat out(std::size_t{1} << n);
  for (int i = 0; i < n; ++i) {
    std::vector<char> axes(static_cast<std::size_t>(n), 'i');
    axes[static_cast<std::size_t>(i)] = 'z';
    out = add(out, pauli_chain(axes), 0.5 * h);
  }
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k) {
      std::vector<char> axes(static_cast<std::size_t>(n), 'i');
      axes[static_cast<std::size_t>(i)] = 'x';
      axes[static_cast<std::size_t>(k)] = 'x';
      out = add(out, pauli_chain(axes), j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
    }
  return out;
}

/// Tr over the leftmost qubit by explicit index summation.
inline Mat trace_first(const Mat& rho) {
  const std::size_t half = rho.n / 2;
  Mat out(half);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t r = 0; r < half; ++r)
      for (std::size_t c = 0; c < half; ++c) out(r, c) += rho(b * half + r, b * half + c);
  return out;
}

inline double trace_product_real(const Mat& rho, const Mat& obs) {
  cx s(0.0, 0.0);
  for (std::size_t i = 0; i < rho.n; ++i)
    for (std::size_t k = 0; k < rho.n; ++k) s += rho(i, k) * obs(k, i);
  return s.real();
}

/// Observables in the single, same-axis pair, mixed-axis ordered pair layout.
struct Averages {
  std::vector<double> single, same, mixed;
};

inline std::vector<Mat> observable_list(int n, int group) {
  std::vector<Mat> out;
  const char axes[3] = {'x', 'y', 'z'};
  const char mixed[3][2] = {{'x', 'y'}, {'y', 'z'}, {'z', 'x'}};
  const auto un = static_cast<std::size_t>(n);
  if (group == 0) {
    for (int i = 0; i < n; ++i)
      for (char a : axes) {
        std::vector<char> s(un, 'i');
        s[static_cast<std::size_t>(i)] = a;
        out.push_back(pauli_chain(s));
      }
  } else if (group == 1) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (char a : axes) {
          std::vector<char> s(un, 'i');
          s[static_cast<std::size_t>(i)] = a;
          s[static_cast<std::size_t>(j)] = a;
          out.push_back(pauli_chain(s));
        }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        for (const auto& ab : mixed) {
          std::vector<char> s(un, 'i');
          s[static_cast<std::size_t>(i)] = ab[0];
          s[static_cast<std::size_t>(j)] = ab[1];
          out.push_back(pauli_chain(s));
        }
      }
  }
  return out;
}

/// Reset, inject each s_k = V_k / v_max into qubit 0, evolve, and average the
/// per-step expectations.
inline Averages run(int n, double h, double dt, const std::vector<std::vector<double>>& j,
                    const std::vector<double>& potential, double v_max) {
  const std::size_t dim = std::size_t{1} << n;
  const Mat u = expm_minus_i(ising_hamiltonian(n, h, j), dt);
  const Mat u_dag = adjoint(u);
  const auto singles = observable_list(n, 0);
  const auto sames = observable_list(n, 1);
  const auto mixeds = observable_list(n, 2);
  Averages avg{std::vector<double>(singles.size()), std::vector<double>(sames.size()),
               std::vector<double>(mixeds.size())};

  Mat rho(dim);
  rho(0, 0) = 1.0;
  for (double v : potential) {
    const double s = v / v_max;
    Mat psi(2);
    const double a0 = std::sqrt(1.0 - s), a1 = std::sqrt(s);
    psi(0, 0) = a0 * a0;
    psi(0, 1) = a0 * a1;
    psi(1, 0) = a1 * a0;
    psi(1, 1) = a1 * a1;
    rho = mul(mul(u, kron(psi, trace_first(rho))), u_dag);
    for (std::size_t o = 0; o < singles.size(); ++o) avg.single[o] += trace_product_real(rho, singles[o]);
    for (std::size_t o = 0; o < sames.size(); ++o) avg.same[o] += trace_product_real(rho, sames[o]);
    for (std::size_t o = 0; o < mixeds.size(); ++o) avg.mixed[o] += trace_product_real(rho, mixeds[o]);
  }
  const double k = static_cast<double>(potential.size());
  for (auto* vec : {&avg.single, &avg.same, &avg.mixed})
    for (auto& x : *vec) x /= k;
  return avg;
}

}  // namespace naive
