#pragma once

// Speckle-disorder potentials on a 1D grid, their exact ground-state energies,
// and dataset persistence (CSV + JSON manifest).
//
// Units: hbar = m = 1. The K grid points sit at x_j = (j + 1) dx, j = 0..K-1,
// with dx = box_length / (K + 1), so hard walls at x = 0 and x = box_length.

#include <qrc/error.hpp>
#include <qrc/hash.hpp>
#include <qrc/io.hpp>
#include <qrc/parallel.hpp>

#include "json.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qrc {

enum class SpeckleFilter { top_hat, gaussian };
enum class Boundary { dirichlet, periodic };

NLOHMANN_JSON_SERIALIZE_ENUM(SpeckleFilter, {{SpeckleFilter::top_hat, "top_hat"},
                                             {SpeckleFilter::gaussian, "gaussian"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Boundary, {{Boundary::dirichlet, "dirichlet"},
                                        {Boundary::periodic, "periodic"}})

struct SpeckleParams {
  std::size_t k_points = 1024;
  double box_length = 1025.0;          // dx = 1 for the default grid
  double correlation_length = 512.0;   // momentum cutoff 2 pi / correlation_length
  double v0 = 1.9e-4;                  // mean intensity
  std::uint64_t dataset_seed = 1;
  std::size_t n_instances = 10000;
  SpeckleFilter filter = SpeckleFilter::top_hat;
  Boundary boundary = Boundary::dirichlet;

  [[nodiscard]] double dx() const { return box_length / static_cast<double>(k_points + 1); }

  void validate() const {
    if (k_points < 2) throw Error(Errc::invalid_config, "k_points must be >= 2");
    if (!(box_length > 0.0) || !std::isfinite(box_length))
      throw Error(Errc::invalid_config, "box_length must be positive");
    if (!(correlation_length >= 2.0 * dx()) || !std::isfinite(correlation_length))
      throw Error(Errc::invalid_config, "correlation_length must span at least two grid spacings");
    if (!(v0 > 0.0) || !std::isfinite(v0)) throw Error(Errc::invalid_config, "v0 must be > 0");
  }
};

inline void to_json(nlohmann::json& j, const SpeckleParams& p) {
  j = nlohmann::json{{"k_points", p.k_points},
                     {"box_length", p.box_length},
                     {"correlation_length", p.correlation_length},
                     {"v0", p.v0},
                     {"dataset_seed", p.dataset_seed},
                     {"n_instances", p.n_instances},
                     {"filter", p.filter},
                     {"boundary", p.boundary}};
}

inline void from_json(const nlohmann::json& j, SpeckleParams& p) {
  static constexpr std::array<std::string_view, 8> kKeys{
      "k_points", "box_length", "correlation_length", "v0",
      "dataset_seed", "n_instances", "filter", "boundary"};
  for (const auto& [key, value] : j.items())
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
      throw Error(Errc::invalid_config, "unknown speckle key '" + key + "'");
  p.k_points = j.value("k_points", p.k_points);
  p.box_length = j.value("box_length", p.box_length);
  p.correlation_length = j.value("correlation_length", p.correlation_length);
  p.v0 = j.value("v0", p.v0);
  p.dataset_seed = j.value("dataset_seed", p.dataset_seed);
  p.n_instances = j.value("n_instances", p.n_instances);
  p.filter = j.value("filter", p.filter);
  p.boundary = j.value("boundary", p.boundary);
}

/// Hash of everything that determines individual instances (instance count excluded).
inline std::string speckle_fingerprint(const SpeckleParams& p) {
  nlohmann::json j = p;
  j.erase("n_instances");
  return sha256_hex(j.dump());
}

namespace detail {

inline std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

struct FilterMode {
  long index;  // Fourier index n, k_n = 2 pi n / box_length
  double amplitude;
};

inline std::vector<FilterMode> speckle_modes(const SpeckleParams& p) {
  const double k_cut = 2.0 * std::numbers::pi / p.correlation_length;
  const double k_unit = 2.0 * std::numbers::pi / p.box_length;
  const long period = static_cast<long>(p.k_points + 1);
  const long nyquist = period / 2;
  std::vector<FilterMode> modes;
  for (long n = -nyquist; n <= nyquist; ++n) {
    if (period % 2 == 0 && n == nyquist) continue;
    const double k = k_unit * static_cast<double>(n);
    if (p.filter == SpeckleFilter::top_hat) {
      if (std::abs(k) < k_cut) modes.push_back({n, 1.0});
    } else {
      const double a = std::exp(-0.5 * (k / k_cut) * (k / k_cut));
      if (a > 1e-9) modes.push_back({n, a});
    }
  }
  return modes;
}

}  // namespace detail

/// V(x) = v0 |eta(x)|^2 / <|eta|^2>, eta a low-pass filtered complex Gaussian
/// field with independent standard normal real and imaginary parts per mode.
inline std::vector<double> generate_speckle(const SpeckleParams& p, std::uint64_t instance_index) {
  p.validate();
  const auto modes = detail::speckle_modes(p);
  const std::size_t period = p.k_points + 1;
  std::vector<std::complex<double>> roots(period);
  for (std::size_t m = 0; m < period; ++m)
    roots[m] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(m) /
                                   static_cast<double>(period));

  auto rng = detail::instance_rng(p.dataset_seed, instance_index);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::complex<double>> coeff(modes.size());
  std::vector<std::size_t> residue(modes.size());
  double norm = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double re = normal(rng);
    const double im = normal(rng);
    coeff[m] = modes[m].amplitude * std::complex<double>(re, im);
    const long p_long = static_cast<long>(period);
    residue[m] = static_cast<std::size_t>(((modes[m].index % p_long) + p_long) % p_long);
    norm += 2.0 * modes[m].amplitude * modes[m].amplitude;
  }

  std::vector<double> potential(p.k_points);
  for (std::size_t j = 0; j < p.k_points; ++j) {
    std::complex<double> eta(0.0, 0.0);
    for (std::size_t m = 0; m < modes.size(); ++m)
      eta += coeff[m] * roots[(residue[m] * (j + 1)) % period];
    potential[j] = p.v0 * std::norm(eta) / norm;
  }
  return potential;
}

namespace detail {

/// Number of eigenvalues below x of the symmetric tridiagonal matrix with
/// diagonal `diag` and constant off-diagonal `off` (Sturm sequence count).
inline std::size_t sturm_count(std::span<const double> diag, double off, double x) {
  const double off2 = off * off;
  const double tiny = std::numeric_limits<double>::min() * 1e10;
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    q = diag[i] - x - (i == 0 ? 0.0 : off2 / q);
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

/// Smallest eigenvalue by bisection on the Sturm count.
inline double lowest_tridiagonal_eigenvalue(std::span<const double> diag, double off) {
  const double min_diag = *std::min_element(diag.begin(), diag.end());
  double lo = min_diag - 2.0 * std::abs(off);
  double hi = min_diag;  // Rayleigh quotient of a unit vector bounds lambda_min from above
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(diag, off, mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Lowest eigenvalue of -(1/2) d^2/dx^2 + V on the grid (three-point Laplacian).
inline double ground_state_energy(std::span<const double> potential, const SpeckleParams& p) {
  const std::size_t k = potential.size();
  if (k < 2) throw Error(Errc::non_finite_potential, "need at least two grid points");
  for (std::size_t i = 0; i < k; ++i)
    if (!std::isfinite(potential[i]))
      throw Error(Errc::non_finite_potential, "V[" + std::to_string(i) + "] is not finite");
  const double dx = p.box_length / static_cast<double>(k + 1);
  const double kinetic = 1.0 / (dx * dx);
  const double off = -0.5 * kinetic;
  std::vector<double> diag(k);
  for (std::size_t i = 0; i < k; ++i) diag[i] = kinetic + potential[i];

  if (p.boundary == Boundary::dirichlet) return detail::lowest_tridiagonal_eigenvalue(diag, off);

  // periodic: the wrap-around couples the end points, dense solve
  const auto n = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = diag[static_cast<std::size_t>(i)];
    const Eigen::Index next = (i + 1) % n;
    h(i, next) += off;
    h(next, i) += off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

struct SpeckleInstance {
  std::vector<double> potential;
  double energy = 0.0;

  bool operator==(const SpeckleInstance&) const = default;
};

struct Dataset {
  SpeckleParams params;
  std::vector<SpeckleInstance> instances;
  double v_max = 0.0;

  [[nodiscard]] std::size_t size() const { return instances.size(); }
};

inline double compute_v_max(const std::vector<SpeckleInstance>& instances) {
  double v_max = 0.0;
  for (const auto& inst : instances)
    for (double v : inst.potential) v_max = std::max(v_max, v);
  return v_max;
}

/// Generates instances [0, count) of `p`; count defaults to p.n_instances.
inline Dataset build_dataset(const SpeckleParams& p, std::size_t workers = 1,
                             std::size_t count = std::numeric_limits<std::size_t>::max()) {
  p.validate();
  Dataset ds;
  ds.params = p;
  count = std::min(count, p.n_instances);
  ds.params.n_instances = count;
  ds.instances.resize(count);
  parallel_for_index(count, workers, [&](std::size_t i) {
    auto& inst = ds.instances[i];
    inst.potential = generate_speckle(p, i);
    inst.energy = ground_state_energy(inst.potential, p);
  });
  ds.v_max = compute_v_max(ds.instances);
  return ds;
}

// ---------------------------------------------------------------------------
// Persistence

inline std::string dataset_csv(const Dataset& ds) {
  std::string out;
  out.reserve(ds.size() * (ds.params.k_points + 1) * 24);
  for (const auto& inst : ds.instances) {
    for (double v : inst.potential) {
      append_double(out, v);
      out.push_back(',');
    }
    append_double(out, inst.energy);
    out.push_back('\n');
  }
  return out;
}

inline constexpr std::string_view kDatasetFormat = "qrc-dataset-v1";
inline constexpr std::string_view kUnitsNote =
    "hbar = m = 1; grid spacing dx = box_length / (k_points + 1); potentials and energies in "
    "units of hbar^2 / (m dx^2) when dx = 1; hard walls at x = 0 and x = box_length";

inline nlohmann::json dataset_manifest(const Dataset& ds, std::string_view csv) {
  return nlohmann::json{{"format", kDatasetFormat},
                        {"params", ds.params},
                        {"dataset_seed", ds.params.dataset_seed},
                        {"n_instances", ds.size()},
                        {"k_points", ds.params.k_points},
                        {"v_max", ds.v_max},
                        {"units", kUnitsNote},
                        {"speckle_fingerprint", speckle_fingerprint(ds.params)},
                        {"content_sha256", sha256_hex(csv)}};
}

/// Writes the CSV and its manifest; returns the content hash.
inline std::string save_dataset(const Dataset& ds, const std::filesystem::path& csv_path,
                                const std::filesystem::path& manifest_path) {
  const std::string csv = dataset_csv(ds);
  const auto manifest = dataset_manifest(ds, csv);
  write_file(csv_path, csv);
  write_file(manifest_path, manifest.dump(2) + "\n");
  return manifest["content_sha256"].get<std::string>();
}

struct LayoutDescriptor {
  char delimiter = ',';
  std::size_t k_points = 0;
  std::size_t energy_column = 0;  // 0-based column holding the energy
};

inline LayoutDescriptor layout_from_json(const nlohmann::json& j) {
  for (const auto& [key, value] : j.items())
    if (key != "delimiter" && key != "k_points" && key != "energy_column")
      throw Error(Errc::invalid_config, "unknown layout key '" + key + "'");
  LayoutDescriptor layout;
  const auto delim = j.value("delimiter", std::string(","));
  if (delim.size() != 1) throw Error(Errc::invalid_config, "delimiter must be one character");
  layout.delimiter = delim[0];
  layout.k_points = j.at("k_points").get<std::size_t>();
  layout.energy_column = j.value("energy_column", layout.k_points);
  if (layout.k_points < 1 || layout.energy_column > layout.k_points)
    throw Error(Errc::invalid_config, "energy_column must be within the k_points + 1 columns");
  return layout;
}

/// Parses delimited rows of K potential values plus one energy column.
inline std::vector<SpeckleInstance> parse_dataset_rows(std::string_view text,
                                                       const LayoutDescriptor& layout) {
  auto table = parse_numeric_table(text, layout.delimiter, layout.k_points + 1);
  std::vector<SpeckleInstance> rows(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    auto& values = table[r];
    rows[r].energy = values[layout.energy_column];
    values.erase(values.begin() + static_cast<std::ptrdiff_t>(layout.energy_column));
    rows[r].potential = std::move(values);
  }
  return rows;
}

inline Dataset load_external_dataset(const std::filesystem::path& path,
                                     const LayoutDescriptor& layout) {
  Dataset ds;
  ds.instances = parse_dataset_rows(read_file(path), layout);
  ds.params.k_points = layout.k_points;
  ds.params.n_instances = ds.size();
  ds.v_max = compute_v_max(ds.instances);
  return ds;
}

inline nlohmann::json read_manifest(const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", std::string()) != kDatasetFormat)
    throw Error(Errc::parse_error, manifest_path.string() + " is not a dataset manifest");
  return manifest;
}

/// Loads a dataset written by save_dataset, verifying the manifest hash.
inline Dataset load_dataset(const std::filesystem::path& csv_path,
                            const std::filesystem::path& manifest_path) {
  const auto manifest = read_manifest(manifest_path);
  const std::string csv = read_file(csv_path);
  Dataset ds;
  ds.params = manifest.at("params").get<SpeckleParams>();
  LayoutDescriptor layout;
  layout.k_points = ds.params.k_points;
  layout.energy_column = ds.params.k_points;
  ds.instances = parse_dataset_rows(csv, layout);
  if (sha256_hex(csv) != manifest.at("content_sha256").get<std::string>())
    throw Error(Errc::fingerprint_mismatch, csv_path.string() + " does not match its manifest");
  ds.v_max = manifest.at("v_max").get<double>();
  if (ds.v_max != compute_v_max(ds.instances))
    throw Error(Errc::fingerprint_mismatch, "manifest v_max disagrees with " + csv_path.string());
  return ds;
}

}  // namespace qrc
