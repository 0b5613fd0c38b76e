#pragma once

// Polynomial feature maps over the time-averaged observables, the linear
// least-squares readout, and its error metrics.

#include <qrc/error.hpp>
#include <qrc/reservoir.hpp>

#include "json.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace qrc {

enum class FeatureKind { single, two };

NLOHMANN_JSON_SERIALIZE_ENUM(FeatureKind, {{FeatureKind::single, "single"},
                                           {FeatureKind::two, "two"}})

inline constexpr std::string_view kFeatureOrderTag = "qrc-features-v1";

inline std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::single ? "single" : "two";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "single") return FeatureKind::single;
  if (s == "two") return FeatureKind::two;
  throw Error(Errc::kind_mismatch, "unknown feature kind '" + std::string(s) + "'");
}

/// 1 + 10 N for single-qubit features, 1 + 10 N(N-1)/2 + 10 N(N-1) for two-qubit.
inline std::size_t feature_count(FeatureKind kind, int n_qubits) {
  const auto n = static_cast<std::size_t>(n_qubits);
  return kind == FeatureKind::single ? 1 + 10 * n : 1 + 10 * pair_count(n_qubits) + 10 * n * (n - 1);
}

struct FeatureVector {
  FeatureKind kind = FeatureKind::single;
  std::vector<double> values;  // values[0] == 1 (bias)
};

namespace detail {

/// a, b, c, a^2, b^2, c^2, ab, bc, ca, abc
inline void append_cubic_terms(std::vector<double>& out, double a, double b, double c) {
  out.insert(out.end(), {a, b, c, a * a, b * b, c * c, a * b, b * c, c * a, a * b * c});
}

}  // namespace detail

/// Bias, then for each site the ten terms over (<x_i>, <y_i>, <z_i>).
inline FeatureVector features_single(const RawObservables& raw) {
  const int n = raw.n_qubits;
  if (n < 1 || raw.single.size() != 3 * static_cast<std::size_t>(n))
    throw Error(Errc::wrong_arity, "expected " + std::to_string(3 * n) +
                                       " single-qubit averages, got " +
                                       std::to_string(raw.single.size()));
  FeatureVector fv{FeatureKind::single, {1.0}};
  fv.values.reserve(feature_count(FeatureKind::single, n));
  for (int i = 0; i < n; ++i)
    detail::append_cubic_terms(fv.values, raw.single_at(i, Axis::x), raw.single_at(i, Axis::y),
                               raw.single_at(i, Axis::z));
  return fv;
}

/// Bias; for each pair i<j the ten terms over (<x_i x_j>, <y_i y_j>, <z_i z_j>);
/// then for each ordered pair i!=j the ten terms over (<x_i y_j>, <y_i z_j>, <z_i x_j>).
inline FeatureVector features_two(const RawObservables& raw) {
  const int n = raw.n_qubits;
  const std::size_t pairs = pair_count(n);
  if (n < 2 || raw.two_same.size() != 3 * pairs || raw.two_mixed.size() != 6 * pairs)
    throw Error(Errc::wrong_arity, "two-qubit averages do not match " + std::to_string(n) +
                                       " qubits");
  FeatureVector fv{FeatureKind::two, {1.0}};
  fv.values.reserve(feature_count(FeatureKind::two, n));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      detail::append_cubic_terms(fv.values, raw.same_at(i, j, Axis::x), raw.same_at(i, j, Axis::y),
                                 raw.same_at(i, j, Axis::z));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j)
        detail::append_cubic_terms(fv.values, raw.mixed_at(i, j, 0), raw.mixed_at(i, j, 1),
                                   raw.mixed_at(i, j, 2));
  return fv;
}

inline FeatureVector make_features(FeatureKind kind, const RawObservables& raw) {
  return kind == FeatureKind::single ? features_single(raw) : features_two(raw);
}

/// Minimizes |y - F w|^2 + ridge |w[1:]|^2 (column 0 is the unpenalized bias).
/// Complete orthogonal decomposition, so rank-deficient F with ridge = 0
/// yields the minimum-norm solution.
inline Eigen::VectorXd fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                           double ridge = 0.0) {
  if (features.rows() < 1 || features.cols() < 1)
    throw Error(Errc::empty_dataset, "no training rows");
  if (features.rows() != targets.size())
    throw Error(Errc::shape_mismatch, "feature rows and targets differ in count");
  if (!features.allFinite() || !targets.allFinite())
    throw Error(Errc::non_finite_input, "features or targets contain NaN/Inf");
  if (!(ridge >= 0.0) || !std::isfinite(ridge))
    throw Error(Errc::invalid_config, "ridge must be a finite value >= 0");

  if (ridge == 0.0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(features);
    return cod.solve(targets);
  }
  const Eigen::Index m = features.rows();
  const Eigen::Index p = features.cols();
  Eigen::MatrixXd augmented = Eigen::MatrixXd::Zero(m + p - 1, p);
  augmented.topRows(m) = features;
  for (Eigen::Index c = 1; c < p; ++c) augmented(m + c - 1, c) = std::sqrt(ridge);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + p - 1);
  rhs.head(m) = targets;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(augmented);
  return cod.solve(rhs);
}

struct LinearModel {
  FeatureKind kind = FeatureKind::single;
  std::vector<double> weights;
  double v_max = 0.0;
  std::string config_fingerprint;
  double ridge = 0.0;
};

inline void to_json(nlohmann::json& j, const LinearModel& m) {
  j = nlohmann::json{{"format", "qrc-model-v1"},
                     {"feature_order", kFeatureOrderTag},
                     {"kind", m.kind},
                     {"weights", m.weights},
                     {"v_max", m.v_max},
                     {"ridge", m.ridge},
                     {"config_fingerprint", m.config_fingerprint}};
}

inline void from_json(const nlohmann::json& j, LinearModel& m) {
  if (j.value("feature_order", std::string()) != kFeatureOrderTag)
    throw Error(Errc::parse_error, "model uses an unknown feature ordering");
  m.kind = parse_feature_kind(j.at("kind").get<std::string>());
  m.weights = j.at("weights").get<std::vector<double>>();
  m.v_max = j.at("v_max").get<double>();
  m.ridge = j.value("ridge", 0.0);
  m.config_fingerprint = j.at("config_fingerprint").get<std::string>();
  if (!(m.v_max > 0.0)) throw Error(Errc::parse_error, "model v_max must be positive");
}

inline double predict(const LinearModel& model, const FeatureVector& features) {
  if (model.kind != features.kind)
    throw Error(Errc::kind_mismatch, "model is '" + std::string(to_string(model.kind)) +
                                         "' but features are '" +
                                         std::string(to_string(features.kind)) + "'");
  if (model.weights.size() != features.values.size())
    throw Error(Errc::wrong_arity, "model has " + std::to_string(model.weights.size()) +
                                       " weights for " + std::to_string(features.values.size()) +
                                       " features");
  double sum = 0.0;
  for (std::size_t i = 0; i < model.weights.size(); ++i)
    sum += model.weights[i] * features.values[i];
  return sum;
}

struct EvalReport {
  double mae = 0.0;
  double r2 = 0.0;
  std::vector<double> residuals;    // E - E~
  std::vector<double> predictions;  // E~
};

/// MAE and R^2, with the mean taken over the evaluated set.
inline EvalReport evaluate(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw Error(Errc::shape_mismatch, "predictions and targets differ in length");
  const std::size_t m = targets.size();
  if (m < 2) throw Error(Errc::empty_dataset, "need at least two instances to evaluate");
  double mean = 0.0;
  for (double t : targets) mean += t;
  mean /= static_cast<double>(m);
  EvalReport report;
  report.predictions.assign(predictions.begin(), predictions.end());
  report.residuals.resize(m);
  double abs_sum = 0.0;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double r = targets[l] - predictions[l];
    report.residuals[l] = r;
    abs_sum += std::abs(r);
    ss_res += r * r;
    ss_tot += (mean - targets[l]) * (mean - targets[l]);
  }
  if (!(ss_tot > 0.0)) throw Error(Errc::degenerate_targets, "targets have zero variance");
  report.mae = abs_sum / static_cast<double>(m);
  report.r2 = 1.0 - ss_res / ss_tot;
  return report;
}

struct Split {
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  bool empty_test = false;  // warning condition, not an error

  [[nodiscard]] std::size_t test_begin() const { return train_size; }
};

/// Contiguous prefix for training and the remaining suffix for testing.
inline Split split(std::size_t n_instances, double train_fraction = 0.75) {
  if (n_instances == 0) throw Error(Errc::empty_dataset, "cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw Error(Errc::invalid_config, "train_fraction must be in (0, 1]");
  Split s;
  s.train_size = std::min<std::size_t>(
      n_instances,
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n_instances) + 1e-9)));
  s.test_size = n_instances - s.train_size;
  s.empty_test = s.test_size == 0;
  return s;
}

}  // namespace qrc
