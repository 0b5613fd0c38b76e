#pragma once

// End-to-end orchestration: run configuration, artifact layout, and the
// generate / features / train / evaluate / run-all commands.

#include <qrc/error.hpp>
#include <qrc/hash.hpp>
#include <qrc/io.hpp>
#include <qrc/parallel.hpp>
#include <qrc/readout.hpp>
#include <qrc/reservoir.hpp>
#include <qrc/speckle.hpp>

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace qrc {

inline void log_line(const std::string& message) {
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  std::clog << "[qrc] " << message << '\n';
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  if (!j.is_object()) throw Error(Errc::invalid_config, std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(Errc::invalid_config, "unknown key '" + key + "' in " + std::string(where));
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const ReservoirConfig& c) {
  j = nlohmann::json{{"n_qubits", c.n_qubits},
                     {"h", c.h},
                     {"j_scale", c.j_scale},
                     {"dt", c.dt},
                     {"coupling_seed", c.coupling_seed}};
}

inline void from_json(const nlohmann::json& j, ReservoirConfig& c) {
  detail::reject_unknown_keys(j, {"n_qubits", "h", "j_scale", "dt", "coupling_seed"}, "reservoir");
  c.n_qubits = j.value("n_qubits", c.n_qubits);
  c.h = j.value("h", c.h);
  c.j_scale = j.value("j_scale", c.j_scale);
  c.dt = j.value("dt", c.dt);
  c.coupling_seed = j.value("coupling_seed", c.coupling_seed);
}

struct ReadoutSettings {
  std::vector<FeatureKind> kinds{FeatureKind::single, FeatureKind::two};
  double ridge = 0.0;
  double train_fraction = 0.75;
};

struct PathSettings {
  std::filesystem::path output_dir = "qrc-run";
  std::filesystem::path external_dataset;  // empty: generate speckle instead
  std::filesystem::path external_layout;
};

struct RunConfig {
  ReservoirConfig reservoir;
  SpeckleParams speckle;
  ReadoutSettings readout;
  std::size_t workers = 1;
  PathSettings paths;

  void validate() const {
    reservoir.validate();
    speckle.validate();
    if (readout.kinds.empty()) throw Error(Errc::invalid_config, "readout.kinds is empty");
    if (!(readout.ridge >= 0.0)) throw Error(Errc::invalid_config, "readout.ridge must be >= 0");
    if (!(readout.train_fraction > 0.0 && readout.train_fraction <= 1.0))
      throw Error(Errc::invalid_config, "readout.train_fraction must be in (0, 1]");
    if (workers < 1) throw Error(Errc::invalid_config, "workers must be >= 1");
    if (!paths.external_dataset.empty() && paths.external_layout.empty())
      throw Error(Errc::invalid_config, "external_dataset requires external_layout");
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : c.readout.kinds) kinds.push_back(k);
  j = nlohmann::json{
      {"reservoir", c.reservoir},
      {"speckle", c.speckle},
      {"readout",
       {{"kinds", kinds}, {"ridge", c.readout.ridge}, {"train_fraction", c.readout.train_fraction}}},
      {"workers", c.workers},
      {"paths",
       {{"output_dir", c.paths.output_dir.generic_string()},
        {"external_dataset", c.paths.external_dataset.generic_string()},
        {"external_layout", c.paths.external_layout.generic_string()}}}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  detail::reject_unknown_keys(j, {"reservoir", "speckle", "readout", "workers", "paths"}, "config");
  if (j.contains("reservoir")) c.reservoir = j.at("reservoir").get<ReservoirConfig>();
  if (j.contains("speckle")) {
    if (!j.at("speckle").is_object()) throw Error(Errc::invalid_config, "speckle must be an object");
    c.speckle = j.at("speckle").get<SpeckleParams>();
  }
  if (j.contains("readout")) {
    const auto& r = j.at("readout");
    detail::reject_unknown_keys(r, {"kinds", "ridge", "train_fraction"}, "readout");
    if (r.contains("kinds")) {
      c.readout.kinds.clear();
      for (const auto& k : r.at("kinds")) c.readout.kinds.push_back(parse_feature_kind(k.get<std::string>()));
    }
    c.readout.ridge = r.value("ridge", c.readout.ridge);
    c.readout.train_fraction = r.value("train_fraction", c.readout.train_fraction);
  }
  c.workers = j.value("workers", c.workers);
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    detail::reject_unknown_keys(p, {"output_dir", "external_dataset", "external_layout"}, "paths");
    c.paths.output_dir = p.value("output_dir", c.paths.output_dir.string());
    c.paths.external_dataset = p.value("external_dataset", std::string());
    c.paths.external_layout = p.value("external_layout", std::string());
  }
}

inline RunConfig parse_run_config(std::string_view text) {
  RunConfig config;
  try {
    config = nlohmann::json::parse(text).get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  config.validate();
  return config;
}

/// Relative paths in the file are resolved against the file's directory.
inline RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig config = parse_run_config(read_file(path));
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  auto resolve = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = (base / p).lexically_normal();
  };
  resolve(config.paths.output_dir);
  resolve(config.paths.external_dataset);
  resolve(config.paths.external_layout);
  return config;
}

/// Stable hash over the physics: reservoir settings, realized couplings and
/// speckle settings. Paths, worker count and readout settings are excluded.
inline std::string config_fingerprint(const RunConfig& config, const CouplingMatrix& couplings) {
  nlohmann::json speckle = config.speckle;
  speckle.erase("n_instances");
  const nlohmann::json j{{"reservoir", config.reservoir},
                         {"couplings", couplings.values()},
                         {"speckle", speckle}};
  return sha256_hex(j.dump());
}

struct ArtifactPaths {
  std::filesystem::path dir;

  [[nodiscard]] std::filesystem::path dataset_csv() const { return dir / "dataset.csv"; }
  [[nodiscard]] std::filesystem::path dataset_manifest() const { return dir / "dataset.manifest.json"; }
  [[nodiscard]] std::filesystem::path features_csv(FeatureKind k) const { return named("features", k, ".csv"); }
  [[nodiscard]] std::filesystem::path features_meta(FeatureKind k) const { return named("features", k, ".json"); }
  [[nodiscard]] std::filesystem::path model(FeatureKind k) const { return named("model", k, ".json"); }
  [[nodiscard]] std::filesystem::path report(FeatureKind k) const { return named("report", k, ".json"); }
  [[nodiscard]] std::filesystem::path histogram(FeatureKind k) const { return named("histogram", k, ".csv"); }
  [[nodiscard]] std::filesystem::path scatter(FeatureKind k) const { return named("scatter", k, ".csv"); }
  [[nodiscard]] std::filesystem::path summary() const { return dir / "summary.json"; }

 private:
  [[nodiscard]] std::filesystem::path named(std::string_view stem, FeatureKind k, std::string_view ext) const {
    return dir / (std::string(stem) + "_" + std::string(to_string(k)) + std::string(ext));
  }
};

struct CommandOptions {
  std::optional<std::size_t> limit;
  std::optional<std::size_t> workers;
  std::optional<FeatureKind> kind;
};

namespace detail {

inline std::size_t worker_count(const RunConfig& config, const CommandOptions& opts) {
  return std::max<std::size_t>(1, opts.workers.value_or(config.workers));
}

inline std::vector<FeatureKind> selected_kinds(const RunConfig& config, const CommandOptions& opts) {
  if (opts.kind) return {*opts.kind};
  return config.readout.kinds;
}

inline std::size_t limited(std::size_t n, const CommandOptions& opts) {
  return opts.limit ? std::min(n, *opts.limit) : n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Features files

struct FeatureTable {
  FeatureKind kind = FeatureKind::single;
  std::string config_fingerprint;
  std::string dataset_sha256;
  double v_max = 0.0;
  Eigen::MatrixXd features;  // rows = instances
  Eigen::VectorXd targets;

  [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
};

inline void write_features(const FeatureTable& table, const std::filesystem::path& csv_path,
                           const std::filesystem::path& meta_path) {
  std::string csv;
  std::vector<double> row(static_cast<std::size_t>(table.features.cols()) + 1);
  for (Eigen::Index r = 0; r < table.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.features.cols(); ++c) row[static_cast<std::size_t>(c)] = table.features(r, c);
    row.back() = table.targets(r);
    append_row(csv, row);
  }
  const nlohmann::json meta{{"format", "qrc-features-v1"},
                            {"feature_order", kFeatureOrderTag},
                            {"kind", table.kind},
                            {"n_features", table.features.cols()},
                            {"n_rows", table.features.rows()},
                            {"v_max", table.v_max},
                            {"config_fingerprint", table.config_fingerprint},
                            {"dataset_sha256", table.dataset_sha256},
                            {"content_sha256", sha256_hex(csv)}};
  write_file(csv_path, csv);
  write_file(meta_path, meta.dump(2) + "\n");
}

inline FeatureTable read_features(const std::filesystem::path& csv_path,
                                  const std::filesystem::path& meta_path) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, meta_path.string() + ": " + e.what());
  }
  if (meta.value("feature_order", std::string()) != kFeatureOrderTag)
    throw Error(Errc::parse_error, meta_path.string() + " uses an unknown feature ordering");
  FeatureTable table;
  table.kind = parse_feature_kind(meta.at("kind").get<std::string>());
  table.config_fingerprint = meta.at("config_fingerprint").get<std::string>();
  table.dataset_sha256 = meta.value("dataset_sha256", std::string());
  table.v_max = meta.at("v_max").get<double>();
  const auto n_features = meta.at("n_features").get<std::size_t>();
  const std::string csv = read_file(csv_path);
  const auto rows = parse_numeric_table(csv, ',', n_features + 1);
  if (sha256_hex(csv) != meta.at("content_sha256").get<std::string>())
    throw Error(Errc::fingerprint_mismatch, csv_path.string() + " does not match its sidecar");
  table.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_features));
  table.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < n_features; ++c)
      table.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    table.targets(static_cast<Eigen::Index>(r)) = rows[r][n_features];
  }
  return table;
}

// ---------------------------------------------------------------------------
// Report data

struct Histogram {
  std::vector<double> edges;         // bins + 1 edges from 0 to the upper limit
  std::vector<std::size_t> counts;   // one per bin
  std::size_t overflow = 0;          // values above the last edge

  [[nodiscard]] std::size_t total() const {
    std::size_t n = overflow;
    for (auto c : counts) n += c;
    return n;
  }
};

/// Uniform bins on [0, 99th percentile], plus an overflow bin above.
inline Histogram abs_error_histogram(std::span<const double> abs_errors, std::size_t bins = 50) {
  Histogram h;
  h.counts.assign(bins, 0);
  std::vector<double> sorted(abs_errors.begin(), abs_errors.end());
  std::sort(sorted.begin(), sorted.end());
  double upper = 0.0;
  if (!sorted.empty()) {
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size())));
    upper = sorted[std::max<std::size_t>(rank, 1) - 1];
    if (!(upper > 0.0)) upper = sorted.back();
  }
  if (!(upper > 0.0)) upper = 1.0;
  const double width = upper / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = width * static_cast<double>(b);
  h.edges.back() = upper;
  for (double v : abs_errors) {
    if (v > upper) {
      ++h.overflow;
      continue;
    }
    const auto b = std::min(bins - 1, static_cast<std::size_t>(v / width));
    ++h.counts[b];
  }
  return h;
}

struct Metrics {
  double mae = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

struct Report {
  FeatureKind kind = FeatureKind::single;
  std::string config_fingerprint;
  std::optional<Metrics> train;
  EvalReport test;
  std::vector<double> test_targets;
  std::size_t test_offset = 0;  // dataset row of the first test instance
  Histogram histogram;
  double mae_marker = 0.0;
};

inline nlohmann::json report_json(const Report& r) {
  nlohmann::json j{{"format", "qrc-report-v1"},
                   {"kind", r.kind},
                   {"config_fingerprint", r.config_fingerprint},
                   {"test", {{"mae", r.test.mae}, {"r2", r.test.r2}, {"n", r.test.residuals.size()}}},
                   {"mae_marker", r.mae_marker},
                   {"histogram",
                    {{"edges", r.histogram.edges},
                     {"counts", r.histogram.counts},
                     {"overflow", r.histogram.overflow}}}};
  if (r.train) j["train"] = {{"mae", r.train->mae}, {"r2", r.train->r2}, {"n", r.train->n}};
  return j;
}

inline std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_lower,bin_upper,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    append_double(out, h.edges[b]);
    out.push_back(',');
    append_double(out, h.edges[b + 1]);
    out += "," + std::to_string(h.counts[b]) + "\n";
  }
  append_double(out, h.edges.back());
  out += ",inf," + std::to_string(h.overflow) + "\n";
  return out;
}

inline std::string scatter_csv(const Report& r) {
  std::string out = "index,target,prediction\n";
  for (std::size_t i = 0; i < r.test_targets.size(); ++i) {
    out += std::to_string(r.test_offset + i) + ",";
    append_double(out, r.test_targets[i]);
    out.push_back(',');
    append_double(out, r.test.predictions[i]);
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

struct GenerateResult {
  std::string content_sha256;
  std::size_t n_instances = 0;
  double v_max = 0.0;
};

inline GenerateResult cmd_generate(const RunConfig& config, const CommandOptions& opts = {}) {
  config.validate();
  const ArtifactPaths paths{config.paths.output_dir};
  const auto t0 = std::chrono::steady_clock::now();
  Dataset ds;
  if (!config.paths.external_dataset.empty()) {
    nlohmann::json layout_json;
    try {
      layout_json = nlohmann::json::parse(read_file(config.paths.external_layout));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::invalid_config, config.paths.external_layout.string() + ": " + e.what());
    }
    const auto layout = layout_from_json(layout_json);
    if (layout.k_points != config.speckle.k_points)
      throw Error(Errc::invalid_config, "layout k_points differs from speckle.k_points");
    ds = load_external_dataset(config.paths.external_dataset, layout);
    ds.instances.resize(detail::limited(ds.size(), opts));
    ds.params = config.speckle;
    ds.params.n_instances = ds.size();
    ds.v_max = compute_v_max(ds.instances);
    log_line("loaded " + std::to_string(ds.size()) + " instances from " +
             config.paths.external_dataset.string());
  } else {
    ds = build_dataset(config.speckle, detail::worker_count(config, opts),
                       detail::limited(config.speckle.n_instances, opts));
  }
  if (ds.size() == 0) throw Error(Errc::empty_dataset, "dataset has no instances");
  if (!(ds.v_max > 0.0)) throw Error(Errc::empty_dataset, "dataset potentials are all zero");
  GenerateResult result;
  result.content_sha256 = save_dataset(ds, paths.dataset_csv(), paths.dataset_manifest());
  result.n_instances = ds.size();
  result.v_max = ds.v_max;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream msg;
  msg << "wrote " << ds.size() << " instances to " << paths.dataset_csv().string()
      << " (v_max = " << ds.v_max << ", " << std::fixed << std::setprecision(1) << secs << " s)";
  log_line(msg.str());
  return result;
}

/// Runs every dataset instance through the reservoir; returns the rows written.
inline std::size_t cmd_features(const RunConfig& config, const CommandOptions& opts = {}) {
  config.validate();
  const ArtifactPaths paths{config.paths.output_dir};
  const auto manifest = read_manifest(paths.dataset_manifest());
  if (manifest.at("speckle_fingerprint").get<std::string>() != speckle_fingerprint(config.speckle))
    throw Error(Errc::fingerprint_mismatch,
                paths.dataset_manifest().string() + " was produced with different speckle settings");
  const Dataset ds = load_dataset(paths.dataset_csv(), paths.dataset_manifest());
  const std::size_t rows = detail::limited(ds.size(), opts);
  if (rows == 0) throw Error(Errc::empty_dataset, "dataset has no instances");

  const Reservoir reservoir(config.reservoir);
  const std::string fingerprint = config_fingerprint(config, reservoir.couplings());
  const auto kinds = detail::selected_kinds(config, opts);
  const std::size_t workers = detail::worker_count(config, opts);
  log_line("running " + std::to_string(rows) + " instances through a " +
           std::to_string(config.reservoir.n_qubits) + "-qubit reservoir on " +
           std::to_string(workers) + " worker(s)");

  std::vector<RawObservables> raw(rows);
  std::atomic<std::size_t> done{0};
  const std::size_t tick = std::max<std::size_t>(1, rows / 10);
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for_index(rows, workers, [&](std::size_t i) {
    try {
      raw[i] = reservoir.run(ds.instances[i].potential, ds.v_max);
    } catch (const Error& e) {
      throw Error(e.code(), "instance " + std::to_string(i) + " (row " + std::to_string(i + 1) +
                                "): " + e.what());
    }
    const std::size_t n = done.fetch_add(1) + 1;
    if (n % tick == 0 || n == rows) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::ostringstream msg;
      msg << "features " << n << "/" << rows << " (" << std::fixed << std::setprecision(1) << secs << " s)";
      log_line(msg.str());
    }
  });

  const auto dataset_sha = manifest.at("content_sha256").get<std::string>();
  for (FeatureKind kind : kinds) {
    FeatureTable table;
    table.kind = kind;
    table.config_fingerprint = fingerprint;
    table.dataset_sha256 = dataset_sha;
    table.v_max = ds.v_max;
    const auto width = static_cast<Eigen::Index>(feature_count(kind, config.reservoir.n_qubits));
    table.features.resize(static_cast<Eigen::Index>(rows), width);
    table.targets.resize(static_cast<Eigen::Index>(rows));
    for (std::size_t i = 0; i < rows; ++i) {
      const auto fv = make_features(kind, raw[i]);
      const auto r = static_cast<Eigen::Index>(i);
      table.features.row(r) = Eigen::Map<const Eigen::RowVectorXd>(fv.values.data(), width);
      table.targets(r) = ds.instances[i].energy;
    }
    write_features(table, paths.features_csv(kind), paths.features_meta(kind));
    log_line("wrote " + paths.features_csv(kind).string());
  }
  return rows;
}

namespace detail {

inline FeatureTable load_checked_features(const RunConfig& config, const ArtifactPaths& paths,
                                          FeatureKind kind, const std::string& fingerprint,
                                          const CommandOptions& opts) {
  FeatureTable table = read_features(paths.features_csv(kind), paths.features_meta(kind));
  if (table.kind != kind)
    throw Error(Errc::kind_mismatch, paths.features_csv(kind).string() + " holds '" +
                                         std::string(to_string(table.kind)) + "' features");
  if (table.config_fingerprint != fingerprint)
    throw Error(Errc::fingerprint_mismatch,
                paths.features_csv(kind).string() + " was produced with a different configuration");
  const auto expected = static_cast<Eigen::Index>(feature_count(kind, config.reservoir.n_qubits));
  if (table.features.cols() != expected)
    throw Error(Errc::wrong_arity, paths.features_csv(kind).string() + " has " +
                                       std::to_string(table.features.cols()) + " features");
  const auto rows = static_cast<Eigen::Index>(limited(table.rows(), opts));
  if (rows == 0) throw Error(Errc::empty_dataset, paths.features_csv(kind).string() + " has no rows");
  table.features.conservativeResize(rows, Eigen::NoChange);
  table.targets.conservativeResize(rows);
  return table;
}

inline std::vector<double> predict_rows(const LinearModel& model, const Eigen::MatrixXd& features,
                                        Eigen::Index begin, Eigen::Index count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  FeatureVector fv{model.kind, std::vector<double>(static_cast<std::size_t>(features.cols()))};
  for (Eigen::Index r = 0; r < count; ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c)
      fv.values[static_cast<std::size_t>(c)] = features(begin + r, c);
    out[static_cast<std::size_t>(r)] = predict(model, fv);
  }
  return out;
}

inline std::span<const double> segment(const Eigen::VectorXd& v, Eigen::Index begin, Eigen::Index count) {
  return {v.data() + begin, static_cast<std::size_t>(count)};
}

inline std::string format_metrics(std::string_view label, const Metrics& m) {
  std::ostringstream s;
  s << label << ": MAE = " << std::setprecision(6) << m.mae << ", R^2 = " << m.r2 << " (n = " << m.n << ")";
  return s.str();
}

}  // namespace detail

struct TrainResult {
  FeatureKind kind = FeatureKind::single;
  LinearModel model;
  std::optional<Metrics> train;  // absent when fewer than two training rows
};

inline std::vector<TrainResult> cmd_train(const RunConfig& config, const CommandOptions& opts = {}) {
  config.validate();
  const ArtifactPaths paths{config.paths.output_dir};
  const Reservoir reservoir(config.reservoir);
  const std::string fingerprint = config_fingerprint(config, reservoir.couplings());
  std::vector<TrainResult> results;
  for (FeatureKind kind : detail::selected_kinds(config, opts)) {
    const FeatureTable table = detail::load_checked_features(config, paths, kind, fingerprint, opts);
    const Split s = split(table.rows(), config.readout.train_fraction);
    const auto n_train = static_cast<Eigen::Index>(s.train_size);
    if (n_train == 0) throw Error(Errc::empty_dataset, "training split is empty");
    if (s.empty_test) log_line("warning: train_fraction leaves no test instances");

    TrainResult result;
    result.kind = kind;
    const Eigen::VectorXd w =
        fit(table.features.topRows(n_train), table.targets.head(n_train), config.readout.ridge);
    result.model = LinearModel{kind, std::vector<double>(w.data(), w.data() + w.size()), table.v_max,
                               fingerprint, config.readout.ridge};
    if (n_train >= 2) {
      const auto pred = detail::predict_rows(result.model, table.features, 0, n_train);
      const auto rep = evaluate(pred, detail::segment(table.targets, 0, n_train));
      result.train = Metrics{rep.mae, rep.r2, s.train_size};
      log_line(detail::format_metrics(std::string(to_string(kind)) + " train", *result.train));
    }
    write_file(paths.model(kind), nlohmann::json(result.model).dump(2) + "\n");
    log_line("wrote " + paths.model(kind).string());
    results.push_back(std::move(result));
  }
  return results;
}

inline std::vector<Report> cmd_evaluate(const RunConfig& config, const CommandOptions& opts = {}) {
  config.validate();
  const ArtifactPaths paths{config.paths.output_dir};
  const Reservoir reservoir(config.reservoir);
  const std::string fingerprint = config_fingerprint(config, reservoir.couplings());
  std::vector<Report> reports;
  for (FeatureKind kind : detail::selected_kinds(config, opts)) {
    LinearModel model;
    try {
      model = nlohmann::json::parse(read_file(paths.model(kind))).get<LinearModel>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_error, paths.model(kind).string() + ": " + e.what());
    }
    if (model.kind != kind)
      throw Error(Errc::kind_mismatch, paths.model(kind).string() + " holds a '" +
                                           std::string(to_string(model.kind)) + "' model");
    if (model.config_fingerprint != fingerprint)
      throw Error(Errc::fingerprint_mismatch,
                  paths.model(kind).string() + " was trained under a different configuration");
    const FeatureTable table = detail::load_checked_features(config, paths, kind, fingerprint, opts);
    if (model.v_max != table.v_max)
      throw Error(Errc::fingerprint_mismatch, "model and features disagree on v_max");
    const Split s = split(table.rows(), config.readout.train_fraction);
    if (s.test_size == 0) throw Error(Errc::empty_dataset, "no test instances to evaluate");

    Report report;
    report.kind = kind;
    report.config_fingerprint = fingerprint;
    const auto n_train = static_cast<Eigen::Index>(s.train_size);
    const auto n_test = static_cast<Eigen::Index>(s.test_size);
    if (n_train >= 2) {
      const auto pred = detail::predict_rows(model, table.features, 0, n_train);
      const auto rep = evaluate(pred, detail::segment(table.targets, 0, n_train));
      report.train = Metrics{rep.mae, rep.r2, s.train_size};
    }
    const auto pred = detail::predict_rows(model, table.features, n_train, n_test);
    const auto targets = detail::segment(table.targets, n_train, n_test);
    report.test = evaluate(pred, targets);
    report.test_targets.assign(targets.begin(), targets.end());
    report.test_offset = s.train_size;
    std::vector<double> abs_errors(report.test.residuals.size());
    std::transform(report.test.residuals.begin(), report.test.residuals.end(), abs_errors.begin(),
                   [](double r) { return std::abs(r); });
    report.histogram = abs_error_histogram(abs_errors);
    report.mae_marker = report.test.mae;

    write_file(paths.report(kind), report_json(report).dump(2) + "\n");
    write_file(paths.histogram(kind), histogram_csv(report.histogram));
    write_file(paths.scatter(kind), scatter_csv(report));
    log_line(detail::format_metrics(std::string(to_string(kind)) + " test",
                                    Metrics{report.test.mae, report.test.r2, s.test_size}));
    reports.push_back(std::move(report));
  }
  return reports;
}

struct RunSummary {
  std::vector<Report> reports;
};

inline void print_summary(std::ostream& out, const RunSummary& summary) {
  out << std::left << std::setw(8) << "model" << std::setw(7) << "split" << std::right
      << std::setw(14) << "MAE" << std::setw(12) << "R^2" << std::setw(8) << "n" << '\n';
  auto line = [&](FeatureKind kind, std::string_view split_name, const Metrics& m) {
    out << std::left << std::setw(8) << to_string(kind) << std::setw(7) << split_name << std::right
        << std::setw(14) << std::setprecision(6) << m.mae << std::setw(12) << std::setprecision(4)
        << m.r2 << std::setw(8) << m.n << '\n';
  };
  for (const auto& r : summary.reports) {
    if (r.train) line(r.kind, "train", *r.train);
    line(r.kind, "test", Metrics{r.test.mae, r.test.r2, r.test.residuals.size()});
  }
}

inline nlohmann::json summary_json(const RunSummary& summary) {
  nlohmann::json models = nlohmann::json::object();
  for (const auto& r : summary.reports) {
    nlohmann::json entry{{"test", {{"mae", r.test.mae}, {"r2", r.test.r2}, {"n", r.test.residuals.size()}}}};
    if (r.train) entry["train"] = {{"mae", r.train->mae}, {"r2", r.train->r2}, {"n", r.train->n}};
    models[std::string(to_string(r.kind))] = entry;
  }
  return nlohmann::json{{"format", "qrc-summary-v1"}, {"models", models}};
}

inline RunSummary cmd_run_all(const RunConfig& config, const CommandOptions& opts = {}) {
  cmd_generate(config, opts);
  cmd_features(config, opts);
  cmd_train(config, opts);
  RunSummary summary{cmd_evaluate(config, opts)};
  write_file(ArtifactPaths{config.paths.output_dir}.summary(), summary_json(summary).dump(2) + "\n");
  return summary;
}

}  // namespace qrc
