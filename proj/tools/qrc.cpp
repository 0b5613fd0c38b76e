// qrc: speckle datasets, reservoir features, linear readouts and reports.

#include <qrc/pipeline.hpp>

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Quantum reservoir regression of speckle ground-state energies"};
  app.require_subcommand(1);

  std::string config_path;
  std::size_t limit = 0;
  std::size_t workers = 0;
  std::string kind;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"generate", "generate (or ingest) the speckle dataset and its manifest"},
      {"features", "run every instance through the reservoir and write feature files"},
      {"train", "fit the linear readout on the training split"},
      {"evaluate", "score the trained readout on the test split and write report data"},
      {"run-all", "generate, features, train and evaluate in sequence"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--limit", limit, "only use the first M instances")->check(CLI::PositiveNumber);
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--kind", kind, "readout kind")->check(CLI::IsMember({"single", "two"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const qrc::RunConfig config = qrc::load_run_config(config_path);
    qrc::CommandOptions opts;
    if (limit > 0) opts.limit = limit;
    if (workers > 0) opts.workers = workers;
    if (!kind.empty()) opts.kind = qrc::parse_feature_kind(kind);

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "generate") {
      qrc::cmd_generate(config, opts);
    } else if (name == "features") {
      qrc::cmd_features(config, opts);
    } else if (name == "train") {
      qrc::cmd_train(config, opts);
    } else if (name == "evaluate") {
      qrc::cmd_evaluate(config, opts);
    } else {
      qrc::print_summary(std::cout, qrc::cmd_run_all(config, opts));
    }
  } catch (const qrc::Error& e) {
    std::cerr << "qrc: " << e.what() << '\n';
    return qrc::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "qrc: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
