#include <ffcnn/ffcnn.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace ffcnn;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int workers = 1;
};

ExperimentConfig load_config(const CommonArgs& args, long long seed_override) {
  ExperimentConfig exp = load_experiment_config(args.config_path);
  if (!args.out_dir.empty()) exp.out_dir = args.out_dir;
  if (seed_override >= 0) {
    // reseed the whole roster deterministically from one number
    exp.dataset.subset_seed = static_cast<std::uint64_t>(seed_override);
    for (std::size_t i = 0; i < exp.bases.size(); ++i)
      exp.bases[i].config.seed = static_cast<std::uint64_t>(seed_override) + i;
  }
  return exp;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feedforward-designed convolutional ensembles"};
  app.require_subcommand(1);

  CommonArgs args;
  long long seed_override = -1;
  std::string model_path;
  std::string report_kind;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config_path, "experiment config (toml)")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--workers", args.workers, "worker threads for base fan-out")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* train = app.add_subcommand("train", "fit an ensemble and save it");
  add_common(train);
  train->add_option("--seed", seed_override,
                    "override: base i gets seed+i, subset gets seed");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved model");
  add_common(eval);
  eval->add_option("--model", model_path, "path to a saved model")->required();

  CLI::App* report = app.add_subcommand("report", "write analysis tables");
  add_common(report);
  report->add_option("--model", model_path, "path to a saved model")->required();
  report->add_option("--kind", report_kind,
                     "diversity | correlation | size-sweep")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ExperimentConfig exp = load_config(args, seed_override);
    if (train->parsed()) return run_train(exp, args.workers);
    if (eval->parsed()) return run_eval(exp, model_path, args.workers);
    return run_report(exp, model_path, report_kind, args.workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
