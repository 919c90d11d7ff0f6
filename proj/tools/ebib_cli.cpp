// Command-line runner for experiment configs.
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "ebib/errors.hpp"
#include "ebib/experiments.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kRuntime = 3;

std::string output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("EBIB_OUTPUT_ROOT")) return env;
  return ".";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ebib: empirical Bayes hyperparameter experiments"};
  app.require_subcommand(1);

  std::string config_path, out_flag;
  bool dump_chains = false;
  int threads = -1;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Config JSON")->required();
  run->add_option("--output-root", out_flag, "Output root (default: $EBIB_OUTPUT_ROOT or .)");
  run->add_option("--threads", threads, "Worker threads (0: all cores)");
  run->add_flag("--dump-chains", dump_chains, "Write Gibbs chains as CSV");

  auto* val = app.add_subcommand("validate", "Check a config without running it");
  val->add_option("config", config_path, "Config JSON")->required();

  app.add_subcommand("list-experiments", "Print the known experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    if (app.got_subcommand("list-experiments")) {
      for (const auto& e : ebib::experiments::list_experiments()) std::cout << e.name << "\t" << e.description << "\n";
      return kOk;
    }
    auto cfg = ebib::experiments::load_config(config_path);
    if (app.got_subcommand("validate")) {
      std::cout << "ok " << cfg.experiment << "\n";
      return kOk;
    }
    if (dump_chains) cfg.dump_chains = true;
    if (threads >= 0) cfg.threads = threads;
    const auto res = ebib::experiments::run_experiment(cfg, output_root(out_flag));
    for (const auto& c : res.checks)
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.value << ")\n";
    std::cout << (res.passed ? "passed" : "failed") << ": " << res.directory << "\n";
    return kOk;
  } catch (const ebib::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
