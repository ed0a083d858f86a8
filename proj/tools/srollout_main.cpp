#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "srollout/commands.hpp"

using namespace srollout;

namespace {

struct Args {
  std::string command;
  std::string config;
  std::string out;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
};

std::filesystem::path output_dir(const Args& args,
                                 const ExperimentConfig* cfg) {
  if (!args.out.empty()) return args.out;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  if (cfg) return cfg->output_dir;
  return "out";
}

int run(const Args& args) {
  if (args.command == "plotdata") {
    std::optional<ExperimentConfig> cfg;
    if (!args.config.empty()) cfg = load_config(args.config);
    const auto out = output_dir(args, cfg ? &*cfg : nullptr);
    const std::filesystem::path input =
        args.input.empty() ? out / "tradeoff.csv"
                           : std::filesystem::path(args.input);
    return cmd_plotdata(input, out, std::cout);
  }
  if (args.config.empty()) throw ValidationError("--config is required");
  ExperimentConfig cfg = load_config(args.config);
  if (args.seed) cfg.seed_base = *args.seed;
  if (args.trials) cfg.trials = *args.trials;
  if (args.threads) cfg.threads = *args.threads;
  validate_config(cfg);
  const auto out = output_dir(args, &cfg);
  if (args.command == "design") return cmd_design(cfg, out, std::cout);
  if (args.command == "sweep") return cmd_sweep(cfg, out, std::cout);
  return cmd_verify(cfg, out, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rollout-based sparse actuation: design, sweep, verify"};
  Args args;
  app.add_option("command", args.command, "design | sweep | verify | plotdata")
      ->required()
      ->check(CLI::IsMember({"design", "sweep", "verify", "plotdata"}));
  app.add_option("--config", args.config, "experiment config (JSON)");
  app.add_option("--out", args.out,
                 std::string("output directory (default: $") + kOutDirEnv +
                     ", then the config's output_dir)");
  app.add_option("--input", args.input,
                 "plotdata: sweep CSV (default: <out>/tradeoff.csv)");
  app.add_option("--seed", args.seed, "seed base override");
  app.add_option("--trials", args.trials, "trial count override")
      ->check(CLI::PositiveNumber);
  app.add_option("--threads", args.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    return run(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
