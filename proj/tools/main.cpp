#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "smoothfb/synthesis.hpp"

namespace fs = std::filesystem;
using namespace smoothfb;
using namespace smoothfb::cli;

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("smoothfb"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Feedback synthesis from regularized value functions"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  const std::pair<const char*, int (*)(const RunContext&)> commands[] = {
      {"value-grid", run_value_grid}, {"synthesize", run_synthesize},     {"simulate", run_simulate},
      {"certify", run_certify},       {"nondiff-map", run_nondiff_map}, {"report", run_report}};
  const char* help[] = {"bump benchmark value grid by direct transcription",
                        "feedback synthesis plans (c1, semiconvex, semiconcave, hoelder)",
                        "closed-loop rollouts",
                        "error and escape-time certificates",
                        "non-differentiability probe along the axis",
                        "aggregate certificate tables"};
  for (std::size_t k = 0; k < std::size(commands); ++k) app.add_subcommand(commands[k].first, help[k]);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  RunContext ctx;
  try {
    ctx.config = Config::load(config_path);
    const Section root = ctx.config.root();
    ctx.seed = seed ? *seed : static_cast<std::uint64_t>(root.number("seed", 1.0, [](double v) { return v >= 0; },
                                                                     "non-negative"));
    ctx.jobs = jobs ? *jobs : root.integer("jobs", 1, 1);
    ctx.problem = read_problem(ctx.config);
    ctx.problem.build().validate();
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const ParameterError& e) {
    spdlog::error("{}: problem: {}", config_path, e.what());
    return kExitConfig;
  }

  ctx.out = out_dir;
  fs::create_directories(ctx.out);
  std::ofstream(ctx.out / "config.json", std::ios::binary) << ctx.config.text();
  const std::string name = app.get_subcommands().front()->get_name();
  std::ofstream(ctx.out / "run.json", std::ios::binary)
      << nlohmann::json{{"command", name}, {"seed", ctx.seed}, {"jobs", ctx.jobs}}.dump(2) << "\n";

  try {
    for (const auto& [cmd, fn] : commands)
      if (name == cmd) return fn(ctx);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const ParameterError& e) {
    spdlog::error("invalid parameter: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
