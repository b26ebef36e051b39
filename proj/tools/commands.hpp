#ifndef SMOOTHFB_TOOLS_COMMANDS_HPP_
#define SMOOTHFB_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>

#include "config.hpp"

namespace smoothfb::cli {

struct RunContext {
  Config config;
  std::filesystem::path out;
  std::uint64_t seed = 1;
  int jobs = 1;
  ProblemSpec problem;
};

// Each returns an exit code (kExitOk or kExitCertificate); config problems
// surface as ConfigError.
int run_value_grid(const RunContext& ctx);
int run_synthesize(const RunContext& ctx);
int run_simulate(const RunContext& ctx);
int run_certify(const RunContext& ctx);
int run_nondiff_map(const RunContext& ctx);
int run_report(const RunContext& ctx);

}  // namespace smoothfb::cli

#endif  // SMOOTHFB_TOOLS_COMMANDS_HPP_
