#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"
#include "scendo/config.hpp"

namespace scendo {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int input = 2;
inline constexpr int infeasible = 3;
inline constexpr int spec_not_met = 4;
}  // namespace exit_code

struct CliOptions {
  std::string config;
  std::optional<std::string> design;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> output;
};

/// Config document, problem, parsed config and data, with --seed/--output applied first so
/// the config hash covers them.
struct LoadedRun {
  nlohmann::json doc;
  ProblemEntry problem;
  RunConfig cfg;
  ScenarioData data;
};

LoadedRun load_run(const CliOptions& opts);
LoadedRun load_run(nlohmann::json doc, const CliOptions& opts);

/// Each command writes its files into the config's output_dir and returns an exit code.
/// Input problems throw InputError; run_command maps exceptions onto exit codes.
int cmd_solve(const CliOptions& opts);
int cmd_analyze(const CliOptions& opts);
int cmd_sequential(const CliOptions& opts);
int cmd_gen_data(const CliOptions& opts);
int cmd_epsilon(std::size_t n_a, std::size_t k, double beta, std::ostream& out);

/// Runs fn and converts InputError to 2 and other exceptions to 1, logging the message.
int run_command(const std::function<int()>& fn);

}  // namespace scendo
