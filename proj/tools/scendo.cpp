#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "scendo/commands.hpp"
#include "scendo/io.hpp"

int main(int argc, char** argv) {
  using namespace scendo;
  CLI::App app{"Design under aleatory and epistemic uncertainty from scenarios"};
  app.require_subcommand(1);

  CliOptions opts;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string output;
  auto add_common = [&](CLI::App* sub, bool design) {
    sub->add_option("--config", opts.config, "JSON run configuration")->required();
    if (design) sub->add_option_function<std::string>("--design", [&](const std::string& p) { opts.design = p; },
                                                     "JSON file holding theta or theta_star")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "cap on worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--output", output, "override the output directory");
  };

  auto* solve = app.add_subcommand("solve", "solve the configured program");
  add_common(solve, false);
  auto* analyze = app.add_subcommand("analyze", "robust Monte Carlo and scenario-theory analysis of a design");
  add_common(analyze, true);
  auto* sequential = app.add_subcommand("sequential", "sequential design loop");
  add_common(sequential, false);
  auto* gen = app.add_subcommand("gen-data", "write generated training/testing sets as CSV");
  add_common(gen, false);

  auto* eps = app.add_subcommand("epsilon", "risk bound epsilon_bar(n_a, k, beta)");
  std::size_t n_a = 0, k = 0;
  double beta = 1e-4;
  eps->add_option("--n-a", n_a, "number of training scenarios")->required();
  eps->add_option("--k", k, "set complexity")->required();
  eps->add_option("--beta", beta, "confidence parameter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_code::ok : exit_code::input;
  }

  return run_command([&]() -> int {
    set_log_level(log_level_from_env());
    for (auto* sub : {solve, analyze, sequential, gen}) {
      if (!sub->parsed()) continue;
      if (sub->count("--seed")) opts.seed = seed;
      if (sub->count("--threads")) opts.threads = threads;
      if (sub->count("--output")) opts.output = output;
    }
    if (solve->parsed()) return cmd_solve(opts);
    if (analyze->parsed()) return cmd_analyze(opts);
    if (sequential->parsed()) return cmd_sequential(opts);
    if (gen->parsed()) return cmd_gen_data(opts);
    return cmd_epsilon(n_a, k, beta, std::cout);
  });
}
