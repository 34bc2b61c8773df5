#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

#include "scendo/programs.hpp"
#include "scendo/rmc.hpp"
#include "scendo/scenario_theory.hpp"
#include "scendo/seqdesign.hpp"

namespace scendo {

/// A problem as the CLI sees it: the model plus what is needed to generate data for it.
struct ProblemEntry {
  ProblemSpec spec;
  ResponseFn response;        // for the moment programs; may be empty
  EpistemicSet epistemic_set;  // E
  DensityFn density;          // f_a; empty means constant
  /// Training and testing sets for (n_a, n_e, seed, n_a_test, n_e_test).
  std::function<ScenarioData(std::size_t, std::size_t, std::uint64_t, std::size_t, std::size_t)> generate;
};

using ProblemFactory = std::function<ProblemEntry(const nlohmann::json& params)>;

/// Registered problems by name; "circle" is built in.
void register_problem(const std::string& name, ProblemFactory factory);
ProblemEntry make_problem(const std::string& name, const nlohmann::json& params);
std::vector<std::string> registered_problems();

struct DataSource {
  // exactly one of the two is set
  struct Generate {
    std::size_t n_a = 0, n_e = 0, n_a_test = 0, n_e_test = 0;
  };
  struct Files {
    std::string aleatory, epistemic;
    std::optional<std::string> testing_aleatory, testing_epistemic;
  };
  std::optional<Generate> generate;
  std::optional<Files> files;
};

struct TheoryConfig {
  bool enabled = true;
  double beta = 1e-4;
  ContainmentTest test = ContainmentTest::Auto;
  std::size_t n_probe = 2000;
};

struct RunConfig {
  std::string problem_name;
  nlohmann::json problem_params;
  DataSource data;
  ProgramRequest request;
  RmcConfig rmc;
  TheoryConfig theory;
  std::optional<SdConfig> sd;
  std::optional<Vector> sd_baseline;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  std::string hash;  // FNV-1a of the canonical config document
};

/// Parses and validates a config document. Field errors throw InputError naming the field.
RunConfig parse_config(const nlohmann::json& doc, const ProblemEntry& problem);

/// FNV-1a 64-bit hash, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace scendo
