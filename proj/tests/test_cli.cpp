#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "scendo/commands.hpp"
#include "scendo/io.hpp"

using namespace scendo;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("scendo_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const auto p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

json small_config(const fs::path& out) {
  json doc = json::parse(R"({
    "problem": {"name": "circle"},
    "data": {"generate": {"n_a": 12, "n_e": 6, "n_a_test": 400, "n_e_test": 20}},
    "formulation": "risk-averse-local",
    "alphas": {"alpha_a": 0.0, "alpha_e": 0.0},
    "solver": {"n_starts": 1},
    "scenario_theory": {"containment_test": "sampling", "n_probe": 200},
    "seed": 3
  })");
  doc["output_dir"] = out.string();
  return doc;
}

int run(int (*cmd)(const CliOptions&), const CliOptions& o) {
  return run_command([&] { return cmd(o); });
}

}  // namespace

TEST_CASE("solve writes deterministic reports") {
  set_log_level(LogLevel::Error);
  const auto dir = scratch("solve");
  CliOptions o;
  o.config = write_config(dir, small_config(dir / "a")).string();
  CHECK(run(cmd_solve, o) == exit_code::ok);
  o.output = (dir / "b").string();
  CHECK(run(cmd_solve, o) == exit_code::ok);
  const json a = json::parse(slurp(dir / "a" / "solution.json"));
  const json b = json::parse(slurp(dir / "b" / "solution.json"));
  CHECK(a["theta_star"] == b["theta_star"]);
  CHECK(a["objective"] == b["objective"]);
  CHECK(a["provenance"]["version"] == SCENDO_VERSION);
  CHECK(a["provenance"]["config_hash"] != b["provenance"]["config_hash"]);  // --output is part of the hash
  CHECK(fs::exists(dir / "a" / "outliers.csv"));

  o.output = std::nullopt;
  const auto again = dir / "again";
  fs::create_directories(again);
  fs::copy_file(dir / "a" / "solution.json", again / "first.json");
  CHECK(run(cmd_solve, o) == exit_code::ok);
  CHECK(slurp(dir / "a" / "solution.json") == slurp(again / "first.json"));
}

TEST_CASE("input errors exit with 2") {
  set_log_level(LogLevel::Error);
  const auto dir = scratch("bad");
  std::ofstream(dir / "broken.json") << "{\"problem\": ";
  CliOptions o;
  o.config = (dir / "broken.json").string();
  CHECK(run(cmd_solve, o) == exit_code::input);

  auto doc = small_config(dir);
  doc["alphas"]["alpha_a"] = 2.0;
  o.config = write_config(dir, doc).string();
  CHECK(run(cmd_solve, o) == exit_code::input);

  o.config = (dir / "nope.json").string();
  CHECK(run(cmd_solve, o) == exit_code::input);
}

TEST_CASE("infeasible solve exits with 3 and a suggestion") {
  set_log_level(LogLevel::Error);
  const auto dir = scratch("infeasible");
  auto doc = small_config(dir);
  doc["problem"]["radius_limit"] = 0.3;
  doc["formulation"] = "risk-agnostic-local";
  CliOptions o;
  o.config = write_config(dir, doc).string();
  CHECK(run(cmd_solve, o) == exit_code::infeasible);
  const json s = json::parse(slurp(dir / "solution.json"));
  REQUIRE(s.contains("suggested_alpha_a"));
  CHECK(s["suggested_alpha_a"][0].get<double>() > 0.0);
}

TEST_CASE("analyze checks the design and flags non-IID training") {
  set_log_level(LogLevel::Error);
  const auto dir = scratch("analyze");
  CliOptions o;
  o.config = write_config(dir, small_config(dir)).string();
  std::ofstream(dir / "wrong.json") << R"({"theta": [1.0, 2.0]})";
  o.design = (dir / "wrong.json").string();
  CHECK(run(cmd_analyze, o) == exit_code::input);

  std::ofstream(dir / "sd.json") << R"({"theta": [0.3, 0.2, 3.0], "iid": false})";
  o.design = (dir / "sd.json").string();
  CHECK(run(cmd_analyze, o) == exit_code::ok);
  const json rb = json::parse(slurp(dir / "risk_bound.json"));
  CHECK(rb["validity"] == "not-valid-non-iid");
  const std::string csv = slurp(dir / "rmc_report.csv");
  CHECK(csv.rfind("requirement,a_lo,a_hi,b_lo,b_hi,c,d_lo,d_hi\n", 0) == 0);

  CHECK(run(cmd_solve, CliOptions{o.config, {}, {}, {}, {}}) == exit_code::ok);
  o.design = (dir / "solution.json").string();
  CHECK(run(cmd_analyze, o) == exit_code::ok);
  const json valid = json::parse(slurp(dir / "risk_bound.json"));
  CHECK(valid["validity"] == "valid");
  const auto n_s = valid["n_s"].get<std::size_t>(), n_v = valid["n_v"].get<std::size_t>();
  const auto s_e = valid["s_E"].get<std::size_t>();
  CHECK(s_e >= std::max(n_s, n_v));
  CHECK(s_e <= n_s + n_v);
}

TEST_CASE("sequential without meeting the spec exits with 4") {
  set_log_level(LogLevel::Error);
  const auto dir = scratch("sequential");
  auto doc = small_config(dir);
  doc["sd"] = {{"max_iter", 1}, {"n_e", 10}, {"baseline", {0.0, 0.0, 1.0}}};
  CliOptions o;
  o.config = write_config(dir, doc).string();
  CHECK(run(cmd_sequential, o) == exit_code::spec_not_met);
  const std::string trace = slurp(dir / "sd_trace.csv");
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 2);  // header and one iteration
  const json fd = json::parse(slurp(dir / "final_design.json"));
  CHECK(fd["iid"] == false);

  doc.erase("sd");
  o.config = write_config(dir, doc).string();
  CHECK(run(cmd_sequential, o) == exit_code::input);
}

TEST_CASE("gen-data and epsilon") {
  set_log_level(LogLevel::Error);
  const auto dir = scratch("gen");
  CliOptions o;
  o.config = write_config(dir, small_config(dir)).string();
  CHECK(run(cmd_gen_data, o) == exit_code::ok);
  CHECK(read_csv_matrix((dir / "aleatory.csv").string()).rows() == 12);
  CHECK(read_csv_matrix((dir / "testing_epistemic.csv").string()).rows() == 20);

  std::ostringstream out;
  CHECK(cmd_epsilon(50, 2, 1e-4, out) == exit_code::ok);
  CHECK(out.str() == "0.303298\n");
  CHECK(run_command([] {
          std::ostringstream s;
          return cmd_epsilon(5, 9, 1e-4, s);
        }) == exit_code::input);
}
