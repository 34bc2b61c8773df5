#include "scendo/commands.hpp"

#include <filesystem>
#include <iomanip>
#include <ostream>

#include "scendo/io.hpp"
#include "scendo/parallel.hpp"

namespace scendo {

using nlohmann::json;

namespace {

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

std::vector<std::string> column_names(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

ScenarioData load_data(const ProblemEntry& problem, const RunConfig& cfg) {
  ScenarioData data;
  if (cfg.data.generate) {
    const auto& g = *cfg.data.generate;
    data = problem.generate(g.n_a, g.n_e, cfg.seed, g.n_a_test, g.n_e_test);
  } else {
    const auto& f = *cfg.data.files;
    data.aleatory = read_csv_matrix(f.aleatory);
    data.epistemic = read_csv_matrix(f.epistemic);
    if (f.testing_aleatory) data.testing_aleatory = read_csv_matrix(*f.testing_aleatory);
    if (f.testing_epistemic) data.testing_epistemic = read_csv_matrix(*f.testing_epistemic);
  }
  data.validate(problem.spec);
  return data;
}

void require_testing(const ScenarioData& data, const char* verb) {
  if (!data.testing_aleatory || !data.testing_epistemic || data.testing_aleatory->rows() < 2 ||
      data.testing_epistemic->rows() < 2)
    throw InputError(std::string(verb) +
                     " needs testing sets with at least two scenarios each (data.generate.n_a_test/n_e_test "
                     "or data.files.testing_*)");
}

struct Design {
  Vector theta;
  bool iid = true;
};

Design read_design(const std::string& path, const ProblemSpec& spec) {
  const json doc = read_json_file(path);
  if (!doc.is_object()) throw InputError("design '" + path + "': expected a JSON object");
  const char* key = doc.contains("theta_star") ? "theta_star" : "theta";
  if (!doc.contains(key) || !doc.at(key).is_array())
    throw InputError("design '" + path + "': needs a 'theta_star' or 'theta' array");
  Design d;
  const auto& arr = doc.at(key);
  if (arr.size() != spec.design_dim())
    throw InputError("design '" + path + "': theta has " + std::to_string(arr.size()) + " entries, problem expects " +
                     std::to_string(spec.design_dim()));
  d.theta.resize(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw InputError("design '" + path + "': theta entries must be numbers");
    d.theta[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  if (doc.contains("iid")) {
    if (!doc.at("iid").is_boolean()) throw InputError("design '" + path + "': 'iid' must be a boolean");
    d.iid = doc.at("iid").get<bool>();
  }
  return d;
}

std::size_t threads_of(const CliOptions& opts) { return opts.threads.value_or(0); }

}  // namespace

LoadedRun load_run(const CliOptions& opts) {
  if (opts.config.empty()) throw InputError("--config is required");
  return load_run(read_json_file(opts.config), opts);
}

LoadedRun load_run(json doc, const CliOptions& opts) {
  if (!doc.is_object()) throw InputError("config: top level must be a JSON object");
  if (opts.seed) doc["seed"] = *opts.seed;
  if (opts.output) doc["output_dir"] = *opts.output;
  if (opts.threads) set_default_threads(*opts.threads);

  json params = json::object();
  std::string name = "circle";
  if (doc.contains("problem")) {
    if (!doc.at("problem").is_object()) throw InputError("config field 'problem': expected an object");
    params = doc.at("problem");
    if (params.contains("name")) {
      if (!params.at("name").is_string()) throw InputError("config field 'problem.name': expected a string");
      name = params.at("name").get<std::string>();
    }
  }
  LoadedRun run{doc, make_problem(name, params), {}, {}};
  run.cfg = parse_config(run.doc, run.problem);
  run.data = load_data(run.problem, run.cfg);
  std::error_code ec;
  std::filesystem::create_directories(run.cfg.output_dir, ec);
  if (ec) throw InputError("cannot create output directory '" + run.cfg.output_dir + "': " + ec.message());
  log(LogLevel::Debug, "config hash " + run.cfg.hash);
  return run;
}

int cmd_solve(const CliOptions& opts) {
  const LoadedRun run = load_run(opts);
  const auto& cfg = run.cfg;
  log(LogLevel::Info, "solving " + to_string(cfg.request.formulation) + " with n_a=" +
                          std::to_string(run.data.n_a()) + ", n_e=" + std::to_string(run.data.n_e()));
  const SolveResult r = solve(run.problem.spec, run.data, cfg.request);
  write_json_file(out_path(cfg, "solution.json"), solution_json(r, cfg.hash));
  write_text_file(out_path(cfg, "outliers.csv"), outliers_csv(r));
  log(LogLevel::Info, "status " + to_string(r.status) + ", J = " + format_double(r.objective));
  if (r.status == SolverStatus::Infeasible) {
    if (r.suggested_alpha_a) {
      std::string s;
      for (Eigen::Index k = 0; k < r.suggested_alpha_a->size(); ++k)
        s += (k ? ", " : "") + format_double((*r.suggested_alpha_a)[k]);
      log(LogLevel::Error, "infeasible; suggested alpha_a = [" + s + "]");
    } else {
      log(LogLevel::Error, "infeasible");
    }
    return exit_code::infeasible;
  }
  return exit_code::ok;
}

int cmd_analyze(const CliOptions& opts) {
  if (!opts.design) throw InputError("analyze needs --design");
  const LoadedRun run = load_run(opts);
  const auto& cfg = run.cfg;
  const auto& spec = run.problem.spec;
  const Design design = read_design(*opts.design, spec);
  require_testing(run.data, "analyze");

  const RmcReport rep = rmc_analyze(spec, design.theta, *run.data.testing_aleatory, *run.data.testing_epistemic,
                                    cfg.rmc, threads_of(opts));
  write_text_file(out_path(cfg, "rmc_report.csv"), rmc_report_csv(rep));
  write_json_file(out_path(cfg, "rmc_report.json"), rmc_report_json(rep, cfg.hash));

  if (cfg.theory.enabled) {
    if (!design.iid) {
      log(LogLevel::Info, "design trained on non-IID data; scenario bound not computed");
      write_json_file(out_path(cfg, "risk_bound.json"), risk_bound_not_valid_json(cfg.theory.beta, cfg.hash));
    } else {
      ProgramRequest req = cfg.request;
      // Re-solves start from the design only: a local move away from theta* after removing a
      // scenario is what marks it as support, and fresh starts would add unrelated local optima.
      req.options.warm_starts = {design.theta};
      req.options.n_starts = 0;
      req.options.suggest_on_infeasible = false;
      const ScenarioSolver solver = [&spec, req](const ScenarioData& d) { return solve(spec, d, req); };
      SetComplexityOptions so;
      so.beta = cfg.theory.beta;
      so.test = cfg.theory.test;
      so.n_probe = cfg.theory.n_probe;
      so.seed = cfg.seed;
      so.threads = threads_of(opts);
      const RiskBoundReport rb = set_complexity(spec, solver, run.data, design.theta, run.problem.epistemic_set,
                                                cfg.request.formulation, so);
      write_json_file(out_path(cfg, "risk_bound.json"), risk_bound_json(rb, cfg.hash));
      log(LogLevel::Info, "s_E = " + std::to_string(rb.set_complexity) + ", epsilon_bar = " +
                              format_double(rb.epsilon_bar));
    }
  }
  return exit_code::ok;
}

int cmd_sequential(const CliOptions& opts) {
  const LoadedRun run = load_run(opts);
  const auto& cfg = run.cfg;
  const auto& spec = run.problem.spec;
  if (!cfg.sd) throw InputError("config field 'sd': required by the sequential command");
  require_testing(run.data, "sequential");

  Vector baseline;
  if (cfg.sd_baseline) {
    baseline = *cfg.sd_baseline;
  } else {
    const SolveResult base = solve(spec, run.data, cfg.request);
    if (base.status == SolverStatus::Infeasible) {
      log(LogLevel::Error, "baseline solve is infeasible");
      return exit_code::infeasible;
    }
    baseline = base.theta_star;
    log(LogLevel::Info, "baseline J = " + format_double(base.objective));
  }

  SdConfig sd = *cfg.sd;
  sd.threads = threads_of(opts);
  const SdResult r = run_sd(spec, *run.data.testing_aleatory, *run.data.testing_epistemic, baseline, sd);
  write_text_file(out_path(cfg, "sd_trace.csv"), sd_trace_csv(r));

  json fd;
  fd["theta"] = to_json(r.theta);
  fd["formulation"] = to_string(sd.formulation);
  fd["objective"] = r.trace.empty() ? json(nullptr) : json(r.trace.back().objective);
  fd["iterations"] = r.trace.size();
  fd["spec_met"] = r.spec_met;
  // training data are selected from failures, so the scenario bound does not apply
  fd["iid"] = false;
  fd["training_aleatory"] = r.training_aleatory;
  fd["training_epistemic"] = r.training_epistemic;
  if (r.failed) fd["failure"] = r.failure;
  fd["provenance"] = provenance(cfg.hash);
  write_json_file(out_path(cfg, "final_design.json"), fd);
  write_text_file(out_path(cfg, "rmc_report.csv"), rmc_report_csv(r.final_report));

  const auto& A = *run.data.testing_aleatory;
  const auto& E = *run.data.testing_epistemic;
  ScenarioMatrix ta(static_cast<Eigen::Index>(r.training_aleatory.size()), A.cols());
  for (std::size_t i = 0; i < r.training_aleatory.size(); ++i)
    ta.row(static_cast<Eigen::Index>(i)) = A.row(static_cast<Eigen::Index>(r.training_aleatory[i]));
  ScenarioMatrix te(static_cast<Eigen::Index>(r.training_epistemic.size()), E.cols());
  for (std::size_t j = 0; j < r.training_epistemic.size(); ++j)
    te.row(static_cast<Eigen::Index>(j)) = E.row(static_cast<Eigen::Index>(r.training_epistemic[j]));
  write_csv_matrix(out_path(cfg, "final_training_aleatory.csv"), ta, column_names("a", spec.aleatory_dim));
  write_csv_matrix(out_path(cfg, "final_training_epistemic.csv"), te, column_names("e", spec.epistemic_dim));

  if (r.failed) log(LogLevel::Error, "sequential design failed: " + r.failure);
  if (!r.spec_met) {
    log(LogLevel::Error, "specification not met after " + std::to_string(r.trace.size()) + " iterations");
    return exit_code::spec_not_met;
  }
  log(LogLevel::Info, "specification met after " + std::to_string(r.trace.size()) + " iterations, n_a = " +
                          std::to_string(r.trace.back().n_a));
  return exit_code::ok;
}

int cmd_gen_data(const CliOptions& opts) {
  const LoadedRun run = load_run(opts);
  const auto& cfg = run.cfg;
  if (!cfg.data.generate) throw InputError("config field 'data.generate': required by gen-data");
  const auto& spec = run.problem.spec;
  const auto a_cols = column_names("a", spec.aleatory_dim);
  const auto e_cols = column_names("e", spec.epistemic_dim);
  write_csv_matrix(out_path(cfg, "aleatory.csv"), run.data.aleatory, a_cols);
  write_csv_matrix(out_path(cfg, "epistemic.csv"), run.data.epistemic, e_cols);
  if (run.data.testing_aleatory && run.data.testing_aleatory->rows() > 0)
    write_csv_matrix(out_path(cfg, "testing_aleatory.csv"), *run.data.testing_aleatory, a_cols);
  if (run.data.testing_epistemic && run.data.testing_epistemic->rows() > 0)
    write_csv_matrix(out_path(cfg, "testing_epistemic.csv"), *run.data.testing_epistemic, e_cols);
  return exit_code::ok;
}

int cmd_epsilon(std::size_t n_a, std::size_t k, double beta, std::ostream& out) {
  if (n_a == 0) throw InputError("--n-a must be positive");
  if (k > n_a) throw InputError("--k must not exceed --n-a");
  if (!(beta > 0.0 && beta < 1.0)) throw InputError("--beta must lie in (0, 1)");
  out << std::setprecision(6) << epsilon_bar(n_a, k, beta) << '\n';
  return exit_code::ok;
}

int run_command(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    log(LogLevel::Error, e.what());
    return exit_code::input;
  } catch (const json::exception& e) {
    log(LogLevel::Error, std::string("config: ") + e.what());
    return exit_code::input;
  } catch (const std::exception& e) {
    log(LogLevel::Error, e.what());
    return exit_code::internal;
  }
}

}  // namespace scendo
