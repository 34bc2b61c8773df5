#include "scendo/config.hpp"

#include <mutex>

#include "scendo/benchmark.hpp"

namespace scendo {

using nlohmann::json;

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, ProblemFactory>& registry() {
  static std::map<std::string, ProblemFactory> r;
  return r;
}

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw InputError("config field '" + field + "': " + what);
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) field_error(field, "expected a number");
  return j.get<double>();
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return number(obj.at(key), path + "." + key);
}

std::size_t count_or(const json& obj, const char* key, const std::string& path, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) field_error(path + "." + key, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

bool bool_or(const json& obj, const char* key, const std::string& path, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) field_error(path + "." + key, "expected true or false");
  return obj.at(key).get<bool>();
}

std::string string_or(const json& obj, const char* key, const std::string& path, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) field_error(path + "." + key, "expected a string");
  return obj.at(key).get<std::string>();
}

// A number (broadcast to every requirement) or an array of n entries.
Vector per_requirement(const json& obj, const char* key, const std::string& path, std::size_t n, double fallback) {
  const std::string field = path + "." + key;
  if (!obj.contains(key)) return Vector::Constant(static_cast<Eigen::Index>(n), fallback);
  const auto& v = obj.at(key);
  if (v.is_number()) return Vector::Constant(static_cast<Eigen::Index>(n), v.get<double>());
  if (!v.is_array()) field_error(field, "expected a number or an array of numbers");
  if (v.size() != n) field_error(field, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  Vector out(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) out[static_cast<Eigen::Index>(k)] = number(v[k], field + "[" + std::to_string(k) + "]");
  return out;
}

Vector fractions(const json& obj, const char* key, const std::string& path, std::size_t n, double fallback) {
  Vector v = per_requirement(obj, key, path, n, fallback);
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (!(v[k] >= 0.0 && v[k] <= 1.0)) field_error(path + "." + key, "entries must lie in [0, 1]");
  return v;
}

Vector vector_field(const json& v, const std::string& field) {
  if (!v.is_array()) field_error(field, "expected an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out[static_cast<Eigen::Index>(k)] = number(v[k], field + "[" + std::to_string(k) + "]");
  return out;
}

const json& object_at(const json& doc, const char* key, const std::string& path) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_object()) field_error(path.empty() ? key : path + "." + key, "expected an object");
  return doc.at(key);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) field_error(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
  }
}

ProblemEntry circle_entry(const json& params) {
  check_keys(params, "problem", {"name", "center_limit", "radius_limit"});
  const double cl = number_or(params, "center_limit", "problem", 10.0);
  const double rl = number_or(params, "radius_limit", "problem", 15.0);
  if (!(cl > 0.0) || !(rl > 0.0)) throw InputError("config field 'problem': limits must be positive");
  ProblemEntry e{benchmark::circle_problem(benchmark::circle_design_bounds(cl, rl)),
                 benchmark::circle_response,
                 benchmark::epistemic_set(),
                 {},
                 {}};
  const auto mix = benchmark::GaussianMixture::standard();
  e.density = [mix](std::span<const double> a) { return mix.density(a); };
  e.generate = [mix](std::size_t n_a, std::size_t n_e, std::uint64_t seed, std::size_t n_at, std::size_t n_et) {
    return benchmark::generate_dataset(n_a, n_e, seed, mix, n_at, n_et);
  };
  return e;
}

void ensure_builtins() {
  std::lock_guard<std::mutex> lock(registry_mutex());
  registry().emplace("circle", circle_entry);
}

}  // namespace

void register_problem(const std::string& name, ProblemFactory factory) {
  ensure_builtins();
  std::lock_guard<std::mutex> lock(registry_mutex());
  registry()[name] = std::move(factory);
}

ProblemEntry make_problem(const std::string& name, const json& params) {
  ensure_builtins();
  ProblemFactory f;
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    const auto it = registry().find(name);
    if (it == registry().end()) throw InputError("config field 'problem.name': unknown problem '" + name + "'");
    f = it->second;
  }
  return f(params);
}

std::vector<std::string> registered_problems() {
  ensure_builtins();
  std::lock_guard<std::mutex> lock(registry_mutex());
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

RunConfig parse_config(const json& doc, const ProblemEntry& problem) {
  if (!doc.is_object()) throw InputError("config: top level must be a JSON object");
  check_keys(doc, "", {"problem", "data", "formulation", "alphas", "moment", "feasibility_seed", "solver", "rmc",
                       "scenario_theory", "sd", "seed", "output_dir"});
  RunConfig cfg;
  cfg.hash = fnv1a_hex(doc.dump());
  const std::size_t n_r = problem.spec.requirement_count();

  const json& prob = object_at(doc, "problem", "");
  cfg.problem_name = string_or(prob, "name", "problem", "circle");
  cfg.problem_params = prob;

  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_integer() || s.get<long long>() < 0) field_error("seed", "expected a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.output_dir = string_or(doc, "output_dir", "", ".");

  // data: exactly one source
  const json& data = object_at(doc, "data", "");
  check_keys(data, "data", {"generate", "files"});
  if (data.contains("generate") == data.contains("files"))
    field_error("data", "give exactly one of 'generate' or 'files'");
  if (data.contains("generate")) {
    const json& g = object_at(data, "generate", "data");
    check_keys(g, "data.generate", {"n_a", "n_e", "n_a_test", "n_e_test"});
    DataSource::Generate gen;
    gen.n_a = count_or(g, "n_a", "data.generate", 50);
    gen.n_e = count_or(g, "n_e", "data.generate", 50);
    gen.n_a_test = count_or(g, "n_a_test", "data.generate", 0);
    gen.n_e_test = count_or(g, "n_e_test", "data.generate", 0);
    if (gen.n_a == 0 || gen.n_e == 0) field_error("data.generate", "n_a and n_e must be positive");
    cfg.data.generate = gen;
  } else {
    const json& f = object_at(data, "files", "data");
    check_keys(f, "data.files", {"aleatory", "epistemic", "testing_aleatory", "testing_epistemic"});
    DataSource::Files files;
    if (!f.contains("aleatory") || !f.contains("epistemic"))
      field_error("data.files", "'aleatory' and 'epistemic' paths are required");
    files.aleatory = string_or(f, "aleatory", "data.files", "");
    files.epistemic = string_or(f, "epistemic", "data.files", "");
    if (f.contains("testing_aleatory")) files.testing_aleatory = string_or(f, "testing_aleatory", "data.files", "");
    if (f.contains("testing_epistemic")) files.testing_epistemic = string_or(f, "testing_epistemic", "data.files", "");
    cfg.data.files = files;
  }

  auto& req = cfg.request;
  req.formulation = formulation_from_string(string_or(doc, "formulation", "", "risk-averse-local"));

  const json& al = object_at(doc, "alphas", "");
  check_keys(al, "alphas", {"alpha_a", "alpha_e", "rho", "kappa", "gamma"});
  req.alphas.alpha_a = fractions(al, "alpha_a", "alphas", n_r, 0.0);
  req.alphas.alpha_e = fractions(al, "alpha_e", "alphas", n_r, 0.0);
  req.alphas.rho = number_or(al, "rho", "alphas", 1e3);
  req.alphas.kappa = number_or(al, "kappa", "alphas", 1000.0);
  req.alphas.gamma = number_or(al, "gamma", "alphas", 100.0);

  if (is_moment(req.formulation) || doc.contains("moment")) {
    const json& m = object_at(doc, "moment", "");
    check_keys(m, "moment", {"alpha_e", "alpha_a"});
    if (!problem.response) field_error("moment", "problem '" + cfg.problem_name + "' has no response function");
    MomentSpec ms;
    ms.response = problem.response;
    ms.alpha_e = number_or(m, "alpha_e", "moment", 0.0);
    if (is_moment(req.formulation)) req.moment = ms;
    if (m.contains("alpha_a")) req.moment_alpha_a = number(m.at("alpha_a"), "moment.alpha_a");
  }

  const json& fs = object_at(doc, "feasibility_seed", "");
  check_keys(fs, "feasibility_seed", {"omega", "scope"});
  if (fs.contains("omega")) req.omega = per_requirement(fs, "omega", "feasibility_seed", n_r, 1.0);
  const std::string scope = string_or(fs, "scope", "feasibility_seed", "local");
  if (scope == "local")
    req.seed_scope = OutlierScope::Local;
  else if (scope == "global")
    req.seed_scope = OutlierScope::Global;
  else
    field_error("feasibility_seed.scope", "expected 'local' or 'global'");

  const json& so = object_at(doc, "solver", "");
  check_keys(so, "solver", {"n_starts", "max_outer", "max_inner", "tol_con", "tol_x", "fd_step", "penalty_init",
                            "penalty_growth", "penalty_max", "seed"});
  auto& opt = req.options;
  opt.n_starts = count_or(so, "n_starts", "solver", opt.n_starts);
  opt.nlp.max_outer = count_or(so, "max_outer", "solver", opt.nlp.max_outer);
  opt.nlp.max_inner = count_or(so, "max_inner", "solver", opt.nlp.max_inner);
  opt.nlp.tol_con = number_or(so, "tol_con", "solver", opt.nlp.tol_con);
  opt.nlp.tol_x = number_or(so, "tol_x", "solver", opt.nlp.tol_x);
  opt.nlp.fd_step = number_or(so, "fd_step", "solver", opt.nlp.fd_step);
  opt.nlp.penalty_init = number_or(so, "penalty_init", "solver", opt.nlp.penalty_init);
  opt.nlp.penalty_growth = number_or(so, "penalty_growth", "solver", opt.nlp.penalty_growth);
  opt.nlp.penalty_max = number_or(so, "penalty_max", "solver", opt.nlp.penalty_max);
  opt.nlp.seed = count_or(so, "seed", "solver", cfg.seed);
  opt.nlp.validate();
  req.validate(problem.spec);

  const json& rm = object_at(doc, "rmc", "");
  check_keys(rm, "rmc", {"alpha_a_prime", "alpha_e_prime", "sigma", "p_max", "total_failure"});
  cfg.rmc.total_failure = bool_or(rm, "total_failure", "rmc", false);
  const std::size_t rows = cfg.rmc.rows(n_r);
  cfg.rmc.alpha_a_prime = fractions(rm, "alpha_a_prime", "rmc", rows, 0.0);
  cfg.rmc.alpha_e_prime = fractions(rm, "alpha_e_prime", "rmc", rows, 0.0);
  cfg.rmc.p_max = fractions(rm, "p_max", "rmc", rows, 0.01);
  cfg.rmc.sigma = number_or(rm, "sigma", "rmc", 0.95);
  cfg.rmc.validate(n_r);

  const json& st = object_at(doc, "scenario_theory", "");
  check_keys(st, "scenario_theory", {"enabled", "beta", "containment_test", "n_probe"});
  cfg.theory.enabled = bool_or(st, "enabled", "scenario_theory", true);
  cfg.theory.beta = number_or(st, "beta", "scenario_theory", 1e-4);
  if (!(cfg.theory.beta > 0.0 && cfg.theory.beta < 1.0)) field_error("scenario_theory.beta", "must lie in (0, 1)");
  cfg.theory.test = containment_test_from_string(string_or(st, "containment_test", "scenario_theory", "auto"));
  cfg.theory.n_probe = count_or(st, "n_probe", "scenario_theory", 2000);
  if (cfg.theory.n_probe == 0) field_error("scenario_theory.n_probe", "must be positive");

  if (doc.contains("sd")) {
    const json& sd = object_at(doc, "sd", "");
    check_keys(sd, "sd", {"max_iter", "metric", "threshold", "j_bound", "n_a_init", "n_a_growth", "n_a_cap", "n_e",
                          "lambda_div", "density", "formulation", "baseline"});
    SdConfig s;
    s.max_iter = count_or(sd, "max_iter", "sd", s.max_iter);
    s.metric = rmc_metric_from_string(string_or(sd, "metric", "sd", "a_hi"));
    s.threshold = number_or(sd, "threshold", "sd", s.threshold);
    s.j_bound = number_or(sd, "j_bound", "sd", s.j_bound);
    s.n_a_init = count_or(sd, "n_a_init", "sd", s.n_a_init);
    s.n_a_growth = number_or(sd, "n_a_growth", "sd", s.n_a_growth);
    s.n_a_cap = count_or(sd, "n_a_cap", "sd", s.n_a_cap);
    s.n_e = count_or(sd, "n_e", "sd", s.n_e);
    s.lambda_div = number_or(sd, "lambda_div", "sd", s.lambda_div);
    const std::string density = string_or(sd, "density", "sd", "problem");
    if (density == "problem")
      s.density = problem.density;
    else if (density != "constant")
      field_error("sd.density", "expected 'problem' or 'constant'");
    s.formulation = formulation_from_string(string_or(sd, "formulation", "sd", "risk-agnostic-local"));
    s.rmc = cfg.rmc;
    s.alphas = req.alphas;
    s.alphas.alpha_a.setZero();
    if (is_moment(s.formulation)) {
      if (!problem.response) field_error("sd.formulation", "problem has no response function");
      MomentSpec ms;
      ms.response = problem.response;
      s.moment = req.moment.value_or(ms);
    }
    s.program = req.options;
    s.validate(problem.spec);
    if (sd.contains("baseline")) {
      Vector b = vector_field(sd.at("baseline"), "sd.baseline");
      if (static_cast<std::size_t>(b.size()) != problem.spec.design_dim())
        field_error("sd.baseline", "expected " + std::to_string(problem.spec.design_dim()) + " entries");
      cfg.sd_baseline = b;
    }
    cfg.sd = s;
  }
  return cfg;
}

}  // namespace scendo
