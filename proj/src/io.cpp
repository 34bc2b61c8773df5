#include "scendo/io.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace scendo {

using nlohmann::json;

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::Info)};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json interval_json(const Interval& i) { return json::array({number_json(i.lower), number_json(i.upper)}); }

json index_json(const IndexSet& s) { return json(s); }

}  // namespace

LogLevel log_level_from_env() {
  const char* v = std::getenv("SCENDO_LOG");
  if (!v || !*v) return LogLevel::Info;
  const std::string s(v);
  if (s == "error") return LogLevel::Error;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  throw InputError("SCENDO_LOG must be one of error, info, debug (got '" + s + "')");
}

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > g_level.load()) return;
  static const char* names[] = {"error", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << '\n';
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ScenarioMatrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    std::vector<double> row;
    bool numeric = true;
    for (const auto& f : fields) {
      double v;
      if (!parse_double(f, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw InputError(path + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                       " fields, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("'" + path + "' holds no data rows");
  ScenarioMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_csv_matrix(const std::string& path, const ScenarioMatrix& m, const std::vector<std::string>& header) {
  std::ostringstream os;
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  if (!header.empty()) os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << '\n';
  }
  write_text_file(path, os.str());
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config '" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

void write_json_file(const std::string& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_json(v[i]));
  return a;
}

json provenance(const std::string& config_hash) {
  return {{"config_hash", config_hash}, {"version", SCENDO_VERSION}};
}

json solution_json(const SolveResult& r, const std::string& config_hash) {
  json j;
  j["formulation"] = to_string(r.formulation);
  j["theta_star"] = to_json(r.theta_star);
  j["objective"] = number_json(r.objective);
  if (r.xi_star) j["xi_star"] = to_json(*r.xi_star);
  if (r.lambda_star) j["lambda_star"] = number_json(*r.lambda_star);
  j["aleatory_outliers"] = index_json(r.aleatory_outliers);
  j["epistemic_outliers"] = r.epistemic_outliers;
  if (r.epistemic_outliers_global) j["epistemic_outliers_global"] = index_json(*r.epistemic_outliers_global);
  if (r.suggested_alpha_a) j["suggested_alpha_a"] = to_json(*r.suggested_alpha_a);
  j["solver"] = {{"status", to_string(r.status)},
                 {"restarts_used", r.restarts_used},
                 {"max_violation", number_json(r.max_violation)},
                 {"evaluations", r.evaluations}};
  j["provenance"] = provenance(config_hash);
  return j;
}

std::string outliers_csv(const SolveResult& r) {
  std::ostringstream os;
  os << "kind,aleatory_index,epistemic_index\n";
  for (auto i : r.aleatory_outliers) os << "aleatory," << i << ",\n";
  for (std::size_t i = 0; i < r.epistemic_outliers.size(); ++i)
    for (auto j : r.epistemic_outliers[i]) os << "epistemic," << i << "," << j << "\n";
  if (r.epistemic_outliers_global)
    for (auto j : *r.epistemic_outliers_global) os << "epistemic-global,," << j << "\n";
  return os.str();
}

std::string rmc_report_csv(const RmcReport& rep) {
  std::ostringstream os;
  os << "requirement,a_lo,a_hi,b_lo,b_hi,c,d_lo,d_hi\n";
  for (std::size_t k = 0; k < rep.requirements.size(); ++k) {
    const auto& r = rep.requirements[k];
    os << k << ',' << format_double(r.range_a.lower) << ',' << format_double(r.range_a.upper) << ','
       << format_double(r.range_b.lower) << ',' << format_double(r.range_b.upper) << ',' << format_double(r.point_c)
       << ',' << format_double(r.range_d.lower) << ',' << format_double(r.range_d.upper) << '\n';
  }
  return os.str();
}

json rmc_report_json(const RmcReport& rep, const std::string& config_hash) {
  json rows = json::array();
  for (const auto& r : rep.requirements) {
    rows.push_back({{"range_a", interval_json(r.range_a)},
                    {"range_b", interval_json(r.range_b)},
                    {"c", number_json(r.point_c)},
                    {"range_d", interval_json(r.range_d)},
                    {"failure_probs", r.failure_probs}});
  }
  return {{"n_a_test", rep.n_a_test}, {"n_e_test", rep.n_e_test}, {"requirements", rows},
          {"provenance", provenance(config_hash)}};
}

json risk_bound_json(const RiskBoundReport& rep, const std::string& config_hash) {
  return {{"n_a", rep.n_a},
          {"n_s", rep.n_support},
          {"n_v", rep.n_violation},
          {"s_E", rep.set_complexity},
          {"epsilon_bar", number_json(rep.epsilon_bar)},
          {"beta", rep.beta},
          {"containment_test", rep.containment_test},
          {"validity", rep.valid ? "valid" : "not-valid-non-iid"},
          {"support", rep.support},
          {"violating", rep.violating},
          {"provenance", provenance(config_hash)}};
}

json risk_bound_not_valid_json(double beta, const std::string& config_hash) {
  return {{"n_s", nullptr},
          {"n_v", nullptr},
          {"s_E", nullptr},
          {"epsilon_bar", nullptr},
          {"beta", beta},
          {"containment_test", nullptr},
          {"validity", "not-valid-non-iid"},
          {"provenance", provenance(config_hash)}};
}

std::string sd_trace_csv(const SdResult& r) {
  std::ostringstream os;
  os << "iteration,n_a,alpha_a,J,metric,K\n";
  for (const auto& it : r.trace) {
    const double alpha = it.alpha_a.size() ? it.alpha_a.maxCoeff() : 0.0;
    double metric = 0.0;
    for (double m : it.metric) metric = std::max(metric, m);
    os << it.iteration << ',' << it.n_a << ',' << format_double(alpha) << ',' << format_double(it.objective) << ','
       << format_double(metric) << ',' << it.violated.size() << '\n';
  }
  return os.str();
}

}  // namespace scendo
