#pragma once

#include <string>

#include "json.hpp"
#include "scendo/programs.hpp"
#include "scendo/rmc.hpp"
#include "scendo/scenario_theory.hpp"
#include "scendo/seqdesign.hpp"

namespace scendo {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

/// Level from SCENDO_LOG (error, info, debug); info when unset. Unknown values throw InputError.
LogLevel log_level_from_env();
void set_log_level(LogLevel level);
void log(LogLevel level, const std::string& message);

/// Numeric CSV with an optional header row (detected by a non-numeric first field).
ScenarioMatrix read_csv_matrix(const std::string& path);
/// Writes rows of numbers with the given header; values at full round-trip precision.
void write_csv_matrix(const std::string& path, const ScenarioMatrix& m, const std::vector<std::string>& header);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);
void write_text_file(const std::string& path, const std::string& text);

/// Round-trip formatting of a double ("inf", "-inf", "nan" for non-finite values).
std::string format_double(double v);

nlohmann::json to_json(const Vector& v);
/// Provenance block embedded in every report.
nlohmann::json provenance(const std::string& config_hash);

nlohmann::json solution_json(const SolveResult& r, const std::string& config_hash);
/// kind,aleatory_index,epistemic_index rows: "aleatory,i," / "epistemic,i,j" / "epistemic-global,,j".
std::string outliers_csv(const SolveResult& r);

std::string rmc_report_csv(const RmcReport& rep);
nlohmann::json rmc_report_json(const RmcReport& rep, const std::string& config_hash);

nlohmann::json risk_bound_json(const RiskBoundReport& rep, const std::string& config_hash);
/// Report for designs whose training data are not IID: the bound does not apply.
nlohmann::json risk_bound_not_valid_json(double beta, const std::string& config_hash);

/// iteration,n_a,alpha_a,J,metric,K rows (alpha_a and metric are the largest entries).
std::string sd_trace_csv(const SdResult& r);

}  // namespace scendo
