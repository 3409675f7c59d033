#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "earlystop/simulation.hpp"
#include "earlystop/spectral.hpp"

namespace earlystop {

// File-system failures (unwritable path, short write, unreadable input).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest exact decimal form of a double (17 significant digits).
std::string format_double(double value);

// Summary CSV, one row per rule:
//   rule,n,N,mean_loss,sd_loss,mean_tau,sd_tau,emergency_rate
std::string summary_csv(const ExperimentResult& result);
std::string summary_csv(const std::vector<ExperimentResult>& results);

// Deviation CSV, one row per (family, target):
//   family,target,exceed_count,reps,frequency,wilson_low,wilson_high
std::string deviation_csv(const DeviationEstimate& estimate);

// Two-column curve CSV (t,value), header included.
std::string risk_curve_csv(const RiskCurve& curve);
RiskCurve risk_curve_from_csv(const std::string& text);

// JSON round-trip of the full experiment result (config echo included).
nlohmann::json to_json(const ExperimentResult& result);
ExperimentResult experiment_result_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const DeviationEstimate& estimate);

// Writes to the path, or to stdout when path is empty; throws IoError on failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace earlystop
