#include "earlystop/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace earlystop {

namespace {

using nlohmann::json;

constexpr const char* kSummaryHeader =
    "rule,n,N,mean_loss,sd_loss,mean_tau,sd_tau,emergency_rate\n";

void append_summary_rows(std::string& out, const ExperimentResult& result) {
  for (const RuleStats& stats : result.rules) {
    out += to_string(stats.rule);
    out += ',';
    out += std::to_string(result.config.n);
    out += ',';
    out += std::to_string(result.config.replications);
    out += ',';
    out += format_double(stats.mean_loss);
    out += ',';
    out += format_double(stats.sd_loss);
    out += ',';
    out += format_double(stats.mean_tau);
    out += ',';
    out += format_double(stats.sd_tau);
    out += ',';
    out += format_double(stats.emergency_rate);
    out += '\n';
  }
}

json mode_to_json(SearchMode mode) {
  return mode == SearchMode::IntegerGrid ? "integer-grid" : "continuous";
}

SearchMode mode_from_json(const json& j) {
  const auto name = j.get<std::string>();
  if (name == "integer-grid") return SearchMode::IntegerGrid;
  if (name == "continuous") return SearchMode::Continuous;
  throw std::invalid_argument("unknown search mode: " + name);
}

// Infinite horizons are stored as null (JSON has no infinity literal).
json finite_or_null(double value) {
  if (std::isfinite(value)) return value;
  return nullptr;
}

double double_or_infinity(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

json config_to_json(const ExperimentConfig& config) {
  json rules = json::array();
  for (const RuleSpec& spec : config.rules) {
    rules.push_back({{"rule", to_string(spec.rule)},
                     {"sigma_sq", spec.config.sigma_sq},
                     {"emergency_stop", finite_or_null(spec.config.emergency_stop)},
                     {"mode", mode_to_json(spec.config.mode)},
                     {"max_iter", spec.config.max_iter},
                     {"tolerance", spec.config.tolerance},
                     {"smoothing_T", spec.config.smoothing_T}});
  }
  json signal = {{"name", config.signal.name()}};
  if (config.signal.kind == SignalKind::Custom) {
    signal["values"] = config.signal.custom_values;
  }
  return {{"preset", config.preset},
          {"n", config.n},
          {"replications", config.replications},
          {"seed", config.seed},
          {"sigma_sq", config.sigma_sq},
          {"t_max", config.t_max},
          {"jobs", config.jobs},
          {"kernel", {{"name", config.kernel.name()}, {"bandwidth", config.kernel.bandwidth()}}},
          {"regularizer", {{"name", config.regularizer.name()}, {"step", config.regularizer.step()}}},
          {"signal", signal},
          {"rules", rules}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig config;
  config.preset = j.at("preset").get<std::string>();
  config.n = j.at("n").get<std::size_t>();
  config.replications = j.at("replications").get<std::size_t>();
  config.seed = j.at("seed").get<std::uint64_t>();
  config.sigma_sq = j.at("sigma_sq").get<double>();
  config.t_max = j.at("t_max").get<long>();
  config.jobs = j.at("jobs").get<int>();
  const json& kernel = j.at("kernel");
  config.kernel = Kernel::from_name(kernel.at("name").get<std::string>(),
                                    kernel.at("name").get<std::string>() == "gaussian"
                                        ? kernel.at("bandwidth").get<double>()
                                        : 0.02);
  const json& reg = j.at("regularizer");
  config.regularizer =
      Regularizer::from_name(reg.at("name").get<std::string>(), reg.at("step").get<double>());
  const json& signal = j.at("signal");
  const auto signal_name = signal.at("name").get<std::string>();
  if (signal_name == "outer") {
    config.signal = SignalSpec::outer();
  } else if (signal_name == "inner") {
    config.signal = SignalSpec::inner();
  } else if (signal_name == "custom") {
    config.signal = SignalSpec::custom(signal.at("values").get<std::vector<double>>());
  } else {
    throw std::invalid_argument("unknown signal: " + signal_name);
  }
  config.rules.clear();
  for (const json& rule : j.at("rules")) {
    RuleSpec spec;
    spec.rule = stopping_rule_from_name(rule.at("rule").get<std::string>());
    spec.config.sigma_sq = rule.at("sigma_sq").get<double>();
    spec.config.emergency_stop = double_or_infinity(rule.at("emergency_stop"));
    spec.config.mode = mode_from_json(rule.at("mode"));
    spec.config.max_iter = rule.at("max_iter").get<long>();
    spec.config.tolerance = rule.at("tolerance").get<double>();
    spec.config.smoothing_T = rule.at("smoothing_T").get<double>();
    config.rules.push_back(spec);
  }
  return config;
}

json histogram_to_json(const Histogram& hist) {
  return {{"edges", hist.edges}, {"counts", hist.counts}};
}

Histogram histogram_from_json(const json& j) {
  Histogram hist;
  hist.edges = j.at("edges").get<std::vector<double>>();
  hist.counts = j.at("counts").get<std::vector<std::size_t>>();
  return hist;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string summary_csv(const ExperimentResult& result) {
  std::string out = kSummaryHeader;
  append_summary_rows(out, result);
  return out;
}

std::string summary_csv(const std::vector<ExperimentResult>& results) {
  std::string out = kSummaryHeader;
  for (const ExperimentResult& result : results) append_summary_rows(out, result);
  return out;
}

std::string deviation_csv(const DeviationEstimate& estimate) {
  std::string out = "family,target,exceed_count,reps,frequency,wilson_low,wilson_high\n";
  for (const DeviationRow& row : estimate.rows) {
    out += row.family;
    out += ',';
    out += format_double(row.target);
    out += ',';
    out += std::to_string(row.exceed_count);
    out += ',';
    out += std::to_string(row.replications);
    out += ',';
    out += format_double(row.frequency);
    out += ',';
    out += format_double(row.wilson_low);
    out += ',';
    out += format_double(row.wilson_high);
    out += '\n';
  }
  return out;
}

std::string risk_curve_csv(const RiskCurve& curve) {
  if (curve.grid.size() != curve.values.size()) {
    throw std::invalid_argument("curve grid/value length mismatch");
  }
  std::string out = "t,value\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out += format_double(curve.grid[i]);
    out += ',';
    out += format_double(curve.values[i]);
    out += '\n';
  }
  return out;
}

RiskCurve risk_curve_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t,value") {
    throw IoError("curve CSV must start with the header 't,value'");
  }
  RiskCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("malformed curve CSV row: " + line);
    std::size_t used = 0;
    double t = 0.0;
    double v = 0.0;
    try {
      t = std::stod(line.substr(0, comma), &used);
      v = std::stod(line.substr(comma + 1), &used);
    } catch (const std::exception&) {
      throw IoError("malformed curve CSV row: " + line);
    }
    curve.grid.push_back(t);
    curve.values.push_back(v);
  }
  return curve;
}

json to_json(const ExperimentResult& result) {
  json rules = json::array();
  for (const RuleStats& stats : result.rules) {
    rules.push_back({{"rule", to_string(stats.rule)},
                     {"mean_loss", stats.mean_loss},
                     {"sd_loss", stats.sd_loss},
                     {"mean_tau", stats.mean_tau},
                     {"sd_tau", stats.sd_tau},
                     {"emergency_rate", stats.emergency_rate},
                     {"tau_histogram", histogram_to_json(stats.tau_histogram)}});
  }
  return {{"config", config_to_json(result.config)},
          {"rules", rules},
          {"wall_seconds", result.wall_seconds}};
}

ExperimentResult experiment_result_from_json(const json& doc) {
  ExperimentResult result;
  result.config = config_from_json(doc.at("config"));
  for (const json& rule : doc.at("rules")) {
    RuleStats stats;
    stats.rule = stopping_rule_from_name(rule.at("rule").get<std::string>());
    stats.mean_loss = rule.at("mean_loss").get<double>();
    stats.sd_loss = rule.at("sd_loss").get<double>();
    stats.mean_tau = rule.at("mean_tau").get<double>();
    stats.sd_tau = rule.at("sd_tau").get<double>();
    stats.emergency_rate = rule.at("emergency_rate").get<double>();
    stats.tau_histogram = histogram_from_json(rule.at("tau_histogram"));
    result.rules.push_back(std::move(stats));
  }
  result.wall_seconds = doc.at("wall_seconds").get<double>();
  return result;
}

json to_json(const DeviationEstimate& estimate) {
  json rows = json::array();
  for (const DeviationRow& row : estimate.rows) {
    rows.push_back({{"family", row.family},
                    {"target", row.target},
                    {"exceed_count", row.exceed_count},
                    {"reps", row.replications},
                    {"frequency", row.frequency},
                    {"wilson_low", row.wilson_low},
                    {"wilson_high", row.wilson_high}});
  }
  return {{"balancing_t", estimate.balancing_t},
          {"smoothed_balancing_t", estimate.smoothed_balancing_t},
          {"rows", rows}};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw IoError("failed to write to standard output");
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("short write: " + path);
}

}  // namespace earlystop
