#include "earlystop/presets.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace earlystop {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) {
      throw UsageError("empty entry in list: " + text);
    }
    items.push_back(item.substr(first, last - first + 1));
  }
  if (items.empty()) throw UsageError("empty list: " + text);
  return items;
}

double parse_one_double(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: " + text);
  }
  if (used != text.size()) throw UsageError("not a number: " + text);
  return value;
}

std::vector<RuleSpec> make_rule_specs(const std::vector<StoppingRule>& rules,
                                      double sigma_sq, long t_max, long sdp_T) {
  std::vector<RuleSpec> specs;
  specs.reserve(rules.size());
  for (const StoppingRule rule : rules) {
    RuleSpec spec;
    spec.rule = rule;
    spec.config.sigma_sq = sigma_sq;
    spec.config.mode = SearchMode::IntegerGrid;
    spec.config.max_iter = t_max;
    switch (rule) {
      case StoppingRule::DP:
      case StoppingRule::Balancing:
      case StoppingRule::Oracle:
        spec.config.emergency_stop = static_cast<double>(t_max);
        break;
      case StoppingRule::SDP:
        spec.config.emergency_stop = static_cast<double>(sdp_T);
        spec.config.smoothing_T = static_cast<double>(sdp_T);
        break;
      case StoppingRule::SmoothedBalancing:
        spec.config.emergency_stop = static_cast<double>(t_max);
        spec.config.smoothing_T = static_cast<double>(sdp_T);
        break;
    }
    specs.push_back(spec);
  }
  return specs;
}

}  // namespace

Preset preset_from_name(const std::string& name) {
  if (name == "inner-sobolev") return Preset::InnerSobolev;
  if (name == "inner-gaussian") return Preset::InnerGaussian;
  if (name == "outer-sobolev") return Preset::OuterSobolev;
  if (name == "custom") return Preset::Custom;
  throw UsageError("unknown preset: " + name);
}

std::string to_string(Preset preset) {
  switch (preset) {
    case Preset::InnerSobolev: return "inner-sobolev";
    case Preset::InnerGaussian: return "inner-gaussian";
    case Preset::OuterSobolev: return "outer-sobolev";
    case Preset::Custom: return "custom";
  }
  throw std::logic_error("unreachable preset");
}

long sdp_horizon_inner(std::size_t n) {
  if (n < 1) throw UsageError("n must be >= 1");
  return static_cast<long>(std::ceil(4.0 * std::sqrt(static_cast<double>(n))));
}

long sdp_horizon_outer(std::size_t n) {
  if (n < 2) throw UsageError("the outer horizon 2n/log(n) requires n >= 2");
  return static_cast<long>(
      std::ceil(2.0 * static_cast<double>(n) / std::log(static_cast<double>(n))));
}

long outer_t_max(std::size_t n) {
  if (n <= 400) return 500;
  if (n <= 600) return 1000;
  if (n <= 800) return 2000;
  return 3000;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  for (const std::string& item : split_list(text)) values.push_back(parse_one_double(item));
  return values;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> values;
  for (const std::string& item : split_list(text)) {
    const double v = parse_one_double(item);
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw UsageError("expected a positive integer: " + item);
    }
    values.push_back(static_cast<std::size_t>(v));
  }
  return values;
}

std::vector<StoppingRule> parse_rule_list(const std::string& text) {
  std::vector<StoppingRule> rules;
  std::set<StoppingRule> seen;
  for (const std::string& item : split_list(text)) {
    StoppingRule rule;
    try {
      rule = stopping_rule_from_name(item);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (!seen.insert(rule).second) throw UsageError("duplicate stopping rule: " + item);
    rules.push_back(rule);
  }
  return rules;
}

ExperimentConfig expand_preset(Preset preset, const Overrides& overrides) {
  if (preset == Preset::Custom && !overrides.n.has_value()) {
    throw UsageError("preset custom requires an explicit --n");
  }
  ExperimentConfig config;
  config.preset = to_string(preset);
  config.n = overrides.n.value_or(200);
  if (config.n < 1) throw UsageError("n must be >= 1");
  config.replications = overrides.reps.value_or(200);
  if (config.replications < 1) throw UsageError("reps must be >= 1");
  config.seed = overrides.seed.value_or(0);
  config.sigma_sq = overrides.sigma_sq.value_or(1.0);
  if (!(config.sigma_sq >= 0.0)) throw UsageError("sigma-sq must be >= 0");
  config.jobs = overrides.jobs.value_or(1);
  if (config.jobs < 1) throw UsageError("jobs must be >= 1");

  // Preset defaults.
  std::string kernel_name = "sobolev";
  double bandwidth = 0.02;
  std::string signal_name = "inner";
  double eta = 2.4;
  long t_max = 500;
  bool outer_horizon = false;
  std::vector<StoppingRule> rules = {StoppingRule::DP, StoppingRule::SDP,
                                     StoppingRule::Balancing, StoppingRule::Oracle};
  switch (preset) {
    case Preset::InnerSobolev:
      break;
    case Preset::InnerGaussian:
      kernel_name = "gaussian";
      eta = 0.5;
      break;
    case Preset::OuterSobolev:
      signal_name = "outer";
      t_max = outer_t_max(config.n);
      outer_horizon = true;
      rules = {StoppingRule::DP, StoppingRule::SDP, StoppingRule::Oracle};
      break;
    case Preset::Custom:
      break;
  }

  if (overrides.kernel.has_value()) kernel_name = *overrides.kernel;
  if (overrides.bandwidth.has_value()) bandwidth = *overrides.bandwidth;
  if (overrides.signal.has_value()) signal_name = *overrides.signal;
  if (overrides.eta.has_value()) eta = *overrides.eta;
  if (overrides.t_max.has_value()) t_max = *overrides.t_max;
  if (overrides.rules.has_value()) rules = *overrides.rules;

  if (!(eta > 0.0)) throw UsageError("eta must be positive");
  if (t_max < 1) throw UsageError("t-max must be >= 1");
  if (rules.empty()) throw UsageError("at least one stopping rule is required");

  try {
    config.kernel = Kernel::from_name(kernel_name, bandwidth);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (signal_name == "inner") {
    config.signal = SignalSpec::inner();
  } else if (signal_name == "outer") {
    config.signal = SignalSpec::outer();
  } else {
    throw UsageError("unknown signal: " + signal_name);
  }
  config.regularizer = Regularizer::landweber(eta);
  config.t_max = t_max;

  const long sdp_T =
      outer_horizon ? sdp_horizon_outer(config.n) : sdp_horizon_inner(config.n);
  if (sdp_T > t_max) {
    throw UsageError("the smoothed-rule horizon " + std::to_string(sdp_T) +
                     " exceeds t-max " + std::to_string(t_max));
  }
  config.rules = make_rule_specs(rules, config.sigma_sq, t_max, sdp_T);
  return config;
}

void apply_config_file(Overrides& overrides, const std::string& json_text,
                       std::optional<Preset>& preset,
                       std::optional<std::string>& format) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw UsageError("config file must hold a flat JSON object");

  const auto as_count = [](const nlohmann::json& v, const char* key) -> std::uint64_t {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw UsageError(std::string("config key '") + key +
                       "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  };
  const auto as_double = [](const nlohmann::json& v, const char* key) -> double {
    if (!v.is_number()) {
      throw UsageError(std::string("config key '") + key + "' must be a number");
    }
    return v.get<double>();
  };
  const auto as_string = [](const nlohmann::json& v, const char* key) -> std::string {
    if (!v.is_string()) {
      throw UsageError(std::string("config key '") + key + "' must be a string");
    }
    return v.get<std::string>();
  };

  for (const auto& [key, value] : doc.items()) {
    if (key == "preset") {
      if (!preset.has_value()) preset = preset_from_name(as_string(value, "preset"));
    } else if (key == "n") {
      if (!overrides.n.has_value()) {
        overrides.n = static_cast<std::size_t>(as_count(value, "n"));
      }
    } else if (key == "reps") {
      if (!overrides.reps.has_value()) {
        overrides.reps = static_cast<std::size_t>(as_count(value, "reps"));
      }
    } else if (key == "seed") {
      if (!overrides.seed.has_value()) overrides.seed = as_count(value, "seed");
    } else if (key == "eta") {
      if (!overrides.eta.has_value()) overrides.eta = as_double(value, "eta");
    } else if (key == "sigma-sq") {
      if (!overrides.sigma_sq.has_value()) {
        overrides.sigma_sq = as_double(value, "sigma-sq");
      }
    } else if (key == "t-max") {
      if (!overrides.t_max.has_value()) {
        overrides.t_max = static_cast<long>(as_count(value, "t-max"));
      }
    } else if (key == "rules") {
      if (!overrides.rules.has_value()) {
        if (value.is_string()) {
          overrides.rules = parse_rule_list(value.get<std::string>());
        } else if (value.is_array()) {
          std::string joined;
          for (const auto& item : value) {
            if (!joined.empty()) joined += ',';
            joined += as_string(item, "rules");
          }
          overrides.rules = parse_rule_list(joined);
        } else {
          throw UsageError("config key 'rules' must be a string or array of strings");
        }
      }
    } else if (key == "kernel") {
      if (!overrides.kernel.has_value()) overrides.kernel = as_string(value, "kernel");
    } else if (key == "bandwidth") {
      if (!overrides.bandwidth.has_value()) {
        overrides.bandwidth = as_double(value, "bandwidth");
      }
    } else if (key == "signal") {
      if (!overrides.signal.has_value()) overrides.signal = as_string(value, "signal");
    } else if (key == "jobs") {
      if (!overrides.jobs.has_value()) {
        overrides.jobs = static_cast<int>(as_count(value, "jobs"));
      }
    } else if (key == "format") {
      if (!format.has_value()) format = as_string(value, "format");
    } else {
      throw UsageError("unknown config key: " + key);
    }
  }
}

}  // namespace earlystop
