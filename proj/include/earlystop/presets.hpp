#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "earlystop/simulation.hpp"

namespace earlystop {

// Command-line / config-file mistakes (unknown keys, invalid preset, missing
// required settings).  Mapped to the usage exit code by the CLI.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Preset { InnerSobolev, InnerGaussian, OuterSobolev, Custom };

Preset preset_from_name(const std::string& name);
std::string to_string(Preset preset);

// Emergency horizons of the smoothed discrepancy rule.
long sdp_horizon_inner(std::size_t n);  // ceil(4 sqrt(n))
long sdp_horizon_outer(std::size_t n);  // ceil(2 n / log n)

// Landweber iteration budget of the piecewise-constant-signal study:
// 500 for n <= 400, 1000 for n <= 600, 2000 for n <= 800, 3000 above.
long outer_t_max(std::size_t n);

// Settings that may override a preset (flags win over config-file values,
// which win over preset defaults).
struct Overrides {
  std::optional<std::size_t> n;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<double> eta;
  std::optional<double> sigma_sq;
  std::optional<long> t_max;
  std::optional<std::vector<StoppingRule>> rules;
  std::optional<std::string> kernel;
  std::optional<double> bandwidth;
  std::optional<std::string> signal;
  std::optional<int> jobs;
};

// Expands a preset into a full experiment configuration and applies the
// overrides.  Pure: no I/O, no global state.  The preset "custom" requires an
// explicit n.  Derived horizons (SDP emergency stop, outer iteration budget)
// are recomputed from the effective n.
ExperimentConfig expand_preset(Preset preset, const Overrides& overrides);

// Parses "a,b,c" lists.
std::vector<double> parse_double_list(const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& text);
std::vector<StoppingRule> parse_rule_list(const std::string& text);

// Merges a flat key/value JSON document into the overrides, rejecting unknown
// keys; values already present (set by flags) win.
void apply_config_file(Overrides& overrides, const std::string& json_text,
                       std::optional<Preset>& preset,
                       std::optional<std::string>& format);

}  // namespace earlystop
