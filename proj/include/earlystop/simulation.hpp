#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "earlystop/kernels.hpp"
#include "earlystop/rng.hpp"
#include "earlystop/spectral.hpp"
#include "earlystop/stopping.hpp"

namespace earlystop {

// Piecewise-constant test signal:
//   2 on [0.15, 0.3), -1 on [0.3, 0.5), 1 on [0.5, 0.85), -1 on [0.85, 1),
//   0 elsewhere (including x = 1).
double outer_signal(double x);

// Smooth test signal ((1 + x) / 2) sin(2 pi x (1 + x)).
double inner_signal(double x);

enum class SignalKind { Outer, Inner, Custom };

struct SignalSpec {
  SignalKind kind = SignalKind::Inner;
  // Custom signals are tabulated per design point.
  std::vector<double> custom_values;

  static SignalSpec outer() { return {SignalKind::Outer, {}}; }
  static SignalSpec inner() { return {SignalKind::Inner, {}}; }
  static SignalSpec custom(std::vector<double> values);
  std::string name() const;
};

// Signal evaluated at the design points.
Eigen::VectorXd signal_vector(const SignalSpec& signal, const Design& design);

// One observation vector Y_i = f(x_i) + eps_i with eps_i iid N(0, sigma_sq).
Eigen::VectorXd generate_sample(const SignalSpec& signal, const Design& design,
                                double sigma_sq, NoiseStream& noise);

// One stopping rule plus its search configuration.
struct RuleSpec {
  StoppingRule rule = StoppingRule::DP;
  StoppingConfig config;
};

struct ExperimentConfig {
  std::size_t n = 200;
  std::size_t replications = 200;
  std::uint64_t seed = 0;
  double sigma_sq = 1.0;
  Kernel kernel = Kernel::sobolev();
  Regularizer regularizer = Regularizer::landweber(2.4);
  SignalSpec signal = SignalSpec::inner();
  long t_max = 500;
  std::vector<RuleSpec> rules;
  int jobs = 1;
  // Name of the preset this configuration was expanded from ("custom" if none).
  std::string preset = "custom";

  void validate() const;
};

// A rule prepared for replication runs: data-independent rules (balancing,
// smoothed balancing, oracle) carry their precomputed outcome.
struct PreparedRule {
  StoppingRule rule = StoppingRule::DP;
  StoppingConfig config;
  std::optional<StoppingOutcome> precomputed;
};

std::vector<PreparedRule> prepare_rules(const SpectralDecomposition& dec,
                                        const Regularizer& reg,
                                        const EmpiricalCoords& zf,
                                        const std::vector<RuleSpec>& rules,
                                        double sigma_sq, long t_max);

struct ReplicationRecord {
  StoppingRule rule = StoppingRule::DP;
  double time = 0.0;
  double loss = 0.0;
  bool hit_emergency = false;
};

// Draws one noise vector, forms Y = f + eps, and evaluates every prepared
// rule on the same data; returns one record per rule, in rule order.
std::vector<ReplicationRecord> run_replication(const SpectralDecomposition& dec,
                                               const Regularizer& reg,
                                               const Eigen::VectorXd& signal_values,
                                               const EmpiricalCoords& zf,
                                               const std::vector<PreparedRule>& rules,
                                               double sigma_sq, NoiseStream& noise);

struct Histogram {
  std::vector<double> edges;        // size bins + 1
  std::vector<std::size_t> counts;  // size bins; counts sum to the replication count
};

struct RuleStats {
  StoppingRule rule = StoppingRule::DP;
  double mean_loss = 0.0;
  double sd_loss = 0.0;
  double mean_tau = 0.0;
  double sd_tau = 0.0;
  double emergency_rate = 0.0;
  Histogram tau_histogram;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RuleStats> rules;
  double wall_seconds = 0.0;
};

// Full Monte Carlo experiment: one decomposition, `replications` independent
// replications with per-replication noise streams (seed XOR index), aggregated
// in fixed replication order so parallel runs match serial runs exactly.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Deviation-probability targets: times t (tail events {tau > t}) and offsets y
// (variance / bias exceedance events).
struct DeviationTargets {
  std::vector<double> times;
  std::vector<double> offsets;
};

struct DeviationRow {
  // "dp-tail" | "sdp-tail" | "dp-variance" | "sdp-variance" | "dp-bias" | "sdp-bias"
  std::string family;
  double target = 0.0;
  std::size_t exceed_count = 0;
  std::size_t replications = 0;
  double frequency = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
};

struct DeviationEstimate {
  // Balancing references the events are measured against.
  double balancing_t = 0.0;
  double smoothed_balancing_t = 0.0;
  std::vector<DeviationRow> rows;
};

// Monte Carlo frequencies, with Wilson 95% intervals, of
//   {tau_DP > t}, {v_{tau_DP} > v_{t*} + y}, {b^2_{tau_DP} > 2 b^2_{t*} + y}
// and the smoothed analogues at tau_SDP (references t* and its smoothed
// counterpart are computed from the noise-free signal first).  Every time
// target must exceed both balancing references.
DeviationEstimate estimate_deviation(const ExperimentConfig& config,
                                     const DeviationTargets& targets);

// Wilson 95% score interval for `successes` out of `trials`.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials);

}  // namespace earlystop
