#include "earlystop/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>

namespace earlystop {

namespace {

// Sample mean and (N-1)-normalized standard deviation; sd is 0 for N = 1.
std::pair<double, double> mean_sd(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

Histogram make_histogram(const std::vector<double>& values, double hi) {
  constexpr std::size_t kBins = 20;
  if (!(hi > 0.0) || !std::isfinite(hi)) {
    hi = std::max(1.0, *std::max_element(values.begin(), values.end()));
  }
  Histogram hist;
  hist.edges.resize(kBins + 1);
  hist.counts.assign(kBins, 0);
  for (std::size_t i = 0; i <= kBins; ++i) {
    hist.edges[i] = hi * static_cast<double>(i) / static_cast<double>(kBins);
  }
  for (const double v : values) {
    auto bin = static_cast<std::size_t>(std::floor(v / hi * static_cast<double>(kBins)));
    bin = std::min(bin, kBins - 1);  // the cap itself lands in the last bin
    ++hist.counts[bin];
  }
  return hist;
}

// Per-rule cap used as the histogram range.
double rule_cap(const StoppingConfig& config) {
  double cap = config.emergency_stop;
  if (config.mode == SearchMode::IntegerGrid) {
    cap = std::min(cap, static_cast<double>(config.max_iter));
  }
  return cap;
}

}  // namespace

double outer_signal(double x) {
  if (x >= 0.15 && x < 0.3) return 2.0;
  if (x >= 0.3 && x < 0.5) return -1.0;
  if (x >= 0.5 && x < 0.85) return 1.0;
  if (x >= 0.85 && x < 1.0) return -1.0;
  return 0.0;
}

double inner_signal(double x) {
  return 0.5 * (1.0 + x) * std::sin(2.0 * M_PI * x * (1.0 + x));
}

SignalSpec SignalSpec::custom(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("custom signal must be non-empty");
  return {SignalKind::Custom, std::move(values)};
}

std::string SignalSpec::name() const {
  switch (kind) {
    case SignalKind::Outer: return "outer";
    case SignalKind::Inner: return "inner";
    case SignalKind::Custom: return "custom";
  }
  throw std::logic_error("unreachable signal kind");
}

Eigen::VectorXd signal_vector(const SignalSpec& signal, const Design& design) {
  const auto n = design.size();
  Eigen::VectorXd f(static_cast<Eigen::Index>(n));
  switch (signal.kind) {
    case SignalKind::Outer:
      for (std::size_t i = 0; i < n; ++i) {
        f[static_cast<Eigen::Index>(i)] = outer_signal(design.points[i]);
      }
      return f;
    case SignalKind::Inner:
      for (std::size_t i = 0; i < n; ++i) {
        f[static_cast<Eigen::Index>(i)] = inner_signal(design.points[i]);
      }
      return f;
    case SignalKind::Custom:
      if (signal.custom_values.size() != n) {
        throw std::invalid_argument("custom signal length must match the design");
      }
      for (std::size_t i = 0; i < n; ++i) {
        f[static_cast<Eigen::Index>(i)] = signal.custom_values[i];
      }
      return f;
  }
  throw std::logic_error("unreachable signal kind");
}

Eigen::VectorXd generate_sample(const SignalSpec& signal, const Design& design,
                                double sigma_sq, NoiseStream& noise) {
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("sigma_sq must be >= 0");
  Eigen::VectorXd y = signal_vector(signal, design);
  const double sigma = std::sqrt(sigma_sq);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * noise.next_gaussian();
  return y;
}

void ExperimentConfig::validate() const {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("sigma_sq must be >= 0");
  if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (rules.empty()) throw std::invalid_argument("at least one stopping rule is required");
  if (signal.kind == SignalKind::Custom && signal.custom_values.size() != n) {
    throw std::invalid_argument("custom signal length must match n");
  }
  for (const RuleSpec& spec : rules) {
    spec.config.validate();
    if (spec.config.mode == SearchMode::IntegerGrid &&
        std::min(spec.config.emergency_stop, static_cast<double>(spec.config.max_iter)) >
            static_cast<double>(t_max)) {
      throw std::invalid_argument("grid-mode emergency stop exceeds t_max for rule " +
                                  to_string(spec.rule));
    }
  }
}

std::vector<PreparedRule> prepare_rules(const SpectralDecomposition& dec,
                                        const Regularizer& reg,
                                        const EmpiricalCoords& zf,
                                        const std::vector<RuleSpec>& rules,
                                        double sigma_sq, long t_max) {
  std::vector<PreparedRule> prepared;
  prepared.reserve(rules.size());
  for (const RuleSpec& spec : rules) {
    PreparedRule p;
    p.rule = spec.rule;
    p.config = spec.config;
    p.config.sigma_sq = sigma_sq;  // single source of truth
    switch (spec.rule) {
      case StoppingRule::DP:
      case StoppingRule::SDP:
        break;  // data-dependent; evaluated per replication
      case StoppingRule::Balancing:
        p.precomputed = balancing_time(dec, reg, zf, sigma_sq, p.config);
        break;
      case StoppingRule::SmoothedBalancing:
        p.precomputed = smoothed_balancing_time(dec, reg, zf, sigma_sq, p.config);
        break;
      case StoppingRule::Oracle: {
        double end = std::min(p.config.emergency_stop, static_cast<double>(t_max));
        end = std::min(end, static_cast<double>(p.config.max_iter));
        const long last = std::max(0L, static_cast<long>(std::floor(end)));
        std::vector<double> grid(static_cast<std::size_t>(last) + 1);
        for (long t = 0; t <= last; ++t) grid[static_cast<std::size_t>(t)] = t;
        p.precomputed = oracle_time(dec, reg, zf, sigma_sq, grid);
        break;
      }
    }
    prepared.push_back(std::move(p));
  }
  return prepared;
}

std::vector<ReplicationRecord> run_replication(const SpectralDecomposition& dec,
                                               const Regularizer& reg,
                                               const Eigen::VectorXd& signal_values,
                                               const EmpiricalCoords& zf,
                                               const std::vector<PreparedRule>& rules,
                                               double sigma_sq, NoiseStream& noise) {
  if (signal_values.size() != dec.eigenvalues.size()) {
    throw std::invalid_argument("run_replication: signal length mismatch");
  }
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("sigma_sq must be >= 0");
  const double sigma = std::sqrt(sigma_sq);
  Eigen::VectorXd y = signal_values;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * noise.next_gaussian();
  const EmpiricalCoords zy = coords(dec, y);

  std::vector<ReplicationRecord> records;
  records.reserve(rules.size());
  for (const PreparedRule& rule : rules) {
    StoppingOutcome outcome;
    if (rule.precomputed.has_value()) {
      outcome = *rule.precomputed;
    } else if (rule.rule == StoppingRule::DP) {
      outcome = tau_dp(dec, reg, zy, rule.config);
    } else if (rule.rule == StoppingRule::SDP) {
      outcome = tau_sdp(dec, reg, zy, rule.config);
    } else {
      throw std::logic_error("rule without precomputed outcome: " + to_string(rule.rule));
    }
    ReplicationRecord rec;
    rec.rule = rule.rule;
    rec.time = outcome.time;
    rec.loss = empirical_loss(dec, reg, outcome.time, zf, zy);
    rec.hit_emergency = outcome.hit_emergency;
    records.push_back(rec);
  }
  return records;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  const Design design = fixed_design(config.n);
  const KernelMatrix K = kernel_matrix(config.kernel, design);
  const SpectralDecomposition dec = decompose(K);
  config.regularizer.require_stable(dec.top());
  const Eigen::VectorXd f = signal_vector(config.signal, design);
  const EmpiricalCoords zf = coords(dec, f);
  const std::vector<PreparedRule> prepared = prepare_rules(
      dec, config.regularizer, zf, config.rules, config.sigma_sq, config.t_max);

  const std::size_t reps = config.replications;
  std::vector<std::vector<ReplicationRecord>> all(reps);
  const auto worker_body = [&](std::size_t rep) {
    NoiseStream stream(config.seed ^ static_cast<std::uint64_t>(rep));
    all[rep] = run_replication(dec, config.regularizer, f, zf, prepared,
                               config.sigma_sq, stream);
  };
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.jobs), reps);
  if (workers <= 1) {
    for (std::size_t rep = 0; rep < reps; ++rep) worker_body(rep);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t rep = next.fetch_add(1); rep < reps; rep = next.fetch_add(1)) {
          worker_body(rep);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  // Aggregation runs in fixed replication order, so the result is identical
  // whether the replications were computed serially or in parallel.
  ExperimentResult result;
  result.config = config;
  result.rules.reserve(prepared.size());
  for (std::size_t r = 0; r < prepared.size(); ++r) {
    std::vector<double> losses(reps);
    std::vector<double> taus(reps);
    std::size_t emergencies = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      losses[rep] = all[rep][r].loss;
      taus[rep] = all[rep][r].time;
      if (all[rep][r].hit_emergency) ++emergencies;
    }
    RuleStats stats;
    stats.rule = prepared[r].rule;
    std::tie(stats.mean_loss, stats.sd_loss) = mean_sd(losses);
    std::tie(stats.mean_tau, stats.sd_tau) = mean_sd(taus);
    stats.emergency_rate = static_cast<double>(emergencies) / static_cast<double>(reps);
    stats.tau_histogram = make_histogram(taus, rule_cap(prepared[r].config));
    result.rules.push_back(std::move(stats));
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) throw std::invalid_argument("wilson interval requires trials >= 1");
  if (successes > trials) throw std::invalid_argument("successes exceed trials");
  constexpr double z = 1.959963984540054;  // 97.5% normal quantile
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // The interval contains the point estimate by construction; the min/max
  // guards only strip floating-point dust at the p = 0 and p = 1 boundaries.
  return {std::max(0.0, std::min(center - half, p)),
          std::min(1.0, std::max(center + half, p))};
}

DeviationEstimate estimate_deviation(const ExperimentConfig& config,
                                     const DeviationTargets& targets) {
  config.validate();
  if (targets.times.empty() && targets.offsets.empty()) {
    throw std::invalid_argument("deviation estimation needs time or offset targets");
  }
  for (const double y : targets.offsets) {
    if (!(y >= 0.0) || !std::isfinite(y)) {
      throw std::invalid_argument("offset targets must be finite and >= 0");
    }
  }

  const StoppingConfig* dp_config = nullptr;
  const StoppingConfig* sdp_config = nullptr;
  for (const RuleSpec& spec : config.rules) {
    if (spec.rule == StoppingRule::DP) dp_config = &spec.config;
    if (spec.rule == StoppingRule::SDP) sdp_config = &spec.config;
  }
  if (dp_config == nullptr || sdp_config == nullptr) {
    throw std::invalid_argument("deviation estimation requires dp and sdp rules");
  }

  const Design design = fixed_design(config.n);
  const SpectralDecomposition dec = decompose(kernel_matrix(config.kernel, design));
  const Regularizer& reg = config.regularizer;
  reg.require_stable(dec.top());
  const Eigen::VectorXd f = signal_vector(config.signal, design);
  const EmpiricalCoords zf = coords(dec, f);
  const double sigma_sq = config.sigma_sq;
  const double n = static_cast<double>(config.n);

  // Deterministic balancing references, computed before any noise is drawn.
  StoppingConfig bal_config = *dp_config;
  bal_config.sigma_sq = sigma_sq;
  const StoppingOutcome t_star = balancing_time(dec, reg, zf, sigma_sq, bal_config);
  StoppingConfig sbal_config = *sdp_config;
  sbal_config.sigma_sq = sigma_sq;
  const StoppingOutcome t_star_s =
      smoothed_balancing_time(dec, reg, zf, sigma_sq, sbal_config);

  for (const double t : targets.times) {
    if (!(t > t_star.time) || !(t > t_star_s.time)) {
      throw std::invalid_argument(
          "time targets must exceed both balancing references (" +
          std::to_string(t_star.time) + ", " + std::to_string(t_star_s.time) + ")");
    }
  }

  const double smoothing_T = sbal_config.smoothing();
  const EmpiricalCoords zf_s = smoothed_coords(dec, zf, smoothing_T);
  const double v_star = proxy_variance(dec, reg, t_star.time, sigma_sq);
  const double b2_star = bias_sq(dec, reg, t_star.time, zf);
  const double vs_star =
      sigma_sq * smoothed_g_effective_dimension(dec, reg, t_star_s.time, smoothing_T) / n;
  const double b2s_star = bias_sq(dec, reg, t_star_s.time, zf_s);

  StoppingConfig dp_run = *dp_config;
  dp_run.sigma_sq = sigma_sq;
  StoppingConfig sdp_run = *sdp_config;
  sdp_run.sigma_sq = sigma_sq;

  const std::size_t nt = targets.times.size();
  const std::size_t ny = targets.offsets.size();
  std::vector<std::size_t> dp_tail(nt, 0), sdp_tail(nt, 0);
  std::vector<std::size_t> dp_var(ny, 0), sdp_var(ny, 0), dp_bias(ny, 0), sdp_bias(ny, 0);

  const std::size_t reps = config.replications;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    NoiseStream stream(config.seed ^ static_cast<std::uint64_t>(rep));
    Eigen::VectorXd y = f;
    const double sigma = std::sqrt(sigma_sq);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * stream.next_gaussian();
    const EmpiricalCoords zy = coords(dec, y);

    const double tau_dp_time = tau_dp(dec, reg, zy, dp_run).time;
    const double tau_sdp_time = tau_sdp(dec, reg, zy, sdp_run).time;
    for (std::size_t i = 0; i < nt; ++i) {
      if (tau_dp_time > targets.times[i]) ++dp_tail[i];
      if (tau_sdp_time > targets.times[i]) ++sdp_tail[i];
    }
    if (ny > 0) {
      const double v_tau = proxy_variance(dec, reg, tau_dp_time, sigma_sq);
      const double b2_tau = bias_sq(dec, reg, tau_dp_time, zf);
      const double vs_tau =
          sigma_sq * smoothed_g_effective_dimension(dec, reg, tau_sdp_time, smoothing_T) /
          n;
      const double b2s_tau = bias_sq(dec, reg, tau_sdp_time, zf_s);
      for (std::size_t i = 0; i < ny; ++i) {
        const double y_off = targets.offsets[i];
        if (v_tau > v_star + y_off) ++dp_var[i];
        if (vs_tau > vs_star + y_off) ++sdp_var[i];
        if (b2_tau > 2.0 * b2_star + y_off) ++dp_bias[i];
        if (b2s_tau > 2.0 * b2s_star + y_off) ++sdp_bias[i];
      }
    }
  }

  DeviationEstimate estimate;
  estimate.balancing_t = t_star.time;
  estimate.smoothed_balancing_t = t_star_s.time;
  const auto emit = [&](const std::string& family, double target, std::size_t count) {
    DeviationRow row;
    row.family = family;
    row.target = target;
    row.exceed_count = count;
    row.replications = reps;
    row.frequency = static_cast<double>(count) / static_cast<double>(reps);
    std::tie(row.wilson_low, row.wilson_high) = wilson_interval(count, reps);
    estimate.rows.push_back(std::move(row));
  };
  for (std::size_t i = 0; i < nt; ++i) emit("dp-tail", targets.times[i], dp_tail[i]);
  for (std::size_t i = 0; i < nt; ++i) emit("sdp-tail", targets.times[i], sdp_tail[i]);
  for (std::size_t i = 0; i < ny; ++i) emit("dp-variance", targets.offsets[i], dp_var[i]);
  for (std::size_t i = 0; i < ny; ++i) emit("sdp-variance", targets.offsets[i], sdp_var[i]);
  for (std::size_t i = 0; i < ny; ++i) emit("dp-bias", targets.offsets[i], dp_bias[i]);
  for (std::size_t i = 0; i < ny; ++i) emit("sdp-bias", targets.offsets[i], sdp_bias[i]);
  return estimate;
}

}  // namespace earlystop
