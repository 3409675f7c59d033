#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "earlystop/io.hpp"
#include "earlystop/presets.hpp"
#include "earlystop/rng.hpp"
#include "earlystop/simulation.hpp"

using namespace earlystop;
using doctest::Approx;

TEST_CASE("piecewise-constant signal pinned values") {
  CHECK(outer_signal(0.0) == 0.0);
  CHECK(outer_signal(0.1) == 0.0);
  CHECK(outer_signal(0.15) == 2.0);
  CHECK(outer_signal(0.29) == 2.0);
  CHECK(outer_signal(0.3) == -1.0);
  CHECK(outer_signal(0.49) == -1.0);
  CHECK(outer_signal(0.5) == 1.0);
  CHECK(outer_signal(0.84) == 1.0);
  CHECK(outer_signal(0.85) == -1.0);
  CHECK(outer_signal(0.99) == -1.0);
  CHECK(outer_signal(1.0) == 0.0);
}

TEST_CASE("smooth signal pinned values") {
  CHECK(inner_signal(0.0) == 0.0);
  // 0.75 * sin(3 pi / 2) = -0.75
  CHECK(inner_signal(0.5) == Approx(-0.75).epsilon(1e-14));
  // sin(4 pi) = 0 at the right endpoint
  CHECK(inner_signal(1.0) == Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("signal vectors evaluate at the design points") {
  const Design d = fixed_design(4);
  const Eigen::VectorXd inner = signal_vector(SignalSpec::inner(), d);
  for (int i = 0; i < 4; ++i) CHECK(inner[i] == inner_signal(d.points[i]));
  const Eigen::VectorXd custom =
      signal_vector(SignalSpec::custom({1.0, 2.0, 3.0, 4.0}), d);
  CHECK(custom[2] == 3.0);
  CHECK_THROWS_AS(signal_vector(SignalSpec::custom({1.0}), d), std::invalid_argument);
  CHECK_THROWS_AS(SignalSpec::custom({}), std::invalid_argument);
  CHECK(SignalSpec::outer().name() == "outer");
  CHECK(SignalSpec::inner().name() == "inner");
  CHECK(SignalSpec::custom({1.0}).name() == "custom");
}

TEST_CASE("noise stream is deterministic and seed-sensitive") {
  NoiseStream a(123);
  NoiseStream b(123);
  NoiseStream c(124);
  bool all_equal = true;
  bool any_differ = false;
  for (int i = 0; i < 256; ++i) {
    const double va = a.next_gaussian();
    all_equal = all_equal && va == b.next_gaussian();
    any_differ = any_differ || va != c.next_gaussian();
  }
  CHECK(all_equal);
  CHECK(any_differ);
}

TEST_CASE("uniform draws live strictly inside the unit interval") {
  NoiseStream rng(5);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.next_uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 20000.0 == Approx(0.5).epsilon(0.02));
}

TEST_CASE("gaussian draws match the standard normal moments") {
  NoiseStream rng(6);
  const int n = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  double sum_cube = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    sum += g;
    sum_sq += g * g;
    sum_cube += g * g * g;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  // standard errors: 1/sqrt(n) ~ 0.0032 for the mean, ~sqrt(2/n) for the
  // variance, sqrt(15/n) for the third moment; allow 4 standard errors
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / double(n)));
  CHECK(std::abs(sum_cube / n) < 4.0 * std::sqrt(15.0 / double(n)));
}

TEST_CASE("sample generation adds scaled noise to the signal") {
  const Design d = fixed_design(8);
  NoiseStream zero_noise(9);
  const Eigen::VectorXd exact =
      generate_sample(SignalSpec::inner(), d, 0.0, zero_noise);
  CHECK((exact - signal_vector(SignalSpec::inner(), d)).cwiseAbs().maxCoeff() == 0.0);
  NoiseStream s1(9);
  NoiseStream s2(9);
  const Eigen::VectorXd y = generate_sample(SignalSpec::inner(), d, 4.0, s1);
  Eigen::VectorXd manual = signal_vector(SignalSpec::inner(), d);
  for (Eigen::Index i = 0; i < manual.size(); ++i) {
    manual[i] += 2.0 * s2.next_gaussian();
  }
  CHECK((y - manual).cwiseAbs().maxCoeff() == 0.0);
  NoiseStream s3(9);
  CHECK_THROWS_AS(generate_sample(SignalSpec::inner(), d, -1.0, s3),
                  std::invalid_argument);
}

namespace {

ExperimentConfig small_inner_config() {
  Overrides ov;
  ov.n = 40;
  ov.reps = 8;
  ov.seed = 21;
  ov.t_max = 60;
  return expand_preset(Preset::InnerSobolev, ov);
}

}  // namespace

TEST_CASE("replication records follow the configured rule order") {
  const ExperimentConfig cfg = small_inner_config();
  const Design design = fixed_design(cfg.n);
  const SpectralDecomposition dec = decompose(kernel_matrix(cfg.kernel, design));
  const Eigen::VectorXd f = signal_vector(cfg.signal, design);
  const EmpiricalCoords zf = coords(dec, f);
  const auto prepared =
      prepare_rules(dec, cfg.regularizer, zf, cfg.rules, cfg.sigma_sq, cfg.t_max);
  REQUIRE(prepared.size() == 4);
  CHECK(prepared[0].rule == StoppingRule::DP);
  CHECK(prepared[1].rule == StoppingRule::SDP);
  CHECK(prepared[2].rule == StoppingRule::Balancing);
  CHECK(prepared[3].rule == StoppingRule::Oracle);
  CHECK(!prepared[0].precomputed.has_value());
  CHECK(!prepared[1].precomputed.has_value());
  REQUIRE(prepared[2].precomputed.has_value());
  REQUIRE(prepared[3].precomputed.has_value());

  NoiseStream noise(3);
  const auto records =
      run_replication(dec, cfg.regularizer, f, zf, prepared, cfg.sigma_sq, noise);
  REQUIRE(records.size() == 4);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].rule == prepared[i].rule);
    CHECK(records[i].loss >= 0.0);
    CHECK(records[i].time >= 0.0);
  }
  // deterministic rules stop at their precomputed time in every replication
  NoiseStream noise2(77);
  const auto records2 =
      run_replication(dec, cfg.regularizer, f, zf, prepared, cfg.sigma_sq, noise2);
  CHECK(records[2].time == records2[2].time);
  CHECK(records[3].time == records2[3].time);
  CHECK(records[2].time == prepared[2].precomputed->time);
}

TEST_CASE("replication losses match the loss functional at the stopping time") {
  const ExperimentConfig cfg = small_inner_config();
  const Design design = fixed_design(cfg.n);
  const SpectralDecomposition dec = decompose(kernel_matrix(cfg.kernel, design));
  const Eigen::VectorXd f = signal_vector(cfg.signal, design);
  const EmpiricalCoords zf = coords(dec, f);
  const auto prepared =
      prepare_rules(dec, cfg.regularizer, zf, cfg.rules, cfg.sigma_sq, cfg.t_max);
  // regenerate the same observation vector to check the loss identity
  NoiseStream noise(55);
  const auto records =
      run_replication(dec, cfg.regularizer, f, zf, prepared, cfg.sigma_sq, noise);
  NoiseStream replay(55);
  Eigen::VectorXd y = f;
  const double sigma = std::sqrt(cfg.sigma_sq);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * replay.next_gaussian();
  const EmpiricalCoords zy = coords(dec, y);
  for (const auto& rec : records) {
    CHECK(rec.loss ==
          Approx(empirical_loss(dec, cfg.regularizer, rec.time, zf, zy)).epsilon(1e-13));
  }
}

TEST_CASE("experiment statistics match a manual replication loop") {
  const ExperimentConfig cfg = small_inner_config();
  const ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.rules.size() == 4);

  const Design design = fixed_design(cfg.n);
  const SpectralDecomposition dec = decompose(kernel_matrix(cfg.kernel, design));
  const Eigen::VectorXd f = signal_vector(cfg.signal, design);
  const EmpiricalCoords zf = coords(dec, f);
  const auto prepared =
      prepare_rules(dec, cfg.regularizer, zf, cfg.rules, cfg.sigma_sq, cfg.t_max);
  for (std::size_t r = 0; r < prepared.size(); ++r) {
    std::vector<double> losses;
    std::vector<double> taus;
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
      NoiseStream stream(cfg.seed ^ static_cast<std::uint64_t>(rep));
      const auto records =
          run_replication(dec, cfg.regularizer, f, zf, prepared, cfg.sigma_sq, stream);
      losses.push_back(records[r].loss);
      taus.push_back(records[r].time);
    }
    const double mean =
        std::accumulate(losses.begin(), losses.end(), 0.0) / double(losses.size());
    double ss = 0.0;
    for (const double v : losses) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / double(losses.size() - 1));
    CHECK(result.rules[r].mean_loss == Approx(mean).epsilon(1e-13));
    CHECK(result.rules[r].sd_loss == Approx(sd).epsilon(1e-12));
    const double mean_tau =
        std::accumulate(taus.begin(), taus.end(), 0.0) / double(taus.size());
    CHECK(result.rules[r].mean_tau == Approx(mean_tau).epsilon(1e-13));
    // histogram counts cover every replication
    const auto& hist = result.rules[r].tau_histogram;
    REQUIRE(hist.edges.size() == hist.counts.size() + 1);
    CHECK(std::accumulate(hist.counts.begin(), hist.counts.end(), std::size_t{0}) ==
          cfg.replications);
    CHECK(result.rules[r].emergency_rate >= 0.0);
    CHECK(result.rules[r].emergency_rate <= 1.0);
  }
  CHECK(result.wall_seconds >= 0.0);
}

TEST_CASE("parallel experiments reproduce the serial result exactly") {
  ExperimentConfig cfg = small_inner_config();
  const ExperimentResult serial = run_experiment(cfg);
  cfg.jobs = 4;
  const ExperimentResult parallel = run_experiment(cfg);
  CHECK(summary_csv(serial) == summary_csv(parallel));
  cfg.jobs = 3;
  const ExperimentResult parallel3 = run_experiment(cfg);
  CHECK(summary_csv(serial) == summary_csv(parallel3));
}

TEST_CASE("experiment validation rejects inconsistent settings") {
  ExperimentConfig cfg = small_inner_config();
  cfg.replications = 0;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  cfg = small_inner_config();
  cfg.rules.clear();
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  cfg = small_inner_config();
  cfg.signal = SignalSpec::custom({1.0, 2.0});  // wrong length
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  cfg = small_inner_config();
  cfg.rules[0].config.emergency_stop = double(cfg.t_max) + 100.0;
  cfg.rules[0].config.max_iter = cfg.t_max + 100;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  cfg = small_inner_config();
  cfg.sigma_sq = -0.5;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("score interval matches published reference values") {
  // 50 successes out of 100: (0.40383, 0.59617)
  const auto [lo, hi] = wilson_interval(50, 100);
  CHECK(lo == Approx(0.40383).epsilon(1e-4));
  CHECK(hi == Approx(0.59617).epsilon(1e-4));
  // 0 of 20: lower bound 0, upper bound z^2 / (n + z^2) = 0.16113
  const auto [lo0, hi0] = wilson_interval(0, 20);
  CHECK(lo0 == 0.0);
  CHECK(hi0 == Approx(0.16113).epsilon(1e-4));
  // symmetry at full successes
  const auto [lo1, hi1] = wilson_interval(20, 20);
  CHECK(lo1 == Approx(1.0 - 0.16113).epsilon(1e-3));
  CHECK(hi1 == 1.0);
  CHECK_THROWS_AS(wilson_interval(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(wilson_interval(5, 4), std::invalid_argument);
}

TEST_CASE("deviation frequencies are exactly monotone under common noise") {
  Overrides ov;
  ov.n = 50;
  ov.reps = 150;
  ov.seed = 77;
  const ExperimentConfig cfg = expand_preset(Preset::InnerSobolev, ov);
  // A probe pass fetches the balancing references so the time targets are valid.
  DeviationTargets probe;
  probe.offsets = {0.0};
  const DeviationEstimate ref = estimate_deviation(cfg, probe);
  const double base = std::max(ref.balancing_t, ref.smoothed_balancing_t);
  DeviationTargets targets;
  targets.times = {base + 1.0, base + 4.0, base + 10.0, base + 25.0};
  targets.offsets = {0.0, 0.01, 0.05, 0.2};
  const DeviationEstimate est = estimate_deviation(cfg, targets);
  CHECK(est.balancing_t >= 0.0);
  CHECK(est.smoothed_balancing_t >= 0.0);
  REQUIRE(est.rows.size() == 2 * targets.times.size() + 4 * targets.offsets.size());
  // rows come in fixed family blocks, monotone within each block
  std::size_t idx = 0;
  const std::vector<std::string> families = {"dp-tail", "sdp-tail", "dp-variance",
                                             "sdp-variance", "dp-bias", "sdp-bias"};
  for (const std::string& family : families) {
    const std::size_t block =
        (family == "dp-tail" || family == "sdp-tail") ? targets.times.size()
                                                      : targets.offsets.size();
    double prev = 1.0;
    for (std::size_t i = 0; i < block; ++i, ++idx) {
      REQUIRE(idx < est.rows.size());
      CHECK(est.rows[idx].family == family);
      CHECK(est.rows[idx].frequency <= prev);  // exact: nested events per rep
      CHECK(est.rows[idx].replications == cfg.replications);
      CHECK(est.rows[idx].wilson_low <= est.rows[idx].frequency);
      CHECK(est.rows[idx].frequency <= est.rows[idx].wilson_high);
      prev = est.rows[idx].frequency;
    }
  }
}

TEST_CASE("deviation estimation validates its targets") {
  Overrides ov;
  ov.n = 50;
  ov.reps = 10;
  const ExperimentConfig cfg = expand_preset(Preset::InnerSobolev, ov);
  CHECK_THROWS_AS(estimate_deviation(cfg, DeviationTargets{}), std::invalid_argument);
  DeviationTargets bad_time;
  bad_time.times = {0.5};  // below both balancing references
  CHECK_THROWS_AS(estimate_deviation(cfg, bad_time), std::invalid_argument);
  DeviationTargets bad_offset;
  bad_offset.offsets = {-0.1};
  CHECK_THROWS_AS(estimate_deviation(cfg, bad_offset), std::invalid_argument);
  // a configuration without both discrepancy rules is rejected
  Overrides ov2 = ov;
  ov2.rules = std::vector<StoppingRule>{StoppingRule::DP, StoppingRule::Oracle};
  const ExperimentConfig no_sdp = expand_preset(Preset::InnerSobolev, ov2);
  DeviationTargets times;
  times.times = {55.0};
  CHECK_THROWS_AS(estimate_deviation(no_sdp, times), std::invalid_argument);
}

TEST_CASE("deviation references match the balancing rules directly") {
  Overrides ov;
  ov.n = 50;
  ov.reps = 5;
  const ExperimentConfig cfg = expand_preset(Preset::InnerSobolev, ov);
  DeviationTargets targets;
  targets.offsets = {0.1};
  const DeviationEstimate est = estimate_deviation(cfg, targets);

  const Design design = fixed_design(cfg.n);
  const SpectralDecomposition dec = decompose(kernel_matrix(cfg.kernel, design));
  const EmpiricalCoords zf = coords(dec, signal_vector(cfg.signal, design));
  StoppingConfig bal = cfg.rules[0].config;  // dp slot carries the plain search box
  bal.sigma_sq = cfg.sigma_sq;
  const double t_star =
      balancing_time(dec, cfg.regularizer, zf, cfg.sigma_sq, bal).time;
  StoppingConfig sbal = cfg.rules[1].config;  // sdp slot carries the horizon
  sbal.sigma_sq = cfg.sigma_sq;
  const double t_star_s =
      smoothed_balancing_time(dec, cfg.regularizer, zf, cfg.sigma_sq, sbal).time;
  CHECK(est.balancing_t == t_star);
  CHECK(est.smoothed_balancing_t == t_star_s);
}
