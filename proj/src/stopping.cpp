#include "earlystop/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace earlystop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Crossing {
  double time = 0.0;
  bool emergency = false;
};

// Largest integer grid point min(floor(T), max_iter).
long grid_cap(const StoppingConfig& config) {
  long cap = config.max_iter;
  if (std::isfinite(config.emergency_stop)) {
    cap = std::min(cap, static_cast<long>(std::floor(config.emergency_stop)));
  }
  return std::max(cap, 0L);
}

// First integer t in {0, ..., cap} with gap(t) <= 0; the scan is the
// definitional infimum and assumes no monotonicity.
Crossing scan_grid(const std::function<double(double)>& gap, long cap) {
  for (long t = 0; t <= cap; ++t) {
    if (gap(static_cast<double>(t)) <= 0.0) return {static_cast<double>(t), false};
  }
  return {static_cast<double>(cap), true};
}

// First t in [lo, cap] with gap(t) <= 0 for a non-increasing gap, located by
// bisection at relative tolerance rel_tol in t.  An infinite cap is bracketed
// by doubling; if no finite bracket exists the search reports an emergency.
Crossing bisect_crossing(const std::function<double(double)>& gap, double lo,
                         double cap, double rel_tol) {
  if (gap(lo) <= 0.0) return {lo, false};
  double hi = cap;
  if (!std::isfinite(cap)) {
    hi = std::max(2.0 * std::max(lo, 1.0), 2.0);
    while (gap(hi) > 0.0) {
      if (hi >= 1e18) return {cap, true};
      hi *= 2.0;
    }
  } else if (gap(cap) > 0.0) {
    return {cap, true};
  }
  double a = lo;
  double b = hi;
  int guard = 0;
  while (b - a > rel_tol * std::max(1.0, b) && ++guard < 256) {
    const double m = 0.5 * (a + b);
    if (gap(m) <= 0.0) {
      b = m;
    } else {
      a = m;
    }
  }
  // b is the smallest bracketed point where the inequality holds.
  return {b, false};
}

void require_continuous_time(const Regularizer& reg, const SpectralDecomposition& dec) {
  if (!reg.supports_real_time(dec.top())) {
    throw std::domain_error(
        "continuous-time search is undefined for landweber with eta * lambda_1 > 1; "
        "use the integer grid");
  }
}

// First integer t <= cap with sum_j coeffs_j r_t(lambda_j)^2 <= threshold.
// Landweber residuals iterate multiplicatively (r_{t+1} = (1 - eta lambda) r_t),
// which keeps per-replication scans cheap.
Crossing scan_weighted_residual(const SpectralDecomposition& dec, const Regularizer& reg,
                                const Eigen::ArrayXd& coeffs, double threshold,
                                long cap) {
  if (reg.family() == FilterFamily::Landweber) {
    const Eigen::ArrayXd base = 1.0 - reg.step() * dec.eigenvalues.array();
    Eigen::ArrayXd resid = Eigen::ArrayXd::Ones(dec.eigenvalues.size());
    for (long t = 0; t <= cap; ++t) {
      if ((resid.square() * coeffs).sum() <= threshold) {
        return {static_cast<double>(t), false};
      }
      resid *= base;
    }
    return {static_cast<double>(cap), true};
  }
  return scan_grid(
      [&](double t) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
          const double r = reg.r(t, dec.eigenvalues[j]);
          sum += r * r * coeffs[j];
        }
        return sum - threshold;
      },
      cap);
}

}  // namespace

std::string to_string(StoppingRule rule) {
  switch (rule) {
    case StoppingRule::DP: return "dp";
    case StoppingRule::SDP: return "sdp";
    case StoppingRule::Balancing: return "balancing";
    case StoppingRule::SmoothedBalancing: return "smoothed-balancing";
    case StoppingRule::Oracle: return "oracle";
  }
  throw std::logic_error("unreachable stopping rule");
}

StoppingRule stopping_rule_from_name(const std::string& name) {
  if (name == "dp") return StoppingRule::DP;
  if (name == "sdp") return StoppingRule::SDP;
  if (name == "balancing") return StoppingRule::Balancing;
  if (name == "smoothed-balancing") return StoppingRule::SmoothedBalancing;
  if (name == "oracle") return StoppingRule::Oracle;
  throw std::invalid_argument("unknown stopping rule: " + name);
}

void StoppingConfig::validate() const {
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("sigma_sq must be >= 0");
  if (std::isnan(emergency_stop) || emergency_stop < 0.0) {
    throw std::invalid_argument("emergency stop must be >= 0");
  }
  if (max_iter < 0) throw std::invalid_argument("max_iter must be >= 0");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (std::isnan(smoothing_T) || smoothing_T < 0.0) {
    throw std::invalid_argument("smoothing horizon must be >= 0");
  }
}

StoppingOutcome tau_dp(const SpectralDecomposition& dec, const Regularizer& reg,
                       const EmpiricalCoords& zy, const StoppingConfig& config) {
  config.validate();
  if (zy.coeffs.size() != dec.eigenvalues.size()) {
    throw std::invalid_argument("tau_dp: coordinate length mismatch");
  }
  reg.require_stable(dec.top());
  const double threshold = config.sigma_sq;
  Crossing c;
  if (config.mode == SearchMode::IntegerGrid) {
    c = scan_weighted_residual(dec, reg, zy.coeffs.array().square(), threshold,
                               grid_cap(config));
  } else {
    require_continuous_time(reg, dec);
    c = bisect_crossing(
        [&](double t) { return empirical_risk(dec, reg, t, zy) - threshold; }, 0.0,
        config.emergency_stop, config.tolerance);
  }
  return {c.time, StoppingRule::DP, c.emergency, threshold};
}

StoppingOutcome tau_sdp(const SpectralDecomposition& dec, const Regularizer& reg,
                        const EmpiricalCoords& zy, const StoppingConfig& config) {
  config.validate();
  if (zy.coeffs.size() != dec.eigenvalues.size()) {
    throw std::invalid_argument("tau_sdp: coordinate length mismatch");
  }
  reg.require_stable(dec.top());
  const double T = config.smoothing();
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument("tau_sdp requires a finite positive smoothing horizon");
  }
  const double threshold =
      config.sigma_sq * effective_dimension(dec, T) / static_cast<double>(dec.n());
  Crossing c;
  if (config.mode == SearchMode::IntegerGrid) {
    const Eigen::ArrayXd u = dec.eigenvalues.array() * T;
    const Eigen::ArrayXd weights = u / (u + 1.0);
    c = scan_weighted_residual(dec, reg, weights * zy.coeffs.array().square(), threshold,
                               grid_cap(config));
  } else {
    require_continuous_time(reg, dec);
    c = bisect_crossing(
        [&](double t) { return smoothed_risk(dec, reg, t, T, zy) - threshold; }, 0.0,
        config.emergency_stop, config.tolerance);
  }
  return {c.time, StoppingRule::SDP, c.emergency, threshold};
}

StoppingOutcome balancing_time(const SpectralDecomposition& dec, const Regularizer& reg,
                               const EmpiricalCoords& zf, double sigma_sq,
                               const StoppingConfig& config) {
  config.validate();
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("sigma_sq must be >= 0");
  if (zf.coeffs.size() != dec.eigenvalues.size()) {
    throw std::invalid_argument("balancing_time: coordinate length mismatch");
  }
  reg.require_stable(dec.top());
  const auto gap = [&](double t) {
    return bias_sq(dec, reg, t, zf) - proxy_variance(dec, reg, t, sigma_sq);
  };
  Crossing c;
  if (config.mode == SearchMode::IntegerGrid) {
    c = scan_grid(gap, grid_cap(config));
  } else {
    require_continuous_time(reg, dec);
    c = bisect_crossing(gap, 0.0, config.emergency_stop, config.tolerance);
  }
  return {c.time, StoppingRule::Balancing, c.emergency,
          proxy_variance(dec, reg, c.time, sigma_sq)};
}

StoppingOutcome smoothed_balancing_time(const SpectralDecomposition& dec,
                                        const Regularizer& reg,
                                        const EmpiricalCoords& zf, double sigma_sq,
                                        const StoppingConfig& config) {
  config.validate();
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("sigma_sq must be >= 0");
  if (zf.coeffs.size() != dec.eigenvalues.size()) {
    throw std::invalid_argument("smoothed_balancing_time: coordinate length mismatch");
  }
  reg.require_stable(dec.top());
  const double T = config.smoothing();
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument(
        "smoothed_balancing_time requires a finite positive smoothing horizon");
  }
  const EmpiricalCoords zf_s = smoothed_coords(dec, zf, T);
  const double n = static_cast<double>(dec.n());
  const auto dim_side = [&](double t) {
    return sigma_sq * smoothed_g_effective_dimension(dec, reg, t, T) / n;
  };
  const auto gap = [&](double t) { return bias_sq(dec, reg, t, zf_s) - dim_side(t); };
  Crossing c;
  if (config.mode == SearchMode::IntegerGrid) {
    c = scan_grid(gap, grid_cap(config));
  } else {
    require_continuous_time(reg, dec);
    c = bisect_crossing(gap, 0.0, config.emergency_stop, config.tolerance);
  }
  return {c.time, StoppingRule::SmoothedBalancing, c.emergency, dim_side(c.time)};
}

StoppingOutcome oracle_time(const SpectralDecomposition& dec, const Regularizer& reg,
                            const EmpiricalCoords& zf, double sigma_sq,
                            std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("oracle grid must be non-empty");
  if (zf.coeffs.size() != dec.eigenvalues.size()) {
    throw std::invalid_argument("oracle_time: coordinate length mismatch");
  }
  reg.require_stable(dec.top());
  double best_t = grid.front();
  double best_risk = kInf;
  double prev = -kInf;
  for (const double t : grid) {
    if (!(t >= 0.0)) throw std::invalid_argument("oracle grid points must be >= 0");
    if (!(t > prev)) throw std::invalid_argument("oracle grid must be strictly increasing");
    prev = t;
    const double risk = expected_risk(dec, reg, t, zf, sigma_sq);
    // Strict improvement keeps the smallest minimizer under ties.
    if (risk < best_risk) {
      best_risk = risk;
      best_t = t;
    }
  }
  return {best_t, StoppingRule::Oracle, false, best_risk};
}

double data_driven_emergency_stop(const SpectralDecomposition& dec, std::size_t n,
                                  double cap) {
  if (n == 0) throw std::invalid_argument("emergency stop requires n >= 1");
  if (!(cap > 0.0)) throw std::invalid_argument("emergency stop cap must be positive");
  // T * N_n(T) is strictly increasing in T whenever the spectrum is nonzero,
  // so the equation T * N_n(T) = n has a unique root.
  const auto gap = [&](double T) {
    return static_cast<double>(n) - T * effective_dimension(dec, T);
  };
  const Crossing c = bisect_crossing(gap, 0.0, kInf, 1e-12);
  if (c.emergency) return cap;  // zero spectrum: no finite root
  return std::min(c.time, cap);
}

}  // namespace earlystop
