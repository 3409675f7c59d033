#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "earlystop/spectral.hpp"

namespace earlystop {

enum class StoppingRule { DP, SDP, Balancing, SmoothedBalancing, Oracle };

// Canonical names: "dp" | "sdp" | "balancing" | "smoothed-balancing" | "oracle".
std::string to_string(StoppingRule rule);
StoppingRule stopping_rule_from_name(const std::string& name);

enum class SearchMode { IntegerGrid, Continuous };

// Shared configuration of the stopping-time searches.
//   IntegerGrid: first-crossing scan over t = 0, 1, ..., min(T, max_iter);
//     the mode used for iterative (Landweber) schemes.
//   Continuous: bisection on [0, T] of the non-increasing defining gap,
//     terminated at relative tolerance `tolerance` in t.
struct StoppingConfig {
  double sigma_sq = 1.0;
  // Emergency stop T: every returned time is capped at T.
  double emergency_stop = std::numeric_limits<double>::infinity();
  SearchMode mode = SearchMode::Continuous;
  // Integer-grid cap (safety bound independent of emergency_stop).
  long max_iter = 1000000;
  // Continuous mode: relative tolerance in t.
  double tolerance = 1e-9;
  // Smoothing horizon of the smoothed rules; 0 means "use emergency_stop".
  double smoothing_T = 0.0;

  double smoothing() const { return smoothing_T > 0.0 ? smoothing_T : emergency_stop; }
  void validate() const;
};

struct StoppingOutcome {
  double time = 0.0;
  StoppingRule rule = StoppingRule::DP;
  // True iff the defining inequality held at no searched point <= T.
  bool hit_emergency = false;
  // Value of the rule's defining threshold at the stopping time
  // (sigma^2 for DP, sigma^2 N_n(T)/n for SDP, the proxy-variance side for
  // the balancing rules, the minimal expected risk for the oracle).
  double threshold_at_stop = 0.0;
};

// Discrepancy principle: first t with ||Y - K_n g_t(K_n) Y||_n^2 <= sigma^2,
// capped at T.
StoppingOutcome tau_dp(const SpectralDecomposition& dec, const Regularizer& reg,
                       const EmpiricalCoords& zy, const StoppingConfig& config);

// Smoothed discrepancy principle: first t with
//   smoothed_risk(t, T) <= sigma^2 N_n(T) / n,
// capped at T, where T is the smoothing horizon.
StoppingOutcome tau_sdp(const SpectralDecomposition& dec, const Regularizer& reg,
                        const EmpiricalCoords& zy, const StoppingConfig& config);

// Bias/variance balancing time: first t with b_t^2 <= sigma^2 N^g_n(t) / n.
StoppingOutcome balancing_time(const SpectralDecomposition& dec, const Regularizer& reg,
                               const EmpiricalCoords& zf, double sigma_sq,
                               const StoppingConfig& config);

// Smoothed balancing time: first t with
//   sum_j w_j(T) r_t(lambda_j)^2 zf_j^2 <= sigma^2 N~^g_n(t, T) / n,
// w_j(T) = lambda_j T / (lambda_j T + 1).
StoppingOutcome smoothed_balancing_time(const SpectralDecomposition& dec,
                                        const Regularizer& reg,
                                        const EmpiricalCoords& zf, double sigma_sq,
                                        const StoppingConfig& config);

// Grid point minimizing the expected risk bias_sq + variance_term; ties go to
// the smallest grid point.  The grid must be non-empty and strictly increasing.
StoppingOutcome oracle_time(const SpectralDecomposition& dec, const Regularizer& reg,
                            const EmpiricalCoords& zf, double sigma_sq,
                            std::span<const double> grid);

// Data-driven horizon: the solution T of T * N_n(T) = n (unique for a nonzero
// spectrum since the left side is strictly increasing), returned as min(T, cap).
double data_driven_emergency_stop(const SpectralDecomposition& dec, std::size_t n,
                                  double cap);

}  // namespace earlystop
