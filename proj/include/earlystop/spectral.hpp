#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "earlystop/kernels.hpp"

namespace earlystop {

// Eigendecomposition of the normalized kernel matrix K_n.
// Eigenvalues are sorted in descending order and clamped at zero; the columns
// of `basis` are Euclidean-orthonormal eigenvectors u_j.  The orthonormal
// basis of the empirical inner product <a, b>_n = (1/n) sum_i a_i b_i is
// v_j = sqrt(n) u_j.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd basis;

  std::size_t n() const { return static_cast<std::size_t>(eigenvalues.size()); }
  // Largest eigenvalue (0 for the zero matrix).
  double top() const { return eigenvalues.size() > 0 ? eigenvalues[0] : 0.0; }
};

// Symmetric eigendecomposition; throws std::runtime_error on solver failure.
SpectralDecomposition decompose(const KernelMatrix& K);

// Coordinates of a vector in the empirical eigenbasis: z_j = u_j^T a / sqrt(n).
// Parseval: sum_j z_j^2 = ||a||_n^2.
struct EmpiricalCoords {
  Eigen::VectorXd coeffs;
};

EmpiricalCoords coords(const SpectralDecomposition& dec, const Eigen::VectorXd& a);

// Empirical squared norm ||a||_n^2 = (1/n) sum_i a_i^2.
double empirical_sq_norm(const Eigen::VectorXd& a);

enum class FilterFamily { Tikhonov, Landweber, Showalter };

// Spectral filter family g_t(lambda), t >= 0, lambda >= 0:
//   Tikhonov:  g_t(lambda) = (lambda + 1/t)^{-1}
//   Landweber: g_t(lambda) = lambda^{-1} (1 - (1 - eta lambda)^t) for t >= 1,
//              eta t for t < 1 (step size eta)
//   Showalter: g_t(lambda) = lambda^{-1} (1 - e^{-t lambda})
// All three satisfy g_t <= B t (B = 1, eta, 1), lambda g_t(lambda) in [0, 1]
// on the stable range, lambda g_t(lambda) >= (1/2) min(1, lambda t), and a
// polynomial residual decay |r_t(lambda)| <= Q (lambda t)^{-q}.
class Regularizer {
 public:
  static Regularizer tikhonov();
  static Regularizer landweber(double step);
  static Regularizer showalter();
  // Accepts "tikhonov" | "landweber" | "showalter"; step is Landweber-only.
  static Regularizer from_name(const std::string& name, double step = 1.0);

  // Filter value g_t(lambda); requires t >= 0 and lambda >= 0.
  double g(double t, double lambda) const;
  // Residual r_t(lambda) = 1 - lambda g_t(lambda); lies in [0, 1] whenever
  // real-valued time is supported up to lambda.
  double r(double t, double lambda) const;

  FilterFamily family() const { return family_; }
  // Landweber step size eta; 1 for the other families.
  double step() const { return step_; }
  // B in the linear upper bound g_t <= B t.
  double linear_upper() const;
  // b = 1/2 in the lower bound lambda g_t(lambda) >= b min(1, lambda t).
  double linear_lower() const { return 0.5; }
  // Qualification (q, Q): |r_t(lambda)| <= Q (lambda t)^{-q}.  Exact with
  // q = Q = 1 for Tikhonov; reported (default 1, 1) for the other families.
  std::pair<double, double> qualification() const { return {qual_order_, qual_const_}; }
  Regularizer with_qualification(double order, double constant) const;

  // Landweber residual bases 1 - eta lambda stay non-negative up to
  // lambda_max, so real-valued powers (continuous time) are defined.
  // Always true for Tikhonov and Showalter.
  bool supports_real_time(double lambda_max) const;
  // Landweber requires eta * lambda_max < 2 for the iteration to contract;
  // throws std::domain_error otherwise.  No-op for the other families.
  void require_stable(double lambda_max) const;

  std::string name() const;

 private:
  Regularizer(FilterFamily family, double step) : family_(family), step_(step) {}

  FilterFamily family_;
  double step_;
  double qual_order_ = 1.0;
  double qual_const_ = 1.0;
};

// ---------------------------------------------------------------------------
// Spectral functionals.  All sums run over the full clamped spectrum, so
// eigenvalue-zero components enter with r_t(0) = 1 and g_t(0) = its limit.
// ---------------------------------------------------------------------------

// Fitted values K_n g_t(K_n) Y = sum_j lambda_j g_t(lambda_j) (u_j^T Y) u_j.
Eigen::VectorXd estimate(const SpectralDecomposition& dec, const Regularizer& reg,
                         double t, const Eigen::VectorXd& y);

// Squared empirical residual norm ||Y - K_n g_t(K_n) Y||_n^2
//   = sum_j r_t(lambda_j)^2 zY_j^2.
double empirical_risk(const SpectralDecomposition& dec, const Regularizer& reg,
                      double t, const EmpiricalCoords& zy);

// Smoothed residual norm sum_j [lambda_j T / (lambda_j T + 1)] r_t(lambda_j)^2 zY_j^2
// (Tikhonov smoothing at horizon T).
double smoothed_risk(const SpectralDecomposition& dec, const Regularizer& reg,
                     double t, double smoothing_T, const EmpiricalCoords& zy);

// Coordinates reweighted by the Tikhonov smoother:
//   z~_j = sqrt(lambda_j T / (lambda_j T + 1)) z_j.
EmpiricalCoords smoothed_coords(const SpectralDecomposition& dec,
                                const EmpiricalCoords& z, double smoothing_T);

// Effective dimension N_n(t) = sum_j lambda_j t / (lambda_j t + 1).
double effective_dimension(const SpectralDecomposition& dec, double t);

// Generalized effective dimension N^g_n(t) = sum_j lambda_j g_t(lambda_j).
double g_effective_dimension(const SpectralDecomposition& dec, const Regularizer& reg,
                             double t);

// Smoothed generalized effective dimension
//   N~^g_n(t) = sum_j [lambda_j T / (lambda_j T + 1)] lambda_j g_t(lambda_j).
double smoothed_g_effective_dimension(const SpectralDecomposition& dec,
                                      const Regularizer& reg, double t,
                                      double smoothing_T);

// Squared bias b_t^2 = sum_j r_t(lambda_j)^2 zf_j^2.
double bias_sq(const SpectralDecomposition& dec, const Regularizer& reg, double t,
               const EmpiricalCoords& zf);

// Proxy variance v_t = sigma^2 N^g_n(t) / n.
double proxy_variance(const SpectralDecomposition& dec, const Regularizer& reg,
                      double t, double sigma_sq);

// Exact variance term (sigma^2 / n) sum_j (lambda_j g_t(lambda_j))^2.
double variance_term(const SpectralDecomposition& dec, const Regularizer& reg,
                     double t, double sigma_sq);

// Expected prediction risk E ||f - K_n g_t(K_n) Y||_n^2 = bias_sq + variance_term.
double expected_risk(const SpectralDecomposition& dec, const Regularizer& reg,
                     double t, const EmpiricalCoords& zf, double sigma_sq);

// Squared empirical distance ||f - K_n g_t(K_n) Y||_n^2 evaluated in the
// eigenbasis: sum_j (zf_j - lambda_j g_t(lambda_j) zY_j)^2.
double empirical_loss(const SpectralDecomposition& dec, const Regularizer& reg,
                      double t, const EmpiricalCoords& zf, const EmpiricalCoords& zy);

// Eigenvalue-decay diagnostic: max over admissible k (k = 0 always; k >= 1
// requires lambda_k T >= 1) of [sum_{j > k} lambda_j / lambda_{k+1}] / max(k, 1),
// with a zero tail treated as 0.
double effective_rank_diagnostic(const SpectralDecomposition& dec, double T);

// Sampled curve t -> value with a strictly increasing grid and finite values.
struct RiskCurve {
  std::vector<double> grid;
  std::vector<double> values;
};

RiskCurve sample_curve(std::vector<double> grid, const std::function<double(double)>& fn);

}  // namespace earlystop
