#include "earlystop/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace earlystop {

namespace {

// Threshold below which the filters switch to their small-argument limits
// (avoids catastrophic cancellation in 1 - (1 - x)^t and 1 - e^{-u}).
constexpr double kSmallArg = 1e-8;

void check_time_and_eigenvalue(double t, double lambda) {
  if (!(t >= 0.0)) throw std::invalid_argument("filter time must satisfy t >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("eigenvalue must satisfy lambda >= 0");
}

// Tikhonov smoother weight lambda T / (lambda T + 1).
double smoother_weight(double lambda, double T) {
  const double u = lambda * T;
  return u / (u + 1.0);
}

void check_smoothing_horizon(double T) {
  if (!(T > 0.0)) throw std::invalid_argument("smoothing horizon must be positive");
}

void check_coords_size(const SpectralDecomposition& dec, const EmpiricalCoords& z,
                       const char* what) {
  if (z.coeffs.size() != dec.eigenvalues.size()) {
    throw std::invalid_argument(std::string(what) + ": coordinate length mismatch");
  }
}

}  // namespace

SpectralDecomposition decompose(const KernelMatrix& K) {
  const Eigen::Index n = K.entries.rows();
  if (n == 0 || K.entries.cols() != n) {
    throw std::invalid_argument("kernel matrix must be square and non-empty");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K.entries);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "symmetric eigensolver failed (n = " << n
        << ", max |entry| = " << K.entries.cwiseAbs().maxCoeff() << ")";
    throw std::runtime_error(msg.str());
  }
  SpectralDecomposition dec;
  dec.eigenvalues = solver.eigenvalues().reverse();
  dec.basis = solver.eigenvectors().rowwise().reverse();
  // Numerically negative eigenvalues of the PSD matrix are clamped at zero.
  dec.eigenvalues = dec.eigenvalues.cwiseMax(0.0);
  return dec;
}

EmpiricalCoords coords(const SpectralDecomposition& dec, const Eigen::VectorXd& a) {
  if (a.size() != dec.eigenvalues.size()) {
    throw std::invalid_argument("coords: vector length mismatch");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(dec.n()));
  return EmpiricalCoords{dec.basis.transpose() * a * scale};
}

double empirical_sq_norm(const Eigen::VectorXd& a) {
  if (a.size() == 0) throw std::invalid_argument("empirical norm of an empty vector");
  return a.squaredNorm() / static_cast<double>(a.size());
}

Regularizer Regularizer::tikhonov() { return Regularizer(FilterFamily::Tikhonov, 1.0); }

Regularizer Regularizer::landweber(double step) {
  if (!(step > 0.0)) throw std::invalid_argument("landweber step size must be positive");
  return Regularizer(FilterFamily::Landweber, step);
}

Regularizer Regularizer::showalter() { return Regularizer(FilterFamily::Showalter, 1.0); }

Regularizer Regularizer::from_name(const std::string& name, double step) {
  if (name == "tikhonov") return tikhonov();
  if (name == "landweber") return landweber(step);
  if (name == "showalter") return showalter();
  throw std::invalid_argument("unknown regularizer: " + name);
}

double Regularizer::g(double t, double lambda) const {
  check_time_and_eigenvalue(t, lambda);
  switch (family_) {
    case FilterFamily::Tikhonov:
      // (lambda + 1/t)^{-1} = t / (lambda t + 1), continuous at t = 0.
      return t / (lambda * t + 1.0);
    case FilterFamily::Landweber: {
      if (t < 1.0) return step_ * t;
      const double x = step_ * lambda;
      if (x < kSmallArg) return step_ * t;  // limit of (1 - (1 - x)^t) / lambda
      const double base = 1.0 - x;
      if (base < 0.0 && t != std::floor(t)) {
        throw std::domain_error(
            "landweber filter with 1 - eta*lambda < 0 requires integer time");
      }
      return (1.0 - std::pow(base, t)) / lambda;
    }
    case FilterFamily::Showalter: {
      const double u = t * lambda;
      if (u < kSmallArg) return t;  // limit of (1 - e^{-u}) / lambda
      return -std::expm1(-u) / lambda;
    }
  }
  throw std::logic_error("unreachable filter family");
}

double Regularizer::r(double t, double lambda) const {
  check_time_and_eigenvalue(t, lambda);
  switch (family_) {
    case FilterFamily::Tikhonov:
      return 1.0 / (lambda * t + 1.0);
    case FilterFamily::Landweber: {
      if (t < 1.0) return 1.0 - step_ * t * lambda;
      const double base = 1.0 - step_ * lambda;
      if (base < 0.0 && t != std::floor(t)) {
        throw std::domain_error(
            "landweber residual with 1 - eta*lambda < 0 requires integer time");
      }
      return std::pow(base, t);
    }
    case FilterFamily::Showalter:
      return std::exp(-t * lambda);
  }
  throw std::logic_error("unreachable filter family");
}

double Regularizer::linear_upper() const {
  return family_ == FilterFamily::Landweber ? step_ : 1.0;
}

Regularizer Regularizer::with_qualification(double order, double constant) const {
  if (!(order > 0.0) || !(constant > 0.0)) {
    throw std::invalid_argument("qualification order and constant must be positive");
  }
  Regularizer out = *this;
  out.qual_order_ = order;
  out.qual_const_ = constant;
  return out;
}

bool Regularizer::supports_real_time(double lambda_max) const {
  if (family_ != FilterFamily::Landweber) return true;
  return step_ * lambda_max <= 1.0;
}

void Regularizer::require_stable(double lambda_max) const {
  if (family_ != FilterFamily::Landweber) return;
  if (step_ * lambda_max >= 2.0) {
    std::ostringstream msg;
    msg << "landweber iteration diverges: eta * lambda_max = " << step_ * lambda_max
        << " >= 2";
    throw std::domain_error(msg.str());
  }
}

std::string Regularizer::name() const {
  switch (family_) {
    case FilterFamily::Tikhonov: return "tikhonov";
    case FilterFamily::Landweber: return "landweber";
    case FilterFamily::Showalter: return "showalter";
  }
  throw std::logic_error("unreachable filter family");
}

Eigen::VectorXd estimate(const SpectralDecomposition& dec, const Regularizer& reg,
                         double t, const Eigen::VectorXd& y) {
  if (y.size() != dec.eigenvalues.size()) {
    throw std::invalid_argument("estimate: observation length mismatch");
  }
  const Eigen::Index n = dec.eigenvalues.size();
  Eigen::VectorXd weights(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lambda = dec.eigenvalues[j];
    weights[j] = lambda * reg.g(t, lambda);
  }
  return dec.basis * (weights.asDiagonal() * (dec.basis.transpose() * y));
}

double empirical_risk(const SpectralDecomposition& dec, const Regularizer& reg,
                      double t, const EmpiricalCoords& zy) {
  check_coords_size(dec, zy, "empirical_risk");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
    const double r = reg.r(t, dec.eigenvalues[j]);
    sum += r * r * zy.coeffs[j] * zy.coeffs[j];
  }
  return sum;
}

double smoothed_risk(const SpectralDecomposition& dec, const Regularizer& reg,
                     double t, double smoothing_T, const EmpiricalCoords& zy) {
  check_coords_size(dec, zy, "smoothed_risk");
  check_smoothing_horizon(smoothing_T);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
    const double lambda = dec.eigenvalues[j];
    const double r = reg.r(t, lambda);
    sum += smoother_weight(lambda, smoothing_T) * r * r * zy.coeffs[j] * zy.coeffs[j];
  }
  return sum;
}

EmpiricalCoords smoothed_coords(const SpectralDecomposition& dec,
                                const EmpiricalCoords& z, double smoothing_T) {
  check_coords_size(dec, z, "smoothed_coords");
  check_smoothing_horizon(smoothing_T);
  Eigen::VectorXd out(z.coeffs.size());
  for (Eigen::Index j = 0; j < z.coeffs.size(); ++j) {
    out[j] = std::sqrt(smoother_weight(dec.eigenvalues[j], smoothing_T)) * z.coeffs[j];
  }
  return EmpiricalCoords{std::move(out)};
}

double effective_dimension(const SpectralDecomposition& dec, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("effective dimension requires t >= 0");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
    const double u = dec.eigenvalues[j] * t;
    sum += u / (u + 1.0);
  }
  return sum;
}

double g_effective_dimension(const SpectralDecomposition& dec, const Regularizer& reg,
                             double t) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
    const double lambda = dec.eigenvalues[j];
    sum += lambda * reg.g(t, lambda);
  }
  return sum;
}

double smoothed_g_effective_dimension(const SpectralDecomposition& dec,
                                      const Regularizer& reg, double t,
                                      double smoothing_T) {
  check_smoothing_horizon(smoothing_T);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
    const double lambda = dec.eigenvalues[j];
    sum += smoother_weight(lambda, smoothing_T) * lambda * reg.g(t, lambda);
  }
  return sum;
}

double bias_sq(const SpectralDecomposition& dec, const Regularizer& reg, double t,
               const EmpiricalCoords& zf) {
  check_coords_size(dec, zf, "bias_sq");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
    const double r = reg.r(t, dec.eigenvalues[j]);
    sum += r * r * zf.coeffs[j] * zf.coeffs[j];
  }
  return sum;
}

double proxy_variance(const SpectralDecomposition& dec, const Regularizer& reg,
                      double t, double sigma_sq) {
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("sigma_sq must be >= 0");
  return sigma_sq * g_effective_dimension(dec, reg, t) / static_cast<double>(dec.n());
}

double variance_term(const SpectralDecomposition& dec, const Regularizer& reg,
                     double t, double sigma_sq) {
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("sigma_sq must be >= 0");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
    const double lambda = dec.eigenvalues[j];
    const double lg = lambda * reg.g(t, lambda);
    sum += lg * lg;
  }
  return sigma_sq * sum / static_cast<double>(dec.n());
}

double expected_risk(const SpectralDecomposition& dec, const Regularizer& reg,
                     double t, const EmpiricalCoords& zf, double sigma_sq) {
  return bias_sq(dec, reg, t, zf) + variance_term(dec, reg, t, sigma_sq);
}

double empirical_loss(const SpectralDecomposition& dec, const Regularizer& reg,
                      double t, const EmpiricalCoords& zf, const EmpiricalCoords& zy) {
  check_coords_size(dec, zf, "empirical_loss");
  check_coords_size(dec, zy, "empirical_loss");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
    const double lambda = dec.eigenvalues[j];
    const double d = zf.coeffs[j] - lambda * reg.g(t, lambda) * zy.coeffs[j];
    sum += d * d;
  }
  return sum;
}

double effective_rank_diagnostic(const SpectralDecomposition& dec, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("effective rank requires T > 0");
  const Eigen::Index n = dec.eigenvalues.size();
  // Suffix sums: tail[k] = sum_{j > k} lambda_j (1-based k).
  double best = 0.0;
  double tail = 0.0;
  for (Eigen::Index j = n - 1; j >= 0; --j) tail += dec.eigenvalues[j];
  for (Eigen::Index k = 0; k < n; ++k) {
    // k = 0 is always admissible; k >= 1 requires lambda_k * T >= 1.
    if (k >= 1) {
      tail -= dec.eigenvalues[k - 1];
      if (dec.eigenvalues[k - 1] * T < 1.0) break;  // eigenvalues are sorted
    }
    const double head = dec.eigenvalues[k];
    const double ratio = head > 0.0 ? tail / head : 0.0;
    const double value = ratio / static_cast<double>(std::max<Eigen::Index>(k, 1));
    if (value > best) best = value;
  }
  return best;
}

RiskCurve sample_curve(std::vector<double> grid, const std::function<double(double)>& fn) {
  if (grid.empty()) throw std::invalid_argument("curve grid must be non-empty");
  RiskCurve curve;
  curve.values.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw std::invalid_argument("curve grid must be strictly increasing");
    }
    const double value = fn(grid[i]);
    if (!std::isfinite(value)) {
      throw std::invalid_argument("curve values must be finite");
    }
    curve.values.push_back(value);
  }
  curve.grid = std::move(grid);
  return curve;
}

}  // namespace earlystop
