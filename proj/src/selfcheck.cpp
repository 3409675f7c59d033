#include "earlystop/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "earlystop/kernels.hpp"
#include "earlystop/rng.hpp"
#include "earlystop/simulation.hpp"
#include "earlystop/spectral.hpp"
#include "earlystop/stopping.hpp"

namespace earlystop {

namespace {

constexpr double kSlack = 1e-12;  // numeric slack for exact-math inequalities

struct Reporter {
  std::ostream& out;
  bool all_passed = true;

  void record(const std::string& name, bool ok, const std::string& detail = "") {
    out << (ok ? "PASS" : "FAIL") << "  " << name;
    if (!ok && !detail.empty()) out << "  (" << detail << ")";
    out << '\n';
    all_passed = all_passed && ok;
  }
};

double log_uniform(NoiseStream& rng, double lo, double hi) {
  return lo * std::exp(rng.next_uniform() * std::log(hi / lo));
}

// Synthetic decomposition with an identity eigenbasis (trivially orthonormal).
SpectralDecomposition synthetic_decomposition(NoiseStream& rng, int n, double lambda_max) {
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (auto& v : eig) v = log_uniform(rng, 1e-6 * lambda_max, lambda_max);
  eig[0] = lambda_max;
  if (n > 3) eig[static_cast<std::size_t>(n) - 1] = 0.0;  // include a null direction
  std::sort(eig.begin(), eig.end(), std::greater<>());
  SpectralDecomposition dec;
  dec.eigenvalues = Eigen::Map<Eigen::VectorXd>(eig.data(), n);
  dec.basis = Eigen::MatrixXd::Identity(n, n);
  return dec;
}

bool check_kernels(Reporter& rep) {
  NoiseStream rng(101);
  const Kernel sob = Kernel::sobolev();
  const Kernel gau = Kernel::gaussian(0.1);
  bool ok = std::abs(sob.eval(0.3, 0.7) - 0.3) < 1e-15 &&
            std::abs(gau.eval(0.0, 0.1) - std::exp(-1.0)) < 1e-15;
  for (int i = 0; i < 1000 && ok; ++i) {
    const double x = rng.next_uniform();
    const double y = rng.next_uniform();
    for (const Kernel& k : {sob, gau}) {
      const double v = k.eval(x, y);
      ok = ok && std::abs(v - k.eval(y, x)) < 1e-15 && v >= 0.0 && v <= k.sup_diag();
    }
  }
  rep.record("kernel symmetry, range, and pinned values", ok);
  return ok;
}

bool check_kernel_matrix(Reporter& rep) {
  const KernelMatrix K = kernel_matrix(Kernel::sobolev(), fixed_design(3));
  bool ok = std::abs(K.entries.trace() - 2.0 / 3.0) < 1e-15;
  const SpectralDecomposition dec = decompose(kernel_matrix(Kernel::gaussian(0.05),
                                                            fixed_design(40)));
  ok = ok && dec.eigenvalues.minCoeff() >= 0.0 &&
       dec.eigenvalues.sum() <= 1.0 + 1e-12;  // trace(K_n) <= sup_x k(x,x)
  rep.record("kernel matrix trace and positivity", ok);
  return ok;
}

bool check_decomposition(Reporter& rep) {
  const KernelMatrix K = kernel_matrix(Kernel::sobolev(), fixed_design(40));
  const SpectralDecomposition dec = decompose(K);
  const Eigen::MatrixXd recon =
      dec.basis * dec.eigenvalues.asDiagonal() * dec.basis.transpose();
  const double recon_err = (recon - K.entries).cwiseAbs().maxCoeff();
  const double ortho_err =
      (dec.basis.transpose() * dec.basis - Eigen::MatrixXd::Identity(40, 40))
          .cwiseAbs()
          .maxCoeff();
  NoiseStream rng(7);
  Eigen::VectorXd a(40);
  for (Eigen::Index i = 0; i < 40; ++i) a[i] = rng.next_gaussian();
  const EmpiricalCoords z = coords(dec, a);
  const double parseval_err =
      std::abs(z.coeffs.squaredNorm() - empirical_sq_norm(a));
  bool sorted = true;
  for (Eigen::Index j = 1; j < dec.eigenvalues.size(); ++j) {
    sorted = sorted && dec.eigenvalues[j] <= dec.eigenvalues[j - 1];
  }
  const bool ok = recon_err <= 1e-8 * std::max(dec.top(), 1e-300) + 1e-15 &&
                  ortho_err <= 1e-10 && parseval_err <= 1e-10 && sorted;
  rep.record("eigendecomposition reconstruction, orthonormality, Parseval", ok);
  return ok;
}

bool check_filter_bounds(Reporter& rep) {
  NoiseStream rng(202);
  struct Case {
    Regularizer reg;
    double lambda_max;
  };
  const std::vector<Case> cases = {{Regularizer::tikhonov(), 1.0},
                                   {Regularizer::showalter(), 1.0},
                                   {Regularizer::landweber(1.0), 1.0},
                                   {Regularizer::landweber(2.4), 0.4}};
  std::size_t violations = 0;
  for (const Case& c : cases) {
    const double B = c.reg.linear_upper();
    for (int i = 0; i < 10000; ++i) {
      const double lambda = log_uniform(rng, 1e-6, c.lambda_max);
      const double t = (i % 2 == 0) ? rng.next_uniform() * 1e4
                                    : log_uniform(rng, 1e-3, 1e4);
      const double g = c.reg.g(t, lambda);
      const double lg = lambda * g;
      if (!(lg >= -kSlack && lg <= 1.0 + kSlack)) ++violations;
      if (!(g <= B * t * (1.0 + kSlack) + kSlack)) ++violations;
      if (!(lg >= 0.5 * std::min(1.0, lambda * t) - kSlack)) ++violations;
      if (c.reg.family() == FilterFamily::Tikhonov && lambda * t >= 1.0) {
        const double r = c.reg.r(t, lambda);
        if (!(std::abs(r) <= 1.0 / (lambda * t) * (1.0 + kSlack))) ++violations;
      }
    }
  }
  rep.record("filter bounds (boundedness, linear growth, lower slope, decay)",
             violations == 0, std::to_string(violations) + " violations");
  return violations == 0;
}

bool check_dimension_sandwich(Reporter& rep) {
  NoiseStream rng(303);
  bool ok = true;
  for (int rep_i = 0; rep_i < 5 && ok; ++rep_i) {
    const SpectralDecomposition dec = synthetic_decomposition(rng, 30, 1.0);
    const std::vector<Regularizer> regs = {Regularizer::tikhonov(),
                                           Regularizer::showalter(),
                                           Regularizer::landweber(1.0 / dec.top())};
    for (const Regularizer& reg : regs) {
      const double upper = 2.0 * std::max(reg.linear_upper(), 1.0);
      for (int k = 0; k < 50 && ok; ++k) {
        const double t = log_uniform(rng, 1e-2, 1e5);
        const double nd = effective_dimension(dec, t);
        const double ng = g_effective_dimension(dec, reg, t);
        ok = ng >= 0.5 * nd - kSlack && ng <= upper * nd + kSlack;
      }
    }
  }
  rep.record("effective-dimension sandwich (0.5 N <= N^g <= 2 max(B,1) N)", ok);
  return ok;
}

bool check_risk_identity(Reporter& rep) {
  NoiseStream rng(404);
  const double sigma_sq = 0.7;
  bool ok = true;
  for (int rep_i = 0; rep_i < 5 && ok; ++rep_i) {
    const SpectralDecomposition dec = synthetic_decomposition(rng, 25, 1.0);
    Eigen::VectorXd zf_raw(25);
    for (Eigen::Index i = 0; i < 25; ++i) zf_raw[i] = rng.next_gaussian();
    const EmpiricalCoords zf{zf_raw};
    const double n = static_cast<double>(dec.n());
    for (const Regularizer& reg :
         {Regularizer::tikhonov(), Regularizer::showalter(), Regularizer::landweber(1.0)}) {
      for (int k = 0; k < 40 && ok; ++k) {
        const double t = log_uniform(rng, 1e-3, 1e5);
        // Expected residual norm: b_t^2 + (sigma^2/n) sum_j r_t(lambda_j)^2.
        double sum_r2 = 0.0;
        for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
          const double r = reg.r(t, dec.eigenvalues[j]);
          sum_r2 += r * r;
        }
        const double expected_minus_sigma =
            bias_sq(dec, reg, t, zf) + sigma_sq * (sum_r2 - n) / n;
        const double b2 = bias_sq(dec, reg, t, zf);
        const double v = proxy_variance(dec, reg, t, sigma_sq);
        const double scale = std::max({1.0, std::abs(b2), v});
        ok = expected_minus_sigma >= b2 - 2.0 * v - 1e-10 * scale &&
             expected_minus_sigma <= b2 - v + 1e-10 * scale;
      }
    }
  }
  rep.record("risk sandwich (b^2 - 2v <= E - sigma^2 <= b^2 - v)", ok);
  return ok;
}

bool check_monotonicity(Reporter& rep) {
  NoiseStream rng(505);
  const SpectralDecomposition dec =
      decompose(kernel_matrix(Kernel::sobolev(), fixed_design(30)));
  Eigen::VectorXd y_raw(30);
  for (Eigen::Index i = 0; i < 30; ++i) y_raw[i] = rng.next_gaussian();
  const EmpiricalCoords zy = coords(dec, y_raw);
  const double T = 64.0;
  bool ok = true;
  for (const Regularizer& reg :
       {Regularizer::tikhonov(), Regularizer::showalter(),
        Regularizer::landweber(1.0 / dec.top())}) {
    double prev_risk = empirical_risk(dec, reg, 0.0, zy);
    double prev_nd = 0.0;
    double prev_ng = 0.0;
    for (double t = 0.5; t <= 4096.0 && ok; t *= 2.0) {
      const double risk = empirical_risk(dec, reg, t, zy);
      const double nd = effective_dimension(dec, t);
      const double ng = g_effective_dimension(dec, reg, t);
      const double sr = smoothed_risk(dec, reg, t, T, zy);
      const double sg = smoothed_g_effective_dimension(dec, reg, t, T);
      ok = risk <= prev_risk + kSlack && nd >= prev_nd - kSlack &&
           ng >= prev_ng - kSlack && sr <= risk + kSlack && sg <= ng + kSlack;
      prev_risk = risk;
      prev_nd = nd;
      prev_ng = ng;
    }
  }
  rep.record("monotonicity in t and smoothed <= unsmoothed", ok);
  return ok;
}

bool check_stopping_closed_forms(Reporter& rep) {
  // Single eigenvalue lambda = 1 at n = 1 (Gaussian kernel at the point x = 1).
  const SpectralDecomposition dec =
      decompose(kernel_matrix(Kernel::gaussian(0.1), fixed_design(1)));
  const Regularizer tik = Regularizer::tikhonov();
  StoppingConfig cont;
  cont.mode = SearchMode::Continuous;
  cont.sigma_sq = 1.0;

  Eigen::VectorXd y(1);
  y[0] = 2.0;
  const StoppingOutcome dp = tau_dp(dec, tik, coords(dec, y), cont);
  const double golden_minus = (std::sqrt(5.0) - 1.0) / 2.0;
  const double golden_plus = (std::sqrt(5.0) + 1.0) / 2.0;

  EmpiricalCoords zf{Eigen::VectorXd::Ones(1)};
  StoppingConfig bal = cont;
  bal.emergency_stop = 10.0;
  const StoppingOutcome star = balancing_time(dec, tik, zf, 1.0, bal);
  StoppingConfig sbal = bal;
  sbal.smoothing_T = 1.0;
  const StoppingOutcome star_s = smoothed_balancing_time(dec, tik, zf, 1.0, sbal);
  const double t_hat = data_driven_emergency_stop(dec, 1, 10.0);

  const bool ok = std::abs(dp.time - 1.0) <= 1e-6 &&
                  std::abs(star.time - golden_minus) <= 1e-6 &&
                  std::abs(star_s.time - golden_minus) <= 1e-6 &&
                  std::abs(t_hat - golden_plus) <= 1e-6;
  rep.record("stopping-rule closed forms (single-eigenvalue instances)", ok);
  return ok;
}

bool check_determinism(Reporter& rep) {
  NoiseStream a(99);
  NoiseStream b(99);
  bool ok = true;
  for (int i = 0; i < 1000; ++i) ok = ok && a.next_gaussian() == b.next_gaussian();
  const Design design = fixed_design(16);
  NoiseStream s1(5);
  NoiseStream s2(5);
  const Eigen::VectorXd y1 = generate_sample(SignalSpec::inner(), design, 1.0, s1);
  const Eigen::VectorXd y2 = generate_sample(SignalSpec::inner(), design, 1.0, s2);
  ok = ok && (y1 - y2).cwiseAbs().maxCoeff() == 0.0;
  rep.record("noise-stream determinism", ok);
  return ok;
}

}  // namespace

bool run_self_checks(std::ostream& out) {
  Reporter rep{out};
  check_kernels(rep);
  check_kernel_matrix(rep);
  check_decomposition(rep);
  check_filter_bounds(rep);
  check_dimension_sandwich(rep);
  check_risk_identity(rep);
  check_monotonicity(rep);
  check_stopping_closed_forms(rep);
  check_determinism(rep);
  out << (rep.all_passed ? "all checks passed" : "some checks FAILED") << '\n';
  return rep.all_passed;
}

}  // namespace earlystop
