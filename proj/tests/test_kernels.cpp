#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "earlystop/kernels.hpp"
#include "earlystop/rng.hpp"

using namespace earlystop;
using doctest::Approx;

TEST_CASE("first-order kernel takes the smaller argument") {
  const Kernel k = Kernel::sobolev();
  CHECK(k.eval(0.3, 0.7) == Approx(0.3).epsilon(1e-15));
  CHECK(k.eval(0.7, 0.3) == Approx(0.3).epsilon(1e-15));
  CHECK(k.eval(0.0, 1.0) == 0.0);
  CHECK(k.eval(1.0, 1.0) == 1.0);
  CHECK(k.eval(0.25, 0.25) == Approx(0.25).epsilon(1e-15));
  CHECK(k.name() == "sobolev");
  CHECK(k.sup_diag() == 1.0);
}

TEST_CASE("gaussian kernel decays in the scaled squared distance") {
  const Kernel k = Kernel::gaussian(0.1);
  CHECK(k.eval(0.5, 0.5) == 1.0);
  CHECK(k.eval(0.0, 0.1) == Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(k.eval(0.2, 0.4) == Approx(std::exp(-4.0)).epsilon(1e-15));
  CHECK(k.eval(0.4, 0.2) == k.eval(0.2, 0.4));
  CHECK(k.bandwidth() == 0.1);
  CHECK(k.name() == "gaussian");
  CHECK_THROWS_AS(Kernel::gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::gaussian(-1.0), std::invalid_argument);
}

TEST_CASE("kernel evaluation rejects points outside the unit interval") {
  const Kernel k = Kernel::sobolev();
  CHECK_THROWS_AS(k.eval(-0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(k.eval(0.5, 1.1), std::invalid_argument);
  CHECK_THROWS_AS(k.eval(std::nan(""), 0.5), std::invalid_argument);
}

TEST_CASE("kernel lookup by name") {
  CHECK(Kernel::from_name("sobolev").type() == KernelType::Sobolev);
  const Kernel g = Kernel::from_name("gaussian", 0.05);
  CHECK(g.type() == KernelType::Gaussian);
  CHECK(g.bandwidth() == 0.05);
  CHECK_THROWS_AS(Kernel::from_name("polynomial"), std::invalid_argument);
}

TEST_CASE("design validation") {
  CHECK_THROWS_AS(Design(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(Design({0.2, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(Design({-0.1, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(Design({0.5, 1.5}), std::invalid_argument);
  CHECK_NOTHROW(Design({0.0, 0.0, 0.5, 1.0}));  // ties allowed
}

TEST_CASE("equispaced design points are i/n") {
  const Design d = fixed_design(3);
  REQUIRE(d.size() == 3);
  CHECK(d.points[0] == Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(d.points[1] == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(d.points[2] == 1.0);
  CHECK(fixed_design(1).points[0] == 1.0);
  CHECK_THROWS_AS(fixed_design(0), std::invalid_argument);
}

TEST_CASE("normalized kernel matrix entries and trace") {
  const KernelMatrix K = kernel_matrix(Kernel::sobolev(), fixed_design(3));
  REQUIRE(K.n() == 3);
  // entries are min(x_i, x_j) / 3 with x = (1/3, 2/3, 1)
  CHECK(K.entries(0, 0) == Approx(1.0 / 9.0).epsilon(1e-15));
  CHECK(K.entries(0, 2) == Approx(1.0 / 9.0).epsilon(1e-15));
  CHECK(K.entries(1, 1) == Approx(2.0 / 9.0).epsilon(1e-15));
  CHECK(K.entries(2, 1) == Approx(2.0 / 9.0).epsilon(1e-15));
  CHECK(K.entries(2, 2) == Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(K.entries.trace() == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK((K.entries - K.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("normalized trace never exceeds the diagonal supremum") {
  for (std::size_t n : {1u, 7u, 40u}) {
    for (const Kernel& k : {Kernel::sobolev(), Kernel::gaussian(0.02)}) {
      const KernelMatrix K = kernel_matrix(k, fixed_design(n));
      CHECK(K.entries.trace() <= k.sup_diag() + 1e-12);
    }
  }
}

TEST_CASE("kernel matrices are positive semi-definite on random designs") {
  NoiseStream rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> pts(12);
    for (double& p : pts) p = rng.next_uniform();
    std::sort(pts.begin(), pts.end());
    for (const Kernel& k : {Kernel::sobolev(), Kernel::gaussian(0.05)}) {
      const KernelMatrix K = kernel_matrix(k, Design(pts));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K.entries);
      REQUIRE(solver.info() == Eigen::Success);
      CHECK(solver.eigenvalues().minCoeff() >= -1e-12);
    }
  }
}
