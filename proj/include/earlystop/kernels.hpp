#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

namespace earlystop {

enum class KernelType { Sobolev, Gaussian };

// Positive semi-definite kernel on the unit interval.
//   Sobolev:  k(x, y) = min(x, y)
//   Gaussian: k(x, y) = exp(-(x - y)^2 / w^2), bandwidth w > 0
// Both satisfy sup_{x in [0,1]} k(x, x) <= 1.
class Kernel {
 public:
  static Kernel sobolev();
  static Kernel gaussian(double bandwidth);
  // Accepts "sobolev" | "gaussian"; bandwidth is used for the Gaussian only.
  static Kernel from_name(const std::string& name, double bandwidth = 0.02);

  // Evaluates k(x, y); both arguments must lie in [0, 1].
  double eval(double x, double y) const;

  KernelType type() const { return type_; }
  double bandwidth() const { return bandwidth_; }
  // sup_{x in [0,1]} k(x, x); equals 1 for both families.
  double sup_diag() const { return 1.0; }
  std::string name() const;

 private:
  Kernel(KernelType type, double bandwidth) : type_(type), bandwidth_(bandwidth) {}

  KernelType type_;
  double bandwidth_;
};

// Ordered design points in [0, 1], length >= 1.
struct Design {
  std::vector<double> points;

  explicit Design(std::vector<double> pts);
  std::size_t size() const { return points.size(); }
};

// Equispaced design x_i = i/n, i = 1, ..., n.
Design fixed_design(std::size_t n);

// Normalized kernel matrix (K_n)_ij = k(x_i, x_j) / n.  Symmetric, positive
// semi-definite, trace bounded by sup_diag.
struct KernelMatrix {
  Eigen::MatrixXd entries;

  std::size_t n() const { return static_cast<std::size_t>(entries.rows()); }
};

KernelMatrix kernel_matrix(const Kernel& kernel, const Design& design);

}  // namespace earlystop
