#include "earlystop/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace earlystop {

Kernel Kernel::sobolev() { return Kernel(KernelType::Sobolev, 0.0); }

Kernel Kernel::gaussian(double bandwidth) {
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("gaussian kernel requires bandwidth > 0");
  }
  return Kernel(KernelType::Gaussian, bandwidth);
}

Kernel Kernel::from_name(const std::string& name, double bandwidth) {
  if (name == "sobolev") return sobolev();
  if (name == "gaussian") return gaussian(bandwidth);
  throw std::invalid_argument("unknown kernel: " + name);
}

double Kernel::eval(double x, double y) const {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
    throw std::invalid_argument("kernel arguments must lie in [0, 1]");
  }
  switch (type_) {
    case KernelType::Sobolev:
      return std::min(x, y);
    case KernelType::Gaussian: {
      const double d = (x - y) / bandwidth_;
      return std::exp(-d * d);
    }
  }
  throw std::logic_error("unreachable kernel type");
}

std::string Kernel::name() const {
  return type_ == KernelType::Sobolev ? "sobolev" : "gaussian";
}

Design::Design(std::vector<double> pts) : points(std::move(pts)) {
  if (points.empty()) {
    throw std::invalid_argument("design must contain at least one point");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] >= 0.0 && points[i] <= 1.0)) {
      throw std::invalid_argument("design points must lie in [0, 1]");
    }
    if (i > 0 && points[i] < points[i - 1]) {
      throw std::invalid_argument("design points must be non-decreasing");
    }
  }
}

Design fixed_design(std::size_t n) {
  if (n == 0) throw std::invalid_argument("fixed design requires n >= 1");
  std::vector<double> pts(n);
  for (std::size_t i = 1; i <= n; ++i) {
    pts[i - 1] = static_cast<double>(i) / static_cast<double>(n);
  }
  return Design(std::move(pts));
}

KernelMatrix kernel_matrix(const Kernel& kernel, const Design& design) {
  const auto n = design.size();
  Eigen::MatrixXd entries(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double value = kernel.eval(design.points[i], design.points[j]) * inv_n;
      entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
      entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = value;
    }
  }
  return KernelMatrix{std::move(entries)};
}

}  // namespace earlystop
