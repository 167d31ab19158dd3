#include "weakmom/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace weakmom {

GaussianKernel::GaussianKernel(double sigma, int dim) : sigma_(sigma), dim_(dim) {
  if (!(sigma > 0.0)) throw std::invalid_argument("GaussianKernel: bandwidth must be positive");
  if (dim < 1) throw std::invalid_argument("GaussianKernel: dimension must be >= 1");
}

double GaussianKernel::evaluate(double x) const {
  return std::exp(-x * x / (2.0 * sigma_ * sigma_));
}

double GaussianKernel::evaluate(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("GaussianKernel: dimension mismatch");
  return evaluateR2(x.squaredNorm());
}

double GaussianKernel::evaluateR2(double r2) const {
  return std::exp(-r2 / (2.0 * sigma_ * sigma_));
}

GaussianKernel GaussianKernel::squared() const {
  return GaussianKernel(sigma_ / std::sqrt(2.0), dim_);
}

double GaussianKernel::supXPhi() const {
  return sigma_ / std::sqrt(std::exp(1.0));
}

}  // namespace weakmom
