#pragma once

#include <Eigen/Core>

namespace weakmom {

// Positive, radially symmetric, rapidly decaying weight function. Only the
// Gaussian family is implemented; downstream code keys on the interface so
// other exponential-decay kernels can be added without touching callers.
class Kernel {
public:
  virtual ~Kernel() = default;
  virtual int dim() const = 0;
  virtual double evaluate(const Eigen::VectorXd& x) const = 0;
};

class GaussianKernel final : public Kernel {
public:
  // default bandwidth 3 matches every worked example
  explicit GaussianKernel(double sigma = 3.0, int dim = 1);

  double sigma() const { return sigma_; }
  int dim() const override { return dim_; }

  double evaluate(double x) const;  // radial evaluation, any dimension
  double evaluate(const Eigen::VectorXd& x) const override;
  double evaluateR2(double r2) const;  // from the squared norm directly

  // pointwise square: a Gaussian with bandwidth sigma/sqrt(2)
  GaussianKernel squared() const;

  // sup_x x*phi(x) in d=1, attained at x = sigma
  double supXPhi() const;

private:
  double sigma_;
  int dim_;
};

}  // namespace weakmom
