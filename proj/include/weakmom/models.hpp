#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace weakmom {

enum class Family {
  CauchyLocation,          // theta = (mu), d=1
  StudentTLocationScale,   // theta = (mu, s), d=1, degrees of freedom nu
  BivariateCauchyLocation, // theta = (mu1, mu2), d=2
  BivariateT3LocationScale // theta = (mu1, mu2, s), d=2
};

struct ParametricModel {
  Family family = Family::CauchyLocation;
  Eigen::VectorXd theta;
  double nu = 3.0;  // StudentTLocationScale only

  static ParametricModel cauchy(double mu);
  static ParametricModel studentT(double mu, double s, double nu = 3.0);
  static ParametricModel bivCauchy(double mu1, double mu2);
  static ParametricModel bivT3(double mu1, double mu2, double s);

  int dim() const;         // data dimension
  int paramCount() const;  // length of theta

  // same family, different parameter point
  ParametricModel withTheta(const Eigen::VectorXd& th) const;

  double density(const Eigen::VectorXd& x) const;
  double density1(double x) const;  // univariate convenience

  // radial density profile r -> f(mu + r*u), d=2 families only
  double radialDensity(double r) const;

  // gradient of log f_theta(x) with respect to theta
  Eigen::VectorXd logDensityGrad(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd sample(int n, uint64_t seed) const;

  // draw one observation into a matrix row, consuming from an open stream
  void drawRow(class Rng& rng, Eigen::MatrixXd& dst, int row) const;

  void validate() const;  // throws on invalid parameters
};

struct ContaminatedModel {
  ParametricModel base;
  ParametricModel contaminant;
  double epsilon = 0.0;  // in [0,1)

  double density(const Eigen::VectorXd& x) const;
  // epsilon = 0 delegates to the base sampler so a degenerate mixture is
  // bit-identical to the clean run under the same seed
  Eigen::MatrixXd sample(int n, uint64_t seed) const;

  void validate() const;
};

}  // namespace weakmom
