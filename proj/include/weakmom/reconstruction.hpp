#pragma once

#include "weakmom/kernel.hpp"
#include "weakmom/models.hpp"

#include <functional>
#include <vector>

namespace weakmom {

// uniform grid sample of a real function
struct GridFunction {
  std::vector<double> x;
  std::vector<double> values;
  double dx = 0.0;
  size_t size() const { return x.size(); }
};

struct TikhonovConfig {
  double lambda = 1e-6;  // must be positive
};

struct BumpConfig {
  // Gaussian smoothing bandwidth for the empirical forward image;
  // <= 0 selects a robust Silverman-type rule
  double bandwidth = 0.0;
};

// uniform grid on [-radiusSigmas*sigma, radiusSigmas*sigma], zero values
GridFunction makeGrid(const GaussianKernel& kernel, int points = 4096,
                      double radiusSigmas = 12.0);

// sample fn on the same grid layout
GridFunction gridFromFunction(const GridFunction& layout, const std::function<double(double)>& fn);

// g(x) = phi(x) f(x)
GridFunction forwardMultiply(const GridFunction& f, const GaussianKernel& kernel);

// the regularised inverse of the multiplication operator: the filter
// phi/(phi^2 + lambda) applied pointwise; minimiser of
// ||M_phi h - g||^2 + lambda ||h||^2
GridFunction tikhonovInvert(const GridFunction& g, const GaussianKernel& kernel,
                            const TikhonovConfig& config);

// trapezoid L2 quantities
double l2Norm(const GridFunction& g);
double l2Distance(const GridFunction& a, const GridFunction& b);

// smoothed empirical estimate of g = phi * f from data: the phi-weighted
// empirical measure convolved with a narrow Gaussian bump
GridFunction empiricalForward(const Eigen::MatrixXd& data, const GaussianKernel& kernel,
                              const GridFunction& layout, const BumpConfig& bump = BumpConfig());

// source-condition rate check: f = phi^nu * h, g = phi f; least-squares slope
// of log ||R_lambda g - f|| against log lambda (theory: nu/2 below saturation)
double rateExperiment(const GaussianKernel& kernel, double nu,
                      const std::vector<double>& lambdaGrid, const GridFunction& h);

// detailed variant used by tests and reports
struct RateCurve {
  std::vector<double> lambdas;
  std::vector<double> errors;
  double slope = 0.0;
};
RateCurve rateCurve(const GaussianKernel& kernel, double nu,
                    const std::vector<double>& lambdaGrid, const GridFunction& h);

// default lambda grid: 9 points log-spaced on [1e-6, 1e-2]
std::vector<double> defaultRateLambdas();

// two-column CSV (x,value)
void writeGridCsv(const GridFunction& g, const std::string& path);
GridFunction readGridCsv(const std::string& path);

}  // namespace weakmom
