#pragma once

#include "weakmom/robustness.hpp"

#include <optional>
#include <string>

namespace weakmom {

enum class Method {
  WeakMoment,        // just-identified root or identity-weighted fit
  GMMTwoStep,        // identity first step, estimated optimal weighting second
  WeakCF,            // kernel-damped characteristic function matching
  Median,
  CoordinateMedian,
  SpatialMedian,
  MLE,
  Huber,
  Tukey,
  MeanSD,
  MedMAD,
  Fixed              // returns a preset value; testing aid
};

std::string methodLabel(Method m);

struct EstimatorConfig {
  Method method = Method::WeakMoment;
  GaussianKernel kernel{3.0, 1};
  MomentSet momentSet{MomentIndex::power(1)};
  bool augmentMass = false;      // prepend the mass condition
  bool massNormalised = false;   // ratio convention m_j/m_0 (univariate location)
  WeightingScheme weighting;     // Identity => one-step; ridge used in step two
  int cfGridSize = 64;
  double cfTMax = 4.0;
  double huberK = 1.345;
  double tukeyC = 4.685;
  std::optional<Eigen::VectorXd> start;  // default: median-type start
  Eigen::VectorXd fixedValue;            // Method::Fixed payload
  double searchHalfWidthSigmas = 4.0;    // local search box half-width
  int maxIter = 300;
  double tol = 1e-9;
  QuadratureSpec quad;
  std::string label;  // report column name; methodLabel(method) when empty
};

struct EstimateResult {
  Eigen::VectorXd theta;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;  // identity-weighted residual for moment fits
  std::optional<Eigen::MatrixXd> asymptoticCov;  // plug-in sandwich / n
  std::string method;
};

// dispatch on config.method
EstimateResult estimate(const Eigen::MatrixXd& data, const ParametricModel& family,
                        const EstimatorConfig& cfg);

EstimateResult estimateWeakMoment(const Eigen::MatrixXd& data, const ParametricModel& family,
                                  const EstimatorConfig& cfg);
EstimateResult estimateGMMTwoStep(const Eigen::MatrixXd& data, const ParametricModel& family,
                                  const EstimatorConfig& cfg);
EstimateResult estimateWeakCF(const Eigen::MatrixXd& data, const ParametricModel& family,
                              const EstimatorConfig& cfg);
// classical comparison estimators (median family, MLE, M-estimators, moments)
EstimateResult benchmarkEstimate(const Eigen::MatrixXd& data, const ParametricModel& family,
                                 const EstimatorConfig& cfg);

// order-statistic helpers shared with the simulation harness
double medianOf(std::vector<double> v);
double madScale(const std::vector<double>& v, double center);  // 1.4826 * MAD

}  // namespace weakmom
