#pragma once

#include "weakmom/weakcore.hpp"

#include <string>
#include <vector>

namespace weakmom {

struct WeightingScheme {
  enum class Kind { Identity, TwoStepOptimal };
  Kind kind = Kind::Identity;
  double ridge = 0.10;  // added to S before inversion when TwoStepOptimal
};

// A weak moment system: free conditions, optional prepended mass condition,
// and the weighting used for over-identified fits. massNormalised selects the
// just-identified ratio-matching convention r_j = m_j / m_0 (univariate, one
// location parameter, one free condition).
struct WeakSystem {
  MomentSet set;
  bool augmentMass = false;
  bool massNormalised = false;
  WeightingScheme weighting;
};

// the conditions actually fitted, mass first when augmented
MomentSet effectiveSet(const WeakSystem& sys);

// stacked scores psi_k(x) phi(x) - m_k(theta) in effective-set order
Eigen::VectorXd scoreComponents(const ParametricModel& model, const GaussianKernel& kernel,
                                const MomentSet& set, const Eigen::VectorXd& x,
                                const QuadratureSpec& spec = QuadratureSpec());

// score covariance under the model: S_kl = E[psi_k psi_l phi^2] - m_k m_l.
// The first term is a weak moment of the squared kernel (bandwidth sigma/sqrt2).
Eigen::MatrixXd sandwichS(const ParametricModel& model, const GaussianKernel& kernel,
                          const MomentSet& set, const QuadratureSpec& spec = QuadratureSpec());

// K x p matrix of d m_k / d theta_i, central differences with step
// 1e-5 * max(1, |theta_i|)
Eigen::MatrixXd momentJacobian(const ParametricModel& model, const GaussianKernel& kernel,
                               const MomentSet& set, const QuadratureSpec& spec = QuadratureSpec());

// influence function of the weak estimator defined by sys, evaluated at x
Eigen::VectorXd influenceFunction(const ParametricModel& model, const GaussianKernel& kernel,
                                  const WeakSystem& sys, const Eigen::VectorXd& x,
                                  const QuadratureSpec& spec = QuadratureSpec());

// sup over a graded grid of the euclidean IF norm (dense steps of 0.01 sigma
// near the centre, coarser out to the 12 sigma truncation radius)
double grossErrorSensitivity(const ParametricModel& model, const GaussianKernel& kernel,
                             const WeakSystem& sys, const QuadratureSpec& spec = QuadratureSpec());

// p x p sandwich (G'WG)^-1 G'W S W G (G'WG)^-1 with population S; collapses
// to (G'S^-1 G)^-1 when W = S^-1
Eigen::MatrixXd asymptoticVariance(const ParametricModel& model, const GaussianKernel& kernel,
                                   const WeakSystem& sys,
                                   const QuadratureSpec& spec = QuadratureSpec());

struct InfluenceProfile {
  std::vector<double> grid;   // evaluation points
  Eigen::MatrixXd values;     // p x grid.size()
  double ges = 0.0;           // max over the grid of the column norms
};

// tabulated IF (univariate families); gridPoints = 0 uses the graded grid,
// a positive value an equispaced grid with exactly that many rows
InfluenceProfile influenceProfile(const ParametricModel& model, const GaussianKernel& kernel,
                                  const WeakSystem& sys,
                                  const QuadratureSpec& spec = QuadratureSpec(),
                                  int gridPoints = 0);

void writeInfluenceCsv(const InfluenceProfile& profile, const std::string& path);

// sample-median benchmarks for symmetric univariate families:
// GES = 1 / (2 f(center)), asymptotic variance = 1 / (4 f(center)^2)
double medianGES(const ParametricModel& model);
double medianAsymptoticVariance(const ParametricModel& model);

}  // namespace weakmom
