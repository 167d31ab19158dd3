#pragma once

#include "weakmom/kernel.hpp"
#include "weakmom/models.hpp"
#include "weakmom/quadrature.hpp"

#include <complex>
#include <vector>

namespace weakmom {

// A moment order: x^j (d=1), x^alpha (d=2), or the sum-of-squares moment
// ||x||^2. power(0) doubles as the mass condition in any dimension.
struct MomentIndex {
  enum class Kind { Power, MultiIndex, RadialPower2 };
  Kind kind = Kind::Power;
  int j = 0;           // Power
  int a1 = 0, a2 = 0;  // MultiIndex components (d=2)

  static MomentIndex power(int j);
  static MomentIndex multi(int a1, int a2);
  static MomentIndex radial2();

  int order() const;  // total degree
  bool operator==(const MomentIndex& o) const;
};

using MomentSet = std::vector<MomentIndex>;

// the test function psi_index evaluated at a point
double evalIndex(const MomentIndex& idx, const Eigen::VectorXd& x);
double evalIndex1(const MomentIndex& idx, double x);  // univariate fast path

// E_theta[psi_index(x) phi(x)] by adaptive quadrature (univariate) or an
// exact polar reduction (bivariate isotropic families). Non-convergent
// quadrature is propagated as a runtime error.
double theoreticalWeakMoment(const ParametricModel& model, const GaussianKernel& kernel,
                             const MomentIndex& idx, const QuadratureSpec& spec = QuadratureSpec());
// mixture version (linearity)
double theoreticalWeakMoment(const ContaminatedModel& model, const GaussianKernel& kernel,
                             const MomentIndex& idx, const QuadratureSpec& spec = QuadratureSpec());

// batched variant; bivariate sets share one radial pass
Eigen::VectorXd theoreticalWeakMoments(const ParametricModel& model, const GaussianKernel& kernel,
                                       const MomentSet& set,
                                       const QuadratureSpec& spec = QuadratureSpec());

// (1/n) sum psi(X_i) phi(X_i); the kernel factor sits inside the average
double empiricalWeakExpectation(const Eigen::MatrixXd& data, const GaussianKernel& kernel,
                                const MomentIndex& idx);

// weak characteristic function (univariate only)
std::complex<double> theoreticalWeakCF(const ParametricModel& model, const GaussianKernel& kernel,
                                       double t, const QuadratureSpec& spec = QuadratureSpec());
std::complex<double> empiricalWeakCF(const Eigen::MatrixXd& data, const GaussianKernel& kernel,
                                     double t);

// principal-branch log of the weak CF; throws if the CF vanishes
std::complex<double> weakCGF(const ParametricModel& model, const GaussianKernel& kernel, double t,
                             const QuadratureSpec& spec = QuadratureSpec());

// kappa_0..kappa_J from raw weak moments m_0..m_J via the moment-cumulant
// recursion applied to unnormalised moments; kappa_0 = log m_0
std::vector<double> weakCumulants(const std::vector<double>& moments);
// forward recursion (inverse of weakCumulants)
std::vector<double> cumulantsToMoments(const std::vector<double>& cumulants);

// normalised view m_j / m_0 (used by the location monotonicity diagnostic)
double normalisedWeakMoment(const ParametricModel& model, const GaussianKernel& kernel, int j,
                            const QuadratureSpec& spec = QuadratureSpec());

// Cauchy weak m_0 and m_1 through the Faddeeva identity at (mu+i)/(sigma sqrt 2):
//   m_0 = Re w(z),  m_1 = mu m_0 - Im w(z).
// Independent of the quadrature route; kept as a cross-check.
double cauchyWeakM0Faddeeva(double mu, double sigma);
double cauchyWeakM1Faddeeva(double mu, double sigma);

}  // namespace weakmom
