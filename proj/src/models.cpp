#include "weakmom/models.hpp"

#include "weakmom/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace weakmom {

namespace {
constexpr double kPi = 3.14159265358979323846;

void checkDim(const ParametricModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.dim()) throw std::invalid_argument("model: dimension mismatch");
}
}  // namespace

ParametricModel ParametricModel::cauchy(double mu) {
  ParametricModel m;
  m.family = Family::CauchyLocation;
  m.theta = Eigen::VectorXd::Constant(1, mu);
  return m;
}

ParametricModel ParametricModel::studentT(double mu, double s, double nu) {
  ParametricModel m;
  m.family = Family::StudentTLocationScale;
  m.theta = Eigen::Vector2d(mu, s);
  m.nu = nu;
  m.validate();
  return m;
}

ParametricModel ParametricModel::bivCauchy(double mu1, double mu2) {
  ParametricModel m;
  m.family = Family::BivariateCauchyLocation;
  m.theta = Eigen::Vector2d(mu1, mu2);
  return m;
}

ParametricModel ParametricModel::bivT3(double mu1, double mu2, double s) {
  ParametricModel m;
  m.family = Family::BivariateT3LocationScale;
  m.theta = Eigen::Vector3d(mu1, mu2, s);
  m.validate();
  return m;
}

int ParametricModel::dim() const {
  switch (family) {
    case Family::CauchyLocation:
    case Family::StudentTLocationScale:
      return 1;
    case Family::BivariateCauchyLocation:
    case Family::BivariateT3LocationScale:
      return 2;
  }
  return 1;
}

int ParametricModel::paramCount() const {
  switch (family) {
    case Family::CauchyLocation:
      return 1;
    case Family::StudentTLocationScale:
    case Family::BivariateCauchyLocation:
      return 2;
    case Family::BivariateT3LocationScale:
      return 3;
  }
  return 1;
}

ParametricModel ParametricModel::withTheta(const Eigen::VectorXd& th) const {
  if (th.size() != paramCount()) throw std::invalid_argument("withTheta: wrong parameter count");
  ParametricModel m = *this;
  m.theta = th;
  return m;
}

void ParametricModel::validate() const {
  if (theta.size() != paramCount()) throw std::invalid_argument("model: wrong parameter count");
  switch (family) {
    case Family::StudentTLocationScale:
      if (!(theta(1) > 0.0)) throw std::invalid_argument("model: scale must be positive");
      if (!(nu > 0.0)) throw std::invalid_argument("model: nu must be positive");
      break;
    case Family::BivariateT3LocationScale:
      if (!(theta(2) > 0.0)) throw std::invalid_argument("model: scale must be positive");
      break;
    default:
      break;
  }
}

double ParametricModel::density1(double x) const {
  switch (family) {
    case Family::CauchyLocation: {
      const double r = x - theta(0);
      return 1.0 / (kPi * (1.0 + r * r));
    }
    case Family::StudentTLocationScale: {
      const double s = theta(1);
      const double z = (x - theta(0)) / s;
      // t_nu location-scale density; for nu=3 the constant is 2/(pi*sqrt(3))
      const double c = std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)) /
                       std::sqrt(nu * kPi);
      return c / s * std::pow(1.0 + z * z / nu, -0.5 * (nu + 1.0));
    }
    default:
      throw std::invalid_argument("density1: univariate families only");
  }
}

double ParametricModel::radialDensity(double r) const {
  switch (family) {
    case Family::BivariateCauchyLocation:
      return (0.5 / kPi) * std::pow(1.0 + r * r, -1.5);
    case Family::BivariateT3LocationScale: {
      const double s = theta(2);
      const double z2 = r * r / (3.0 * s * s);
      return 1.0 / (2.0 * kPi * s * s) * std::pow(1.0 + z2, -2.5);
    }
    default:
      throw std::invalid_argument("radialDensity: bivariate families only");
  }
}

double ParametricModel::density(const Eigen::VectorXd& x) const {
  checkDim(*this, x);
  switch (family) {
    case Family::CauchyLocation:
    case Family::StudentTLocationScale:
      return density1(x(0));
    case Family::BivariateCauchyLocation:
      return radialDensity((x - theta).norm());
    case Family::BivariateT3LocationScale:
      return radialDensity((x - theta.head<2>()).norm());
  }
  return 0.0;
}

Eigen::VectorXd ParametricModel::logDensityGrad(const Eigen::VectorXd& x) const {
  checkDim(*this, x);
  Eigen::VectorXd g(paramCount());
  switch (family) {
    case Family::CauchyLocation: {
      const double r = x(0) - theta(0);
      g(0) = 2.0 * r / (1.0 + r * r);
      break;
    }
    case Family::StudentTLocationScale: {
      const double s = theta(1);
      const double z = (x(0) - theta(0)) / s;
      const double w = (nu + 1.0) / (nu + z * z);
      g(0) = w * z / s;
      g(1) = (-1.0 + w * z * z) / s;
      break;
    }
    case Family::BivariateCauchyLocation: {
      const Eigen::Vector2d r = x - theta;
      g = 3.0 * r / (1.0 + r.squaredNorm());
      break;
    }
    case Family::BivariateT3LocationScale: {
      const double s = theta(2);
      const Eigen::Vector2d r = x - theta.head<2>();
      const double q = r.squaredNorm() / (s * s);
      const double w = 5.0 / (3.0 + q);  // (nu + d)/(nu + r^2/s^2), nu=3, d=2
      g.head<2>() = w * r / (s * s);
      g(2) = (-2.0 + w * q) / s;
      break;
    }
  }
  return g;
}

void ParametricModel::drawRow(Rng& rng, Eigen::MatrixXd& dst, int row) const {
  switch (family) {
    case Family::CauchyLocation:
      dst(row, 0) = rng.cauchy(theta(0), 1.0);
      break;
    case Family::StudentTLocationScale: {
      const int k = static_cast<int>(nu);
      if (std::abs(nu - k) > 0.0)
        throw std::invalid_argument("sample: integer degrees of freedom only");
      const double z = rng.normal();
      dst(row, 0) = theta(0) + theta(1) * z / std::sqrt(rng.chisq(k) / nu);
      break;
    }
    case Family::BivariateCauchyLocation: {
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      const double d = std::sqrt(rng.chisq(1));
      dst(row, 0) = theta(0) + z1 / d;
      dst(row, 1) = theta(1) + z2 / d;
      break;
    }
    case Family::BivariateT3LocationScale: {
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      const double d = std::sqrt(rng.chisq(3) / 3.0);
      dst(row, 0) = theta(0) + theta(2) * z1 / d;
      dst(row, 1) = theta(1) + theta(2) * z2 / d;
      break;
    }
  }
}

Eigen::MatrixXd ParametricModel::sample(int n, uint64_t seed) const {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd out(n, dim());
  for (int i = 0; i < n; ++i) drawRow(rng, out, i);
  return out;
}

double ContaminatedModel::density(const Eigen::VectorXd& x) const {
  return (1.0 - epsilon) * base.density(x) + epsilon * contaminant.density(x);
}

void ContaminatedModel::validate() const {
  base.validate();
  contaminant.validate();
  if (epsilon < 0.0 || epsilon >= 1.0)
    throw std::invalid_argument("ContaminatedModel: epsilon must be in [0,1)");
  if (base.dim() != contaminant.dim())
    throw std::invalid_argument("ContaminatedModel: component dimensions differ");
}

Eigen::MatrixXd ContaminatedModel::sample(int n, uint64_t seed) const {
  if (epsilon == 0.0) return base.sample(n, seed);
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd out(n, base.dim());
  // per-observation Bernoulli(epsilon) component label; the component draw
  // consumes from the same stream, keeping the sample a pure function of
  // the seed
  for (int i = 0; i < n; ++i) {
    const bool contaminate = rng.uniform() < epsilon;
    (contaminate ? contaminant : base).drawRow(rng, out, i);
  }
  return out;
}

}  // namespace weakmom
