#include "weakmom/weakcore.hpp"

#include <cmath>
#include <stdexcept>

namespace weakmom {

MomentIndex MomentIndex::power(int j) {
  if (j < 0) throw std::invalid_argument("moment order must be non-negative");
  MomentIndex idx;
  idx.kind = Kind::Power;
  idx.j = j;
  return idx;
}

MomentIndex MomentIndex::multi(int a1, int a2) {
  if (a1 < 0 || a2 < 0) throw std::invalid_argument("multi-index entries must be non-negative");
  MomentIndex idx;
  idx.kind = Kind::MultiIndex;
  idx.a1 = a1;
  idx.a2 = a2;
  return idx;
}

MomentIndex MomentIndex::radial2() {
  MomentIndex idx;
  idx.kind = Kind::RadialPower2;
  return idx;
}

int MomentIndex::order() const {
  switch (kind) {
    case Kind::Power: return j;
    case Kind::MultiIndex: return a1 + a2;
    case Kind::RadialPower2: return 2;
  }
  return 0;
}

bool MomentIndex::operator==(const MomentIndex& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Power: return j == o.j;
    case Kind::MultiIndex: return a1 == o.a1 && a2 == o.a2;
    case Kind::RadialPower2: return true;
  }
  return false;
}

double evalIndex1(const MomentIndex& idx, double x) {
  switch (idx.kind) {
    case MomentIndex::Kind::Power: {
      double v = 1.0;
      for (int k = 0; k < idx.j; ++k) v *= x;
      return v;
    }
    case MomentIndex::Kind::RadialPower2:
      return x * x;
    case MomentIndex::Kind::MultiIndex:
      if (idx.a2 != 0)
        throw std::invalid_argument("multi-index with two components needs bivariate input");
      return evalIndex1(MomentIndex::power(idx.a1), x);
  }
  throw std::logic_error("unreachable");
}

double evalIndex(const MomentIndex& idx, const Eigen::VectorXd& x) {
  if (x.size() == 1) return evalIndex1(idx, x(0));
  switch (idx.kind) {
    case MomentIndex::Kind::Power:
      if (idx.j == 0) return 1.0;  // mass condition is dimension-free
      throw std::invalid_argument("power index is univariate; use multi() in d=2");
    case MomentIndex::Kind::MultiIndex: {
      if (x.size() != 2) throw std::invalid_argument("multi-index requires d=2");
      double v = 1.0;
      for (int k = 0; k < idx.a1; ++k) v *= x(0);
      for (int k = 0; k < idx.a2; ++k) v *= x(1);
      return v;
    }
    case MomentIndex::Kind::RadialPower2:
      return x.squaredNorm();
  }
  throw std::logic_error("unreachable");
}

namespace {

// exponentially scaled modified Bessel functions; the scaled forms stay
// O(1/sqrt(a)) so the product below never overflows on the radii we visit
double besselI0e(double a) {
  if (a > 600.0) throw std::domain_error("Bessel argument outside supported range");
  return std::exp(-a) * std::cyl_bessel_i(0.0, a);
}

double besselI1e(double a) {
  if (a > 600.0) throw std::domain_error("Bessel argument outside supported range");
  return std::exp(-a) * std::cyl_bessel_i(1.0, a);
}

void requireConverged(const QuadResult& r, const char* what) {
  if (!r.converged)
    throw std::runtime_error(std::string("quadrature did not converge in ") + what);
}

double univariateWeakMoment(const ParametricModel& model, const GaussianKernel& kernel,
                            const MomentIndex& idx, const QuadratureSpec& spec) {
  auto integrand = [&](double x) {
    return evalIndex1(idx, x) * kernel.evaluate(x) * model.density1(x);
  };
  QuadResult r = integrateWindow(integrand, kernel.sigma(), spec);
  requireConverged(r, "theoreticalWeakMoment");
  return r.value;
}

// Isotropic bivariate reduction. With m = |mu| and a(r) = r m / sigma^2 the
// angular integral collapses to scaled Bessel factors:
//   E0(r) = exp(-(r-m)^2 / (2 sigma^2)) I0e(a),  E1 likewise with I1e.
struct PolarMoments {
  double m0 = 0.0;        // mass
  Eigen::Vector2d vec;    // first-order vector moment
  double r2 = 0.0;        // ||x||^2 moment
};

PolarMoments bivariatePolar(const ParametricModel& model, const GaussianKernel& kernel,
                            bool needVec, bool needR2, const QuadratureSpec& spec) {
  const Eigen::Vector2d mu(model.theta(0), model.theta(1));
  const double m = mu.norm();
  const double sig = kernel.sigma();
  const double twoSig2 = 2.0 * sig * sig;
  const double lo = std::max(0.0, m - spec.truncationRadius * sig);
  const double hi = m + spec.truncationRadius * sig;
  const double twoPi = 2.0 * M_PI;

  auto gauss = [&](double r) {
    double d = r - m;
    return std::exp(-d * d / twoSig2);
  };
  auto a = [&](double r) { return r * m / (sig * sig); };

  PolarMoments out;
  out.vec.setZero();

  {
    auto f0 = [&](double r) { return r * model.radialDensity(r) * gauss(r) * besselI0e(a(r)); };
    QuadResult q = integrate1D(f0, lo, hi, spec);
    requireConverged(q, "bivariate weak mass");
    out.m0 = twoPi * q.value;
  }
  if (needVec) {
    auto f1 = [&](double r) { return r * r * model.radialDensity(r) * gauss(r) * besselI1e(a(r)); };
    QuadResult q = integrate1D(f1, lo, hi, spec);
    requireConverged(q, "bivariate weak vector moment");
    double t1 = twoPi * q.value;
    Eigen::Vector2d muHat = m < 1e-12 ? Eigen::Vector2d::Zero().eval() : (mu / m).eval();
    out.vec = mu * out.m0 - muHat * t1;
  }
  if (needR2) {
    auto f2 = [&](double r) {
      double ar = a(r);
      double core = (m * m + r * r) * besselI0e(ar) - 2.0 * r * m * besselI1e(ar);
      return r * model.radialDensity(r) * gauss(r) * core;
    };
    QuadResult q = integrate1D(f2, lo, hi, spec);
    requireConverged(q, "bivariate weak radial moment");
    out.r2 = twoPi * q.value;
  }
  return out;
}

double bivariateWeakMoment(const ParametricModel& model, const GaussianKernel& kernel,
                           const MomentIndex& idx, const QuadratureSpec& spec) {
  const int ord = idx.order();
  if (idx.kind == MomentIndex::Kind::RadialPower2) {
    return bivariatePolar(model, kernel, false, true, spec).r2;
  }
  if (ord == 0) {
    return bivariatePolar(model, kernel, false, false, spec).m0;
  }
  if (idx.kind == MomentIndex::Kind::MultiIndex && ord == 1) {
    PolarMoments pm = bivariatePolar(model, kernel, true, false, spec);
    return idx.a1 == 1 ? pm.vec(0) : pm.vec(1);
  }
  throw std::invalid_argument(
      "bivariate weak moments support mass, first-order multi-indices and ||x||^2");
}

}  // namespace

double theoreticalWeakMoment(const ParametricModel& model, const GaussianKernel& kernel,
                             const MomentIndex& idx, const QuadratureSpec& spec) {
  if (model.dim() == 1) return univariateWeakMoment(model, kernel, idx, spec);
  return bivariateWeakMoment(model, kernel, idx, spec);
}

Eigen::VectorXd theoreticalWeakMoments(const ParametricModel& model, const GaussianKernel& kernel,
                                       const MomentSet& set, const QuadratureSpec& spec) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(set.size()));
  if (model.dim() == 1) {
    for (size_t k = 0; k < set.size(); ++k)
      out(static_cast<Eigen::Index>(k)) = univariateWeakMoment(model, kernel, set[k], spec);
    return out;
  }
  bool needVec = false, needR2 = false;
  for (const auto& idx : set) {
    if (idx.kind == MomentIndex::Kind::RadialPower2) {
      needR2 = true;
    } else if (idx.order() == 0) {
      // mass always computed
    } else if (idx.kind == MomentIndex::Kind::MultiIndex && idx.order() == 1) {
      needVec = true;
    } else {
      throw std::invalid_argument(
          "bivariate weak moments support mass, first-order multi-indices and ||x||^2");
    }
  }
  PolarMoments pm = bivariatePolar(model, kernel, needVec, needR2, spec);
  for (size_t k = 0; k < set.size(); ++k) {
    const auto& idx = set[k];
    double v;
    if (idx.kind == MomentIndex::Kind::RadialPower2)
      v = pm.r2;
    else if (idx.order() == 0)
      v = pm.m0;
    else
      v = idx.a1 == 1 ? pm.vec(0) : pm.vec(1);
    out(static_cast<Eigen::Index>(k)) = v;
  }
  return out;
}

double theoreticalWeakMoment(const ContaminatedModel& model, const GaussianKernel& kernel,
                             const MomentIndex& idx, const QuadratureSpec& spec) {
  double clean = theoreticalWeakMoment(model.base, kernel, idx, spec);
  if (model.epsilon == 0.0) return clean;
  double dirt = theoreticalWeakMoment(model.contaminant, kernel, idx, spec);
  return (1.0 - model.epsilon) * clean + model.epsilon * dirt;
}

double empiricalWeakExpectation(const Eigen::MatrixXd& data, const GaussianKernel& kernel,
                                const MomentIndex& idx) {
  const auto n = data.rows();
  if (n == 0) throw std::invalid_argument("empty data");
  double acc = 0.0;
  if (data.cols() == 1) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double x = data(i, 0);
      acc += evalIndex1(idx, x) * kernel.evaluate(x);
    }
  } else {
    Eigen::VectorXd row(data.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      row = data.row(i);
      acc += evalIndex(idx, row) * kernel.evaluate(row);
    }
  }
  return acc / static_cast<double>(n);
}

std::complex<double> theoreticalWeakCF(const ParametricModel& model, const GaussianKernel& kernel,
                                       double t, const QuadratureSpec& spec) {
  if (model.dim() != 1) throw std::invalid_argument("weak CF is univariate");
  auto re = [&](double x) { return std::cos(t * x) * kernel.evaluate(x) * model.density1(x); };
  auto im = [&](double x) { return std::sin(t * x) * kernel.evaluate(x) * model.density1(x); };
  QuadResult qr = integrateWindow(re, kernel.sigma(), spec);
  QuadResult qi = integrateWindow(im, kernel.sigma(), spec);
  requireConverged(qr, "theoreticalWeakCF");
  requireConverged(qi, "theoreticalWeakCF");
  return {qr.value, qi.value};
}

std::complex<double> empiricalWeakCF(const Eigen::MatrixXd& data, const GaussianKernel& kernel,
                                     double t) {
  if (data.cols() != 1) throw std::invalid_argument("weak CF is univariate");
  if (data.rows() == 0) throw std::invalid_argument("empty data");
  std::complex<double> acc(0.0, 0.0);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    double x = data(i, 0);
    double w = kernel.evaluate(x);
    acc += std::complex<double>(std::cos(t * x) * w, std::sin(t * x) * w);
  }
  return acc / static_cast<double>(data.rows());
}

std::complex<double> weakCGF(const ParametricModel& model, const GaussianKernel& kernel, double t,
                             const QuadratureSpec& spec) {
  std::complex<double> cf = theoreticalWeakCF(model, kernel, t, spec);
  if (std::abs(cf) < 1e-300) throw std::domain_error("weak CF vanishes; CGF undefined");
  return std::log(cf);
}

namespace {

double binom(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * static_cast<double>(n - k + i) / static_cast<double>(i);
  return v;
}

}  // namespace

std::vector<double> weakCumulants(const std::vector<double>& moments) {
  if (moments.empty()) throw std::invalid_argument("need at least m_0");
  if (moments[0] <= 0.0) throw std::domain_error("weak mass must be positive");
  const int J = static_cast<int>(moments.size()) - 1;
  std::vector<double> kappa(moments.size());
  kappa[0] = std::log(moments[0]);
  for (int j = 1; j <= J; ++j) {
    double s = moments[j];
    for (int k = 1; k < j; ++k) s -= binom(j - 1, k - 1) * kappa[k] * moments[j - k];
    kappa[j] = s / moments[0];
  }
  return kappa;
}

std::vector<double> cumulantsToMoments(const std::vector<double>& cumulants) {
  if (cumulants.empty()) throw std::invalid_argument("need at least kappa_0");
  const int J = static_cast<int>(cumulants.size()) - 1;
  std::vector<double> m(cumulants.size());
  m[0] = std::exp(cumulants[0]);
  for (int j = 1; j <= J; ++j) {
    double s = 0.0;
    for (int k = 1; k <= j; ++k) s += binom(j - 1, k - 1) * cumulants[k] * m[j - k];
    m[j] = s;
  }
  return m;
}

double normalisedWeakMoment(const ParametricModel& model, const GaussianKernel& kernel, int j,
                            const QuadratureSpec& spec) {
  double m0 = theoreticalWeakMoment(model, kernel, MomentIndex::power(0), spec);
  if (m0 <= 0.0) throw std::domain_error("weak mass must be positive");
  return theoreticalWeakMoment(model, kernel, MomentIndex::power(j), spec) / m0;
}

double cauchyWeakM0Faddeeva(double mu, double sigma) {
  std::complex<double> z(mu, 1.0);
  z /= sigma * std::sqrt(2.0);
  return faddeeva(z).real();
}

double cauchyWeakM1Faddeeva(double mu, double sigma) {
  std::complex<double> z(mu, 1.0);
  z /= sigma * std::sqrt(2.0);
  std::complex<double> w = faddeeva(z);
  return mu * w.real() - w.imag();
}

}  // namespace weakmom
