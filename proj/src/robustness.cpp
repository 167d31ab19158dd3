#include "weakmom/robustness.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace weakmom {

MomentSet effectiveSet(const WeakSystem& sys) {
  MomentSet eff;
  if (sys.augmentMass) eff.push_back(MomentIndex::power(0));
  eff.insert(eff.end(), sys.set.begin(), sys.set.end());
  if (eff.empty()) throw std::invalid_argument("empty weak moment system");
  return eff;
}

namespace {

// E[psi_a psi_b phi^2] under the model; univariate indices are pure powers so
// the product is again a power moment of the squared kernel
double productSquaredKernelExpectation(const ParametricModel& model, const GaussianKernel& kernel,
                                       const MomentIndex& a, const MomentIndex& b,
                                       const QuadratureSpec& spec) {
  GaussianKernel ksq = kernel.squared();
  if (model.dim() == 1) {
    return theoreticalWeakMoment(model, ksq, MomentIndex::power(a.order() + b.order()), spec);
  }
  // bivariate: angular trapezoid (spectrally accurate for periodic smooth
  // integrands) around an adaptive radial integral
  const Eigen::Vector2d mu(model.theta(0), model.theta(1));
  const double m = mu.norm();
  const double sig = kernel.sigma();  // window uses the wider original scale
  const double s2 = ksq.sigma();
  const double lo = std::max(0.0, m - spec.truncationRadius * sig);
  const double hi = m + spec.truncationRadius * sig;
  const int nAng = 256;
  const double dAng = 2.0 * M_PI / nAng;

  auto inner = [&](double r) {
    double acc = 0.0;
    Eigen::Vector2d x;
    for (int i = 0; i < nAng; ++i) {
      double alpha = dAng * static_cast<double>(i);
      x(0) = mu(0) + r * std::cos(alpha);
      x(1) = mu(1) + r * std::sin(alpha);
      double e = std::exp(-x.squaredNorm() / (2.0 * s2 * s2));
      acc += evalIndex(a, x) * evalIndex(b, x) * e;
    }
    return acc * dAng;
  };
  auto integrand = [&](double r) { return r * model.radialDensity(r) * inner(r); };
  QuadResult q = integrate1D(integrand, lo, hi, spec);
  if (!q.converged) throw std::runtime_error("quadrature did not converge in sandwichS");
  return q.value;
}

Eigen::VectorXd theoreticalMoments(const ParametricModel& model, const GaussianKernel& kernel,
                                   const MomentSet& set, const QuadratureSpec& spec) {
  return theoreticalWeakMoments(model, kernel, set, spec);
}

// everything needed to evaluate IF(x) = A (psi(x) phi(x) - m) cheaply
struct SystemContext {
  MomentSet eff;
  Eigen::VectorXd m;
  Eigen::MatrixXd A;  // p x K
  bool ratio = false;
  int ratioJ = 1;
  double ratioR = 0.0;      // r_j(theta)
  double ratioDenom = 0.0;  // r_j'(theta) m_0(theta)
};

SystemContext buildContext(const ParametricModel& model, const GaussianKernel& kernel,
                           const WeakSystem& sys, const QuadratureSpec& spec) {
  SystemContext ctx;
  if (sys.massNormalised) {
    if (model.dim() != 1 || model.paramCount() != 1 || sys.set.size() != 1 || sys.augmentMass)
      throw std::invalid_argument(
          "mass-normalised systems are univariate, one parameter, one free condition");
    ctx.ratio = true;
    ctx.ratioJ = sys.set[0].order();
    MomentSet pair{MomentIndex::power(0), sys.set[0]};
    Eigen::VectorXd m = theoreticalMoments(model, kernel, pair, spec);
    Eigen::MatrixXd G = momentJacobian(model, kernel, pair, spec);
    ctx.ratioR = m(1) / m(0);
    double rPrime = (G(1, 0) * m(0) - m(1) * G(0, 0)) / (m(0) * m(0));
    ctx.ratioDenom = rPrime * m(0);
    if (ctx.ratioDenom == 0.0) throw std::runtime_error("degenerate ratio system");
    return ctx;
  }
  ctx.eff = effectiveSet(sys);
  ctx.m = theoreticalMoments(model, kernel, ctx.eff, spec);
  Eigen::MatrixXd G = momentJacobian(model, kernel, ctx.eff, spec);
  const auto K = G.rows();
  Eigen::MatrixXd W;
  if (sys.weighting.kind == WeightingScheme::Kind::Identity) {
    W = Eigen::MatrixXd::Identity(K, K);
  } else {
    Eigen::MatrixXd S = sandwichS(model, kernel, ctx.eff, spec);
    S.diagonal().array() += sys.weighting.ridge;
    W = S.ldlt().solve(Eigen::MatrixXd::Identity(K, K));
  }
  Eigen::MatrixXd GtW = G.transpose() * W;
  ctx.A = (GtW * G).ldlt().solve(GtW);
  return ctx;
}

Eigen::VectorXd contextIF(const SystemContext& ctx, const GaussianKernel& kernel,
                          const Eigen::VectorXd& x) {
  if (ctx.ratio) {
    double phi = kernel.evaluate(x);
    double psi = (evalIndex1(MomentIndex::power(ctx.ratioJ), x(0)) - ctx.ratioR) * phi;
    Eigen::VectorXd v(1);
    v(0) = psi / ctx.ratioDenom;
    return v;
  }
  double phi = kernel.evaluate(x);
  Eigen::VectorXd score(ctx.m.size());
  for (size_t k = 0; k < ctx.eff.size(); ++k) {
    auto ki = static_cast<Eigen::Index>(k);
    score(ki) = evalIndex(ctx.eff[k], x) * phi - ctx.m(ki);
  }
  return ctx.A * score;
}

std::vector<double> gradedOffsets(double sigma, double radius) {
  std::vector<double> offs;
  double x = 0.0;
  const double fineEnd = std::min(6.0 * sigma, radius);
  for (; x <= fineEnd + 1e-12; x += 0.01 * sigma) offs.push_back(x);
  for (; x <= radius + 1e-12; x += 0.05 * sigma) offs.push_back(x);
  offs.push_back(radius);
  return offs;
}

}  // namespace

Eigen::VectorXd scoreComponents(const ParametricModel& model, const GaussianKernel& kernel,
                                const MomentSet& set, const Eigen::VectorXd& x,
                                const QuadratureSpec& spec) {
  Eigen::VectorXd m = theoreticalMoments(model, kernel, set, spec);
  double phi = kernel.evaluate(x);
  Eigen::VectorXd score(m.size());
  for (size_t k = 0; k < set.size(); ++k) {
    auto ki = static_cast<Eigen::Index>(k);
    score(ki) = evalIndex(set[k], x) * phi - m(ki);
  }
  return score;
}

Eigen::MatrixXd sandwichS(const ParametricModel& model, const GaussianKernel& kernel,
                          const MomentSet& set, const QuadratureSpec& spec) {
  const auto K = static_cast<Eigen::Index>(set.size());
  Eigen::VectorXd m = theoreticalMoments(model, kernel, set, spec);
  Eigen::MatrixXd S(K, K);
  for (Eigen::Index i = 0; i < K; ++i) {
    for (Eigen::Index j = i; j < K; ++j) {
      double e = productSquaredKernelExpectation(model, kernel, set[static_cast<size_t>(i)],
                                                 set[static_cast<size_t>(j)], spec);
      S(i, j) = S(j, i) = e - m(i) * m(j);
    }
  }
  return S;
}

Eigen::MatrixXd momentJacobian(const ParametricModel& model, const GaussianKernel& kernel,
                               const MomentSet& set, const QuadratureSpec& spec) {
  const auto K = static_cast<Eigen::Index>(set.size());
  const int p = model.paramCount();
  Eigen::MatrixXd G(K, p);
  for (int i = 0; i < p; ++i) {
    double h = 1e-5 * std::max(1.0, std::abs(model.theta(i)));
    Eigen::VectorXd up = model.theta, dn = model.theta;
    up(i) += h;
    dn(i) -= h;
    Eigen::VectorXd mUp = theoreticalMoments(model.withTheta(up), kernel, set, spec);
    Eigen::VectorXd mDn = theoreticalMoments(model.withTheta(dn), kernel, set, spec);
    G.col(i) = (mUp - mDn) / (2.0 * h);
  }
  return G;
}

Eigen::VectorXd influenceFunction(const ParametricModel& model, const GaussianKernel& kernel,
                                  const WeakSystem& sys, const Eigen::VectorXd& x,
                                  const QuadratureSpec& spec) {
  SystemContext ctx = buildContext(model, kernel, sys, spec);
  return contextIF(ctx, kernel, x);
}

double grossErrorSensitivity(const ParametricModel& model, const GaussianKernel& kernel,
                             const WeakSystem& sys, const QuadratureSpec& spec) {
  SystemContext ctx = buildContext(model, kernel, sys, spec);
  const double sig = kernel.sigma();
  double best = 0.0;
  if (model.dim() == 1) {
    Eigen::VectorXd x(1);
    for (double off : gradedOffsets(sig, spec.truncationRadius * sig)) {
      for (double s : {-1.0, 1.0}) {
        x(0) = s * off;
        best = std::max(best, contextIF(ctx, kernel, x).norm());
        if (off == 0.0) break;
      }
    }
    return best;
  }
  const double mu = std::hypot(model.theta(0), model.theta(1));
  const int nAng = 24;
  Eigen::VectorXd x(2);
  for (double r : gradedOffsets(sig, spec.truncationRadius * sig + mu)) {
    for (int i = 0; i < nAng; ++i) {
      double alpha = 2.0 * M_PI * i / nAng;
      x(0) = r * std::cos(alpha);
      x(1) = r * std::sin(alpha);
      best = std::max(best, contextIF(ctx, kernel, x).norm());
      if (r == 0.0) break;
    }
  }
  return best;
}

Eigen::MatrixXd asymptoticVariance(const ParametricModel& model, const GaussianKernel& kernel,
                                   const WeakSystem& sys, const QuadratureSpec& spec) {
  SystemContext ctx = buildContext(model, kernel, sys, spec);
  if (ctx.ratio) {
    GaussianKernel ksq = kernel.squared();
    int j = ctx.ratioJ;
    double M0 = theoreticalWeakMoment(model, ksq, MomentIndex::power(0), spec);
    double Mj = theoreticalWeakMoment(model, ksq, MomentIndex::power(j), spec);
    double M2j = theoreticalWeakMoment(model, ksq, MomentIndex::power(2 * j), spec);
    double ePsi2 = M2j - 2.0 * ctx.ratioR * Mj + ctx.ratioR * ctx.ratioR * M0;
    Eigen::MatrixXd V(1, 1);
    V(0, 0) = ePsi2 / (ctx.ratioDenom * ctx.ratioDenom);
    return V;
  }
  Eigen::MatrixXd S = sandwichS(model, kernel, ctx.eff, spec);
  return ctx.A * S * ctx.A.transpose();
}

InfluenceProfile influenceProfile(const ParametricModel& model, const GaussianKernel& kernel,
                                  const WeakSystem& sys, const QuadratureSpec& spec,
                                  int gridPoints) {
  if (model.dim() != 1) throw std::invalid_argument("influence profiles are univariate");
  SystemContext ctx = buildContext(model, kernel, sys, spec);
  const double sig = kernel.sigma();
  InfluenceProfile prof;
  if (gridPoints > 0) {
    const double R = spec.truncationRadius * sig;
    prof.grid.resize(static_cast<size_t>(gridPoints));
    for (int i = 0; i < gridPoints; ++i)
      prof.grid[static_cast<size_t>(i)] =
          gridPoints == 1 ? 0.0 : -R + 2.0 * R * i / (gridPoints - 1);
  } else {
    std::vector<double> offs = gradedOffsets(sig, spec.truncationRadius * sig);
    prof.grid.reserve(2 * offs.size());
    for (auto it = offs.rbegin(); it != offs.rend(); ++it)
      if (*it > 0.0) prof.grid.push_back(-*it);
    prof.grid.insert(prof.grid.end(), offs.begin(), offs.end());
  }

  const int p = ctx.ratio ? 1 : static_cast<int>(ctx.A.rows());
  prof.values.resize(p, static_cast<Eigen::Index>(prof.grid.size()));
  Eigen::VectorXd x(1);
  for (size_t i = 0; i < prof.grid.size(); ++i) {
    x(0) = prof.grid[i];
    Eigen::VectorXd v = contextIF(ctx, kernel, x);
    prof.values.col(static_cast<Eigen::Index>(i)) = v;
    prof.ges = std::max(prof.ges, v.norm());
  }
  return prof;
}

void writeInfluenceCsv(const InfluenceProfile& profile, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "x");
  for (Eigen::Index k = 0; k < profile.values.rows(); ++k)
    std::fprintf(f, ",if_%d", static_cast<int>(k + 1));
  std::fprintf(f, "\n");
  for (size_t i = 0; i < profile.grid.size(); ++i) {
    std::fprintf(f, "%.17g", profile.grid[i]);
    for (Eigen::Index k = 0; k < profile.values.rows(); ++k)
      std::fprintf(f, ",%.17g", profile.values(k, static_cast<Eigen::Index>(i)));
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

double medianGES(const ParametricModel& model) {
  if (model.dim() != 1) throw std::invalid_argument("median benchmarks are univariate");
  double f0 = model.density1(model.theta(0));
  return 1.0 / (2.0 * f0);
}

double medianAsymptoticVariance(const ParametricModel& model) {
  double g = medianGES(model);
  return g * g;
}

}  // namespace weakmom
