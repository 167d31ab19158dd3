#include "weakmom/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace weakmom {

std::string methodLabel(Method m) {
  switch (m) {
    case Method::WeakMoment: return "WM";
    case Method::GMMTwoStep: return "GMM-2S";
    case Method::WeakCF: return "WCF";
    case Method::Median: return "Median";
    case Method::CoordinateMedian: return "Coord. Med.";
    case Method::SpatialMedian: return "Spatial Med.";
    case Method::MLE: return "MLE";
    case Method::Huber: return "Huber";
    case Method::Tukey: return "Tukey";
    case Method::MeanSD: return "Mean/SD";
    case Method::MedMAD: return "Med/MAD";
    case Method::Fixed: return "Fixed";
  }
  return "?";
}

double medianOf(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sample");
  const size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double hi = *mid;
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

double madScale(const std::vector<double>& v, double center) {
  std::vector<double> dev(v.size());
  for (size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - center);
  return 1.4826 * medianOf(std::move(dev));
}

namespace {

constexpr double kScaleFloor = 1e-3;

std::vector<double> columnVec(const Eigen::MatrixXd& data, int col) {
  std::vector<double> v(static_cast<size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) v[static_cast<size_t>(i)] = data(i, col);
  return v;
}

void checkData(const Eigen::MatrixXd& data, const ParametricModel& family) {
  if (data.rows() == 0) throw std::invalid_argument("empty data");
  if (data.cols() != family.dim()) throw std::invalid_argument("data dimension mismatch");
}

// median-type start: coordinatewise medians, quantile-calibrated radial scale
Eigen::VectorXd defaultStart(const Eigen::MatrixXd& data, const ParametricModel& family) {
  Eigen::VectorXd s(family.paramCount());
  switch (family.family) {
    case Family::CauchyLocation:
      s(0) = medianOf(columnVec(data, 0));
      break;
    case Family::StudentTLocationScale: {
      std::vector<double> col = columnVec(data, 0);
      double med = medianOf(col);
      s(0) = med;
      s(1) = std::max(kScaleFloor, madScale(col, med));
      break;
    }
    case Family::BivariateCauchyLocation:
      s(0) = medianOf(columnVec(data, 0));
      s(1) = medianOf(columnVec(data, 1));
      break;
    case Family::BivariateT3LocationScale: {
      double cx = medianOf(columnVec(data, 0));
      double cy = medianOf(columnVec(data, 1));
      std::vector<double> rad(static_cast<size_t>(data.rows()));
      for (Eigen::Index i = 0; i < data.rows(); ++i)
        rad[static_cast<size_t>(i)] = std::hypot(data(i, 0) - cx, data(i, 1) - cy);
      // median radius of the unit-scale radial law: (1 + r^2/3)^{-3/2} = 1/2
      const double medRadius = std::sqrt(3.0 * (std::cbrt(4.0) - 1.0));
      s(0) = cx;
      s(1) = cy;
      s(2) = std::max(kScaleFloor, medianOf(std::move(rad)) / medRadius);
      break;
    }
  }
  return s;
}

bool isScaleParam(const ParametricModel& family, int i) {
  return (family.family == Family::StudentTLocationScale && i == 1) ||
         (family.family == Family::BivariateT3LocationScale && i == 2);
}

struct Box {
  Eigen::VectorXd lo, hi;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }
  bool onBoundary(const Eigen::VectorXd& x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x(i) - lo(i) < 1e-9 || hi(i) - x(i) < 1e-9) return true;
    return false;
  }
};

Box searchBox(const ParametricModel& family, const Eigen::VectorXd& start,
              const EstimatorConfig& cfg) {
  const double half = cfg.searchHalfWidthSigmas * cfg.kernel.sigma();
  Box b;
  b.lo.resize(start.size());
  b.hi.resize(start.size());
  for (Eigen::Index i = 0; i < start.size(); ++i) {
    if (isScaleParam(family, static_cast<int>(i))) {
      b.lo(i) = std::max(kScaleFloor, start(i) / 8.0);
      b.hi(i) = start(i) * 8.0;
    } else {
      b.lo(i) = start(i) - half;
      b.hi(i) = start(i) + half;
    }
  }
  return b;
}

struct Scalar1DResult {
  double x = 0.0;
  bool converged = false;
  int iterations = 0;
};

// nearest sign change of h on start +/- halfWidth, then bisection/secant
template <typename F>
Scalar1DResult nearestRoot1D(F&& h, double start, double halfWidth) {
  const int K = 40;
  const double step = halfWidth / K;
  std::vector<double> xs(2 * K + 1), hs(2 * K + 1);
  for (int k = -K; k <= K; ++k) {
    xs[static_cast<size_t>(k + K)] = start + k * step;
    hs[static_cast<size_t>(k + K)] = h(start + k * step);
  }
  int bestBracket = -1;
  double bestDist = 1e300;
  for (int i = 0; i < 2 * K; ++i) {
    if (hs[i] == 0.0 || hs[i] * hs[i + 1] < 0.0) {
      double d = std::min(std::abs(xs[i] - start), std::abs(xs[i + 1] - start));
      if (d < bestDist) {
        bestDist = d;
        bestBracket = i;
      }
    }
  }
  Scalar1DResult out;
  if (bestBracket < 0) {
    size_t arg = 0;
    for (size_t i = 1; i < hs.size(); ++i)
      if (std::abs(hs[i]) < std::abs(hs[arg])) arg = i;
    out.x = xs[arg];
    out.converged = false;
    return out;
  }
  double a = xs[static_cast<size_t>(bestBracket)], b = xs[static_cast<size_t>(bestBracket + 1)];
  double fa = hs[static_cast<size_t>(bestBracket)], fb = hs[static_cast<size_t>(bestBracket + 1)];
  if (fa == 0.0) {
    out.x = a;
    out.converged = true;
    return out;
  }
  const double xtol = 1e-12 * std::max(1.0, std::abs(start));
  for (int it = 0; it < 200; ++it) {
    out.iterations = it + 1;
    double mid;
    // secant proposal, bisection safeguard
    double sec = b - fb * (b - a) / (fb - fa);
    if (sec > std::min(a, b) && sec < std::max(a, b))
      mid = sec;
    else
      mid = 0.5 * (a + b);
    double fm = h(mid);
    if (fm == 0.0 || std::abs(b - a) < xtol) {
      out.x = mid;
      out.converged = true;
      return out;
    }
    if (fa * fm < 0.0) {
      b = mid;
      fb = fm;
    } else {
      a = mid;
      fa = fm;
    }
  }
  out.x = 0.5 * (a + b);
  out.converged = std::abs(b - a) < 1e-8;
  return out;
}

// nearest interior local minimum on a 0.1-sigma-spaced walk, golden refined
template <typename F>
Scalar1DResult nearestLocalMin1D(F&& q, double start, double halfWidth) {
  const int K = 40;
  const double step = halfWidth / K;
  std::vector<double> xs(2 * K + 1), qs(2 * K + 1);
  for (int k = -K; k <= K; ++k) {
    xs[static_cast<size_t>(k + K)] = start + k * step;
    qs[static_cast<size_t>(k + K)] = q(start + k * step);
  }
  int best = -1;
  double bestDist = 1e300;
  for (int i = 1; i < 2 * K; ++i) {
    if (qs[i] <= qs[i - 1] && qs[i] <= qs[i + 1]) {
      double d = std::abs(xs[static_cast<size_t>(i)] - start);
      if (d < bestDist) {
        bestDist = d;
        best = i;
      }
    }
  }
  Scalar1DResult out;
  bool interior = best >= 0;
  if (!interior) {
    best = qs[0] < qs[2 * K] ? 0 : 2 * K;
  }
  size_t bi = static_cast<size_t>(best);
  double a = xs[bi == 0 ? 0 : bi - 1];
  double b = xs[bi + 1 >= xs.size() ? xs.size() - 1 : bi + 1];
  const double invPhi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invPhi * (b - a), d = a + invPhi * (b - a);
  double fc = q(c), fd = q(d);
  int it = 0;
  while (b - a > 1e-11 * std::max(1.0, std::abs(start)) && it < 200) {
    ++it;
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invPhi * (b - a);
      fc = q(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invPhi * (b - a);
      fd = q(d);
    }
  }
  out.x = 0.5 * (a + b);
  out.iterations = it;
  out.converged = interior;
  return out;
}

struct VecResult {
  Eigen::VectorXd x;
  double f = 0.0;
  bool converged = false;
  int iterations = 0;
};

// damped Newton on a square residual system with forward-difference Jacobian
template <typename F>
VecResult dampedNewton(F&& g, const Eigen::VectorXd& x0, const Box& box, double tol, int maxIter) {
  VecResult out;
  Eigen::VectorXd x = box.clamp(x0);
  Eigen::VectorXd gx = g(x);
  const auto p = x.size();
  for (int it = 0; it < maxIter; ++it) {
    out.iterations = it + 1;
    if (gx.lpNorm<Eigen::Infinity>() < tol) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd J(gx.size(), p);
    for (Eigen::Index i = 0; i < p; ++i) {
      double h = 1e-5 * std::max(1.0, std::abs(x(i)));
      Eigen::VectorXd xu = x, xd = x;
      xu(i) += h;
      xd(i) -= h;
      J.col(i) = (g(xu) - g(xd)) / (2.0 * h);
    }
    Eigen::VectorXd delta = J.fullPivLu().solve(-gx);
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 12; ++bt) {
      Eigen::VectorXd xn = box.clamp(x + t * delta);
      Eigen::VectorXd gn = g(xn);
      if (gn.norm() < gx.norm()) {
        x = xn;
        gx = gn;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  out.x = x;
  out.f = gx.squaredNorm();
  if (box.onBoundary(x)) out.converged = false;
  return out;
}

// Nelder-Mead with box projection; convergence on simplex collapse
template <typename F>
VecResult nelderMead(F&& q, const Eigen::VectorXd& x0, const Eigen::VectorXd& steps,
                     const Box& box, int maxIter) {
  const auto p = x0.size();
  const auto m = p + 1;
  std::vector<Eigen::VectorXd> v(static_cast<size_t>(m));
  std::vector<double> f(static_cast<size_t>(m));
  v[0] = box.clamp(x0);
  for (Eigen::Index i = 0; i < p; ++i) {
    Eigen::VectorXd u = v[0];
    u(i) += steps(i);
    v[static_cast<size_t>(i + 1)] = box.clamp(u);
  }
  for (size_t i = 0; i < v.size(); ++i) f[i] = q(v[i]);

  auto order = [&]() {
    std::vector<size_t> idx(v.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return f[a] < f[b]; });
    std::vector<Eigen::VectorXd> v2(v.size());
    std::vector<double> f2(v.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      v2[i] = v[idx[i]];
      f2[i] = f[idx[i]];
    }
    v.swap(v2);
    f.swap(f2);
  };

  VecResult out;
  int it = 0;
  for (; it < maxIter; ++it) {
    order();
    double spread = 0.0;
    for (size_t i = 1; i < v.size(); ++i)
      spread = std::max(spread, (v[i] - v[0]).lpNorm<Eigen::Infinity>());
    if (spread < 1e-8 * (1.0 + v[0].lpNorm<Eigen::Infinity>()) &&
        std::abs(f.back() - f.front()) < 1e-13 * (1.0 + std::abs(f.front()))) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(p);
    for (size_t i = 0; i + 1 < v.size(); ++i) centroid += v[i];
    centroid /= static_cast<double>(p);

    Eigen::VectorXd xr = box.clamp(centroid + (centroid - v.back()));
    double fr = q(xr);
    if (fr < f[0]) {
      Eigen::VectorXd xe = box.clamp(centroid + 2.0 * (centroid - v.back()));
      double fe = q(xe);
      if (fe < fr) {
        v.back() = xe;
        f.back() = fe;
      } else {
        v.back() = xr;
        f.back() = fr;
      }
    } else if (fr < f[f.size() - 2]) {
      v.back() = xr;
      f.back() = fr;
    } else {
      Eigen::VectorXd xc = box.clamp(centroid + 0.5 * (v.back() - centroid));
      double fc = q(xc);
      if (fc < f.back()) {
        v.back() = xc;
        f.back() = fc;
      } else {
        for (size_t i = 1; i < v.size(); ++i) {
          v[i] = box.clamp(v[0] + 0.5 * (v[i] - v[0]));
          f[i] = q(v[i]);
        }
      }
    }
  }
  order();
  out.x = v[0];
  out.f = f[0];
  out.iterations = it;
  if (box.onBoundary(out.x)) out.converged = false;
  return out;
}

// ---- weak moment machinery ------------------------------------------------

struct MomentFitParts {
  MomentSet eff;
  Eigen::VectorXd gHat;  // empirical weak moments, effective-set order
};

MomentFitParts buildParts(const Eigen::MatrixXd& data, const EstimatorConfig& cfg) {
  WeakSystem sys{cfg.momentSet, cfg.augmentMass, cfg.massNormalised, cfg.weighting};
  MomentFitParts parts;
  parts.eff = effectiveSet(sys);
  parts.gHat.resize(static_cast<Eigen::Index>(parts.eff.size()));
  for (size_t k = 0; k < parts.eff.size(); ++k)
    parts.gHat(static_cast<Eigen::Index>(k)) =
        empiricalWeakExpectation(data, cfg.kernel, parts.eff[k]);
  return parts;
}

// per-observation condition values psi_k(x_i) phi(x_i), n x K
Eigen::MatrixXd conditionMatrix(const Eigen::MatrixXd& data, const GaussianKernel& kernel,
                                const MomentSet& eff) {
  const auto n = data.rows();
  Eigen::MatrixXd U(n, static_cast<Eigen::Index>(eff.size()));
  Eigen::VectorXd row(data.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    row = data.row(i);
    double phi = kernel.evaluate(row);
    for (size_t k = 0; k < eff.size(); ++k)
      U(i, static_cast<Eigen::Index>(k)) = evalIndex(eff[k], row) * phi;
  }
  return U;
}

// centred empirical covariance of the per-observation conditions (the shift
// by m(theta) cancels, so this is theta-free)
Eigen::MatrixXd empiricalS(const Eigen::MatrixXd& U) {
  Eigen::RowVectorXd mean = U.colwise().mean();
  Eigen::MatrixXd C = U.rowwise() - mean;
  return C.transpose() * C / static_cast<double>(U.rows());
}

Eigen::MatrixXd sandwichCov(const ParametricModel& modelAt, const GaussianKernel& kernel,
                            const MomentSet& eff, const Eigen::MatrixXd& Shat,
                            const Eigen::MatrixXd& W, Eigen::Index n,
                            const QuadratureSpec& spec) {
  Eigen::MatrixXd G = momentJacobian(modelAt, kernel, eff, spec);
  Eigen::MatrixXd GtW = G.transpose() * W;
  Eigen::MatrixXd bread = (GtW * G).ldlt().solve(Eigen::MatrixXd::Identity(G.cols(), G.cols()));
  Eigen::MatrixXd A = bread * GtW;
  return A * Shat * A.transpose() / static_cast<double>(n);
}

struct GmmFit {
  VecResult res;
  double objective = 0.0;  // identity-weighted residual at the solution
};

// minimise (m(theta) - gHat)' W (m(theta) - gHat) near start
GmmFit gmmMinimise(const ParametricModel& family, const EstimatorConfig& cfg,
                   const MomentFitParts& parts, const Eigen::MatrixXd& W,
                   const Eigen::VectorXd& start) {
  auto resid = [&](const Eigen::VectorXd& th) {
    return (theoreticalWeakMoments(family.withTheta(th), cfg.kernel, parts.eff, cfg.quad) -
            parts.gHat)
        .eval();
  };
  auto qObj = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd r = resid(th);
    return static_cast<double>(r.transpose() * W * r);
  };
  const Box box = searchBox(family, start, cfg);
  GmmFit fit;
  if (family.paramCount() == 1) {
    auto q1 = [&](double th) {
      Eigen::VectorXd v(1);
      v(0) = th;
      return qObj(v);
    };
    Scalar1DResult r = nearestLocalMin1D(q1, start(0), cfg.searchHalfWidthSigmas * cfg.kernel.sigma());
    fit.res.x.resize(1);
    fit.res.x(0) = r.x;
    fit.res.f = q1(r.x);
    fit.res.converged = r.converged;
    fit.res.iterations = r.iterations;
  } else {
    Eigen::VectorXd steps(start.size());
    for (Eigen::Index i = 0; i < start.size(); ++i)
      steps(i) = isScaleParam(family, static_cast<int>(i))
                     ? std::max(0.05, 0.25 * start(i))
                     : 0.5;
    fit.res = nelderMead(qObj, start, steps, box, cfg.maxIter * family.paramCount());
    fit.res.f = qObj(fit.res.x);
  }
  fit.objective = resid(fit.res.x).squaredNorm();
  return fit;
}

Eigen::VectorXd chooseStart(const Eigen::MatrixXd& data, const ParametricModel& family,
                            const EstimatorConfig& cfg) {
  if (cfg.start) {
    if (cfg.start->size() != family.paramCount())
      throw std::invalid_argument("start value has wrong length");
    return *cfg.start;
  }
  return defaultStart(data, family);
}

EstimateResult finishResult(EstimateResult r, const EstimatorConfig& cfg) {
  r.method = cfg.label.empty() ? methodLabel(cfg.method) : cfg.label;
  return r;
}

}  // namespace

EstimateResult estimateWeakMoment(const Eigen::MatrixXd& data, const ParametricModel& family,
                                  const EstimatorConfig& cfg) {
  checkData(data, family);
  const int p = family.paramCount();
  EstimateResult out;
  Eigen::VectorXd start = chooseStart(data, family, cfg);

  if (cfg.massNormalised) {
    if (p != 1 || cfg.momentSet.size() != 1 || cfg.augmentMass)
      throw std::invalid_argument(
          "mass-normalised matching needs one parameter and one free condition");
    const MomentIndex idx = cfg.momentSet[0];
    const double m0Hat = empiricalWeakExpectation(data, cfg.kernel, MomentIndex::power(0));
    const double mjHat = empiricalWeakExpectation(data, cfg.kernel, idx);
    const double target = mjHat / m0Hat;
    MomentSet pair{MomentIndex::power(0), idx};
    auto ratio = [&](double th) {
      Eigen::VectorXd v(1);
      v(0) = th;
      Eigen::VectorXd m = theoreticalWeakMoments(family.withTheta(v), cfg.kernel, pair, cfg.quad);
      return m(1) / m(0) - target;
    };
    Scalar1DResult r =
        nearestRoot1D(ratio, start(0), cfg.searchHalfWidthSigmas * cfg.kernel.sigma());
    out.theta.resize(1);
    out.theta(0) = r.x;
    out.converged = r.converged;
    out.iterations = r.iterations;
    double hv = ratio(r.x);
    out.objective = hv * hv;

    // plug-in ratio sandwich: empirical E[psi^2] over (r' m_0)^2, then / n
    ParametricModel at = family.withTheta(out.theta);
    Eigen::VectorXd m = theoreticalWeakMoments(at, cfg.kernel, pair, cfg.quad);
    Eigen::MatrixXd G = momentJacobian(at, cfg.kernel, pair, cfg.quad);
    double rj = m(1) / m(0);
    double denom = (G(1, 0) * m(0) - m(1) * G(0, 0)) / m(0);  // r' m_0
    double acc = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      double x = data(i, 0);
      double psi = (evalIndex1(idx, x) - rj) * cfg.kernel.evaluate(x);
      acc += psi * psi;
    }
    acc /= static_cast<double>(data.rows());
    Eigen::MatrixXd cov(1, 1);
    cov(0, 0) = acc / (denom * denom) / static_cast<double>(data.rows());
    out.asymptoticCov = cov;
    return finishResult(std::move(out), cfg);
  }

  MomentFitParts parts = buildParts(data, cfg);
  const auto K = static_cast<Eigen::Index>(parts.eff.size());

  if (K < p) throw std::invalid_argument("under-identified weak moment system");

  if (K > p && cfg.weighting.kind == WeightingScheme::Kind::TwoStepOptimal)
    return estimateGMMTwoStep(data, family, cfg);

  if (K == p) {
    // just-identified: match the raw moment vector exactly
    auto resid = [&](const Eigen::VectorXd& th) {
      return (theoreticalWeakMoments(family.withTheta(th), cfg.kernel, parts.eff, cfg.quad) -
              parts.gHat)
          .eval();
    };
    if (p == 1) {
      auto h = [&](double th) {
        Eigen::VectorXd v(1);
        v(0) = th;
        return resid(v)(0);
      };
      Scalar1DResult r =
          nearestRoot1D(h, start(0), cfg.searchHalfWidthSigmas * cfg.kernel.sigma());
      out.theta.resize(1);
      out.theta(0) = r.x;
      out.converged = r.converged;
      out.iterations = r.iterations;
      double hv = h(r.x);
      out.objective = hv * hv;
    } else {
      const Box box = searchBox(family, start, cfg);
      VecResult r = dampedNewton(resid, start, box, cfg.tol, cfg.maxIter);
      out.theta = r.x;
      out.converged = r.converged;
      out.iterations = r.iterations;
      out.objective = r.f;
    }
  } else {
    // over-identified, identity weighting: single minimisation
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(K, K);
    GmmFit fit = gmmMinimise(family, cfg, parts, W, start);
    out.theta = fit.res.x;
    out.converged = fit.res.converged;
    out.iterations = fit.res.iterations;
    out.objective = fit.objective;
  }

  Eigen::MatrixXd U = conditionMatrix(data, cfg.kernel, parts.eff);
  Eigen::MatrixXd Shat = empiricalS(U);
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(K, K);
  out.asymptoticCov = sandwichCov(family.withTheta(out.theta), cfg.kernel, parts.eff, Shat, W,
                                  data.rows(), cfg.quad);
  return finishResult(std::move(out), cfg);
}

EstimateResult estimateGMMTwoStep(const Eigen::MatrixXd& data, const ParametricModel& family,
                                  const EstimatorConfig& cfg) {
  checkData(data, family);
  if (cfg.massNormalised)
    throw std::invalid_argument("two-step fits use raw moment vectors");
  MomentFitParts parts = buildParts(data, cfg);
  const auto K = static_cast<Eigen::Index>(parts.eff.size());
  const int p = family.paramCount();
  if (K < p) throw std::invalid_argument("under-identified weak moment system");

  Eigen::VectorXd start = chooseStart(data, family, cfg);
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(K, K);
  GmmFit step1 = gmmMinimise(family, cfg, parts, I, start);

  Eigen::MatrixXd U = conditionMatrix(data, cfg.kernel, parts.eff);
  Eigen::MatrixXd Shat = empiricalS(U);
  Eigen::MatrixXd Sridge = Shat;
  Sridge.diagonal().array() += cfg.weighting.ridge;
  Eigen::MatrixXd W2 = Sridge.ldlt().solve(I);

  GmmFit step2 = gmmMinimise(family, cfg, parts, W2, step1.res.x);

  auto q2 = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd r =
        theoreticalWeakMoments(family.withTheta(th), cfg.kernel, parts.eff, cfg.quad) - parts.gHat;
    return static_cast<double>(r.transpose() * W2 * r);
  };
  EstimateResult out;
  if (q2(step2.res.x) <= q2(step1.res.x)) {
    out.theta = step2.res.x;
    out.converged = step2.res.converged;
    out.iterations = step1.res.iterations + step2.res.iterations;
    out.objective = step2.objective;
  } else {
    // second step must not increase its own criterion; keep step one
    out.theta = step1.res.x;
    out.converged = step1.res.converged;
    out.iterations = step1.res.iterations;
    out.objective = step1.objective;
  }
  out.asymptoticCov = sandwichCov(family.withTheta(out.theta), cfg.kernel, parts.eff, Shat, W2,
                                  data.rows(), cfg.quad);
  return finishResult(std::move(out), cfg);
}

EstimateResult estimateWeakCF(const Eigen::MatrixXd& data, const ParametricModel& family,
                              const EstimatorConfig& cfg) {
  checkData(data, family);
  if (family.dim() != 1 || family.paramCount() != 1)
    throw std::invalid_argument("CF matching is implemented for univariate location families");
  const int N = cfg.cfGridSize;
  if (N < 2 || N % 2 != 0) throw std::invalid_argument("CF grid size must be even and >= 2");
  const double T = cfg.cfTMax;
  std::vector<double> ts(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) ts[static_cast<size_t>(k)] = -T + 2.0 * T * k / (N - 1);

  // conjugate symmetry: only the positive half carries information
  std::vector<double> tPos, wPos;
  std::vector<std::complex<double>> hPos;
  for (int k = N / 2; k < N; ++k) {
    double t = ts[static_cast<size_t>(k)];
    tPos.push_back(t);
    wPos.push_back(std::exp(-0.5 * t * t));
    hPos.push_back(empiricalWeakCF(data, cfg.kernel, t));
  }
  auto qObj = [&](double th) {
    Eigen::VectorXd v(1);
    v(0) = th;
    ParametricModel at = family.withTheta(v);
    double acc = 0.0;
    for (size_t k = 0; k < tPos.size(); ++k) {
      std::complex<double> d = theoreticalWeakCF(at, cfg.kernel, tPos[k], cfg.quad) - hPos[k];
      acc += 2.0 * wPos[k] * std::norm(d);
    }
    return acc;
  };
  Eigen::VectorXd start = chooseStart(data, family, cfg);
  Scalar1DResult r =
      nearestLocalMin1D(qObj, start(0), cfg.searchHalfWidthSigmas * cfg.kernel.sigma());
  EstimateResult out;
  out.theta.resize(1);
  out.theta(0) = r.x;
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.objective = qObj(r.x);
  return finishResult(std::move(out), cfg);
}

namespace {

EstimateResult mleEstimate(const Eigen::MatrixXd& data, const ParametricModel& family,
                           const EstimatorConfig& cfg) {
  EstimateResult out;
  const auto n = data.rows();
  Eigen::VectorXd start = chooseStart(data, family, cfg);
  const int maxIter = std::max(cfg.maxIter, 500);

  switch (family.family) {
    case Family::CauchyLocation: {
      double mu = start(0);
      bool ok = false;
      int it = 0;
      for (; it < maxIter; ++it) {
        double g = 0.0, h = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double r = data(i, 0) - mu;
          double d = 1.0 + r * r;
          g += 2.0 * r / d;
          h += 2.0 * (r * r - 1.0) / (d * d);
        }
        if (std::abs(g) / static_cast<double>(n) < 1e-12) {
          ok = true;
          break;
        }
        double step = h < -1e-12 ? -g / h : g / static_cast<double>(n);
        if (std::abs(step) > 2.0) step = step > 0 ? 2.0 : -2.0;
        double muNew = mu + step;
        // insist on score decrease; damp otherwise
        for (int bt = 0; bt < 30; ++bt) {
          double gNew = 0.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            double r = data(i, 0) - muNew;
            gNew += 2.0 * r / (1.0 + r * r);
          }
          if (std::abs(gNew) < std::abs(g)) break;
          muNew = mu + 0.5 * (muNew - mu);
        }
        if (std::abs(muNew - mu) < 1e-13 * (1.0 + std::abs(mu))) {
          mu = muNew;
          ok = true;
          break;
        }
        mu = muNew;
      }
      out.theta.resize(1);
      out.theta(0) = ok ? mu : start(0);
      out.converged = ok;
      out.iterations = it;
      break;
    }
    case Family::StudentTLocationScale: {
      const double nu = family.nu;
      double mu = start(0), s = start(1);
      bool ok = false;
      int it = 0;
      for (; it < maxIter; ++it) {
        double sw = 0.0, swx = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double z = (data(i, 0) - mu) / s;
          double w = (nu + 1.0) / (nu + z * z);
          sw += w;
          swx += w * data(i, 0);
        }
        double muNew = swx / sw;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double r = data(i, 0) - muNew;
          double z = r / s;
          double w = (nu + 1.0) / (nu + z * z);
          acc += w * r * r;
        }
        double sNew = std::sqrt(acc / static_cast<double>(n));
        sNew = std::max(sNew, kScaleFloor);
        if (std::abs(muNew - mu) + std::abs(sNew - s) < 1e-11 * (1.0 + s)) {
          mu = muNew;
          s = sNew;
          ok = true;
          break;
        }
        mu = muNew;
        s = sNew;
      }
      out.theta.resize(2);
      out.theta << mu, s;
      out.converged = ok;
      out.iterations = it;
      break;
    }
    case Family::BivariateCauchyLocation: {
      Eigen::Vector2d mu(start(0), start(1));
      bool ok = false;
      int it = 0;
      for (; it < maxIter; ++it) {
        double sw = 0.0;
        Eigen::Vector2d swx = Eigen::Vector2d::Zero();
        for (Eigen::Index i = 0; i < n; ++i) {
          Eigen::Vector2d x(data(i, 0), data(i, 1));
          double q = (x - mu).squaredNorm();
          double w = 3.0 / (1.0 + q);
          sw += w;
          swx += w * x;
        }
        Eigen::Vector2d muNew = swx / sw;
        if ((muNew - mu).norm() < 1e-12 * (1.0 + mu.norm())) {
          mu = muNew;
          ok = true;
          break;
        }
        mu = muNew;
      }
      out.theta.resize(2);
      out.theta << mu(0), mu(1);
      out.converged = ok;
      out.iterations = it;
      break;
    }
    case Family::BivariateT3LocationScale: {
      Eigen::Vector2d mu(start(0), start(1));
      double s = start(2);
      bool ok = false;
      int it = 0;
      for (; it < maxIter; ++it) {
        double sw = 0.0;
        Eigen::Vector2d swx = Eigen::Vector2d::Zero();
        for (Eigen::Index i = 0; i < n; ++i) {
          Eigen::Vector2d x(data(i, 0), data(i, 1));
          double q = (x - mu).squaredNorm() / (s * s);
          double w = 5.0 / (3.0 + q);
          sw += w;
          swx += w * x;
        }
        Eigen::Vector2d muNew = swx / sw;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          Eigen::Vector2d x(data(i, 0), data(i, 1));
          double r2 = (x - muNew).squaredNorm();
          double w = 5.0 / (3.0 + r2 / (s * s));
          acc += w * r2;
        }
        double sNew = std::sqrt(acc / (2.0 * static_cast<double>(n)));
        sNew = std::max(sNew, kScaleFloor);
        if ((muNew - mu).norm() + std::abs(sNew - s) < 1e-11 * (1.0 + s)) {
          mu = muNew;
          s = sNew;
          ok = true;
          break;
        }
        mu = muNew;
        s = sNew;
      }
      out.theta.resize(3);
      out.theta << mu(0), mu(1), s;
      out.converged = ok;
      out.iterations = it;
      break;
    }
  }
  if (!out.converged) out.theta = start;  // fall back to the median-type start
  // mean negative log density, a comparable fit criterion across families
  double nll = 0.0;
  ParametricModel at = family.withTheta(out.theta);
  Eigen::VectorXd row(data.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    row = data.row(i);
    nll -= std::log(at.density(row));
  }
  out.objective = nll / static_cast<double>(n);
  return out;
}

// robust location by IRLS at a fixed MAD scale; withScale appends that scale
// so location-scale families get a full parameter vector
EstimateResult mLocation(const Eigen::MatrixXd& data, bool huber, double k, int maxIter,
                         bool withScale) {
  std::vector<double> col(static_cast<size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) col[static_cast<size_t>(i)] = data(i, 0);
  double med = medianOf(col);
  double s = madScale(col, med);
  EstimateResult out;
  auto pack = [&](double loc, bool conv, int iters) {
    out.theta.resize(withScale ? 2 : 1);
    out.theta(0) = loc;
    if (withScale) out.theta(1) = std::max(kScaleFloor, s);
    out.converged = conv;
    out.iterations = iters;
    return out;
  };
  if (s < 1e-12) return pack(med, true, 0);
  double mu = med;
  bool ok = false;
  int it = 0;
  for (; it < maxIter; ++it) {
    double sw = 0.0, swx = 0.0;
    for (double x : col) {
      double z = (x - mu) / s;
      double w;
      if (huber) {
        double az = std::abs(z);
        w = az <= k ? 1.0 : k / az;
      } else {
        double u = z / k;
        w = std::abs(u) <= 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
      }
      sw += w;
      swx += w * x;
    }
    if (sw <= 0.0) break;
    double muNew = swx / sw;
    if (std::abs(muNew - mu) < 1e-11 * (1.0 + std::abs(mu))) {
      mu = muNew;
      ok = true;
      break;
    }
    mu = muNew;
  }
  return pack(ok ? mu : med, ok, it);
}

}  // namespace

EstimateResult benchmarkEstimate(const Eigen::MatrixXd& data, const ParametricModel& family,
                                 const EstimatorConfig& cfg) {
  checkData(data, family);
  EstimateResult out;
  switch (cfg.method) {
    case Method::Median: {
      if (data.cols() != 1) throw std::invalid_argument("median is univariate");
      out.theta.resize(1);
      out.theta(0) = medianOf(columnVec(data, 0));
      out.converged = true;
      break;
    }
    case Method::CoordinateMedian: {
      out.theta.resize(data.cols());
      for (Eigen::Index c = 0; c < data.cols(); ++c)
        out.theta(c) = medianOf(columnVec(data, static_cast<int>(c)));
      out.converged = true;
      break;
    }
    case Method::SpatialMedian: {
      if (data.cols() != 2) throw std::invalid_argument("spatial median needs d=2 data");
      Eigen::Vector2d y(medianOf(columnVec(data, 0)), medianOf(columnVec(data, 1)));
      bool ok = false;
      int it = 0;
      // the reweighting map converges only linearly, with a rate that can get
      // close to one on small samples, so the budget is generous
      for (; it < 5000; ++it) {
        double sw = 0.0;
        Eigen::Vector2d acc = Eigen::Vector2d::Zero();
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
          Eigen::Vector2d x(data(i, 0), data(i, 1));
          double d = std::max((x - y).norm(), 1e-12);
          sw += 1.0 / d;
          acc += x / d;
        }
        Eigen::Vector2d yNew = acc / sw;
        if ((yNew - y).norm() < 1e-12 * (1.0 + y.norm())) {
          y = yNew;
          ok = true;
          break;
        }
        y = yNew;
      }
      out.theta.resize(2);
      out.theta << y(0), y(1);
      out.converged = ok;
      out.iterations = it;
      break;
    }
    case Method::MLE:
      out = mleEstimate(data, family, cfg);
      break;
    case Method::Huber:
      if (data.cols() != 1) throw std::invalid_argument("huber location is univariate");
      out = mLocation(data, true, cfg.huberK, std::max(cfg.maxIter, 200),
                      family.paramCount() == 2);
      break;
    case Method::Tukey:
      if (data.cols() != 1) throw std::invalid_argument("tukey location is univariate");
      out = mLocation(data, false, cfg.tukeyC, std::max(cfg.maxIter, 200),
                      family.paramCount() == 2);
      break;
    case Method::MeanSD: {
      const auto n = data.rows();
      if (n < 2) throw std::invalid_argument("mean/sd needs n >= 2");
      if (data.cols() == 1) {
        double mean = data.col(0).mean();
        double ss = (data.col(0).array() - mean).square().sum();
        out.theta.resize(2);
        out.theta << mean, std::sqrt(ss / static_cast<double>(n - 1));
      } else if (data.cols() == 2) {
        // pooled per-coordinate SD as the common scale estimate
        double mx = data.col(0).mean(), my = data.col(1).mean();
        double sx = (data.col(0).array() - mx).square().sum();
        double sy = (data.col(1).array() - my).square().sum();
        out.theta.resize(3);
        out.theta << mx, my, std::sqrt(0.5 * (sx + sy) / static_cast<double>(n - 1));
      } else {
        throw std::invalid_argument("mean/sd supports d <= 2");
      }
      out.converged = true;
      break;
    }
    case Method::MedMAD: {
      if (data.cols() == 1) {
        std::vector<double> col = columnVec(data, 0);
        double med = medianOf(col);
        out.theta.resize(2);
        out.theta << med, madScale(col, med);
      } else if (data.cols() == 2) {
        std::vector<double> cx = columnVec(data, 0), cy = columnVec(data, 1);
        double mx = medianOf(cx), my = medianOf(cy);
        out.theta.resize(3);
        out.theta << mx, my, 0.5 * (madScale(cx, mx) + madScale(cy, my));
      } else {
        throw std::invalid_argument("med/mad supports d <= 2");
      }
      out.converged = true;
      break;
    }
    case Method::Fixed: {
      if (cfg.fixedValue.size() == 0) throw std::invalid_argument("fixed value not set");
      out.theta = cfg.fixedValue;
      out.converged = true;
      break;
    }
    default:
      throw std::invalid_argument("not a benchmark method");
  }
  return finishResult(std::move(out), cfg);
}

EstimateResult estimate(const Eigen::MatrixXd& data, const ParametricModel& family,
                        const EstimatorConfig& cfg) {
  switch (cfg.method) {
    case Method::WeakMoment:
      return estimateWeakMoment(data, family, cfg);
    case Method::GMMTwoStep:
      return estimateGMMTwoStep(data, family, cfg);
    case Method::WeakCF:
      return estimateWeakCF(data, family, cfg);
    default:
      return benchmarkEstimate(data, family, cfg);
  }
}

}  // namespace weakmom
