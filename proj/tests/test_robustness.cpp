#include "weakmom/quadrature.hpp"
#include "weakmom/robustness.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace weakmom;

namespace {
constexpr double kPi = 3.14159265358979323846;
const GaussianKernel k3{3.0, 1};

Eigen::VectorXd point1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

WeakSystem ratioSystem() {
  WeakSystem sys;
  sys.set = {MomentIndex::power(1)};
  sys.massNormalised = true;
  return sys;
}
}  // namespace

TEST_CASE("effective set puts the mass condition first") {
  WeakSystem sys;
  sys.set = {MomentIndex::power(1), MomentIndex::power(2)};
  sys.augmentMass = true;
  MomentSet eff = effectiveSet(sys);
  REQUIRE(eff.size() == 3);
  CHECK(eff[0] == MomentIndex::power(0));
  CHECK(eff[1] == MomentIndex::power(1));
  CHECK(eff[2] == MomentIndex::power(2));
}

TEST_CASE("score components are centred weighted monomials") {
  auto c = ParametricModel::cauchy(2.0);
  MomentSet set{MomentIndex::power(0), MomentIndex::power(1)};
  Eigen::VectorXd s = scoreComponents(c, k3, set, point1(1.5));
  double phi = std::exp(-1.5 * 1.5 / 18.0);
  CHECK(s(0) == doctest::Approx(phi - 0.659033053706829).epsilon(1e-10));
  CHECK(s(1) == doctest::Approx(1.5 * phi - 0.999790610535771).epsilon(1e-10));
  // the weighted part of the score integrates back to the centring constant,
  // which is what makes E[psi] = 0 (the constant itself converges only like
  // the Cauchy tail, so test the identity in this form)
  QuadratureSpec spec;
  auto weighted = integrate1D(
      [&](double x) { return x * std::exp(-x * x / 18.0) * c.density1(x); }, -36.0, 36.0, spec);
  CHECK(weighted.value == doctest::Approx(0.999790610535771).epsilon(1e-9));
}

TEST_CASE("score covariance matches the fixed reference and stays psd") {
  auto c0 = ParametricModel::cauchy(0.0);
  Eigen::MatrixXd S1 = sandwichS(c0, k3, {MomentIndex::power(1)});
  CHECK(S1(0, 0) == doctest::Approx(0.980315862043).epsilon(1e-10));

  auto c2 = ParametricModel::cauchy(2.0);
  MomentSet set{MomentIndex::power(0), MomentIndex::power(1), MomentIndex::power(2)};
  Eigen::MatrixXd S = sandwichS(c2, k3, set);
  CHECK(S.rows() == 3);
  CHECK((S - S.transpose()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  CHECK(eig.eigenvalues().minCoeff() > -1e-12);

  // brute-force cross-check of one entry: E[psi_0 psi_1 phi^2] - m_0 m_1
  QuadratureSpec spec;
  auto raw = integrate1D(
      [&](double x) {
        double phi = std::exp(-x * x / 18.0);
        return x * phi * phi * c2.density1(x);
      },
      -36.0, 36.0, spec);
  double m0 = 0.659033053706829, m1 = 0.999790610535771;
  CHECK(S(0, 1) == doctest::Approx(raw.value - m0 * m1).epsilon(1e-9));
}

TEST_CASE("bivariate score covariance agrees with a planar oracle") {
  auto b = ParametricModel::bivCauchy(1.0, 1.0);
  GaussianKernel k3b(3.0, 2);
  MomentSet set{MomentIndex::power(0), MomentIndex::multi(1, 0), MomentIndex::multi(0, 1)};
  Eigen::MatrixXd S = sandwichS(b, k3b, set);
  CHECK((S - S.transpose()).norm() < 1e-10);
  // axis-swap symmetry of the model at mu = (1,1)
  CHECK(S(1, 1) == doctest::Approx(S(2, 2)).epsilon(1e-8));
  CHECK(S(0, 1) == doctest::Approx(S(0, 2)).epsilon(1e-8));

  // one entry against nested adaptive quadrature over the plane
  QuadratureSpec spec;
  spec.absTol = 1e-11;
  spec.relTol = 1e-11;
  auto inner = [&](double x, double y) {
    Eigen::Vector2d v(x, y);
    double phi2 = std::exp(-(x * x + y * y) / 9.0);  // squared kernel
    return x * phi2 * b.density(v);
  };
  auto outerFn = [&](double x) {
    return integrate1D([&](double y) { return inner(x, y); }, -36.0, 36.0, spec).value;
  };
  double cross = integrate1D(outerFn, -36.0, 36.0, spec).value;
  double m0 = 0.615600746612424, mx = 0.498311504954561;
  CHECK(S(0, 1) == doctest::Approx(cross - m0 * mx).epsilon(1e-7));
}

TEST_CASE("moment jacobian matches the symmetric closed-form entries") {
  auto c0 = ParametricModel::cauchy(0.0);
  Eigen::MatrixXd J = momentJacobian(c0, k3, {MomentIndex::power(0), MomentIndex::power(1)});
  REQUIRE(J.rows() == 2);
  REQUIRE(J.cols() == 1);
  CHECK(std::abs(J(0, 0)) < 1e-9);  // d m_0 / d mu vanishes at symmetry
  CHECK(J(1, 0) == doctest::Approx(0.601920014741).epsilon(1e-7));
}

TEST_CASE("ratio influence function: shape, centre, and decay") {
  auto c0 = ParametricModel::cauchy(0.0);
  WeakSystem sys = ratioSystem();
  CHECK(std::abs(influenceFunction(c0, k3, sys, point1(0.0))(0)) < 1e-12);
  for (double x : {0.7, 2.2, 5.0}) {
    double plus = influenceFunction(c0, k3, sys, point1(x))(0);
    double minus = influenceFunction(c0, k3, sys, point1(-x))(0);
    CHECK(plus == doctest::Approx(-minus).epsilon(1e-10));
  }
  // redescending: negligible influence far out
  CHECK(std::abs(influenceFunction(c0, k3, sys, point1(36.0))(0)) < 1e-12);
}

TEST_CASE("influence function matches the contamination derivative") {
  // finite-difference Gateaux derivative of the fitted parameter along the
  // contamination path (1-eps) F + eps delta_x, eps = 1e-4
  auto c2 = ParametricModel::cauchy(2.0);
  const double eps = 1e-4;

  SUBCASE("ratio convention") {
    WeakSystem sys = ratioSystem();
    double m0 = cauchyWeakM0Faddeeva(2.0, 3.0);
    double m1 = cauchyWeakM1Faddeeva(2.0, 3.0);
    auto solveRatio = [&](double target) {
      double lo = -6.9, hi = 6.9;  // monotone range of mu -> m1/m0
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double r = cauchyWeakM1Faddeeva(mid, 3.0) / cauchyWeakM0Faddeeva(mid, 3.0);
        (r < target ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    };
    for (double x : {0.5, 2.0, 3.5, 6.0, 12.0}) {
      double phi = std::exp(-x * x / 18.0);
      auto path = [&](double e) {
        return solveRatio(((1 - e) * m1 + e * x * phi) / ((1 - e) * m0 + e * phi));
      };
      double fd = (path(eps) - path(-eps)) / (2 * eps);
      double ifv = influenceFunction(c2, k3, sys, point1(x))(0);
      CHECK(ifv == doctest::Approx(fd).epsilon(0.01));
    }
  }

  SUBCASE("identity-weighted two-condition system") {
    WeakSystem sys;
    sys.set = {MomentIndex::power(1)};
    sys.augmentMass = true;
    MomentSet eff = effectiveSet(sys);
    auto momentVec = [&](double mu) {
      Eigen::Vector2d m;
      m << cauchyWeakM0Faddeeva(mu, 3.0), cauchyWeakM1Faddeeva(mu, 3.0);
      return m;
    };
    auto solveGmm = [&](const Eigen::Vector2d& target) {
      // 1-d least squares: golden section on the residual norm
      double lo = 1.0, hi = 3.0;
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
      auto f = [&](double mu) { return (momentVec(mu) - target).squaredNorm(); };
      double fa = f(a), fb = f(b);
      for (int it = 0; it < 120; ++it) {
        if (fa < fb) {
          hi = b;
          b = a;
          fb = fa;
          a = hi - gr * (hi - lo);
          fa = f(a);
        } else {
          lo = a;
          a = b;
          fa = fb;
          b = lo + gr * (hi - lo);
          fb = f(b);
        }
      }
      return 0.5 * (lo + hi);
    };
    Eigen::Vector2d m = momentVec(2.0);
    for (double x : {0.5, 2.0, 4.0, 8.0}) {
      double phi = std::exp(-x * x / 18.0);
      Eigen::Vector2d u;
      u << phi, x * phi;
      auto path = [&](double e) { return solveGmm((1 - e) * m + e * u); };
      double fd = (path(eps) - path(-eps)) / (2 * eps);
      double ifv = influenceFunction(c2, k3, sys, point1(x))(0);
      CHECK(ifv == doctest::Approx(fd).epsilon(0.01));
    }
  }
}

TEST_CASE("raw systems plateau at minus the weighted moment image") {
  // scores ψ(x) -> -m as |x| grows, so the influence settles at -A m
  auto c2 = ParametricModel::cauchy(2.0);
  WeakSystem sys;
  sys.set = {MomentIndex::power(1)};
  sys.augmentMass = true;
  MomentSet eff = effectiveSet(sys);
  Eigen::MatrixXd G = momentJacobian(c2, k3, eff);
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd A = (G.transpose() * W * G).inverse() * G.transpose() * W;
  Eigen::VectorXd m(2);
  m << cauchyWeakM0Faddeeva(2.0, 3.0), cauchyWeakM1Faddeeva(2.0, 3.0);
  Eigen::VectorXd plateau = -A * m;
  Eigen::VectorXd at12 = influenceFunction(c2, k3, sys, point1(36.0));
  Eigen::VectorXd atm12 = influenceFunction(c2, k3, sys, point1(-36.0));
  CHECK((at12 - plateau).norm() < 1e-6);
  CHECK((atm12 - plateau).norm() < 1e-6);
}

TEST_CASE("gross error sensitivity and asymptotic variance reference values") {
  auto c0 = ParametricModel::cauchy(0.0);
  WeakSystem sys = ratioSystem();
  CHECK(grossErrorSensitivity(c0, k3, sys) == doctest::Approx(3.022979689289).epsilon(1e-6));
  CHECK(asymptoticVariance(c0, k3, sys)(0, 0) ==
        doctest::Approx(2.705754944833).epsilon(1e-6));
  auto c2 = ParametricModel::cauchy(2.0);
  CHECK(asymptoticVariance(c2, k3, sys)(0, 0) ==
        doctest::Approx(4.063083227303).epsilon(1e-6));
}

TEST_CASE("ratio and raw conventions coincide at the symmetric point") {
  auto c0 = ParametricModel::cauchy(0.0);
  WeakSystem ratio = ratioSystem();
  WeakSystem raw;
  raw.set = {MomentIndex::power(1)};
  CHECK(asymptoticVariance(c0, k3, ratio)(0, 0) ==
        doctest::Approx(asymptoticVariance(c0, k3, raw)(0, 0)).epsilon(1e-8));
  for (double x : {0.5, 1.5, 4.0})
    CHECK(influenceFunction(c0, k3, ratio, point1(x))(0) ==
          doctest::Approx(influenceFunction(c0, k3, raw, point1(x))(0)).epsilon(1e-8));
}

TEST_CASE("near-optimal weighting never loses to identity weighting") {
  auto c2 = ParametricModel::cauchy(2.0);
  WeakSystem ident;
  ident.set = {MomentIndex::power(1), MomentIndex::power(2)};
  ident.augmentMass = true;
  WeakSystem opt = ident;
  opt.weighting.kind = WeightingScheme::Kind::TwoStepOptimal;
  opt.weighting.ridge = 1e-12;
  double vI = asymptoticVariance(c2, k3, ident)(0, 0);
  double vO = asymptoticVariance(c2, k3, opt)(0, 0);
  CHECK(vO <= vI + 1e-8);
}

TEST_CASE("influence is bounded and the sup is attained in the core region") {
  auto c2 = ParametricModel::cauchy(2.0);
  WeakSystem sys = ratioSystem();
  double ges = grossErrorSensitivity(c2, k3, sys);
  CHECK(std::isfinite(ges));
  double best = 0.0;
  for (double x = -12.0; x <= 12.0; x += 0.01)
    best = std::max(best, std::abs(influenceFunction(c2, k3, sys, point1(x))(0)));
  CHECK(best <= ges * (1 + 1e-9));
  CHECK(best == doctest::Approx(ges).epsilon(1e-3));  // sup sits well inside 4 sigma
}

TEST_CASE("bivariate influence stays bounded by its sensitivity") {
  auto b = ParametricModel::bivCauchy(1.0, 1.0);
  GaussianKernel k3b(3.0, 2);
  WeakSystem sys;
  sys.set = {MomentIndex::multi(1, 0), MomentIndex::multi(0, 1)};
  double ges = grossErrorSensitivity(b, k3b, sys);
  CHECK(std::isfinite(ges));
  Eigen::VectorXd x(2);
  for (double r : {0.5, 2.0, 5.0, 11.0}) {
    for (double ang = 0.0; ang < 6.28; ang += 0.785) {
      x << 1.0 + r * std::cos(ang), 1.0 + r * std::sin(ang);
      CHECK(influenceFunction(b, k3b, sys, x).norm() <= ges * (1 + 1e-9));
    }
  }
}

TEST_CASE("median benchmarks use the closed forms") {
  auto c0 = ParametricModel::cauchy(0.0);
  CHECK(medianGES(c0) == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(medianAsymptoticVariance(c0) == doctest::Approx(kPi * kPi / 4).epsilon(1e-12));
  auto t = ParametricModel::studentT(0.4, 1.0, 3.0);
  double f0 = 2.0 / (kPi * std::sqrt(3.0));
  CHECK(medianGES(t) == doctest::Approx(1.0 / (2 * f0)).epsilon(1e-12));

  // weak-moment location beats the median on clean Cauchy data
  WeakSystem sys = ratioSystem();
  double eff = medianAsymptoticVariance(c0) / asymptoticVariance(c0, k3, sys)(0, 0);
  CHECK(eff == doctest::Approx(0.911909).epsilon(1e-4));
}

TEST_CASE("influence profile grids and csv output") {
  auto c0 = ParametricModel::cauchy(0.0);
  WeakSystem sys = ratioSystem();
  InfluenceProfile graded = influenceProfile(c0, k3, sys);
  REQUIRE(graded.grid.size() > 100);
  CHECK(graded.grid.front() == doctest::Approx(-36.0));
  CHECK(graded.grid.back() == doctest::Approx(36.0));
  CHECK(graded.ges == doctest::Approx(grossErrorSensitivity(c0, k3, sys)).epsilon(1e-9));
  for (size_t i = 1; i < graded.grid.size(); ++i) CHECK(graded.grid[i] > graded.grid[i - 1]);

  InfluenceProfile fixedN = influenceProfile(c0, k3, sys, QuadratureSpec(), 101);
  CHECK(fixedN.grid.size() == 101);
  CHECK(fixedN.values.cols() == 101);

  std::string path = "influence_test_tmp.csv";
  writeInfluenceCsv(fixedN, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 102);  // header + grid
  in.close();
  std::remove(path.c_str());
}
