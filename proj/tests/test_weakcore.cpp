#include "weakmom/weakcore.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace weakmom;

namespace {
const GaussianKernel k3{3.0, 1};
const GaussianKernel k3b{3.0, 2};
}  // namespace

TEST_CASE("moment index bookkeeping") {
  CHECK(MomentIndex::power(3).order() == 3);
  CHECK(MomentIndex::multi(1, 2).order() == 3);
  CHECK(MomentIndex::radial2().order() == 2);
  CHECK(MomentIndex::power(1) == MomentIndex::power(1));
  CHECK_FALSE(MomentIndex::power(1) == MomentIndex::multi(1, 0));
  CHECK_THROWS_AS(MomentIndex::power(-1), std::invalid_argument);
  CHECK_THROWS_AS(MomentIndex::multi(-1, 0), std::invalid_argument);

  Eigen::VectorXd x2(2);
  x2 << 2.0, -3.0;
  CHECK(evalIndex(MomentIndex::multi(2, 1), x2) == doctest::Approx(-12.0));
  CHECK(evalIndex(MomentIndex::radial2(), x2) == doctest::Approx(13.0));
  CHECK(evalIndex1(MomentIndex::power(3), -2.0) == doctest::Approx(-8.0));
  CHECK_THROWS_AS(evalIndex(MomentIndex::power(2), x2), std::invalid_argument);
}

TEST_CASE("univariate cauchy weak moments match fixed references") {
  // references computed independently with the scale-free Faddeeva identity
  // and cross-checked by high-precision quadrature
  auto c0 = ParametricModel::cauchy(0.0);
  auto c2 = ParametricModel::cauchy(2.0);
  CHECK(theoreticalWeakMoment(c0, k3, MomentIndex::power(0)) ==
        doctest::Approx(0.781093381535094).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(c0, k3, MomentIndex::power(1)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(c0, k3, MomentIndex::power(2)) ==
        doctest::Approx(1.6125603008735).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(c0, k3, MomentIndex::power(4)) ==
        doctest::Approx(19.9303228408039).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(c2, k3, MomentIndex::power(0)) ==
        doctest::Approx(0.659033053706829).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(c2, k3, MomentIndex::power(1)) ==
        doctest::Approx(0.999790610535771).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(c2, k3, MomentIndex::power(2)) ==
        doctest::Approx(3.09765085601753).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(c2, k3, MomentIndex::power(3)) ==
        doctest::Approx(7.39165037139128).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(c2, k3, MomentIndex::power(4)) ==
        doctest::Approx(35.6212303471548).epsilon(1e-12));
}

TEST_CASE("faddeeva identity agrees with quadrature across locations and bandwidths") {
  for (double sigma : {1.0, 3.0, 5.0}) {
    GaussianKernel k(sigma, 1);
    for (double mu = -8.0; mu <= 8.0; mu += 1.0) {
      auto c = ParametricModel::cauchy(mu);
      double q0 = theoreticalWeakMoment(c, k, MomentIndex::power(0));
      double q1 = theoreticalWeakMoment(c, k, MomentIndex::power(1));
      CHECK(std::abs(q0 - cauchyWeakM0Faddeeva(mu, sigma)) < 1e-10);
      CHECK(std::abs(q1 - cauchyWeakM1Faddeeva(mu, sigma)) < 1e-10);
    }
  }
}

TEST_CASE("student t weak moments match fixed references") {
  auto t1 = ParametricModel::studentT(0.0, 1.0, 3.0);
  CHECK(theoreticalWeakMoment(t1, k3, MomentIndex::power(0)) ==
        doctest::Approx(0.904616362877316).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(t1, k3, MomentIndex::power(2)) ==
        doctest::Approx(1.281768383607872).epsilon(1e-12));
  auto t2 = ParametricModel::studentT(0.3, 1.2, 3.0);
  CHECK(theoreticalWeakMoment(t2, k3, MomentIndex::power(0)) ==
        doctest::Approx(0.872169657335145).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(t2, k3, MomentIndex::power(1)) ==
        doctest::Approx(0.209108349917390).epsilon(1e-12));
  CHECK(theoreticalWeakMoment(t2, k3, MomentIndex::power(2)) ==
        doctest::Approx(1.628038367600514).epsilon(1e-12));
}

TEST_CASE("bivariate radial reduction matches the direct planar oracle") {
  // references frozen from a nested adaptive Gauss-Kronrod integration over
  // the plane (tolerance 1e-13), entirely independent of the Bessel route
  auto bc = ParametricModel::bivCauchy(1.0, 1.0);
  CHECK(theoreticalWeakMoment(bc, k3b, MomentIndex::power(0)) ==
        doctest::Approx(0.615600746612424).epsilon(1e-10));
  CHECK(theoreticalWeakMoment(bc, k3b, MomentIndex::multi(1, 0)) ==
        doctest::Approx(0.498311504954561).epsilon(1e-10));
  CHECK(theoreticalWeakMoment(bc, k3b, MomentIndex::multi(0, 1)) ==
        doctest::Approx(0.498311504954561).epsilon(1e-10));
  CHECK(theoreticalWeakMoment(bc, k3b, MomentIndex::radial2()) ==
        doctest::Approx(2.96185544982618).epsilon(1e-10));

  auto bc0 = ParametricModel::bivCauchy(0.0, 0.0);
  CHECK(theoreticalWeakMoment(bc0, k3b, MomentIndex::power(0)) ==
        doctest::Approx(0.673681540786).epsilon(1e-10));
  CHECK(theoreticalWeakMoment(bc0, k3b, MomentIndex::radial2()) ==
        doctest::Approx(2.263184592138).epsilon(1e-10));
  CHECK(theoreticalWeakMoment(bc0, k3b, MomentIndex::multi(1, 0)) ==
        doctest::Approx(0.0).epsilon(1e-14));

  auto bt0 = ParametricModel::bivT3(0.0, 0.0, 1.0);
  CHECK(theoreticalWeakMoment(bt0, k3b, MomentIndex::power(0)) ==
        doctest::Approx(0.827290767536).epsilon(1e-10));
  CHECK(theoreticalWeakMoment(bt0, k3b, MomentIndex::radial2()) ==
        doctest::Approx(2.181276973921).epsilon(1e-10));

  auto bt = ParametricModel::bivT3(0.3, -0.2, 1.2);
  CHECK(theoreticalWeakMoment(bt, k3b, MomentIndex::power(0)) ==
        doctest::Approx(0.774225987886877).epsilon(1e-10));
  CHECK(theoreticalWeakMoment(bt, k3b, MomentIndex::multi(1, 0)) ==
        doctest::Approx(0.189023339041501).epsilon(1e-10));
  CHECK(theoreticalWeakMoment(bt, k3b, MomentIndex::multi(0, 1)) ==
        doctest::Approx(-0.126015559360855).epsilon(1e-10));
  CHECK(theoreticalWeakMoment(bt, k3b, MomentIndex::radial2()) ==
        doctest::Approx(2.66299426835125).epsilon(1e-10));
}

TEST_CASE("bivariate first moment is aligned with the location direction") {
  // isotropy: the vector moment must be parallel to mu, so the ratio of the
  // components equals the ratio of the coordinates
  auto b = ParametricModel::bivCauchy(0.6, -1.8);
  double vx = theoreticalWeakMoment(b, k3b, MomentIndex::multi(1, 0));
  double vy = theoreticalWeakMoment(b, k3b, MomentIndex::multi(0, 1));
  CHECK(vy / vx == doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("batched evaluation equals scalar evaluation") {
  MomentSet set{MomentIndex::power(0), MomentIndex::multi(1, 0), MomentIndex::multi(0, 1),
                MomentIndex::radial2()};
  auto bt = ParametricModel::bivT3(0.3, -0.2, 1.2);
  Eigen::VectorXd batched = theoreticalWeakMoments(bt, k3b, set);
  REQUIRE(batched.size() == 4);
  for (int i = 0; i < 4; ++i)
    CHECK(batched(i) == doctest::Approx(theoreticalWeakMoment(bt, k3b, set[i])).epsilon(1e-12));

  MomentSet uset{MomentIndex::power(0), MomentIndex::power(1), MomentIndex::power(2)};
  auto c = ParametricModel::cauchy(1.2);
  Eigen::VectorXd ub = theoreticalWeakMoments(c, k3, uset);
  for (int i = 0; i < 3; ++i)
    CHECK(ub(i) == doctest::Approx(theoreticalWeakMoment(c, k3, uset[i])).epsilon(1e-12));
}

TEST_CASE("unsupported bivariate indices are rejected") {
  auto b = ParametricModel::bivCauchy(0.0, 0.0);
  CHECK_THROWS_AS(theoreticalWeakMoment(b, k3b, MomentIndex::multi(2, 0)), std::invalid_argument);
  CHECK_THROWS_AS(theoreticalWeakMoment(b, k3b, MomentIndex::power(2)), std::invalid_argument);
}

TEST_CASE("mixture moments are linear in epsilon") {
  ContaminatedModel mix;
  mix.base = ParametricModel::cauchy(2.0);
  mix.contaminant = ParametricModel::cauchy(7.0);
  mix.epsilon = 0.1;
  for (int j : {0, 1, 2}) {
    double blended = theoreticalWeakMoment(mix, k3, MomentIndex::power(j));
    double direct = 0.9 * theoreticalWeakMoment(mix.base, k3, MomentIndex::power(j)) +
                    0.1 * theoreticalWeakMoment(mix.contaminant, k3, MomentIndex::power(j));
    CHECK(blended == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("empirical weak expectation is the plain weighted average") {
  Eigen::MatrixXd data(3, 1);
  data << -1.0, 0.5, 2.0;
  double expect = 0.0;
  for (int i = 0; i < 3; ++i)
    expect += data(i, 0) * std::exp(-data(i, 0) * data(i, 0) / 18.0) / 3.0;
  CHECK(empiricalWeakExpectation(data, k3, MomentIndex::power(1)) ==
        doctest::Approx(expect).epsilon(1e-14));

  Eigen::MatrixXd d2(2, 2);
  d2 << 1.0, 2.0, -0.5, 0.25;
  double e2 = 0.0;
  for (int i = 0; i < 2; ++i) {
    double r2 = d2(i, 0) * d2(i, 0) + d2(i, 1) * d2(i, 1);
    e2 += d2(i, 0) * d2(i, 1) * std::exp(-r2 / 18.0) / 2.0;
  }
  CHECK(empiricalWeakExpectation(d2, k3b, MomentIndex::multi(1, 1)) ==
        doctest::Approx(e2).epsilon(1e-14));
  Eigen::MatrixXd empty(0, 1);
  CHECK_THROWS_AS(empiricalWeakExpectation(empty, k3, MomentIndex::power(0)),
                  std::invalid_argument);
}

TEST_CASE("weak characteristic function reference values") {
  auto cf = theoreticalWeakCF(ParametricModel::cauchy(2.0), k3, 0.5);
  CHECK(cf.real() == doctest::Approx(0.349425312320912).epsilon(1e-11));
  CHECK(cf.imag() == doctest::Approx(0.369642433876138).epsilon(1e-11));

  auto cft = theoreticalWeakCF(ParametricModel::studentT(0.0, 1.0, 3.0), k3, 0.5);
  CHECK(cft.real() == doctest::Approx(0.764943535311616).epsilon(1e-11));
  CHECK(std::abs(cft.imag()) < 1e-12);

  // t = 0 recovers the weak mass
  auto cf0 = theoreticalWeakCF(ParametricModel::cauchy(2.0), k3, 0.0);
  CHECK(cf0.real() == doctest::Approx(0.659033053706829).epsilon(1e-11));
  CHECK(std::abs(cf0.imag()) < 1e-13);
}

TEST_CASE("empirical weak CF has exact conjugate symmetry") {
  auto model = ParametricModel::cauchy(1.0);
  Eigen::MatrixXd data = model.sample(500, 11);
  for (double t : {0.3, 1.1, 2.7}) {
    auto plus = empiricalWeakCF(data, k3, t);
    auto minus = empiricalWeakCF(data, k3, -t);
    CHECK(minus == std::conj(plus));  // bitwise: same sums, mirrored signs
  }
  auto at0 = empiricalWeakCF(data, k3, 0.0);
  CHECK(at0.real() ==
        doctest::Approx(empiricalWeakExpectation(data, k3, MomentIndex::power(0)))
            .epsilon(1e-14));
}

TEST_CASE("weak CGF exponentiates back to the CF") {
  auto model = ParametricModel::cauchy(0.7);
  for (double t : {0.0, 0.4, 1.3}) {
    auto cgf = weakCGF(model, k3, t);
    auto cf = theoreticalWeakCF(model, k3, t);
    CHECK(std::abs(std::exp(cgf) - cf) < 1e-11);
  }
}

TEST_CASE("cumulant recursion round-trips and kills odd terms at symmetry") {
  // moments of the Cauchy(2) weak family up to order 6
  auto c2 = ParametricModel::cauchy(2.0);
  std::vector<double> moments;
  for (int j = 0; j <= 6; ++j)
    moments.push_back(theoreticalWeakMoment(c2, k3, MomentIndex::power(j)));
  std::vector<double> kappa = weakCumulants(moments);
  REQUIRE(kappa.size() == moments.size());
  CHECK(kappa[0] == doctest::Approx(std::log(moments[0])).epsilon(1e-14));
  std::vector<double> back = cumulantsToMoments(kappa);
  for (size_t j = 0; j < moments.size(); ++j)
    CHECK(back[j] == doctest::Approx(moments[j]).epsilon(1e-12));

  // symmetric location: odd weak cumulants vanish
  auto c0 = ParametricModel::cauchy(0.0);
  std::vector<double> sym;
  for (int j = 0; j <= 6; ++j)
    sym.push_back(theoreticalWeakMoment(c0, k3, MomentIndex::power(j)));
  std::vector<double> ks = weakCumulants(sym);
  CHECK(std::abs(ks[1]) < 1e-12);
  CHECK(std::abs(ks[3]) < 1e-12);
  CHECK(std::abs(ks[5]) < 1e-11);

  CHECK_THROWS_AS(weakCumulants({}), std::invalid_argument);
  CHECK_THROWS_AS(weakCumulants({-0.2, 0.1}), std::domain_error);
}

TEST_CASE("normalised first moment is increasing over the working range") {
  // the location map mu -> m_1/m_0 is strictly increasing on [-7, 7] for
  // sigma = 3; it turns around just past 7, which bounds the usable
  // just-identified search region
  auto prev = -1e300;
  for (double mu = -7.0; mu <= 7.0 + 1e-9; mu += 0.5) {
    double r = normalisedWeakMoment(ParametricModel::cauchy(mu), k3, 1);
    CHECK(r > prev);
    prev = r;
  }
  double r7 = normalisedWeakMoment(ParametricModel::cauchy(7.0), k3, 1);
  double r75 = normalisedWeakMoment(ParametricModel::cauchy(7.5), k3, 1);
  CHECK(r75 < r7);  // documented turnaround outside the working range
}
