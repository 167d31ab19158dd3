#include "weakmom/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace weakmom {

namespace {

// Gauss-Kronrod 7/15 pair on [-1,1] (QUADPACK constants).
const double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

const double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// weights of the embedded 7-point Gauss rule (nodes kXgk[1], kXgk[3], ...)
const double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
  double value;
  double error;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = kWgk[7] * fc;
  double resg = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double x = h * kXgk[i];
    const double fsum = f(c - x) + f(c + x);
    resk += kWgk[i] * fsum;
    if (i % 2 == 1) resg += kWg[i / 2] * fsum;
  }
  return {resk * h, std::abs(resk - resg) * h};
}

void adapt(const std::function<double(double)>& f, double a, double b, double tol,
           const QuadratureSpec& spec, QuadResult& out) {
  const PanelResult p = gk15(f, a, b);
  if (p.error <= tol || out.subdivisions >= spec.maxSubdivisions) {
    out.value += p.value;
    out.errorEstimate += p.error;
    return;
  }
  ++out.subdivisions;
  const double c = 0.5 * (a + b);
  adapt(f, a, c, 0.5 * tol, spec, out);
  adapt(f, c, b, 0.5 * tol, spec, out);
}

}  // namespace

QuadResult integrate1D(const std::function<double(double)>& f, double a, double b,
                       const QuadratureSpec& spec) {
  QuadResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  // a first pass fixes the scale for the relative tolerance
  const PanelResult first = gk15(f, a, b);
  const double tol = std::max(spec.absTol, spec.relTol * std::abs(first.value));
  adapt(f, a, b, tol, spec, out);
  out.converged =
      out.errorEstimate <= std::max(spec.absTol, spec.relTol * std::abs(out.value)) * 1.001 ||
      out.errorEstimate <= tol * 1.001;
  if (out.subdivisions >= spec.maxSubdivisions) out.converged = false;
  return out;
}

QuadResult integrateWindow(const std::function<double(double)>& f, double sigma,
                           const QuadratureSpec& spec) {
  const double r = spec.truncationRadius * sigma;
  return integrate1D(f, -r, r, spec);
}

// ---------------------------------------------------------------------------
// Faddeeva function.
//
// Weideman's rational approximation (N=48) covers the region that matters for
// the weak-moment identities; an 11-term Laplace continued fraction takes
// over far from the origin where the rational fit loses accuracy.

namespace {

const double kWeidemanL = 5.825901260487881;

const double kWeidemanA[48] = {
    -3.7007434154171883e-17, 3.908097080905041e-17,  8.9130453596412514e-17,
    4.336469876763116e-17,   2.1035780900744799e-17, 7.0683134796397921e-20,
    3.859105048166247e-16,   7.2537975485229261e-16, -1.8792328220691556e-15,
    -5.2391585950953433e-15, 9.5275363607545155e-15, 4.2342555584235587e-14,
    -3.1933415962846563e-14, -3.2277573109725459e-13, -9.6550173898425105e-14,
    2.2154187772000165e-12,  3.4253340904418414e-12, -1.1935451266839411e-11,
    -4.3865867675270371e-11, 2.1622002347965739e-11, 3.8794220773032034e-10,
    5.7752898554791089e-10,  -2.015659927316155e-09, -9.5962547130788443e-09,
    -6.3868099289015055e-09, 6.9270006360260761e-08, 2.6549492006870939e-07,
    1.949433746724146e-07,   -1.9445657790098968e-06, -9.4756382404508275e-06,
    -1.9054461619112019e-05, 1.7506316371117585e-05, 0.00030786913640889043,
    0.0014864991251956183,   0.0051258135482256861,  0.014546837792237402,
    0.035861369983376683,    0.078955895534700046,   0.1578633044338047,
    0.28979989079604812,     0.49225702391399057,    0.77806241914842278,
    1.1492204645397781,      1.5913084691178003,     2.0707599716742915,
    2.5370484874446904,      2.9304498956237564,     3.194064589395071};

std::complex<double> faddeevaWeideman(std::complex<double> z) {
  const std::complex<double> iz(-z.imag(), z.real());
  const std::complex<double> zm = kWeidemanL - iz;
  const std::complex<double> zp = kWeidemanL + iz;
  const std::complex<double> Z = zp / zm;
  std::complex<double> p = kWeidemanA[0];
  for (int i = 1; i < 48; ++i) p = p * Z + kWeidemanA[i];
  return 2.0 * p / (zm * zm) + (1.0 / std::sqrt(3.14159265358979323846)) / zm;
}

std::complex<double> faddeevaContinuedFraction(std::complex<double> z) {
  // Laplace continued fraction
  //   w(z) = (i/sqrt(pi)) / (z - 1/2/(z - 1/(z - 3/2/(z - ...))))
  // adequate only well away from the origin (used for |z| > 8)
  std::complex<double> w(0.0, 0.0);
  for (int k = 11; k >= 1; --k) w = (0.5 * k) / (z - w);
  return std::complex<double>(0.0, 1.0 / std::sqrt(3.14159265358979323846)) / (z - w);
}

}  // namespace

std::complex<double> faddeeva(std::complex<double> z) {
  if (z.imag() < 0.0) throw std::invalid_argument("faddeeva: lower half-plane not supported");
  if (std::abs(z) > 8.0) return faddeevaContinuedFraction(z);
  return faddeevaWeideman(z);
}

// ---------------------------------------------------------------------------
// Gauss-Hermite via Golub-Welsch on the Jacobi matrix.

std::pair<std::vector<double>, std::vector<double>> gaussHermite(int n) {
  if (n < 1) throw std::invalid_argument("gaussHermite: order must be >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(0.5 * k);
    J(k - 1, k) = b;
    J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> nodes(n), weights(n);
  const double sqrtPi = std::sqrt(3.14159265358979323846);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = sqrtPi * v0 * v0;
  }
  return {nodes, weights};
}

double cubature2D(const std::function<double(double, double)>& f, const QuadratureSpec& spec,
                  int hermiteOrder, double sigma) {
  (void)spec;
  if (hermiteOrder < 4) throw std::invalid_argument("cubature2D: hermiteOrder must be >= 4");
  const auto [t, w] = gaussHermite(hermiteOrder);
  const double c = std::sqrt(2.0) * sigma;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  double sum = 0.0;
  for (int i = 0; i < hermiteOrder; ++i) {
    const double x = c * t[i];
    for (int j = 0; j < hermiteOrder; ++j) {
      const double y = c * t[j];
      sum += w[i] * w[j] * f(x, y) * std::exp((x * x + y * y) * inv2s2);
    }
  }
  return c * c * sum;
}

}  // namespace weakmom
