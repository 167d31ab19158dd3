#pragma once

#include <complex>
#include <functional>
#include <utility>
#include <vector>

namespace weakmom {

struct QuadratureSpec {
  double absTol = 1e-10;
  double relTol = 1e-10;
  int maxSubdivisions = 4000;
  double truncationRadius = 12.0;  // integration window half-width, units of sigma
};

// Non-convergence is not thrown: the result carries the best value and the
// accumulated error estimate with converged=false, so callers can decide.
struct QuadResult {
  double value = 0.0;
  double errorEstimate = 0.0;
  bool converged = false;
  int subdivisions = 0;
};

// Adaptive Gauss-Kronrod 7/15 with recursive bisection.
QuadResult integrate1D(const std::function<double(double)>& f, double a, double b,
                       const QuadratureSpec& spec = QuadratureSpec());

// Convenience: integrate over the kernel-truncated window [-R*sigma, R*sigma].
QuadResult integrateWindow(const std::function<double(double)>& f, double sigma,
                           const QuadratureSpec& spec = QuadratureSpec());

// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im(z) >= 0.
// Rational (Weideman) approximation switched to a continued fraction far out.
std::complex<double> faddeeva(std::complex<double> z);

// Gauss-Hermite nodes/weights for weight exp(-t^2) (Golub-Welsch).
std::pair<std::vector<double>, std::vector<double>> gaussHermite(int n);

// Tensor-product Gauss-Hermite cubature of f over R^2 in kernel-standardised
// coordinates: f must contain the factor exp(-||x||^2/(2 sigma^2)) so that
// f(x) * exp(+||x||^2/(2 sigma^2)) is slowly varying. hermiteOrder < 4 is
// rejected. Intended for smooth integrands; heavy-tailed densities converge
// only slowly here and go through the radial route in weakcore instead.
double cubature2D(const std::function<double(double, double)>& f, const QuadratureSpec& spec,
                  int hermiteOrder, double sigma = 3.0);

}  // namespace weakmom
