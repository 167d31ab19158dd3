#include "weakmom/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace weakmom {

namespace {

void checkGrid(const GridFunction& g) {
  if (g.x.size() != g.values.size() || g.x.size() < 2)
    throw std::invalid_argument("malformed grid function");
}

void checkCompatible(const GridFunction& a, const GridFunction& b) {
  if (a.x.size() != b.x.size() || std::abs(a.x.front() - b.x.front()) > 1e-12 ||
      std::abs(a.x.back() - b.x.back()) > 1e-12)
    throw std::invalid_argument("grid mismatch");
}

double trapezoid(const GridFunction& g, const std::function<double(size_t)>& term) {
  double acc = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    double w = (i == 0 || i + 1 == g.size()) ? 0.5 : 1.0;
    acc += w * term(i);
  }
  return acc * g.dx;
}

}  // namespace

GridFunction makeGrid(const GaussianKernel& kernel, int points, double radiusSigmas) {
  if (points < 2) throw std::invalid_argument("grid needs at least two points");
  const double R = radiusSigmas * kernel.sigma();
  GridFunction g;
  g.x.resize(static_cast<size_t>(points));
  g.values.assign(static_cast<size_t>(points), 0.0);
  g.dx = 2.0 * R / (points - 1);
  for (int i = 0; i < points; ++i) g.x[static_cast<size_t>(i)] = -R + g.dx * i;
  return g;
}

GridFunction gridFromFunction(const GridFunction& layout,
                              const std::function<double(double)>& fn) {
  checkGrid(layout);
  GridFunction g = layout;
  for (size_t i = 0; i < g.size(); ++i) g.values[i] = fn(g.x[i]);
  return g;
}

GridFunction forwardMultiply(const GridFunction& f, const GaussianKernel& kernel) {
  checkGrid(f);
  GridFunction g = f;
  for (size_t i = 0; i < g.size(); ++i) g.values[i] = kernel.evaluate(f.x[i]) * f.values[i];
  return g;
}

GridFunction tikhonovInvert(const GridFunction& g, const GaussianKernel& kernel,
                            const TikhonovConfig& config) {
  checkGrid(g);
  if (config.lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  GridFunction h = g;
  for (size_t i = 0; i < h.size(); ++i) {
    double phi = kernel.evaluate(g.x[i]);
    h.values[i] = phi / (phi * phi + config.lambda) * g.values[i];
  }
  return h;
}

double l2Norm(const GridFunction& g) {
  checkGrid(g);
  return std::sqrt(trapezoid(g, [&](size_t i) { return g.values[i] * g.values[i]; }));
}

double l2Distance(const GridFunction& a, const GridFunction& b) {
  checkGrid(a);
  checkCompatible(a, b);
  return std::sqrt(trapezoid(a, [&](size_t i) {
    double d = a.values[i] - b.values[i];
    return d * d;
  }));
}

GridFunction empiricalForward(const Eigen::MatrixXd& data, const GaussianKernel& kernel,
                              const GridFunction& layout, const BumpConfig& bump) {
  checkGrid(layout);
  if (data.cols() != 1) throw std::invalid_argument("empirical forward image is univariate");
  const auto n = data.rows();
  if (n == 0) throw std::invalid_argument("empty data");

  double b = bump.bandwidth;
  if (b <= 0.0) {
    // robust Silverman-type bandwidth on the raw sample
    std::vector<double> col(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) col[static_cast<size_t>(i)] = data(i, 0);
    std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(col.size() / 2),
                     col.end());
    double med = col[col.size() / 2];
    for (auto& v : col) v = std::abs(v - med);
    std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(col.size() / 2),
                     col.end());
    double mad = 1.4826 * col[col.size() / 2];
    b = std::max(0.9 * mad * std::pow(static_cast<double>(n), -0.2), 1e-3);
  }

  GridFunction g = layout;
  std::fill(g.values.begin(), g.values.end(), 0.0);
  const double norm = 1.0 / (b * std::sqrt(2.0 * M_PI) * static_cast<double>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double xi = data(i, 0);
    double wi = kernel.evaluate(xi);
    if (wi < 1e-300) continue;
    // the bump has negligible mass outside 8 bandwidths
    size_t lo = static_cast<size_t>(std::max(
        0.0, std::floor((xi - 8.0 * b - g.x.front()) / g.dx)));
    size_t hi = static_cast<size_t>(std::min(
        static_cast<double>(g.size() - 1), std::ceil((xi + 8.0 * b - g.x.front()) / g.dx)));
    for (size_t k = lo; k <= hi && k < g.size(); ++k) {
      double u = (g.x[k] - xi) / b;
      g.values[k] += wi * norm * std::exp(-0.5 * u * u);
    }
  }
  return g;
}

RateCurve rateCurve(const GaussianKernel& kernel, double nu,
                    const std::vector<double>& lambdaGrid, const GridFunction& h) {
  checkGrid(h);
  if (nu <= 0.0 || nu >= 2.0) throw std::invalid_argument("nu must lie in (0,2)");
  if (lambdaGrid.size() < 3) throw std::invalid_argument("need at least 3 lambda values");
  double span = *std::max_element(lambdaGrid.begin(), lambdaGrid.end()) /
                *std::min_element(lambdaGrid.begin(), lambdaGrid.end());
  if (span < 1e3) throw std::invalid_argument("lambda grid must span at least 3 decades");

  GridFunction f = h;
  for (size_t i = 0; i < f.size(); ++i)
    f.values[i] = std::pow(kernel.evaluate(f.x[i]), nu) * h.values[i];
  GridFunction g = forwardMultiply(f, kernel);

  RateCurve out;
  out.lambdas = lambdaGrid;
  std::sort(out.lambdas.begin(), out.lambdas.end());
  out.errors.reserve(out.lambdas.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double lam : out.lambdas) {
    GridFunction rec = tikhonovInvert(g, kernel, TikhonovConfig{lam});
    double err = l2Distance(rec, f);
    out.errors.push_back(err);
    double lx = std::log(lam), ly = std::log(err);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double m = static_cast<double>(out.lambdas.size());
  out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

double rateExperiment(const GaussianKernel& kernel, double nu,
                      const std::vector<double>& lambdaGrid, const GridFunction& h) {
  return rateCurve(kernel, nu, lambdaGrid, h).slope;
}

std::vector<double> defaultRateLambdas() {
  std::vector<double> l(9);
  for (int i = 0; i < 9; ++i) l[static_cast<size_t>(i)] = std::pow(10.0, -6.0 + 0.5 * i);
  return l;
}

void writeGridCsv(const GridFunction& g, const std::string& path) {
  checkGrid(g);
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "x,value\n");
  for (size_t i = 0; i < g.size(); ++i)
    std::fprintf(f, "%.17g,%.17g\n", g.x[i], g.values[i]);
  std::fclose(f);
}

GridFunction readGridCsv(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "r");
  if (!f) throw std::runtime_error("cannot open " + path);
  GridFunction g;
  char line[256];
  bool first = true;
  while (std::fgets(line, sizeof(line), f)) {
    if (first) {
      first = false;
      continue;  // header
    }
    double x, v;
    if (std::sscanf(line, "%lf,%lf", &x, &v) == 2) {
      g.x.push_back(x);
      g.values.push_back(v);
    }
  }
  std::fclose(f);
  if (g.x.size() >= 2) g.dx = g.x[1] - g.x[0];
  checkGrid(g);
  return g;
}

}  // namespace weakmom
