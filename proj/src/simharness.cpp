#include "weakmom/simharness.hpp"

#include "weakmom/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace weakmom {

bool MCCell::operator==(const MCCell& o) const {
  return estimator == o.estimator && n == o.n && component == o.component && bias == o.bias &&
         rmse == o.rmse && reps == o.reps && failures == o.failures;
}

bool MCReport::operator==(const MCReport& o) const {
  return scenario == o.scenario && cells == o.cells;
}

namespace {

void validateScenario(const Scenario& sc) {
  if (sc.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (sc.sampleSizes.empty()) throw std::invalid_argument("sampleSizes must be nonempty");
  if (sc.estimators.empty()) throw std::invalid_argument("estimator list must be nonempty");
  if (sc.components.empty()) throw std::invalid_argument("score components must be nonempty");
  for (int n : sc.sampleSizes)
    if (n < 1) throw std::invalid_argument("sample sizes must be positive");
}

}  // namespace

MCReport runScenario(const Scenario& sc, int threads) {
  validateScenario(sc);
  const ParametricModel& family = sc.dataModel.base;
  const Eigen::VectorXd truth = family.theta;
  const size_t E = sc.estimators.size();
  const size_t N = sc.sampleSizes.size();
  const size_t R = static_cast<size_t>(sc.replications);

  // estimates[e][ni][r]; empty vector marks a failed replication
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> estimates(
      E, std::vector<std::vector<Eigen::VectorXd>>(N, std::vector<Eigen::VectorXd>(R)));

  std::atomic<size_t> nextRep{0};
  auto worker = [&]() {
    for (;;) {
      size_t r = nextRep.fetch_add(1);
      if (r >= R) break;
      std::uint64_t seed = Rng::replicationSeed(sc.masterSeed, r);
      for (size_t ni = 0; ni < N; ++ni) {
        Eigen::MatrixXd data = sc.dataModel.sample(sc.sampleSizes[ni], seed);
        for (size_t e = 0; e < E; ++e) {
          try {
            EstimateResult res = estimate(data, family, sc.estimators[e]);
            if (res.converged) estimates[e][ni][r] = std::move(res.theta);
          } catch (const std::exception&) {
            // counted below as a failure
          }
        }
      }
    }
  };

  int nThreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (nThreads < 1) nThreads = 1;
  nThreads = std::min<int>(nThreads, static_cast<int>(R));
  if (nThreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nThreads));
    for (int t = 0; t < nThreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  MCReport report;
  report.scenario = sc.name;
  for (size_t e = 0; e < E; ++e) {
    const std::string label = sc.estimators[e].label.empty()
                                  ? methodLabel(sc.estimators[e].method)
                                  : sc.estimators[e].label;
    for (size_t ni = 0; ni < N; ++ni) {
      int failures = 0;
      for (size_t r = 0; r < R; ++r)
        if (estimates[e][ni][r].size() == 0) ++failures;
      for (const ScoreComponent& comp : sc.components) {
        MCCell cell;
        cell.estimator = label;
        cell.n = sc.sampleSizes[ni];
        cell.component = comp.name;
        cell.failures = failures;
        cell.reps = static_cast<int>(R) - failures;

        if (comp.idx.size() == 1) {
          int c = comp.idx[0];
          double sum = 0.0, sumSq = 0.0;
          for (size_t r = 0; r < R; ++r) {
            const Eigen::VectorXd& th = estimates[e][ni][r];
            if (th.size() == 0) continue;
            double err = th(c) - truth(c);
            sum += err;
            sumSq += err * err;
          }
          if (cell.reps > 0) {
            cell.bias = sum / cell.reps;
            cell.rmse = std::sqrt(sumSq / cell.reps);
          }
        } else {
          // group component: ||mean error vector|| and RMSE of ||error||
          Eigen::VectorXd sumVec = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(comp.idx.size()));
          double sumSq = 0.0;
          for (size_t r = 0; r < R; ++r) {
            const Eigen::VectorXd& th = estimates[e][ni][r];
            if (th.size() == 0) continue;
            double s2 = 0.0;
            for (size_t k = 0; k < comp.idx.size(); ++k) {
              double err = th(comp.idx[k]) - truth(comp.idx[k]);
              sumVec(static_cast<Eigen::Index>(k)) += err;
              s2 += err * err;
            }
            sumSq += s2;
          }
          if (cell.reps > 0) {
            cell.bias = (sumVec / cell.reps).norm();
            cell.rmse = std::sqrt(sumSq / cell.reps);
          }
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

namespace {

EstimatorConfig weakMomentUnivariateRatio(double sigma) {
  EstimatorConfig c;
  c.method = Method::WeakMoment;
  c.kernel = GaussianKernel(sigma, 1);
  c.momentSet = {MomentIndex::power(1)};
  c.massNormalised = true;
  c.label = "WM";
  return c;
}

EstimatorConfig gmmUnivariate(double sigma, bool twoStep, double ridge,
                              const std::vector<int>& js) {
  EstimatorConfig c;
  c.method = twoStep ? Method::GMMTwoStep : Method::WeakMoment;
  c.kernel = GaussianKernel(sigma, 1);
  c.momentSet.clear();
  for (int j : js) c.momentSet.push_back(MomentIndex::power(j));
  c.augmentMass = true;
  c.weighting.kind =
      twoStep ? WeightingScheme::Kind::TwoStepOptimal : WeightingScheme::Kind::Identity;
  c.weighting.ridge = ridge;
  c.label = twoStep ? "GMM-2S" : "GMM-I";
  return c;
}

EstimatorConfig benchmark(Method m, double sigma, int dim) {
  EstimatorConfig c;
  c.method = m;
  c.kernel = GaussianKernel(sigma, dim);
  return c;
}

}  // namespace

std::vector<Scenario> builtinScenarios() {
  const double sigma = 3.0;
  const double ridge = 0.10;
  std::vector<Scenario> out;

  {  // clean univariate Cauchy location, mu = 2
    Scenario sc;
    sc.name = "table1";
    ParametricModel base = ParametricModel::cauchy(2.0);
    sc.dataModel = ContaminatedModel{base, base, 0.0};
    sc.estimators = {weakMomentUnivariateRatio(sigma),
                     gmmUnivariate(sigma, false, ridge, {1, 2}),
                     gmmUnivariate(sigma, true, ridge, {1, 2}),
                     benchmark(Method::Median, sigma, 1),
                     benchmark(Method::MLE, sigma, 1),
                     benchmark(Method::Huber, sigma, 1),
                     benchmark(Method::Tukey, sigma, 1)};
    sc.sampleSizes = {50, 100, 500, 1000, 5000};
    sc.components = {{"mu", {0}}};
    out.push_back(std::move(sc));
  }
  {  // asymmetric contamination: 0.9 Cauchy(2,1) + 0.1 Cauchy(7,1)
    Scenario sc;
    sc.name = "table2";
    sc.dataModel =
        ContaminatedModel{ParametricModel::cauchy(2.0), ParametricModel::cauchy(7.0), 0.10};
    sc.estimators = {weakMomentUnivariateRatio(sigma),
                     gmmUnivariate(sigma, false, ridge, {1, 2}),
                     gmmUnivariate(sigma, true, ridge, {1, 2}),
                     benchmark(Method::Median, sigma, 1),
                     benchmark(Method::MLE, sigma, 1),
                     benchmark(Method::Huber, sigma, 1),
                     benchmark(Method::Tukey, sigma, 1)};
    sc.sampleSizes = {50, 100, 500, 1000, 5000};
    sc.components = {{"mu", {0}}};
    out.push_back(std::move(sc));
  }
  {  // univariate t3 location-scale under scale contamination
    Scenario sc;
    sc.name = "t3";
    sc.dataModel = ContaminatedModel{ParametricModel::studentT(0.0, 1.0, 3.0),
                                     ParametricModel::studentT(0.0, 5.0, 3.0), 0.10};
    EstimatorConfig wm = gmmUnivariate(sigma, true, ridge, {1, 2});
    wm.label = "WM-GMM-2S";
    sc.estimators = {wm, benchmark(Method::MLE, sigma, 1), benchmark(Method::MeanSD, sigma, 1),
                     benchmark(Method::MedMAD, sigma, 1), benchmark(Method::Tukey, sigma, 1)};
    sc.sampleSizes = {100, 500, 1000};
    sc.components = {{"mu", {0}}, {"s", {1}}};
    out.push_back(std::move(sc));
  }
  {  // bivariate Cauchy location, mu = (1,1), shift contamination delta = (5,5)
    Scenario sc;
    sc.name = "table3";
    sc.dataModel = ContaminatedModel{ParametricModel::bivCauchy(1.0, 1.0),
                                     ParametricModel::bivCauchy(6.0, 6.0), 0.10};
    EstimatorConfig wm;
    wm.method = Method::WeakMoment;
    wm.kernel = GaussianKernel(sigma, 2);
    wm.momentSet = {MomentIndex::multi(1, 0), MomentIndex::multi(0, 1)};
    wm.label = "WM";
    sc.estimators = {wm, benchmark(Method::SpatialMedian, sigma, 2),
                     benchmark(Method::CoordinateMedian, sigma, 2),
                     benchmark(Method::MLE, sigma, 2)};
    sc.sampleSizes = {50, 100, 500, 1000};
    sc.components = {{"mu", {0, 1}}};
    out.push_back(std::move(sc));
  }
  {  // bivariate t3 location-scale under scale contamination
    Scenario sc;
    sc.name = "table4";
    sc.dataModel = ContaminatedModel{ParametricModel::bivT3(0.0, 0.0, 1.0),
                                     ParametricModel::bivT3(0.0, 0.0, 5.0), 0.10};
    EstimatorConfig wm;
    wm.method = Method::GMMTwoStep;
    wm.kernel = GaussianKernel(sigma, 2);
    wm.momentSet = {MomentIndex::multi(1, 0), MomentIndex::multi(0, 1), MomentIndex::radial2()};
    wm.augmentMass = true;
    wm.weighting.kind = WeightingScheme::Kind::TwoStepOptimal;
    wm.weighting.ridge = ridge;
    wm.label = "WM-GMM-2S";
    sc.estimators = {wm, benchmark(Method::MLE, sigma, 2), benchmark(Method::MeanSD, sigma, 2),
                     benchmark(Method::MedMAD, sigma, 2)};
    sc.sampleSizes = {100, 500, 1000};
    sc.components = {{"mu", {0, 1}}, {"s", {2}}};
    out.push_back(std::move(sc));
  }
  return out;
}

namespace {

void writeCsv(const MCReport& r, std::FILE* f) {
  std::fprintf(f, "scenario,estimator,n,component,bias,rmse,reps,failures\n");
  for (const MCCell& c : r.cells)
    std::fprintf(f, "%s,%s,%d,%s,%.17g,%.17g,%d,%d\n", r.scenario.c_str(), c.estimator.c_str(),
                 c.n, c.component.c_str(), c.bias, c.rmse, c.reps, c.failures);
}

void writeJson(const MCReport& r, std::FILE* f) {
  std::fprintf(f, "{\n  \"schema_version\": 1,\n  \"scenario\": \"%s\",\n  \"cells\": [",
               r.scenario.c_str());
  for (size_t i = 0; i < r.cells.size(); ++i) {
    const MCCell& c = r.cells[i];
    std::fprintf(f,
                 "%s\n    {\"estimator\": \"%s\", \"n\": %d, \"component\": \"%s\", "
                 "\"bias\": %.17g, \"rmse\": %.17g, \"reps\": %d, \"failures\": %d}",
                 i == 0 ? "" : ",", c.estimator.c_str(), c.n, c.component.c_str(), c.bias, c.rmse,
                 c.reps, c.failures);
  }
  std::fprintf(f, "\n  ]\n}\n");
}

void writeMarkdown(const MCReport& r, std::FILE* f) {
  // journal-table layout: one row per (n, component), Bias/RMSE pair per estimator
  std::vector<std::string> estimators;
  std::vector<std::pair<int, std::string>> rows;
  for (const MCCell& c : r.cells) {
    if (std::find(estimators.begin(), estimators.end(), c.estimator) == estimators.end())
      estimators.push_back(c.estimator);
    std::pair<int, std::string> key{c.n, c.component};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
  }
  std::sort(rows.begin(), rows.end());

  std::fprintf(f, "# %s\n\n", r.scenario.c_str());
  std::fprintf(f, "| n | Param. |");
  for (const auto& e : estimators) std::fprintf(f, " %s Bias | %s RMSE |", e.c_str(), e.c_str());
  std::fprintf(f, "\n|---|---|");
  for (size_t i = 0; i < estimators.size(); ++i) std::fprintf(f, "---|---|");
  std::fprintf(f, "\n");
  for (const auto& row : rows) {
    std::fprintf(f, "| %d | %s |", row.first, row.second.c_str());
    for (const auto& e : estimators) {
      const MCCell* found = nullptr;
      for (const MCCell& c : r.cells)
        if (c.n == row.first && c.component == row.second && c.estimator == e) found = &c;
      if (found)
        std::fprintf(f, " %.4f | %.4f |", found->bias, found->rmse);
      else
        std::fprintf(f, " - | - |");
    }
    std::fprintf(f, "\n");
  }
}

}  // namespace

void emitReport(const MCReport& report, ReportFormat format, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  switch (format) {
    case ReportFormat::CSV: writeCsv(report, f); break;
    case ReportFormat::JSON: writeJson(report, f); break;
    case ReportFormat::Markdown: writeMarkdown(report, f); break;
  }
  if (std::fclose(f) != 0) throw std::runtime_error("write failure on " + path);
}

MCReport parseCsvReport(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  MCReport r;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8) throw std::runtime_error("malformed report row: " + line);
    r.scenario = fields[0];
    MCCell c;
    c.estimator = fields[1];
    c.n = std::stoi(fields[2]);
    c.component = fields[3];
    c.bias = std::stod(fields[4]);
    c.rmse = std::stod(fields[5]);
    c.reps = std::stoi(fields[6]);
    c.failures = std::stoi(fields[7]);
    r.cells.push_back(std::move(c));
  }
  return r;
}

EstimatorConfig estimatorFromToken(const std::string& token, const ParametricModel& family,
                                   const std::vector<int>& moments, double sigma, double ridge) {
  std::string t;
  for (char ch : token)
    t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  const int dim = family.dim();

  if (t == "wm") {
    if (family.family == Family::CauchyLocation) {
      EstimatorConfig c = weakMomentUnivariateRatio(sigma);
      if (moments.size() == 1) c.momentSet = {MomentIndex::power(moments[0])};
      return c;
    }
    if (family.family == Family::BivariateCauchyLocation) {
      EstimatorConfig c;
      c.method = Method::WeakMoment;
      c.kernel = GaussianKernel(sigma, 2);
      c.momentSet = {MomentIndex::multi(1, 0), MomentIndex::multi(0, 1)};
      c.label = "WM";
      return c;
    }
    // scale families: two-step fit on the family's standard condition set
    t = "gmm-2s";
  }
  if (t == "gmm-i" || t == "gmm-2s") {
    bool twoStep = t == "gmm-2s";
    if (dim == 1) {
      std::vector<int> js = moments.empty() ? std::vector<int>{1, 2} : moments;
      return gmmUnivariate(sigma, twoStep, ridge, js);
    }
    EstimatorConfig c;
    c.method = twoStep ? Method::GMMTwoStep : Method::WeakMoment;
    c.kernel = GaussianKernel(sigma, 2);
    c.momentSet = {MomentIndex::multi(1, 0), MomentIndex::multi(0, 1)};
    if (family.family == Family::BivariateT3LocationScale)
      c.momentSet.push_back(MomentIndex::radial2());
    c.augmentMass = true;
    c.weighting.kind =
        twoStep ? WeightingScheme::Kind::TwoStepOptimal : WeightingScheme::Kind::Identity;
    c.weighting.ridge = ridge;
    c.label = twoStep ? "GMM-2S" : "GMM-I";
    return c;
  }
  if (t == "wcf") {
    EstimatorConfig c;
    c.method = Method::WeakCF;
    c.kernel = GaussianKernel(sigma, 1);
    return c;
  }
  static const std::vector<std::pair<std::string, Method>> benchmarks = {
      {"median", Method::Median},          {"coordmedian", Method::CoordinateMedian},
      {"spatialmedian", Method::SpatialMedian}, {"mle", Method::MLE},
      {"huber", Method::Huber},            {"tukey", Method::Tukey},
      {"meansd", Method::MeanSD},          {"medmad", Method::MedMAD}};
  for (const auto& [name, method] : benchmarks)
    if (t == name) return benchmark(method, sigma, dim);
  throw std::invalid_argument("unknown estimator token: " + token);
}

namespace {

std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

}  // namespace

Scenario parseScenarioFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::map<std::string, int> lineOf;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::runtime_error("scenario file line " + std::to_string(lineNo) +
                                 ": expected key = value");
      continue;
    }
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(val);
    kv[key] = val;
    lineOf[key] = lineNo;
  }

  auto require = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("scenario file: missing field '" + key + "'");
    return it->second;
  };
  auto getOr = [&](const std::string& key, const std::string& def) {
    auto it = kv.find(key);
    return it == kv.end() ? def : it->second;
  };

  const std::string familyName = require("family");
  if (familyName != "cauchy" && familyName != "studentt" && familyName != "bivcauchy" &&
      familyName != "bivt3")
    throw std::runtime_error("scenario file line " + std::to_string(lineOf["family"]) +
                             ": unknown family '" + familyName + "'");
  const double nu = std::stod(getOr("nu", "3"));
  auto makeModel = [&](const std::string& thetaStr) -> ParametricModel {
    std::vector<std::string> parts = splitList(thetaStr);
    std::vector<double> th;
    for (const auto& p : parts) th.push_back(std::stod(p));
    if (familyName == "cauchy") {
      if (th.size() != 1) throw std::runtime_error("scenario file: theta needs 1 value (cauchy)");
      return ParametricModel::cauchy(th[0]);
    }
    if (familyName == "studentt") {
      if (th.size() != 2) throw std::runtime_error("scenario file: theta needs 2 values (studentt)");
      return ParametricModel::studentT(th[0], th[1], nu);
    }
    if (familyName == "bivcauchy") {
      if (th.size() != 2) throw std::runtime_error("scenario file: theta needs 2 values (bivcauchy)");
      return ParametricModel::bivCauchy(th[0], th[1]);
    }
    if (familyName == "bivt3") {
      if (th.size() != 3) throw std::runtime_error("scenario file: theta needs 3 values (bivt3)");
      return ParametricModel::bivT3(th[0], th[1], th[2]);
    }
    throw std::runtime_error("scenario file: unknown family '" + familyName + "'");
  };

  Scenario sc;
  sc.name = getOr("name", "custom");
  ParametricModel base = makeModel(require("theta"));
  double eps = std::stod(getOr("epsilon", "0"));
  ParametricModel contam = eps > 0.0 ? makeModel(require("contaminant_theta")) : base;
  sc.dataModel = ContaminatedModel{base, contam, eps};

  double sigma = std::stod(getOr("sigma", "3"));
  double ridge = std::stod(getOr("ridge", "0.10"));
  std::vector<int> moments;
  for (const auto& tok : splitList(getOr("moments", "")))
    moments.push_back(std::stoi(tok));

  for (const auto& tok : splitList(require("estimators")))
    sc.estimators.push_back(estimatorFromToken(tok, base, moments, sigma, ridge));

  for (const auto& tok : splitList(require("sizes"))) sc.sampleSizes.push_back(std::stoi(tok));
  sc.replications = std::stoi(getOr("replications", "2000"));
  sc.masterSeed = std::stoull(getOr("seed", "42"));

  switch (base.family) {
    case Family::CauchyLocation: sc.components = {{"mu", {0}}}; break;
    case Family::StudentTLocationScale: sc.components = {{"mu", {0}}, {"s", {1}}}; break;
    case Family::BivariateCauchyLocation: sc.components = {{"mu", {0, 1}}}; break;
    case Family::BivariateT3LocationScale:
      sc.components = {{"mu", {0, 1}}, {"s", {2}}};
      break;
  }
  return sc;
}

}  // namespace weakmom
