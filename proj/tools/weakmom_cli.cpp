#include "weakmom/estimators.hpp"
#include "weakmom/reconstruction.hpp"
#include "weakmom/robustness.hpp"
#include "weakmom/simharness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace {

using namespace weakmom;

// exit codes: 0 success, 1 usage, 2 input, 3 numerical
struct CliError {
  int code;
  std::string msg;
};

Eigen::MatrixXd readDataFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError{2, "cannot open data file: " + path};
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineNo = 0;
  Eigen::Index cols = -1;
  while (std::getline(in, line)) {
    ++lineNo;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    for (char& c : line)
      if (c == ',') c = ' ';
    std::stringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        row.push_back(v);
      } catch (const std::exception&) {
        throw CliError{2, path + ":" + std::to_string(lineNo) + ": not a number: '" + tok + "'"};
      }
    }
    if (row.empty()) continue;
    if (cols < 0) cols = static_cast<Eigen::Index>(row.size());
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw CliError{2, path + ":" + std::to_string(lineNo) + ": expected " +
                            std::to_string(cols) + " columns, got " + std::to_string(row.size())};
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CliError{2, path + ": no observations"};
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      data(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<size_t>(j)];
  return data;
}

ParametricModel familyPrototype(const std::string& name, const std::vector<double>& theta,
                                double nu) {
  auto at = [&](size_t i, double def) { return theta.size() > i ? theta[i] : def; };
  if (name == "cauchy") return ParametricModel::cauchy(at(0, 0.0));
  if (name == "studentt") return ParametricModel::studentT(at(0, 0.0), at(1, 1.0), nu);
  if (name == "bivcauchy") return ParametricModel::bivCauchy(at(0, 0.0), at(1, 0.0));
  if (name == "bivt3") return ParametricModel::bivT3(at(0, 0.0), at(1, 0.0), at(2, 1.0));
  throw CliError{1, "unknown family: " + name + " (cauchy|studentt|bivcauchy|bivt3)"};
}

struct CommonFlags {
  std::string family = "cauchy";
  std::vector<double> theta;
  double nu = 3.0;
  double sigma = 3.0;
  std::vector<int> moments;
  std::string weighting = "identity";
  double ridge = 0.10;
};

void addModelFlags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--family", f.family, "model family: cauchy|studentt|bivcauchy|bivt3");
  cmd->add_option("--theta", f.theta, "model parameters (comma separated)")->delimiter(',');
  cmd->add_option("--nu", f.nu, "degrees of freedom for studentt");
  cmd->add_option("--sigma", f.sigma, "kernel bandwidth")->check(CLI::PositiveNumber);
  cmd->add_option("--j,--moments", f.moments, "weak moment orders")->delimiter(',');
  cmd->add_option("--weighting", f.weighting, "identity|twostep");
  cmd->add_option("--ridge", f.ridge, "ridge added to the estimated score covariance");
}

int cmdEstimate(const std::string& dataPath, const CommonFlags& f, const std::string& method,
                const std::string& outJson) {
  Eigen::MatrixXd data = readDataFile(dataPath);
  ParametricModel family = familyPrototype(f.family, f.theta, f.nu);
  if (data.cols() != family.dim())
    throw CliError{2, "data has " + std::to_string(data.cols()) + " columns but family " +
                          f.family + " is " + std::to_string(family.dim()) + "-dimensional"};

  EstimatorConfig cfg;
  try {
    cfg = estimatorFromToken(method, family, f.moments, f.sigma, f.ridge);
  } catch (const std::invalid_argument& e) {
    throw CliError{1, e.what()};
  }
  if (f.weighting == "twostep" && cfg.method == Method::WeakMoment)
    cfg.weighting.kind = WeightingScheme::Kind::TwoStepOptimal;

  EstimateResult res = estimate(data, family, cfg);

  std::printf("method: %s\n", res.method.c_str());
  std::printf("n: %d\n", static_cast<int>(data.rows()));
  std::printf("theta_hat:");
  for (Eigen::Index i = 0; i < res.theta.size(); ++i) std::printf(" %.10g", res.theta(i));
  std::printf("\nconverged: %s\n", res.converged ? "yes" : "no");
  if (res.asymptoticCov) {
    std::printf("se:");
    for (Eigen::Index i = 0; i < res.theta.size(); ++i)
      std::printf(" %.10g", std::sqrt(std::max(0.0, (*res.asymptoticCov)(i, i))));
    std::printf("\n");
  }
  std::printf("objective: %.10g\n", res.objective);

  if (!outJson.empty()) {
    std::FILE* out = std::fopen(outJson.c_str(), "w");
    if (!out) throw CliError{2, "cannot open output file: " + outJson};
    std::fprintf(out, "{\n  \"schema_version\": 1,\n  \"method\": \"%s\",\n  \"theta\": [",
                 res.method.c_str());
    for (Eigen::Index i = 0; i < res.theta.size(); ++i)
      std::fprintf(out, "%s%.17g", i ? ", " : "", res.theta(i));
    std::fprintf(out, "],\n  \"converged\": %s,\n  \"objective\": %.17g",
                 res.converged ? "true" : "false", res.objective);
    if (res.asymptoticCov) {
      std::fprintf(out, ",\n  \"se\": [");
      for (Eigen::Index i = 0; i < res.theta.size(); ++i)
        std::fprintf(out, "%s%.17g", i ? ", " : "",
                     std::sqrt(std::max(0.0, (*res.asymptoticCov)(i, i))));
      std::fprintf(out, "]");
    }
    std::fprintf(out, "\n}\n");
    std::fclose(out);
  }
  return res.converged ? 0 : 3;
}

int cmdDiagnose(const CommonFlags& f, bool augmentMass, int gridPoints, const std::string& outCsv) {
  ParametricModel model = familyPrototype(f.family, f.theta, f.nu);
  GaussianKernel kernel(f.sigma, model.dim());

  WeakSystem sys;
  std::vector<int> js = f.moments.empty() ? std::vector<int>{1} : f.moments;
  for (int j : js) sys.set.push_back(MomentIndex::power(j));
  sys.augmentMass = augmentMass;
  sys.weighting.kind = f.weighting == "twostep" ? WeightingScheme::Kind::TwoStepOptimal
                                                : WeightingScheme::Kind::Identity;
  sys.weighting.ridge = f.ridge;
  // canonical univariate just-identified convention: mass-normalised ratio
  sys.massNormalised = model.paramCount() == 1 && sys.set.size() == 1 && !augmentMass &&
                       sys.weighting.kind == WeightingScheme::Kind::Identity;

  double ges = grossErrorSensitivity(model, kernel, sys);
  Eigen::MatrixXd V = asymptoticVariance(model, kernel, sys);
  std::printf("gross error sensitivity: %.10g\n", ges);
  std::printf("asymptotic variance:");
  for (Eigen::Index i = 0; i < V.rows(); ++i) std::printf(" %.10g", V(i, i));
  std::printf("\n");

  if (model.dim() == 1) {
    double mg = medianGES(model);
    double mv = medianAsymptoticVariance(model);
    std::printf("median GES: %.10g\n", mg);
    std::printf("median variance: %.10g\n", mv);
    if (model.paramCount() == 1)
      std::printf("efficiency vs median: %.10g\n", mv / V(0, 0));
    InfluenceProfile prof = influenceProfile(model, kernel, sys, QuadratureSpec(), gridPoints);
    writeInfluenceCsv(prof, outCsv);
    std::printf("influence profile: %s (%d rows)\n", outCsv.c_str(),
                static_cast<int>(prof.grid.size()));
  }
  return 0;
}

int cmdReconstruct(const std::string& dataPath, const std::string& gPath, double lambda,
                   double sigma, int points, double bandwidth, const std::string& outCsv) {
  if (lambda <= 0.0) throw CliError{1, "--lambda must be positive"};
  GaussianKernel kernel(sigma, 1);
  GridFunction g;
  if (!gPath.empty()) {
    try {
      g = readGridCsv(gPath);
    } catch (const std::exception& e) {
      throw CliError{2, e.what()};
    }
  } else if (!dataPath.empty()) {
    Eigen::MatrixXd data = readDataFile(dataPath);
    BumpConfig bump;
    bump.bandwidth = bandwidth;
    g = empiricalForward(data, kernel, makeGrid(kernel, points), bump);
  } else {
    throw CliError{1, "reconstruct needs --data or --g"};
  }
  GridFunction h = tikhonovInvert(g, kernel, TikhonovConfig{lambda});
  writeGridCsv(h, outCsv);
  double resid = l2Distance(forwardMultiply(h, kernel), g);
  std::printf("reconstruction: %s (%d rows)\n", outCsv.c_str(), static_cast<int>(h.size()));
  std::printf("forward residual: %.10g\n", resid);
  return 0;
}

int cmdSimulate(const std::string& which, int reps, long long seed, int threads,
                const std::string& format, std::string outPath) {
  Scenario sc;
  bool found = false;
  for (Scenario& b : builtinScenarios()) {
    if (b.name == which) {
      sc = std::move(b);
      found = true;
      break;
    }
  }
  if (!found) {
    std::ifstream probe(which);
    if (!probe) throw CliError{2, "no builtin scenario or readable file named '" + which + "'"};
    try {
      sc = parseScenarioFile(which);
    } catch (const std::exception& e) {
      throw CliError{2, e.what()};
    }
  }
  if (reps > 0) sc.replications = reps;
  if (seed >= 0) sc.masterSeed = static_cast<std::uint64_t>(seed);

  ReportFormat fmt;
  std::string ext;
  if (format == "csv") {
    fmt = ReportFormat::CSV;
    ext = "csv";
  } else if (format == "md" || format == "markdown") {
    fmt = ReportFormat::Markdown;
    ext = "md";
  } else if (format == "json") {
    fmt = ReportFormat::JSON;
    ext = "json";
  } else {
    throw CliError{1, "unknown format: " + format + " (csv|md|json)"};
  }
  if (outPath.empty()) outPath = sc.name + "_report." + ext;

  auto t0 = std::chrono::steady_clock::now();
  MCReport report = runScenario(sc, threads);
  auto t1 = std::chrono::steady_clock::now();
  emitReport(report, fmt, outPath);

  int failures = 0;
  for (const MCCell& c : report.cells) failures = std::max(failures, c.failures);
  double secs = std::chrono::duration<double>(t1 - t0).count();
  std::printf("scenario: %s\n", sc.name.c_str());
  std::printf("replications: %d\n", sc.replications);
  std::printf("elapsed: %.2f s\n", secs);
  std::printf("max failures per cell: %d\n", failures);
  std::printf("report: %s\n", outPath.c_str());
  return 0;
}

int cmdScenarios() {
  for (const Scenario& sc : builtinScenarios()) {
    std::string sizes;
    for (size_t i = 0; i < sc.sampleSizes.size(); ++i)
      sizes += (i ? "," : "") + std::to_string(sc.sampleSizes[i]);
    std::printf("%-8s eps=%.2f reps=%d n={%s} estimators=%d\n", sc.name.c_str(),
                sc.dataModel.epsilon, sc.replications, sizes.c_str(),
                static_cast<int>(sc.estimators.size()));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak-moment inference for heavy-tailed models"};
  app.require_subcommand(1);

  CommonFlags est, diag;
  std::string dataPath, method = "wm", outJson;
  auto* estimate = app.add_subcommand("estimate", "fit a model to a data file");
  estimate->add_option("data", dataPath, "data file, one observation per row")->required();
  addModelFlags(estimate, est);
  estimate->add_option("--method", method,
                       "wm|gmm-i|gmm-2s|wcf|median|coordmedian|spatialmedian|mle|huber|tukey|"
                       "meansd|medmad");
  estimate->add_option("--out", outJson, "write the result as JSON");

  bool diagMass = false;
  int diagGrid = 0;
  std::string diagOut = "influence.csv";
  auto* diagnose = app.add_subcommand("diagnose", "influence function and variance diagnostics");
  addModelFlags(diagnose, diag);
  diagnose->add_flag("--mass", diagMass, "augment the system with the mass condition");
  diagnose->add_option("--grid", diagGrid, "equispaced profile grid size (default: graded)");
  diagnose->add_option("--out", diagOut, "influence profile CSV path");

  std::string recData, recG, recOut = "reconstruction.csv";
  double lambda = 0.0, recSigma = 3.0, recBandwidth = 0.0;
  int recPoints = 4096;
  auto* reconstruct = app.add_subcommand("reconstruct", "Tikhonov density reconstruction");
  reconstruct->add_option("--data", recData, "raw data file (univariate)");
  reconstruct->add_option("--g", recG, "kernel-weighted density CSV (x,value)");
  reconstruct->add_option("--lambda", lambda, "regularisation strength")->required();
  reconstruct->add_option("--sigma", recSigma, "kernel bandwidth")->check(CLI::PositiveNumber);
  reconstruct->add_option("--points", recPoints, "grid size");
  reconstruct->add_option("--bandwidth", recBandwidth, "smoothing bump bandwidth (data route)");
  reconstruct->add_option("--out", recOut, "output CSV path");

  std::string simName, simFormat = "csv", simOut;
  int simReps = 0, simThreads = 0;
  long long simSeed = -1;
  auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo scenario");
  simulate->add_option("scenario", simName, "builtin name (see `scenarios`) or config file")
      ->required();
  simulate->add_option("--reps", simReps, "replication count override");
  simulate->add_option("--seed", simSeed, "master seed override");
  simulate->add_option("--threads", simThreads, "worker threads (0 = hardware)");
  simulate->add_option("--format", simFormat, "csv|md|json");
  simulate->add_option("--out", simOut, "report path");

  app.add_subcommand("scenarios", "list builtin scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand("estimate")) return cmdEstimate(dataPath, est, method, outJson);
    if (app.got_subcommand("diagnose")) return cmdDiagnose(diag, diagMass, diagGrid, diagOut);
    if (app.got_subcommand("reconstruct"))
      return cmdReconstruct(recData, recG, lambda, recSigma, recPoints, recBandwidth, recOut);
    if (app.got_subcommand("simulate"))
      return cmdSimulate(simName, simReps, simSeed, simThreads, simFormat, simOut);
    if (app.got_subcommand("scenarios")) return cmdScenarios();
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.msg.c_str());
    return e.code;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  }
  return 1;
}
