#pragma once

#include "weakmom/estimators.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace weakmom {

// a reported quantity: one theta component, or a group scored as
// ||theta_hat - theta*|| (the multivariate location convention)
struct ScoreComponent {
  std::string name;
  std::vector<int> idx;
};

struct Scenario {
  std::string name;
  ContaminatedModel dataModel;  // epsilon = 0 for clean studies
  std::vector<EstimatorConfig> estimators;
  std::vector<int> sampleSizes;
  int replications = 2000;
  std::uint64_t masterSeed = 42;
  std::vector<ScoreComponent> components;  // targets scored against the base theta
};

struct MCCell {
  std::string estimator;
  int n = 0;
  std::string component;
  double bias = 0.0;
  double rmse = 0.0;
  int reps = 0;      // successful replications
  int failures = 0;  // non-converged or failed fits, excluded from aggregates
  bool operator==(const MCCell& o) const;
};

struct MCReport {
  std::string scenario;
  std::vector<MCCell> cells;
  bool operator==(const MCReport& o) const;
};

// replications run concurrently on `threads` workers (0 = hardware count);
// aggregation order is fixed by replication index, so the report is
// byte-identical for any thread count
MCReport runScenario(const Scenario& scenario, int threads = 0);

// the five builtin studies: clean and contaminated univariate Cauchy location,
// contaminated univariate t3 location-scale, contaminated bivariate Cauchy
// location, contaminated bivariate t3 location-scale
std::vector<Scenario> builtinScenarios();

enum class ReportFormat { CSV, Markdown, JSON };

void emitReport(const MCReport& report, ReportFormat format, const std::string& path);
MCReport parseCsvReport(const std::string& path);

// key-value scenario config, schema documented in the README
Scenario parseScenarioFile(const std::string& path);

// estimator token -> config following the builtin conventions for the family
EstimatorConfig estimatorFromToken(const std::string& token, const ParametricModel& family,
                                   const std::vector<int>& moments, double sigma, double ridge);

}  // namespace weakmom
