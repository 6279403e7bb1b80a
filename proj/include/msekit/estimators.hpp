#pragma once

// Uniform access to the four population-size estimators.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msekit/common.hpp"
#include "msekit/data.hpp"
#include "msekit/dga.hpp"
#include "msekit/lcmcr.hpp"
#include "msekit/loglinear.hpp"

namespace msekit {

enum class EstimatorKind { independence, sparsemse, dga, lcmcr };

const std::vector<std::string>& estimator_names();
std::string to_string(EstimatorKind kind);
std::optional<EstimatorKind> parse_estimator(std::string_view name);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::independence;
  /// Shared by every estimator; copied into the per-estimator settings.
  std::uint64_t seed = 0;
  double level = 0.95;
  int replicates = 1000;
  double threshold = 0.02;
  SelectionTest selection = SelectionTest::likelihood_ratio;
  DgaPrior dga;
  LcmcrConfig lcmcr;
};

/// Harness budget for the latent-class sampler: 20 chains of 10^4 sweeps.
LcmcrConfig reduced_lcmcr_budget();

Estimate run_estimator(const CountTable& table, const EstimatorConfig& cfg);

struct NamedEstimator {
  std::string name;
  std::function<Estimate(const CountTable&)> run;
};

NamedEstimator make_estimator(const EstimatorConfig& cfg);

}  // namespace msekit
