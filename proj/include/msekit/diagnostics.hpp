#pragma once

// Evaluation harnesses: internal consistency against conditioned datasets,
// estimate trajectories over growing subsamples and parameter sweeps.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "msekit/common.hpp"
#include "msekit/data.hpp"
#include "msekit/estimators.hpp"

namespace msekit {

// Internal consistency -----------------------------------------------------

struct EstimatorOutcome {
  std::string estimator;
  std::optional<Estimate> estimate;
  /// log(N_hat / truth); NaN when the estimate failed or is non-finite.
  double log_bias = 0.0;
  bool covered = false;
  std::string error;

  bool usable() const;
};

struct ConsistencyRow {
  std::string dataset;
  std::string reference;
  std::int64_t truth = 0;
  std::int64_t n_obs = 0;
  std::int64_t overlap = 0;
  std::vector<EstimatorOutcome> outcomes;
  /// Some estimator failed or returned a non-finite point.
  bool outlier = false;
  std::string outlier_reason;
};

struct ConsistencyRun {
  std::vector<ConsistencyRow> rows;
  std::vector<Exclusion> exclusions;
};

/// Every (dataset, list) conditioning with at least `min_obs` remaining
/// cases, each estimator run once per row.
ConsistencyRun run_internal_consistency(const std::vector<Dataset>& datasets,
                                        const std::vector<NamedEstimator>& estimators, std::int64_t min_obs = 30);

struct ConsistencyMetrics {
  std::string estimator;
  double mean = 0.0;
  double rmse = 0.0;
  double median = 0.0;
  /// Covered fraction of the rows used for mean/RMSE/median.
  double coverage = 0.0;
  /// Covered fraction of all rows; failed estimates count as not covered.
  double coverage_all_rows = 0.0;
  std::size_t rows_used = 0;
  std::size_t rows_total = 0;
};

/// Drops outlier rows for every estimator, or with `per_estimator_drop` only
/// the rows where that estimator itself failed. Throws when an estimator has
/// no usable row.
std::vector<ConsistencyMetrics> consistency_metrics(const ConsistencyRun& run, bool per_estimator_drop = false);

/// `dataset,reference,truth,estimator,point,lower,upper,logbias,covered,outlier`
void write_consistency_csv(std::ostream& out, const ConsistencyRun& run);

// Trajectories -------------------------------------------------------------

struct TrajectoryPoint {
  std::int64_t m = 0;
  std::optional<Estimate> estimate;
  std::string error;

  double ratio() const;
};

struct TrajectorySeries {
  std::string dataset;
  std::string estimator;
  std::uint64_t seed = 0;
  std::vector<TrajectoryPoint> points;
};

/// `count` evenly spaced values in [max(30, n/20), 2n] plus n, deduplicated.
std::vector<std::int64_t> default_checkpoints(std::int64_t n, int count = 50);

/// Patterns of the n individuals in an order drawn from `seed`, followed by
/// a second, independently shuffled copy (length 2n).
std::vector<PatternBits> trajectory_sequence(const CountTable& table, std::uint64_t seed);

/// Count table of the first m entries of a sequence.
CountTable prefix_table(const std::vector<std::string>& names, const std::vector<PatternBits>& sequence, std::int64_t m);

/// Failed checkpoints are recorded with an error and no estimate.
TrajectorySeries estimate_trajectory(const Dataset& d, const NamedEstimator& estimator,
                                     const std::vector<std::int64_t>& checkpoints, std::uint64_t seed);

/// `dataset,estimator,seed,m,point,lower,upper,ratio`
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySeries>& series);

// Sensitivity sweeps -------------------------------------------------------

enum class SweepKind { sparsemse_threshold, dga_kappa, dga_beta };

std::string to_string(SweepKind kind);
std::optional<SweepKind> parse_sweep_kind(std::string_view name);

struct SweepRow {
  double value = 0.0;
  std::optional<Estimate> estimate;
  std::string error;
};

struct SweepResult {
  SweepKind kind;
  std::vector<SweepRow> rows;
};

/// One estimate per grid value with every other setting taken from `fixed`.
SweepResult sensitivity_sweep(const CountTable& table, SweepKind kind, const std::vector<double>& grid,
                              const EstimatorConfig& fixed);

/// `kind,value,point,lower,upper`
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

}  // namespace msekit
