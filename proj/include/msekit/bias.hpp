#pragma once

// Asymptotic bias of estimators that assume no full-way interaction:
// gamma (the full-way interaction of the cell probabilities), the limiting
// relative bias p0 (e^gamma - 1), heterogeneity models for individual
// capture probabilities and Monte Carlo checks of the limit.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "msekit/common.hpp"
#include "msekit/data.hpp"
#include "msekit/loglinear.hpp"

namespace msekit {

struct BetaHeterogeneity {
  double a;
  double b;
};

struct DiscreteHeterogeneity {
  std::vector<double> atoms;
  std::vector<double> weights;
};

/// Every individual draws one capture probability lambda ~ F and appears on
/// each of the L lists independently with that probability.
class HeterogeneityModel {
 public:
  static HeterogeneityModel beta(double a, double b, int lists);
  static HeterogeneityModel discrete(std::vector<double> atoms, std::vector<double> weights, int lists);

  int lists() const { return lists_; }
  const std::variant<BetaHeterogeneity, DiscreteHeterogeneity>& distribution() const { return dist_; }

 private:
  HeterogeneityModel(std::variant<BetaHeterogeneity, DiscreteHeterogeneity> dist, int lists);
  std::variant<BetaHeterogeneity, DiscreteHeterogeneity> dist_;
  int lists_;
};

/// sum_x (-1)^(|x|+1) log p_x over all 2^L cells. Throws for a zero cell.
double gamma_of(const CellProbabilities& p);

/// p0 (e^gamma - 1). Throws for p0 outside [0, 1).
double asymptotic_relative_bias(double p0, double gamma);

/// Approximate N_hat / n_obs multiplier 1 + p0 / (1 - p0) e^gamma.
double corollary_multiplier(double p0, double gamma);

/// p_x = E[lambda^|x| (1 - lambda)^(L - |x|)], normalized to sum 1. Cells may
/// be zero for discrete models with atoms at 1.
CellProbabilities heterogeneity_cell_probs(const HeterogeneityModel& h);

struct BiasReport {
  double gamma = 0.0;
  double p0 = 0.0;
  double relative_bias = 0.0;
};

/// Exact p0 and gamma for the Beta(a, b) model with L lists.
BiasReport beta_bias_summary(double a, double b, int lists);

struct BiasCurvePoint {
  int lists;
  double precision;
  double a;
  double b;
  double gamma;
  double p0;
  double relative_bias;
};

struct BiasCurve {
  std::vector<BiasCurvePoint> points;
  /// Grid points skipped because a = s - b was not positive.
  std::vector<std::string> notices;
};

/// For each L and precision s: b = s p0_target^(1/L), a = s - b.
BiasCurve bias_curve(double p0_target, const std::vector<int>& lists, const std::vector<double>& precisions);

/// `count` points spaced evenly in log between lo and hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

/// `L,precision,a,b,gamma,p0,relative_bias`
void write_bias_curve_csv(std::ostream& out, const BiasCurve& curve);

enum class ReferenceEstimator { lincoln_petersen, independence, all_two_way };

/// The fitted N_hat of the named estimator (no intervals).
TableEstimator reference_estimator(ReferenceEstimator kind);

struct EmpiricalBiasRow {
  std::int64_t population = 0;
  double mean_ratio = 0.0;
  double std_error = 0.0;
  int replicates = 0;
  int failures = 0;
};

struct EmpiricalBiasResult {
  /// 1 + p0 (e^gamma - 1).
  double limit = 0.0;
  std::vector<EmpiricalBiasRow> rows;
};

/// Simulates `replicates` tables per population size and reports the mean and
/// standard error of N_hat / N. Replicate r at grid index i uses
/// derive_seed(derive_seed(seed, i), r). Throws when more than 20% fail.
EmpiricalBiasResult empirical_bias_check(const CellProbabilities& p, const TableEstimator& estimator,
                                         const std::vector<std::int64_t>& populations, int replicates,
                                         std::uint64_t seed);

}  // namespace msekit
