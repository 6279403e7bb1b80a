#pragma once

// Poisson log-linear models over the observed cells of a count table:
//
//   log E[n_x] = mu + sum_j x_j alpha_j + sum_{S in terms} prod_{j in S} x_j beta_S
//
// The full L-way term is never admitted, so the unobserved count is
// estimated as exp(mu). Fitting uses extended maximum likelihood: cells that
// must have zero fitted mean (the complement of the facial set) are removed
// and the coefficients that only act on them are reported as -infinity.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msekit/common.hpp"
#include "msekit/data.hpp"

namespace msekit {

/// Subset of lists; 0 is the intercept and single bits are main effects.
using Term = PatternBits;

class LogLinearModel {
 public:
  /// `terms` are interaction terms (at least two lists, fewer than L).
  explicit LogLinearModel(int lists, std::vector<Term> terms = {});

  static LogLinearModel independence(int lists) { return LogLinearModel(lists); }
  static LogLinearModel all_two_way(int lists);

  int lists() const { return lists_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool contains(Term term) const;
  LogLinearModel with_term(Term term) const;
  /// "NG*PFNCA + LA*GP" style description; "independence" when empty.
  std::string describe(const std::vector<std::string>& names) const;

  friend bool operator==(const LogLinearModel&, const LogLinearModel&) = default;

 private:
  int lists_;
  std::vector<Term> terms_;
};

struct FitResult {
  LogLinearModel model;
  /// Keyed by term; includes the intercept (0) and main effects.
  std::map<Term, double> coefficients;
  /// Asymptotic standard errors of the finite coefficients.
  std::map<Term, double> std_errors;
  /// Indexed by pattern bits; entry 0 holds the fitted unobserved count.
  std::vector<double> fitted;
  double deviance = 0.0;
  double n0_hat = 0.0;
  double n_hat = 0.0;
  int iterations = 0;
  /// Observed cells outside the facial set (fitted mean forced to zero).
  std::vector<PatternBits> boundary_cells;
};

/// Throws InestimableError when the population size is not identified and
/// ConvergenceError after 10^4 Newton iterations.
FitResult fit_loglinear(const CountTable& table, const LogLinearModel& model);

/// n1 * n2 / m for a two-list table.
double lincoln_petersen(const CountTable& table);

// Bootstrap ----------------------------------------------------------------

using TableEstimator = std::function<double(const CountTable&)>;

struct BcaResult {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double z0 = 0.0;
  double acceleration = 0.0;
  int replicates = 0;
  int failed = 0;
};

/// Bias-corrected and accelerated interval from precomputed replicates and
/// grouped jackknife values (value, weight = number of individuals deleted
/// in that group). Failed replicates must already be removed.
BcaResult bca_from_replicates(double point, std::vector<double> replicates, std::span<const double> jackknife,
                              std::span<const double> jackknife_weights, double level);

/// Nonparametric bootstrap over individuals (multinomial resampling of the
/// observed patterns) with acceleration from the delete-one-individual
/// jackknife. Replicate b uses derive_seed(seed, b). Throws for B < 50 or
/// when more than 20% of replicates fail.
BcaResult bca_interval(const CountTable& table, const TableEstimator& estimator, int replicates, double level,
                       std::uint64_t seed);

// Estimators ---------------------------------------------------------------

struct BootstrapConfig {
  int replicates = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

Estimate estimate_independence(const CountTable& table, const BootstrapConfig& cfg);

struct StepRecord {
  Term term;
  double p_value;
  double deviance;
};

struct StepwiseResult {
  LogLinearModel model;
  std::vector<StepRecord> steps;
  std::vector<std::string> warnings;
};

enum class SelectionTest {
  /// Deviance difference against chi-square with 1 df.
  likelihood_ratio,
  /// z statistic of the added coefficient; boundary terms get p = 1.
  wald,
};

/// Forward selection of two-way terms. A term enters while its p-value is
/// strictly below `threshold`; ties go to the lexicographically first pair.
StepwiseResult stepwise_select(const CountTable& table, double threshold,
                               SelectionTest test = SelectionTest::likelihood_ratio);

struct SparseMseConfig {
  double threshold = 0.02;
  SelectionTest test = SelectionTest::likelihood_ratio;
  BootstrapConfig bootstrap;
};

/// Stepwise selection re-run inside every bootstrap replicate.
Estimate estimate_sparsemse(const CountTable& table, const SparseMseConfig& cfg);

}  // namespace msekit
