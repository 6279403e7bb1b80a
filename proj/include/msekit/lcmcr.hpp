#pragma once

// Latent-class capture-recapture: a truncated stick-breaking mixture of
// independence models sampled by conjugate Gibbs updates, plus multi-chain
// orchestration and convergence diagnostics.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "msekit/common.hpp"
#include "msekit/data.hpp"

namespace msekit {

struct LcmcrConfig {
  int k_max = 10;
  double a_alpha = 0.25;
  /// Rate parameter of the Gamma hyperprior on the concentration.
  double b_alpha = 0.25;
  std::int64_t iterations = 100000;
  int thin_to = 100;
  int chains = 200;
  std::uint64_t seed = 0;
  double level = 0.95;

  void validate() const;
  ConfigEntries entries() const;
};

struct GibbsState {
  /// log v_k and log(1 - v_k) for the stick variables; v_K = 1.
  std::vector<double> log_v;
  std::vector<double> log_1mv;
  /// lambda(k, j) stored row-major with L columns.
  std::vector<double> lambda;
  std::int64_t n0 = 0;
  double alpha = 1.0;
  /// Class occupancy after the last sweep, observed plus unobserved.
  std::vector<std::int64_t> occupancy;

  std::vector<double> weights() const;
  double p0(int lists) const;
  int occupied() const;
};

class GibbsSampler {
 public:
  /// Random initialization: alpha and sticks from the prior, lambda uniform.
  GibbsSampler(const CountTable& table, const LcmcrConfig& cfg, std::uint64_t chain_seed);

  void sweep();
  const GibbsState& state() const { return state_; }
  void set_state(GibbsState s) { state_ = std::move(s); }
  /// Replaces the data; used by successive-conditional simulation.
  void set_table(const CountTable& table);
  Rng& rng() { return rng_; }

 private:
  CountTable table_;
  LcmcrConfig cfg_;
  Rng rng_;
  GibbsState state_;
};

/// Draws (v, lambda, alpha) from the prior.
GibbsState sample_prior_state(int lists, const LcmcrConfig& cfg, Rng& rng);

struct ChainDraws {
  std::vector<std::int64_t> n0;
  std::vector<double> p0;
  std::vector<int> kstar;
};

struct ChainSamples {
  std::int64_t n_obs = 0;
  std::vector<ChainDraws> chains;

  /// n_obs + n0 for every retained draw, chain by chain.
  std::vector<double> pooled_population() const;
  std::vector<double> pooled_p0() const;
};

/// Runs `iterations` sweeps, discards the first half and keeps `thin_to`
/// equally spaced draws from the rest.
ChainDraws gibbs_chain(const CountTable& table, const LcmcrConfig& cfg, std::uint64_t chain_seed);

struct LcmcrResult {
  Estimate estimate;
  ChainSamples samples;
};

/// Chain c is seeded with derive_seed(cfg.seed, c).
LcmcrResult multi_chain_posterior(const CountTable& table, const LcmcrConfig& cfg);

inline Estimate estimate_lcmcr(const CountTable& table, const LcmcrConfig& cfg) {
  return multi_chain_posterior(table, cfg).estimate;
}

/// `chain,draw,n0,p0,kstar`
void write_draws_csv(std::ostream& out, const ChainSamples& samples);

// Convergence diagnostics --------------------------------------------------

/// Split-chain potential scale reduction; nullopt when undefined (zero
/// within-chain variance or too few draws).
std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains, bool rank_normalize = false);

/// Multi-chain effective sample size over split chains with Geyer's initial
/// positive sequence truncation.
std::optional<double> effective_sample_size(const std::vector<std::vector<double>>& chains,
                                            bool rank_normalize = false);

struct QuantityDiagnostics {
  std::optional<double> rhat;
  std::optional<double> ess;
};

struct ConvergenceReport {
  QuantityDiagnostics n0;
  QuantityDiagnostics p0;
  QuantityDiagnostics kstar;
  std::size_t draws = 0;
};

ConvergenceReport convergence_diagnostics(const ChainSamples& samples, bool rank_normalize = false);

/// Local maxima of a Gaussian kernel density estimate (Silverman bandwidth)
/// whose height is at least `min_height` of the tallest mode, in increasing
/// order of location.
std::vector<double> kde_modes(const std::vector<double>& values, double min_height = 0.1);

/// True when the density estimate has two modes separated by a valley lower
/// than half the smaller mode.
bool is_bimodal(const std::vector<double>& values);

}  // namespace msekit
