#include "msekit/lcmcr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace msekit {

namespace {

constexpr double kMaxUnobserved = 9007199254740992.0;  // 2^53

// log of a Gamma(shape, 1) variate, stable for shapes far below 1.
double log_gamma_variate(Rng& rng, double shape) {
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
  const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return std::log(g) + std::log(u > 0.0 ? u : std::numeric_limits<double>::min()) / shape;
}

// log v and log(1 - v) for v ~ Beta(a, b).
std::pair<double, double> log_beta_variate(Rng& rng, double a, double b) {
  const double x = log_gamma_variate(rng, a);
  const double y = log_gamma_variate(rng, b);
  const double m = std::max(x, y);
  const double log_sum = m + std::log(std::exp(x - m) + std::exp(y - m));
  return {x - log_sum, y - log_sum};
}

double beta_variate(Rng& rng, double a, double b) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

// Multinomial draw; per-individual categorical sampling for small n.
void draw_classes(Rng& rng, std::int64_t n, const std::vector<double>& probs, std::vector<std::int64_t>& out) {
  std::fill(out.begin(), out.end(), 0);
  if (n <= 0) return;
  if (n > 16) {
    sample_multinomial(rng, n, probs, out);
    return;
  }
  double total = 0.0;
  for (double p : probs) total += p;
  std::uniform_real_distribution<double> unif(0.0, total);
  for (std::int64_t i = 0; i < n; ++i) {
    double u = unif(rng);
    std::size_t k = 0;
    while (k + 1 < probs.size() && u >= probs[k]) u -= probs[k++];
    ++out[k];
  }
}

// Number of failures before `size` successes with success probability 1 - p0,
// drawn as a Gamma-Poisson mixture.
std::int64_t draw_unobserved(Rng& rng, std::int64_t size, double p0) {
  if (p0 <= 0.0) return 0;
  const double odds = p0 / (1.0 - p0);
  if (!std::isfinite(odds)) return static_cast<std::int64_t>(kMaxUnobserved);
  const double rate = std::gamma_distribution<double>(static_cast<double>(size), odds)(rng);
  if (!(rate < kMaxUnobserved)) return static_cast<std::int64_t>(kMaxUnobserved);
  if (rate <= 0.0) return 0;
  const auto n = std::poisson_distribution<std::int64_t>(rate)(rng);
  return std::min<std::int64_t>(n, static_cast<std::int64_t>(kMaxUnobserved));
}

}  // namespace

void LcmcrConfig::validate() const {
  if (k_max < 1) throw Error("K_max must be at least 1");
  if (!(a_alpha > 0.0 && b_alpha > 0.0)) throw Error("concentration hyperparameters must be positive");
  if (thin_to < 1 || iterations < thin_to) throw Error("need iterations >= thin_to >= 1");
  if (iterations < 2 * static_cast<std::int64_t>(thin_to))
    throw Error("need at least 2 * thin_to iterations (half are burn-in)");
  if (chains < 1) throw Error("need at least one chain");
  if (!(level > 0.0 && level < 1.0)) throw Error("interval level must lie in (0, 1)");
}

ConfigEntries LcmcrConfig::entries() const {
  return {{"k_max", std::to_string(k_max)},
          {"a_alpha", format_double(a_alpha)},
          {"b_alpha", format_double(b_alpha)},
          {"iterations", std::to_string(iterations)},
          {"thin_to", std::to_string(thin_to)},
          {"chains", std::to_string(chains)},
          {"burn_in", "first-half"},
          {"level", format_double(level)}};
}

std::vector<double> GibbsState::weights() const {
  std::vector<double> w(log_v.size());
  double log_rest = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = std::exp(log_v[k] + log_rest);
    log_rest += log_1mv[k];
  }
  return w;
}

double GibbsState::p0(int lists) const {
  const auto w = weights();
  double p = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    double miss = 0.0;
    for (int j = 0; j < lists; ++j) miss += std::log1p(-lambda[k * static_cast<std::size_t>(lists) + static_cast<std::size_t>(j)]);
    p += w[k] * std::exp(miss);
  }
  return p;
}

int GibbsState::occupied() const {
  return static_cast<int>(std::count_if(occupancy.begin(), occupancy.end(), [](std::int64_t m) { return m > 0; }));
}

GibbsState sample_prior_state(int lists, const LcmcrConfig& cfg, Rng& rng) {
  const auto k = static_cast<std::size_t>(cfg.k_max);
  GibbsState s;
  s.alpha = std::gamma_distribution<double>(cfg.a_alpha, 1.0 / cfg.b_alpha)(rng);
  s.alpha = std::max(s.alpha, std::numeric_limits<double>::min());
  s.log_v.assign(k, 0.0);
  s.log_1mv.assign(k, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c + 1 < k; ++c) std::tie(s.log_v[c], s.log_1mv[c]) = log_beta_variate(rng, 1.0, s.alpha);
  s.lambda.resize(k * static_cast<std::size_t>(lists));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& l : s.lambda) l = unif(rng);
  s.occupancy.assign(k, 0);
  return s;
}

GibbsSampler::GibbsSampler(const CountTable& table, const LcmcrConfig& cfg, std::uint64_t chain_seed)
    : table_(table), cfg_(cfg), rng_(chain_seed) {
  cfg_.validate();
  if (table.n_obs() <= 0) throw InestimableError("inestimable: no observed individuals");
  state_ = sample_prior_state(table.lists(), cfg_, rng_);
}

void GibbsSampler::set_table(const CountTable& table) {
  if (table.lists() != table_.lists()) throw Error("table list count changed");
  table_ = table;
}

void GibbsSampler::sweep() {
  const int lists = table_.lists();
  const auto L = static_cast<std::size_t>(lists);
  const auto K = static_cast<std::size_t>(cfg_.k_max);
  auto& s = state_;

  std::vector<double> log_w(K);
  {
    double log_rest = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      log_w[k] = s.log_v[k] + log_rest;
      log_rest += s.log_1mv[k];
    }
  }
  std::vector<double> log_l(K * L), log_1ml(K * L);
  for (std::size_t i = 0; i < K * L; ++i) {
    log_l[i] = std::log(s.lambda[i]);
    log_1ml[i] = std::log1p(-s.lambda[i]);
  }

  // (1) labels of observed individuals, aggregated by pattern.
  std::vector<std::int64_t> captured(K * L, 0);
  std::vector<std::int64_t> occupancy(K, 0);
  std::vector<double> probs(K);
  std::vector<std::int64_t> split(K);
  for (std::size_t x = 1; x < table_.cell_count(); ++x) {
    const auto n = table_.count(static_cast<PatternBits>(x));
    if (n == 0) continue;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      double lp = log_w[k];
      for (std::size_t j = 0; j < L; ++j) lp += ((x >> j) & 1U) ? log_l[k * L + j] : log_1ml[k * L + j];
      probs[k] = lp;
      top = std::max(top, lp);
    }
    for (auto& p : probs) p = std::exp(p - top);
    draw_classes(rng_, n, probs, split);
    for (std::size_t k = 0; k < K; ++k) {
      if (split[k] == 0) continue;
      occupancy[k] += split[k];
      for (std::size_t j = 0; j < L; ++j)
        if ((x >> j) & 1U) captured[k * L + j] += split[k];
    }
  }

  // (2) unobserved count given p0.
  std::vector<double> miss(K);
  double p0 = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    double lm = log_w[k];
    for (std::size_t j = 0; j < L; ++j) lm += log_1ml[k * L + j];
    miss[k] = std::exp(lm);
    p0 += miss[k];
  }
  s.n0 = draw_unobserved(rng_, table_.n_obs(), std::min(p0, 1.0));

  // (3) labels of the unobserved individuals.
  draw_classes(rng_, s.n0, miss, split);
  for (std::size_t k = 0; k < K; ++k) occupancy[k] += split[k];

  // (4) inclusion probabilities.
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < L; ++j) {
      const auto c = static_cast<double>(captured[k * L + j]);
      double l = beta_variate(rng_, 1.0 + c, 1.0 + static_cast<double>(occupancy[k]) - c);
      l = std::clamp(l, 1e-300, 1.0 - 1e-16);
      s.lambda[k * L + j] = l;
    }

  // (5) stick variables.
  std::int64_t tail = 0;
  for (auto m : occupancy) tail += m;
  double sum_log_1mv = 0.0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    tail -= occupancy[k];
    std::tie(s.log_v[k], s.log_1mv[k]) =
        log_beta_variate(rng_, 1.0 + static_cast<double>(occupancy[k]), s.alpha + static_cast<double>(tail));
    sum_log_1mv += s.log_1mv[k];
  }
  s.log_v[K - 1] = 0.0;
  s.log_1mv[K - 1] = -std::numeric_limits<double>::infinity();

  // (6) concentration.
  if (K > 1) {
    const double rate = cfg_.b_alpha - sum_log_1mv;
    s.alpha = std::gamma_distribution<double>(cfg_.a_alpha + static_cast<double>(K) - 1.0, 1.0 / rate)(rng_);
    s.alpha = std::max(s.alpha, std::numeric_limits<double>::min());
  }
  s.occupancy = std::move(occupancy);
}

std::vector<double> ChainSamples::pooled_population() const {
  std::vector<double> out;
  for (const auto& c : chains)
    for (auto n0 : c.n0) out.push_back(static_cast<double>(n_obs + n0));
  return out;
}

std::vector<double> ChainSamples::pooled_p0() const {
  std::vector<double> out;
  for (const auto& c : chains) out.insert(out.end(), c.p0.begin(), c.p0.end());
  return out;
}

ChainDraws gibbs_chain(const CountTable& table, const LcmcrConfig& cfg, std::uint64_t chain_seed) {
  GibbsSampler sampler(table, cfg, chain_seed);
  const std::int64_t burn = cfg.iterations / 2;
  const std::int64_t kept = cfg.iterations - burn;
  ChainDraws d;
  std::int64_t next_index = 0;
  auto retain_at = [&](std::int64_t i) { return burn + ((i + 1) * kept + cfg.thin_to - 1) / cfg.thin_to; };
  std::int64_t target = retain_at(0);
  for (std::int64_t it = 1; it <= cfg.iterations; ++it) {
    sampler.sweep();
    if (it == target) {
      const auto& s = sampler.state();
      d.n0.push_back(s.n0);
      d.p0.push_back(s.p0(table.lists()));
      d.kstar.push_back(s.occupied());
      if (++next_index < cfg.thin_to) target = retain_at(next_index);
    }
  }
  return d;
}

LcmcrResult multi_chain_posterior(const CountTable& table, const LcmcrConfig& cfg) {
  cfg.validate();
  LcmcrResult r;
  r.samples.n_obs = table.n_obs();
  r.samples.chains.resize(static_cast<std::size_t>(cfg.chains));
  parallel_for(r.samples.chains.size(),
               [&](std::size_t c) { r.samples.chains[c] = gibbs_chain(table, cfg, derive_seed(cfg.seed, c)); });

  auto pooled = r.samples.pooled_population();
  std::sort(pooled.begin(), pooled.end());
  Estimate& e = r.estimate;
  e.estimator = "lcmcr";
  e.point = sorted_quantile(pooled, 0.5);
  e.lower = sorted_quantile(pooled, (1.0 - cfg.level) / 2.0);
  e.upper = sorted_quantile(pooled, 1.0 - (1.0 - cfg.level) / 2.0);
  e.level = cfg.level;
  e.seed = cfg.seed;
  e.config = cfg.entries();
  e.fingerprint = fingerprint(e.estimator, e.config);
  if (pooled.back() >= kMaxUnobserved) e.warnings.push_back("unobserved count hit the 2^53 cap in some draws");
  return r;
}

void write_draws_csv(std::ostream& out, const ChainSamples& samples) {
  out << "chain,draw,n0,p0,kstar\n";
  for (std::size_t c = 0; c < samples.chains.size(); ++c) {
    const auto& d = samples.chains[c];
    for (std::size_t i = 0; i < d.n0.size(); ++i)
      out << c << ',' << i << ',' << d.n0[i] << ',' << format_double(d.p0[i], 12) << ',' << d.kstar[i] << '\n';
  }
}

}  // namespace msekit
