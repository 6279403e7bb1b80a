#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numeric>

#include "msekit/lcmcr.hpp"

namespace msekit {

namespace {

using Chains = std::vector<std::vector<double>>;

// Halves of every chain (the middle draw of odd-length chains is dropped).
Chains split_chains(const Chains& chains) {
  Chains out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

// Normal scores of pooled fractional ranks (average ranks for ties).
Chains rank_normalized(const Chains& chains) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (double v : chains[c]) all.emplace_back(v, all.size());
  std::vector<double> z(all.size());
  auto sorted = all;
  std::sort(sorted.begin(), sorted.end());
  const auto s = static_cast<double>(all.size());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) ++j;
    const double rank = (static_cast<double>(i + j - 1) / 2.0) + 1.0;
    const double p = (rank - 0.375) / (s + 0.25);
    const double score = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
    for (std::size_t k = i; k < j; ++k) z[sorted[k].second] = score;
    i = j;
  }
  Chains out;
  std::size_t idx = 0;
  for (const auto& c : chains) {
    out.emplace_back();
    for (std::size_t i = 0; i < c.size(); ++i) out.back().push_back(z[idx++]);
  }
  return out;
}

struct Moments {
  double within = 0.0;    // W
  double var_plus = 0.0;  // pooled posterior variance estimate
  std::size_t n = 0;
  std::size_t m = 0;
};

std::optional<Moments> moments(const Chains& chains) {
  if (chains.size() < 2) return std::nullopt;
  const std::size_t n = chains.front().size();
  if (n < 2) return std::nullopt;
  for (const auto& c : chains)
    if (c.size() != n) return std::nullopt;
  const auto m = chains.size();
  std::vector<double> means(m);
  double within = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    means[i] = std::accumulate(chains[i].begin(), chains[i].end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : chains[i]) ss += (v - means[i]) * (v - means[i]);
    within += ss / static_cast<double>(n - 1);
  }
  within /= static_cast<double>(m);
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= static_cast<double>(n) / static_cast<double>(m - 1);
  if (!(within > 0.0)) return std::nullopt;
  const auto nd = static_cast<double>(n);
  return Moments{within, (nd - 1.0) / nd * within + between / nd, n, m};
}

Chains prepare(const Chains& chains, bool rank_normalize) {
  auto c = split_chains(chains);
  return rank_normalize ? rank_normalized(c) : c;
}

double silverman_bandwidth(const std::vector<double>& values) {
  const auto n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = quantile(values, 0.75) - quantile(values, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(n, -0.2);
}

}  // namespace

std::optional<double> split_rhat(const Chains& chains, bool rank_normalize) {
  const auto mo = moments(prepare(chains, rank_normalize));
  if (!mo) return std::nullopt;
  return std::sqrt(mo->var_plus / mo->within);
}

std::optional<double> effective_sample_size(const Chains& chains, bool rank_normalize) {
  const auto c = prepare(chains, rank_normalize);
  const auto mo = moments(c);
  if (!mo) return std::nullopt;
  const std::size_t n = mo->n;
  const std::size_t m = mo->m;

  std::vector<double> means(m);
  for (std::size_t i = 0; i < m; ++i) means[i] = std::accumulate(c[i].begin(), c[i].end(), 0.0) / static_cast<double>(n);
  // Mean over chains of the lag-t autocovariance (biased, divisor n).
  auto autocov = [&](std::size_t lag) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t + lag < n; ++t) s += (c[i][t] - means[i]) * (c[i][t + lag] - means[i]);
      total += s / static_cast<double>(n);
    }
    return total / static_cast<double>(m);
  };
  const double var0 = autocov(0) * static_cast<double>(n) / static_cast<double>(n - 1);
  auto rho = [&](std::size_t lag) { return 1.0 - (var0 - autocov(lag)) / mo->var_plus; };

  // Geyer initial positive sequence over paired sums.
  double sum_pairs = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    sum_pairs += pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum_pairs, 1.0 / std::log10(static_cast<double>(n * m) + 10.0));
  return static_cast<double>(n * m) / tau;
}

ConvergenceReport convergence_diagnostics(const ChainSamples& samples, bool rank_normalize) {
  Chains n0, p0, kstar;
  for (const auto& c : samples.chains) {
    n0.emplace_back(c.n0.begin(), c.n0.end());
    p0.push_back(c.p0);
    kstar.emplace_back(c.kstar.begin(), c.kstar.end());
  }
  auto diag = [&](const Chains& ch) {
    QuantityDiagnostics q;
    q.rhat = split_rhat(ch, rank_normalize);
    q.ess = effective_sample_size(ch, rank_normalize);
    return q;
  };
  ConvergenceReport r;
  r.n0 = diag(n0);
  r.p0 = diag(p0);
  r.kstar = diag(kstar);
  for (const auto& c : samples.chains) r.draws += c.n0.size();
  return r;
}

std::vector<double> kde_modes(const std::vector<double>& values, double min_height) {
  if (values.size() < 2) return values;
  const double h = silverman_bandwidth(values);
  if (!(h > 0.0)) return {values.front()};

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it - 3.0 * h;
  const double hi = *hi_it + 3.0 * h;
  constexpr int kGrid = 512;
  std::vector<double> dens(kGrid, 0.0);
  for (int g = 0; g < kGrid; ++g) {
    const double x = lo + (hi - lo) * g / (kGrid - 1);
    for (double v : values) {
      const double u = (x - v) / h;
      dens[static_cast<std::size_t>(g)] += std::exp(-0.5 * u * u);
    }
  }
  const double top = *std::max_element(dens.begin(), dens.end());
  std::vector<double> modes;
  for (int g = 1; g + 1 < kGrid; ++g) {
    const auto i = static_cast<std::size_t>(g);
    if (dens[i] >= dens[i - 1] && dens[i] > dens[i + 1] && dens[i] >= min_height * top)
      modes.push_back(lo + (hi - lo) * g / (kGrid - 1));
  }
  return modes;
}

bool is_bimodal(const std::vector<double>& values) {
  const auto modes = kde_modes(values, 0.05);
  if (modes.size() < 2) return false;
  const double h = silverman_bandwidth(values);
  auto density = [&](double x) {
    double d = 0.0;
    for (double v : values) d += std::exp(-0.5 * ((x - v) / h) * ((x - v) / h));
    return d;
  };
  for (std::size_t i = 0; i + 1 < modes.size(); ++i) {
    const double a = density(modes[i]);
    const double b = density(modes[i + 1]);
    double valley = std::min(a, b);
    for (int g = 1; g < 200; ++g) valley = std::min(valley, density(modes[i] + (modes[i + 1] - modes[i]) * g / 200.0));
    if (valley < 0.5 * std::min(a, b)) return true;
  }
  return false;
}

}  // namespace msekit
