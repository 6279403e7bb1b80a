#include "msekit/bias.hpp"

#include <bit>
#include <cmath>
#include <optional>
#include <ostream>

namespace msekit {

namespace {

double log_binomial(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

}  // namespace

HeterogeneityModel::HeterogeneityModel(std::variant<BetaHeterogeneity, DiscreteHeterogeneity> dist, int lists)
    : dist_(std::move(dist)), lists_(lists) {
  if (lists < 1 || lists > kMaxLists) throw Error("list count out of range");
}

HeterogeneityModel HeterogeneityModel::beta(double a, double b, int lists) {
  if (!(a > 0.0 && b > 0.0)) throw Error("Beta parameters must be positive");
  return HeterogeneityModel(BetaHeterogeneity{a, b}, lists);
}

HeterogeneityModel HeterogeneityModel::discrete(std::vector<double> atoms, std::vector<double> weights, int lists) {
  if (atoms.empty() || atoms.size() != weights.size()) throw Error("mixture needs matching, non-empty atoms and weights");
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!(atoms[i] > 0.0 && atoms[i] <= 1.0)) throw Error("mixture atoms must lie in (0, 1]");
    if (!(weights[i] >= 0.0)) throw Error("mixture weights must be non-negative");
    total += weights[i];
  }
  if (std::fabs(total - 1.0) > 1e-12) throw Error("mixture weights must sum to 1");
  return HeterogeneityModel(DiscreteHeterogeneity{std::move(atoms), std::move(weights)}, lists);
}

double gamma_of(const CellProbabilities& p) {
  long double g = 0.0L;
  const auto probs = p.probs();
  for (std::size_t x = 0; x < probs.size(); ++x) {
    if (!(probs[x] > 0.0)) throw Error("gamma is undefined when a cell probability is zero");
    const long double term = std::log(static_cast<long double>(probs[x]));
    g += (std::popcount(static_cast<PatternBits>(x)) % 2 == 1) ? term : -term;
  }
  return static_cast<double>(g);
}

double asymptotic_relative_bias(double p0, double gamma) {
  if (!(p0 >= 0.0 && p0 < 1.0)) throw Error("p0 must lie in [0, 1)");
  return p0 * std::expm1(gamma);
}

double corollary_multiplier(double p0, double gamma) {
  if (!(p0 >= 0.0 && p0 < 1.0)) throw Error("p0 must lie in [0, 1)");
  return 1.0 + p0 / (1.0 - p0) * std::exp(gamma);
}

CellProbabilities heterogeneity_cell_probs(const HeterogeneityModel& h) {
  const int lists = h.lists();
  std::vector<double> by_weight(static_cast<std::size_t>(lists) + 1);
  if (const auto* b = std::get_if<BetaHeterogeneity>(&h.distribution())) {
    const double base = std::lgamma(b->a + b->b) - std::lgamma(b->a) - std::lgamma(b->b) - std::lgamma(b->a + b->b + lists);
    for (int k = 0; k <= lists; ++k)
      by_weight[static_cast<std::size_t>(k)] = std::exp(base + std::lgamma(b->a + k) + std::lgamma(b->b + lists - k));
  } else {
    const auto& d = std::get<DiscreteHeterogeneity>(h.distribution());
    for (int k = 0; k <= lists; ++k) {
      double s = 0.0;
      for (std::size_t m = 0; m < d.atoms.size(); ++m)
        s += d.weights[m] * std::pow(d.atoms[m], k) * std::pow(1.0 - d.atoms[m], lists - k);
      by_weight[static_cast<std::size_t>(k)] = s;
    }
  }
  std::vector<double> probs(std::size_t{1} << lists);
  long double total = 0.0L;
  for (std::size_t x = 0; x < probs.size(); ++x) {
    probs[x] = by_weight[static_cast<std::size_t>(std::popcount(static_cast<PatternBits>(x)))];
    total += probs[x];
  }
  for (auto& p : probs) p = static_cast<double>(p / total);
  return CellProbabilities(lists, std::move(probs), false);
}

BiasReport beta_bias_summary(double a, double b, int lists) {
  if (!(a > 0.0 && b > 0.0)) throw Error("Beta parameters must be positive");
  if (lists < 2) throw Error("need at least two lists");
  BiasReport r;
  // p0 = B(a, b + L) / B(a, b).
  long double p0 = 1.0L;
  for (int i = 0; i < lists; ++i) p0 *= (b + i) / static_cast<long double>(a + b + i);
  r.p0 = static_cast<double>(p0);
  // log p_k up to a k-free constant: sum_{i<k} log(a+i) + sum_{i<L-k} log(b+i).
  long double g = 0.0L;
  for (int k = 0; k <= lists; ++k) {
    long double lp = 0.0L;
    for (int i = 0; i < k; ++i) lp += std::log(static_cast<long double>(a) + i);
    for (int i = 0; i < lists - k; ++i) lp += std::log(static_cast<long double>(b) + i);
    const long double coef = std::exp(static_cast<long double>(log_binomial(lists, k)));
    g += ((k % 2 == 0) ? -1.0L : 1.0L) * std::round(coef) * lp;
  }
  r.gamma = static_cast<double>(g);
  r.relative_bias = asymptotic_relative_bias(r.p0, r.gamma);
  return r;
}

BiasCurve bias_curve(double p0_target, const std::vector<int>& lists, const std::vector<double>& precisions) {
  if (!(p0_target > 0.0 && p0_target < 1.0)) throw Error("target p0 must lie in (0, 1)");
  BiasCurve curve;
  for (int l : lists) {
    if (l < 2) throw Error("bias curve needs at least two lists");
    for (double s : precisions) {
      const double b = s * std::pow(p0_target, 1.0 / l);
      const double a = s - b;
      if (!(a > 0.0)) {
        curve.notices.push_back("skipped L=" + std::to_string(l) + " precision " + format_double(s) + ": a <= 0");
        continue;
      }
      const auto r = beta_bias_summary(a, b, l);
      curve.points.push_back({l, s, a, b, r.gamma, r.p0, r.relative_bias});
    }
  }
  return curve;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi >= lo) || count < 1) throw Error("log grid needs 0 < lo <= hi and count >= 1");
  if (count == 1) return {lo};
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1)));
  g.back() = hi;
  return g;
}

void write_bias_curve_csv(std::ostream& out, const BiasCurve& curve) {
  out << "L,precision,a,b,gamma,p0,relative_bias\n";
  for (const auto& p : curve.points)
    out << p.lists << ',' << format_double(p.precision, 10) << ',' << format_double(p.a, 10) << ','
        << format_double(p.b, 10) << ',' << format_double(p.gamma, 10) << ',' << format_double(p.p0, 10) << ','
        << format_double(p.relative_bias, 10) << '\n';
}

TableEstimator reference_estimator(ReferenceEstimator kind) {
  switch (kind) {
    case ReferenceEstimator::lincoln_petersen:
      return [](const CountTable& t) { return lincoln_petersen(t); };
    case ReferenceEstimator::independence:
      return [](const CountTable& t) { return fit_loglinear(t, LogLinearModel::independence(t.lists())).n_hat; };
    case ReferenceEstimator::all_two_way:
      return [](const CountTable& t) { return fit_loglinear(t, LogLinearModel::all_two_way(t.lists())).n_hat; };
  }
  throw Error("unknown reference estimator");
}

EmpiricalBiasResult empirical_bias_check(const CellProbabilities& p, const TableEstimator& estimator,
                                         const std::vector<std::int64_t>& populations, int replicates,
                                         std::uint64_t seed) {
  if (replicates < 2) throw Error("need at least two replicates");
  EmpiricalBiasResult result;
  result.limit = 1.0 + asymptotic_relative_bias(p.p0(), gamma_of(p));
  for (std::size_t i = 0; i < populations.size(); ++i) {
    const auto n = populations[i];
    const auto grid_seed = derive_seed(seed, i);
    std::vector<std::optional<double>> ratios(static_cast<std::size_t>(replicates));
    parallel_for(ratios.size(), [&](std::size_t r) {
      try {
        const auto table = simulate_counts(p, n, derive_seed(grid_seed, r));
        const double v = estimator(table);
        if (std::isfinite(v)) ratios[r] = v / static_cast<double>(n);
      } catch (const Error&) {
      }
    });
    EmpiricalBiasRow row;
    row.population = n;
    double sum = 0.0, sq = 0.0;
    int ok = 0;
    for (const auto& r : ratios) {
      if (!r) continue;
      sum += *r;
      sq += *r * *r;
      ++ok;
    }
    row.replicates = ok;
    row.failures = replicates - ok;
    if (row.failures * 5 > replicates || ok < 2)
      throw Error("estimator failed on " + std::to_string(row.failures) + " of " + std::to_string(replicates) +
                  " replicates at N = " + std::to_string(n));
    row.mean_ratio = sum / ok;
    const double var = (sq - ok * row.mean_ratio * row.mean_ratio) / (ok - 1);
    row.std_error = std::sqrt(std::max(var, 0.0) / ok);
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace msekit
