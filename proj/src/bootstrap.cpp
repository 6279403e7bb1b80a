#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <optional>

#include "msekit/loglinear.hpp"

namespace msekit {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

}  // namespace

BcaResult bca_from_replicates(double point, std::vector<double> replicates, std::span<const double> jackknife,
                              std::span<const double> jackknife_weights, double level) {
  if (replicates.empty()) throw Error("BCa interval needs at least one replicate");
  if (!(level > 0.0 && level < 1.0)) throw Error("interval level must lie in (0, 1)");
  if (jackknife.size() != jackknife_weights.size()) throw Error("jackknife values and weights differ in length");
  std::sort(replicates.begin(), replicates.end());
  BcaResult r;
  r.point = point;
  r.replicates = static_cast<int>(replicates.size());
  if (replicates.front() == replicates.back()) {
    r.lower = r.upper = replicates.front();
    return r;
  }

  const auto b = static_cast<double>(replicates.size());
  const auto below = std::lower_bound(replicates.begin(), replicates.end(), point) - replicates.begin();
  const double frac = std::clamp(static_cast<double>(below) / b, 0.5 / b, 1.0 - 0.5 / b);
  r.z0 = normal_quantile(frac);

  double wsum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < jackknife.size(); ++i) {
    wsum += jackknife_weights[i];
    mean += jackknife_weights[i] * jackknife[i];
  }
  if (wsum > 0.0) {
    mean /= wsum;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < jackknife.size(); ++i) {
      const double d = mean - jackknife[i];
      num += jackknife_weights[i] * d * d * d;
      den += jackknife_weights[i] * d * d;
    }
    if (den > 0.0) r.acceleration = num / (6.0 * std::pow(den, 1.5));
  }

  auto adjusted = [&](double z) {
    const double shift = r.z0 + z;
    const double denom = 1.0 - r.acceleration * shift;
    const double alpha = denom > 0.0 ? normal_cdf(r.z0 + shift / denom) : (shift > 0.0 ? 1.0 : 0.0);
    return sorted_quantile(replicates, std::clamp(alpha, 0.0, 1.0));
  };
  const double z = normal_quantile(0.5 + level / 2.0);
  r.lower = adjusted(-z);
  r.upper = adjusted(z);
  return r;
}

BcaResult bca_interval(const CountTable& table, const TableEstimator& estimator, int replicates, double level,
                       std::uint64_t seed) {
  if (replicates < 50) throw Error("bootstrap needs at least 50 replicates (got " + std::to_string(replicates) + ")");
  const double point = estimator(table);
  const auto n_obs = table.n_obs();
  std::vector<double> probs(table.cell_count(), 0.0);
  for (std::size_t c = 1; c < probs.size(); ++c) probs[c] = static_cast<double>(table.count(static_cast<PatternBits>(c)));

  std::vector<std::optional<double>> values(static_cast<std::size_t>(replicates));
  parallel_for(values.size(), [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<std::int64_t> counts(probs.size(), 0);
    sample_multinomial(rng, n_obs, probs, counts);
    try {
      const double v = estimator(CountTable(table.list_names(), counts));
      if (std::isfinite(v)) values[b] = v;
    } catch (const Error&) {
    }
  });
  std::vector<double> ok;
  for (const auto& v : values)
    if (v) ok.push_back(*v);
  const int failed = replicates - static_cast<int>(ok.size());
  if (failed * 5 > replicates)
    throw Error("estimator failed on " + std::to_string(failed) + " of " + std::to_string(replicates) +
                " bootstrap replicates");

  std::vector<PatternBits> observed;
  for (std::size_t c = 1; c < probs.size(); ++c)
    if (probs[c] > 0) observed.push_back(static_cast<PatternBits>(c));
  std::vector<std::optional<double>> jack(observed.size());
  parallel_for(observed.size(), [&](std::size_t i) {
    CountTable reduced = table;
    reduced.add(observed[i], -1);
    if (reduced.n_obs() == 0) return;
    try {
      const double v = estimator(reduced);
      if (std::isfinite(v)) jack[i] = v;
    } catch (const Error&) {
    }
  });
  std::vector<double> jack_values, jack_weights;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!jack[i]) continue;
    jack_values.push_back(*jack[i]);
    jack_weights.push_back(static_cast<double>(table.count(observed[i])));
  }

  auto r = bca_from_replicates(point, std::move(ok), jack_values, jack_weights, level);
  r.failed = failed;
  return r;
}

}  // namespace msekit
