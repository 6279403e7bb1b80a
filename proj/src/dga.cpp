#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include "msekit/dga.hpp"

namespace msekit {

namespace {

constexpr double kSkipMargin = 40.0;

void check_prior(const DgaPrior& prior) {
  if (!(prior.kappa > 0.0 && prior.kappa < 1.0)) throw Error("kappa must lie in (0, 1)");
  if (!(prior.edge_beta > 0.0 && prior.edge_beta < 1.0)) throw Error("edge prior beta must lie in (0, 1)");
}

// Prior counts of margin A: the kappa independence model marginalizes to
// kappa^|c| (1 - kappa)^(|A| - |c|) for a margin cell c.
double margin_prior(PatternBits cell, PatternBits margin, double kappa) {
  const int on = std::popcount(cell);
  const int off = std::popcount(margin) - on;
  return std::pow(kappa, on) * std::pow(1.0 - kappa, off);
}

// Observed counts collapsed onto margin A (the zero cell excludes n0).
std::map<PatternBits, double> margin_counts(const CountTable& table, PatternBits margin) {
  std::map<PatternBits, double> m;
  for (PatternBits c = 0; c <= margin; ++c)
    if ((c & margin) == c) m[c] = 0.0;
  for (std::size_t x = 1; x < table.cell_count(); ++x) m[static_cast<PatternBits>(x) & margin] += static_cast<double>(table.count(static_cast<PatternBits>(x)));
  return m;
}

// sum over margin cells of lgamma(alpha_c + n_c) - lgamma(alpha_c), with n0
// added to the zero cell. The Gamma(alpha_+)/Gamma(alpha_+ + N) factors and
// the multinomial coefficient are handled by the caller.
double margin_term(const std::map<PatternBits, double>& counts, PatternBits margin, double kappa, double n0) {
  double s = 0.0;
  for (const auto& [cell, n] : counts) {
    const double a = margin_prior(cell, margin, kappa);
    s += std::lgamma(a + n + (cell == 0 ? n0 : 0.0)) - std::lgamma(a);
  }
  return s;
}

double log_graph_prior(const DecomposableGraph& g, double beta) {
  const int e = g.edge_count();
  return e * std::log(beta) + (edge_total(g.lists()) - e) * std::log1p(-beta);
}

}  // namespace

std::vector<double> prior_counts(int lists, double kappa) {
  std::vector<double> alpha(std::size_t{1} << lists);
  const PatternBits all = static_cast<PatternBits>(alpha.size() - 1);
  for (std::size_t x = 0; x < alpha.size(); ++x) alpha[x] = margin_prior(static_cast<PatternBits>(x), all, kappa);
  return alpha;
}

double log_marginal_full_table(const CountTable& table, std::int64_t n0, const DecomposableGraph& g,
                               const DgaPrior& prior) {
  check_prior(prior);
  if (n0 < 0) throw Error("n0 must be non-negative");
  if (g.lists() != table.lists()) throw Error("graph and table list counts differ");
  const double total = static_cast<double>(table.n_obs() + n0);
  // Total prior mass is 1.
  const double norm = std::lgamma(1.0) - std::lgamma(1.0 + total);
  auto h = [&](PatternBits margin) { return norm + margin_term(margin_counts(table, margin), margin, prior.kappa, static_cast<double>(n0)); };

  double s = std::lgamma(total + 1.0) - std::lgamma(static_cast<double>(n0) + 1.0);
  for (std::size_t x = 1; x < table.cell_count(); ++x) s -= std::lgamma(static_cast<double>(table.count(static_cast<PatternBits>(x))) + 1.0);
  for (auto c : g.cliques()) s += h(c);
  for (auto sep : g.separators()) s -= h(sep);
  return s;
}

std::int64_t PosteriorGrid::quantile(double prob) const {
  double cdf = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cdf += probs[i];
    if (cdf >= prob - 1e-12) return population(i);
  }
  return population(probs.size() - 1);
}

DgaResult posterior_population(const CountTable& table, const DgaPrior& prior, double level,
                               const std::vector<DecomposableGraph>* graphs) {
  check_prior(prior);
  if (!(level > 0.0 && level < 1.0)) throw Error("interval level must lie in (0, 1)");
  const int lists = table.lists();
  const std::int64_t n_obs = table.n_obs();
  if (n_obs <= 0) throw InestimableError("inestimable: no observed individuals");
  const std::int64_t n_max = prior.n_max.value_or(100 * n_obs);
  if (n_max < n_obs) throw Error("grid bound N_max is below n_obs");

  std::vector<DecomposableGraph> owned;
  if (!graphs) {
    owned = enumerate_decomposable_graphs(lists, prior.include_complete);
    graphs = &owned;
  }
  if (graphs->empty()) throw Error("empty graph set");
  for (const auto& g : *graphs)
    if (g.lists() != lists) throw Error("graph and table list counts differ");

  const auto size = static_cast<std::size_t>(n_max - n_obs + 1);

  // Terms shared by every graph: multinomial coefficient, the single
  // Gamma(1)/Gamma(1 + N) factor left after clique/separator cancellation,
  // and the 1/N population prior.
  std::vector<double> common(size);
  double log_fact_obs = 0.0;
  for (std::size_t x = 1; x < table.cell_count(); ++x) log_fact_obs += std::lgamma(static_cast<double>(table.count(static_cast<PatternBits>(x))) + 1.0);
  for (std::size_t i = 0; i < size; ++i) {
    const double n0 = static_cast<double>(i);
    common[i] = -std::lgamma(n0 + 1.0) - log_fact_obs - std::log(static_cast<double>(n_obs) + n0);
  }

  std::map<PatternBits, std::vector<double>> margin_terms;
  for (const auto& g : *graphs) {
    auto add = [&](PatternBits m) {
      if (margin_terms.count(m)) return;
      const auto counts = margin_counts(table, m);
      double fixed = 0.0;
      double alpha0 = 0.0, base0 = 0.0;
      for (const auto& [cell, n] : counts) {
        const double a = margin_prior(cell, m, prior.kappa);
        if (cell == 0) {
          alpha0 = a;
          base0 = n;
          fixed -= std::lgamma(a);
        } else {
          fixed += std::lgamma(a + n) - std::lgamma(a);
        }
      }
      std::vector<double> v(size);
      for (std::size_t i = 0; i < size; ++i) v[i] = fixed + std::lgamma(alpha0 + base0 + static_cast<double>(i));
      margin_terms.emplace(m, std::move(v));
    };
    for (auto c : g.cliques()) add(c);
    for (auto s : g.separators()) add(s);
  }

  // Streaming log-sum-exp over graphs relative to a running reference.
  std::vector<double> acc(size, 0.0);
  double reference = -std::numeric_limits<double>::infinity();
  std::vector<double> graph_log_mass(graphs->size(), -std::numeric_limits<double>::infinity());
  std::vector<double> w(size);
  for (std::size_t gi = 0; gi < graphs->size(); ++gi) {
    const auto& g = (*graphs)[gi];
    const double gp = log_graph_prior(g, prior.edge_beta);
    for (std::size_t i = 0; i < size; ++i) w[i] = common[i] + gp;
    for (auto c : g.cliques()) {
      const auto& v = margin_terms.at(c);
      for (std::size_t i = 0; i < size; ++i) w[i] += v[i];
    }
    for (auto s : g.separators()) {
      const auto& v = margin_terms.at(s);
      for (std::size_t i = 0; i < size; ++i) w[i] -= v[i];
    }
    const double peak = *std::max_element(w.begin(), w.end());
    if (peak < reference - kSkipMargin) continue;
    if (peak > reference) {
      const double scale = std::exp(reference - peak);
      for (auto& a : acc) a *= scale;
      reference = peak;
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      const double d = w[i] - reference;
      if (d < -700.0) continue;
      const double e = std::exp(d);
      acc[i] += e;
      mass += e;
    }
    graph_log_mass[gi] = std::log(mass) + reference;
  }

  DgaResult r;
  r.grid.n_obs = n_obs;
  r.grid.log_weights.resize(size);
  r.grid.probs.resize(size);
  double total = 0.0;
  for (double a : acc) total += a;
  for (std::size_t i = 0; i < size; ++i) {
    r.grid.log_weights[i] = std::log(acc[i]) + reference;
    r.grid.probs[i] = acc[i] / total;
  }
  r.grid.tail_mass = r.grid.probs.back();
  const double log_total = std::log(total) + reference;
  for (std::size_t gi = 0; gi < graphs->size(); ++gi)
    r.graph_weights.push_back({(*graphs)[gi].edges(), std::exp(graph_log_mass[gi] - log_total)});

  Estimate& e = r.estimate;
  e.estimator = "dga";
  e.point = static_cast<double>(r.grid.quantile(0.5));
  e.lower = static_cast<double>(r.grid.quantile((1.0 - level) / 2.0));
  e.upper = static_cast<double>(r.grid.quantile(1.0 - (1.0 - level) / 2.0));
  e.level = level;
  e.config = {{"kappa", format_double(prior.kappa)},
              {"edge_beta", format_double(prior.edge_beta)},
              {"include_complete", prior.include_complete ? "true" : "false"},
              {"n_max", std::to_string(n_max)},
              {"graphs", std::to_string(graphs->size())},
              {"level", format_double(level)}};
  e.fingerprint = fingerprint(e.estimator, e.config);
  if (r.grid.tail_mass > 1e-6)
    e.warnings.push_back("posterior mass " + format_double(r.grid.tail_mass) + " at the grid bound N_max = " +
                         std::to_string(n_max) + "; increase --nmax");
  return r;
}

}  // namespace msekit
