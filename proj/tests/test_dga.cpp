#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "msekit/dga.hpp"

using namespace msekit;

namespace {

bool adjacent(int lists, EdgeMask e, int i, int j) {
  if (i == j) return false;
  if (i > j) std::swap(i, j);
  int k = 0;
  for (int a = 0; a < lists; ++a)
    for (int b = a + 1; b < lists; ++b, ++k)
      if (a == i && b == j) return (e >> k) & 1U;
  return false;
}

// Chordal iff no vertex subset of size >= 4 induces a cycle: a connected
// subgraph in which every vertex has exactly two neighbours.
bool chordal_oracle(int lists, EdgeMask e) {
  for (unsigned s = 0; s < (1U << lists); ++s) {
    std::vector<int> vs;
    for (int v = 0; v < lists; ++v)
      if ((s >> v) & 1U) vs.push_back(v);
    if (vs.size() < 4) continue;
    bool two_regular = true;
    for (int v : vs) {
      int deg = 0;
      for (int u : vs) deg += adjacent(lists, e, u, v);
      if (deg != 2) two_regular = false;
    }
    if (!two_regular) continue;
    std::vector<int> seen = {vs[0]};
    for (std::size_t k = 0; k < seen.size(); ++k)
      for (int u : vs)
        if (adjacent(lists, e, seen[k], u) && std::find(seen.begin(), seen.end(), u) == seen.end()) seen.push_back(u);
    if (seen.size() == vs.size()) return false;
  }
  return true;
}

double dirichlet_sequence(const std::vector<double>& n, const std::vector<double>& alpha) {
  double a_sum = 0.0, n_sum = 0.0, s = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    a_sum += alpha[k];
    n_sum += n[k];
    s += std::lgamma(alpha[k] + n[k]) - std::lgamma(alpha[k]);
  }
  return s + std::lgamma(a_sum) - std::lgamma(a_sum + n_sum);
}

double log_multinomial(const std::vector<double>& n) {
  double total = 0.0, s = 0.0;
  for (double x : n) {
    total += x;
    s -= std::lgamma(x + 1.0);
  }
  return s + std::lgamma(total + 1.0);
}

CountTable table2(std::int64_t n10, std::int64_t n01, std::int64_t n11) {
  CountTable t(default_list_names(2));
  t.set(1, n10);
  t.set(2, n01);
  t.set(3, n11);
  return t;
}

const DecomposableGraph& find_graph(const std::vector<DecomposableGraph>& gs, EdgeMask e) {
  for (const auto& g : gs)
    if (g.edges() == e) return g;
  throw Error("graph not found");
}

}  // namespace

TEST_CASE("decomposable graph counts agree with the induced-cycle oracle") {
  const int expected_all[] = {0, 0, 2, 8, 61, 822};
  for (int lists = 2; lists <= 5; ++lists) {
    int oracle = 0;
    for (EdgeMask e = 0; e < (EdgeMask{1} << edge_total(lists)); ++e) {
      const bool o = chordal_oracle(lists, e);
      oracle += o;
      CHECK(is_chordal(lists, e) == o);
    }
    CHECK(oracle == expected_all[lists]);
    const auto with = enumerate_decomposable_graphs(lists, true);
    const auto without = enumerate_decomposable_graphs(lists, false);
    CHECK(static_cast<int>(with.size()) == oracle);
    CHECK(without.size() + 1 == with.size());
    for (const auto& g : with) CHECK(chordal_oracle(lists, g.edges()));
    for (const auto& g : without) CHECK_FALSE(g.is_complete());
  }
  CHECK(enumerate_decomposable_graphs(6, true).size() == 18154);
}

TEST_CASE("edge indexing") {
  const int lists = 5;
  std::vector<int> seen;
  for (int i = 0; i < lists; ++i)
    for (int j = i + 1; j < lists; ++j) seen.push_back(edge_index(i, j, lists));
  for (std::size_t k = 0; k < seen.size(); ++k) CHECK(seen[k] == static_cast<int>(k));
  CHECK(edge_total(lists) == 10);
}

TEST_CASE("junction decompositions") {
  SUBCASE("path A-B-C") {
    const EdgeMask e = (EdgeMask{1} << edge_index(0, 1, 3)) | (EdgeMask{1} << edge_index(1, 2, 3));
    const auto j = junction_decomposition(3, e);
    std::vector<PatternBits> cliques = j.cliques;
    std::sort(cliques.begin(), cliques.end());
    CHECK(cliques == std::vector<PatternBits>{0b011, 0b110});
    CHECK(j.separators == std::vector<PatternBits>{0b010});
  }
  SUBCASE("empty graph") {
    const auto j = junction_decomposition(3, 0);
    std::vector<PatternBits> cliques = j.cliques;
    std::sort(cliques.begin(), cliques.end());
    CHECK(cliques == std::vector<PatternBits>{0b001, 0b010, 0b100});
    CHECK(j.separators == std::vector<PatternBits>{0, 0});
  }
  SUBCASE("complete graph") {
    const auto j = junction_decomposition(4, (EdgeMask{1} << 6) - 1);
    CHECK(j.cliques == std::vector<PatternBits>{0b1111});
    CHECK(j.separators.empty());
  }
  SUBCASE("four-cycle is rejected") {
    const EdgeMask cycle = (EdgeMask{1} << edge_index(0, 1, 4)) | (EdgeMask{1} << edge_index(1, 2, 4)) |
                           (EdgeMask{1} << edge_index(2, 3, 4)) | (EdgeMask{1} << edge_index(0, 3, 4));
    CHECK_FALSE(is_chordal(4, cycle));
    CHECK_THROWS_AS(junction_decomposition(4, cycle), Error);
    CHECK_THROWS_AS(DecomposableGraph(4, cycle), Error);
  }
}

TEST_CASE("running intersection holds for every graph") {
  for (int lists = 2; lists <= 5; ++lists) {
    for (const auto& g : enumerate_decomposable_graphs(lists, true)) {
      const auto& c = g.cliques();
      REQUIRE(g.separators().size() + 1 == c.size());
      PatternBits seen = c[0];
      for (std::size_t k = 1; k < c.size(); ++k) {
        CHECK(g.separators()[k - 1] == (c[k] & seen));
        bool inside = false;
        for (std::size_t m = 0; m < k; ++m) inside = inside || (g.separators()[k - 1] & c[m]) == g.separators()[k - 1];
        CHECK(inside);
        seen |= c[k];
      }
      CHECK(seen == (PatternBits{1} << lists) - 1);
      for (std::size_t a = 0; a < c.size(); ++a)
        for (std::size_t b = 0; b < c.size(); ++b)
          if (a != b) CHECK((c[a] & c[b]) != c[a]);
    }
  }
}

TEST_CASE("default prior counts are constant") {
  for (int lists = 2; lists <= 6; ++lists)
    for (double a : prior_counts(lists, 0.5)) CHECK(a == doctest::Approx(std::pow(2.0, -lists)).epsilon(1e-15));
}

TEST_CASE("marginal likelihood oracles") {
  const auto gs = enumerate_decomposable_graphs(2, true);
  const DgaPrior prior;
  const auto t = table2(7, 4, 3);
  const std::int64_t n0 = 5;
  // Cell order: 00, 10, 01, 11 by pattern bits.
  const std::vector<double> cells = {5, 7, 4, 3};
  SUBCASE("complete graph is a single Dirichlet-multinomial") {
    const std::vector<double> alpha(4, 0.25);
    const double oracle = log_multinomial(cells) + dirichlet_sequence(cells, alpha);
    CHECK(log_marginal_full_table(t, n0, find_graph(gs, 1), prior) == doctest::Approx(oracle).epsilon(1e-12));
  }
  SUBCASE("empty graph factorizes into two beta-binomials") {
    double oracle = log_multinomial(cells);
    for (int j = 0; j < 2; ++j) {
      std::vector<double> margin(2, 0.0);
      for (PatternBits x = 0; x < 4; ++x) margin[(x >> j) & 1U] += cells[x];
      oracle += dirichlet_sequence(margin, {0.5, 0.5});
    }
    CHECK(log_marginal_full_table(t, n0, find_graph(gs, 0), prior) == doctest::Approx(oracle).epsilon(1e-12));
  }
  SUBCASE("kappa moves prior mass between cells") {
    DgaPrior p2;
    p2.kappa = 0.2;
    double oracle = log_multinomial(cells);
    for (int j = 0; j < 2; ++j) {
      std::vector<double> margin(2, 0.0);
      for (PatternBits x = 0; x < 4; ++x) margin[(x >> j) & 1U] += cells[x];
      oracle += dirichlet_sequence(margin, {0.8, 0.2});
    }
    CHECK(log_marginal_full_table(t, n0, find_graph(gs, 0), p2) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("marginal likelihood normalizes over all tables of size 3") {
  const DgaPrior prior;
  for (const auto& g : enumerate_decomposable_graphs(2, true)) {
    double total = 0.0;
    int tables = 0;
    for (int a = 0; a <= 3; ++a)
      for (int b = 0; a + b <= 3; ++b)
        for (int c = 0; a + b + c <= 3; ++c) {
          const int n0 = 3 - a - b - c;
          total += std::exp(log_marginal_full_table(table2(a, b, c), n0, g, prior));
          ++tables;
        }
    CHECK(tables == 20);
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
}

TEST_CASE("posterior grid agrees with the full-table marginal") {
  CountTable t(default_list_names(3));
  const std::int64_t counts[] = {0, 30, 22, 6, 18, 4, 5, 2};
  for (PatternBits b = 1; b < 8; ++b) t.set(b, counts[b]);
  DgaPrior prior;
  prior.n_max = 600;
  const auto gs = enumerate_decomposable_graphs(3, false);
  const auto r = posterior_population(t, prior, 0.95, &gs);
  const std::int64_t n_obs = t.n_obs();
  std::vector<double> oracle(static_cast<std::size_t>(600 - n_obs + 1));
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    double m = -INFINITY;
    std::vector<double> terms;
    for (const auto& g : gs) {
      const double gp = g.edge_count() * std::log(0.5) + (3 - g.edge_count()) * std::log(0.5);
      terms.push_back(gp + log_marginal_full_table(t, static_cast<std::int64_t>(i), g, prior) -
                      std::log(static_cast<double>(n_obs + static_cast<std::int64_t>(i))));
      m = std::max(m, terms.back());
    }
    double s = 0.0;
    for (double x : terms) s += std::exp(x - m);
    oracle[i] = m + std::log(s);
  }
  const double top = *std::max_element(oracle.begin(), oracle.end());
  double z = 0.0;
  for (double x : oracle) z += std::exp(x - top);
  double sum = 0.0;
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(r.grid.probs[i] == doctest::Approx(std::exp(oracle[i] - top) / z).epsilon(1e-9));
    sum += r.grid.probs[i];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  double wsum = 0.0;
  for (const auto& w : r.graph_weights) wsum += w.posterior;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.estimate.lower <= r.estimate.point);
  CHECK(r.estimate.point <= r.estimate.upper);

  SUBCASE("single graph subset") {
    const std::vector<DecomposableGraph> one = {gs[2]};
    const auto single = posterior_population(t, prior, 0.95, &one);
    std::vector<double> lw;
    for (std::size_t i = 0; i < oracle.size(); ++i)
      lw.push_back(log_marginal_full_table(t, static_cast<std::int64_t>(i), one[0], prior) -
                   std::log(static_cast<double>(n_obs + static_cast<std::int64_t>(i))));
    const double mx = *std::max_element(lw.begin(), lw.end());
    double zz = 0.0;
    for (double x : lw) zz += std::exp(x - mx);
    for (std::size_t i = 0; i < lw.size(); ++i)
      CHECK(single.grid.probs[i] == doctest::Approx(std::exp(lw[i] - mx) / zz).epsilon(1e-9));
    REQUIRE(single.graph_weights.size() == 1);
    CHECK(single.graph_weights[0].posterior == doctest::Approx(1.0));
  }
}

TEST_CASE("posterior is invariant to relabeling lists") {
  const auto t = load_catalog_dataset("new-orleans").table;
  DgaPrior prior;
  prior.n_max = 4000;
  const auto base = posterior_population(t, prior, 0.95);
  const std::vector<int> order = {3, 0, 4, 2, 1};
  const auto moved = posterior_population(t.permuted(order), prior, 0.95);
  REQUIRE(base.grid.probs.size() == moved.grid.probs.size());
  for (std::size_t i = 0; i < base.grid.probs.size(); ++i)
    CHECK(std::abs(base.grid.probs[i] - moved.grid.probs[i]) < 1e-9);
  CHECK(base.estimate.point == moved.estimate.point);
}

TEST_CASE("quantiles and tail warning") {
  PosteriorGrid g;
  g.n_obs = 10;
  g.probs = {0.25, 0.25, 0.5};
  CHECK(g.quantile(0.5) == 11);
  CHECK(g.quantile(0.2) == 10);
  CHECK(g.quantile(0.75) == 12);
  const auto t = load_catalog_dataset("new-orleans").table;
  DgaPrior tight;
  tight.n_max = 200;
  CHECK_FALSE(estimate_dga(t, tight).warnings.empty());
  DgaPrior bad;
  bad.kappa = 1.0;
  CHECK_THROWS_AS(estimate_dga(t, bad), Error);
}

TEST_CASE("adding all-list cases does not raise the median") {
  auto t = load_catalog_dataset("new-orleans").table;
  const PatternBits all = static_cast<PatternBits>(t.cell_count() - 1);
  DgaPrior prior;
  double previous = estimate_dga(t, prior).point;
  for (int k = 0; k < 3; ++k) {
    t.add(all, 1);
    const double now = estimate_dga(t, prior).point;
    CHECK(now <= previous);
    previous = now;
  }
}

TEST_CASE("interval coverage on simulated independent lists") {
  const std::vector<double> inc = {0.3, 0.3, 0.3};
  const auto p = CellProbabilities::independent(inc);
  int covered = 0;
  const DgaPrior prior;
  const auto gs = enumerate_decomposable_graphs(3, false);
  for (int rep = 0; rep < 100; ++rep) {
    const auto t = simulate_counts(p, 5000, derive_seed(2718, rep));
    const auto e = posterior_population(t, prior, 0.95, &gs).estimate;
    covered += e.lower <= 5000.0 && 5000.0 <= e.upper;
  }
  CHECK(covered >= 90);
}

TEST_CASE("graph cache") {
  const auto dir = std::filesystem::temp_directory_path() / "msekit_graph_cache_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "graphs4.txt";
  std::filesystem::remove(path);
  const auto fresh = cached_decomposable_graphs(path, 4);
  CHECK(std::filesystem::exists(path));
  const auto again = cached_decomposable_graphs(path, 4);
  REQUIRE(again.size() == fresh.size());
  for (std::size_t i = 0; i < fresh.size(); ++i) CHECK(again[i].edges() == fresh[i].edges());
  {
    std::ofstream out(path);
    out << "lists 4\n3\n";
  }
  const auto repaired = cached_decomposable_graphs(path, 4);
  CHECK(repaired.size() == fresh.size());
  const auto reread = cached_decomposable_graphs(path, 4);
  CHECK(reread.size() == fresh.size());
  std::filesystem::remove_all(dir);
}
