#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "msekit/loglinear.hpp"

using namespace msekit;

namespace {

int popcount(PatternBits b) {
  int w = 0;
  for (; b; b >>= 1) w += static_cast<int>(b & 1U);
  return w;
}

CountTable two_list(std::int64_t n10, std::int64_t n01, std::int64_t n11) {
  CountTable t(default_list_names(2));
  t.set(0b01, n10);
  t.set(0b10, n01);
  t.set(0b11, n11);
  return t;
}

// Plain Poisson IRLS on the dense design of the observed cells; valid when
// every observed cell is positive so the MLE is interior.
double irls_n0(const CountTable& t, const std::vector<Term>& terms) {
  const int L = t.lists();
  std::vector<Term> cols = {0};
  for (int j = 0; j < L; ++j) cols.push_back(Term{1} << j);
  for (Term s : terms) cols.push_back(s);
  const int rows = (1 << L) - 1;
  Eigen::MatrixXd X(rows, static_cast<int>(cols.size()));
  Eigen::VectorXd y(rows);
  for (int r = 0; r < rows; ++r) {
    const auto x = static_cast<PatternBits>(r + 1);
    y(r) = static_cast<double>(t.count(x));
    for (std::size_t c = 0; c < cols.size(); ++c) X(r, static_cast<int>(c)) = (x & cols[c]) == cols[c] ? 1.0 : 0.0;
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  beta(0) = std::log(y.mean());
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd mu = (X * beta).array().exp();
    const Eigen::VectorXd z = (X * beta).array() + (y - mu).array() / mu.array();
    const Eigen::MatrixXd XtW = X.transpose() * mu.asDiagonal();
    const Eigen::VectorXd next = (XtW * X).ldlt().solve(XtW * z);
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (change < 1e-13) break;
  }
  return std::exp(beta(0));
}

CountTable positive_table(int lists, Rng& rng, int lo = 5, int hi = 200) {
  CountTable t(default_list_names(lists));
  std::uniform_int_distribution<std::int64_t> cell(lo, hi);
  for (PatternBits b = 1; b < t.cell_count(); ++b) t.set(b, cell(rng) / (popcount(b) * popcount(b)) + 1);
  return t;
}

PatternBits permute_bits(PatternBits b, const std::vector<int>& order) {
  // Output list j is input list order[j].
  PatternBits out = 0;
  for (std::size_t j = 0; j < order.size(); ++j)
    if ((b >> order[j]) & 1U) out |= PatternBits{1} << j;
  return out;
}

}  // namespace

TEST_CASE("two-list independence equals the closed form") {
  const auto t = two_list(75, 25, 25);
  const auto fit = fit_loglinear(t, LogLinearModel::independence(2));
  CHECK(fit.n_hat == doctest::Approx(200.0).epsilon(1e-9));
  CHECK(lincoln_petersen(t) == doctest::Approx(100.0 * 50.0 / 25.0));

  Rng rng(2024);
  std::uniform_int_distribution<std::int64_t> cell(1, 5000);
  for (int rep = 0; rep < 200; ++rep) {
    const auto r = two_list(cell(rng), cell(rng), cell(rng));
    const double n1 = static_cast<double>(r.count(1) + r.count(3));
    const double n2 = static_cast<double>(r.count(2) + r.count(3));
    const double closed = n1 * n2 / static_cast<double>(r.count(3));
    const double fitted = fit_loglinear(r, LogLinearModel::independence(2)).n_hat;
    CHECK(std::abs(fitted - closed) <= 1e-6 * std::max(1.0, closed));
  }
}

TEST_CASE("fits agree with an independent IRLS oracle") {
  Rng rng(77);
  for (int lists = 3; lists <= 5; ++lists) {
    for (int rep = 0; rep < 4; ++rep) {
      const auto t = positive_table(lists, rng);
      std::vector<Term> terms;
      for (int i = 0; i < lists; ++i)
        for (int j = i + 1; j < lists; ++j)
          if ((i + j + rep) % 2 == 0) terms.push_back((Term{1} << i) | (Term{1} << j));
      const auto fit = fit_loglinear(t, LogLinearModel(lists, terms));
      const double oracle = irls_n0(t, terms);
      CHECK(fit.n0_hat == doctest::Approx(oracle).epsilon(1e-7));
      double observed_fit = 0.0;
      for (PatternBits b = 1; b < t.cell_count(); ++b) observed_fit += fit.fitted[b];
      CHECK(observed_fit == doctest::Approx(static_cast<double>(t.n_obs())).epsilon(1e-8));
    }
  }
}

TEST_CASE("symmetric two-list table gives equal main effects") {
  const auto fit = fit_loglinear(two_list(40, 40, 40), LogLinearModel::independence(2));
  CHECK(fit.coefficients.at(1) == doctest::Approx(fit.coefficients.at(2)).epsilon(1e-12));
}

TEST_CASE("label invariance") {
  Rng rng(3);
  const auto uk = load_catalog_dataset("uk").table;
  const std::vector<Term> terms = {0b00110, 0b01010, 0b11000};
  const LogLinearModel model(5, terms);
  const auto base = fit_loglinear(uk, model);
  std::vector<int> order = {0, 1, 2, 3, 4};
  for (int rep = 0; rep < 10; ++rep) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Term> moved;
    for (Term s : terms) moved.push_back(permute_bits(s, order));
    const auto fit = fit_loglinear(uk.permuted(order), LogLinearModel(5, moved));
    CHECK(std::abs(fit.n_hat - base.n_hat) <= 1e-9 * base.n_hat);
    for (Term s : terms) CHECK(fit.coefficients.at(permute_bits(s, order)) ==
                               doctest::Approx(base.coefficients.at(s)).epsilon(1e-8));
  }
}

TEST_CASE("term without support is at the boundary") {
  const auto uk = load_catalog_dataset("uk").table;
  const Term la_gp = 0b10001;
  const auto fit = fit_loglinear(uk, LogLinearModel(5, {la_gp}));
  CHECK(std::isinf(fit.coefficients.at(la_gp)));
  CHECK(fit.coefficients.at(la_gp) < 0);
  CHECK(std::isfinite(fit.n_hat));
  for (PatternBits b = 1; b < 32; ++b)
    if ((b & la_gp) == la_gp) CHECK(fit.fitted[b] == 0.0);
  double observed_fit = 0.0;
  for (PatternBits b = 1; b < 32; ++b) observed_fit += fit.fitted[b];
  CHECK(observed_fit == doctest::Approx(2744.0).epsilon(1e-8));
}

TEST_CASE("no overlap is inestimable") {
  CountTable t(default_list_names(3));
  t.set(1, 50);
  CHECK_THROWS_AS(fit_loglinear(t, LogLinearModel::independence(3)), InestimableError);
  CHECK_THROWS_AS(fit_loglinear(two_list(10, 10, 0), LogLinearModel::independence(2)), InestimableError);
  BootstrapConfig cfg{100, 0.95, 1};
  CHECK_THROWS_AS(estimate_independence(t, cfg), InestimableError);
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(LogLinearModel(3, {0b111}), Error);
  CHECK_THROWS_AS(LogLinearModel(3, {0b001}), Error);
  CHECK_THROWS_AS(LogLinearModel(3, {0b011, 0b011}), Error);
  CHECK(LogLinearModel::all_two_way(4).terms().size() == 6);
  CHECK(LogLinearModel(3, {0b110, 0b011}) == LogLinearModel(3, {0b011, 0b110}));
  CHECK(LogLinearModel::independence(3).describe({"A", "B", "C"}) == "independence");
}

TEST_CASE("BCa reduces to percentile for a symmetric replicate set") {
  std::vector<double> reps;
  for (int i = 1; i <= 100; ++i) {
    reps.push_back(100.0 + i);
    reps.push_back(100.0 - i);
  }
  const std::vector<double> jack = {99.0, 101.0};
  const std::vector<double> w = {1.0, 1.0};
  const auto r = bca_from_replicates(100.0, reps, jack, w, 0.90);
  CHECK(r.z0 == doctest::Approx(0.0));
  CHECK(r.acceleration == doctest::Approx(0.0));
  CHECK(r.lower == doctest::Approx(quantile(reps, 0.05)).epsilon(1e-12));
  CHECK(r.upper == doctest::Approx(quantile(reps, 0.95)).epsilon(1e-12));
}

TEST_CASE("BCa degenerate and invalid inputs") {
  const auto t = load_catalog_dataset("new-orleans").table;
  const auto constant = [](const CountTable&) { return 42.0; };
  const auto r = bca_interval(t, constant, 60, 0.95, 1);
  CHECK(r.lower == 42.0);
  CHECK(r.upper == 42.0);
  const auto identity = [](const CountTable& x) { return static_cast<double>(x.n_obs()); };
  const auto id = bca_interval(t, identity, 60, 0.95, 1);
  CHECK(id.lower == id.upper);
  CHECK_THROWS_AS(bca_interval(t, constant, 10, 0.95, 1), Error);
}

TEST_CASE("BCa is deterministic in the seed") {
  const auto t = load_catalog_dataset("new-orleans").table;
  const BootstrapConfig cfg{200, 0.95, 17};
  const auto a = estimate_independence(t, cfg);
  const auto b = estimate_independence(t, cfg);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
  CHECK(a.lower <= a.point);
  CHECK(a.point <= a.upper);
  CHECK(a.fingerprint == b.fingerprint);
}

TEST_CASE("independence estimate on the UK table") {
  const auto e = estimate_independence(load_catalog_dataset("uk").table, BootstrapConfig{200, 0.95, 5});
  CHECK(e.point > 2744.0);
  CHECK(e.point < 27440.0);
  CHECK(e.lower <= e.point);
  CHECK(e.point <= e.upper);
}

TEST_CASE("stepwise thresholds at the extremes") {
  const auto uk = load_catalog_dataset("uk").table;
  CHECK(stepwise_select(uk, 0.0).model.terms().empty());
  CHECK(stepwise_select(uk, 0.0, SelectionTest::wald).model.terms().empty());
  Rng rng(8);
  for (int lists = 3; lists <= 4; ++lists) {
    const auto t = positive_table(lists, rng, 20, 400);
    const auto all = stepwise_select(t, 1.0);
    CHECK(all.model.terms().size() == static_cast<std::size_t>(lists * (lists - 1) / 2));
  }
}

TEST_CASE("stepwise term sets grow with the threshold") {
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.005 * i);
  for (const auto& name : catalog_names()) {
    const auto t = load_catalog_dataset(name).table;
    std::set<Term> previous;
    for (double tau : grid) {
      const auto r = stepwise_select(t, tau);
      const std::set<Term> now(r.model.terms().begin(), r.model.terms().end());
      CHECK_MESSAGE(std::includes(now.begin(), now.end(), previous.begin(), previous.end()), name << " " << tau);
      for (const auto& s : r.steps) CHECK(s.p_value < tau);
      previous = now;
    }
  }
}

TEST_CASE("two-list sparsemse equals independence") {
  const auto t = two_list(120, 60, 30);
  const BootstrapConfig boot{100, 0.95, 9};
  const auto ind = estimate_independence(t, boot);
  const auto sp = estimate_sparsemse(t, SparseMseConfig{0.02, SelectionTest::likelihood_ratio, boot});
  CHECK(sp.point == doctest::Approx(ind.point).epsilon(1e-12));
  CHECK(sp.lower == doctest::Approx(ind.lower).epsilon(1e-12));
  CHECK(sp.upper == doctest::Approx(ind.upper).epsilon(1e-12));
}

TEST_CASE("UK stepwise at 0.02 reproduces the published point estimate") {
  const auto uk = load_catalog_dataset("uk").table;
  const auto sel = stepwise_select(uk, 0.02);
  const auto fit = fit_loglinear(uk, sel.model);
  CHECK(std::round(fit.n_hat) == 11313.0);
}
