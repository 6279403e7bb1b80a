#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "msekit/diagnostics.hpp"

using namespace msekit;

namespace {

std::vector<Dataset> catalog_datasets() {
  std::vector<Dataset> out;
  for (const auto& name : catalog_names()) out.push_back(load_catalog_dataset(name));
  return out;
}

// Returns the reference list size of whichever conditioned table it is given.
NamedEstimator truth_oracle(const std::vector<Dataset>& datasets) {
  auto truths = std::make_shared<std::map<std::string, double>>();
  for (const auto& d : datasets)
    for (const auto& list : d.table.list_names()) {
      const auto out = condition_on_reference(d, list, 0);
      const auto& c = std::get<ConditionedDataset>(out);
      (*truths)[serialize_dataset(c.table)] = static_cast<double>(c.ground_truth);
    }
  return {"oracle", [truths](const CountTable& t) {
            Estimate e;
            e.estimator = "oracle";
            e.point = e.lower = e.upper = truths->at(serialize_dataset(t));
            return e;
          }};
}

EstimatorConfig quick(EstimatorKind kind, std::uint64_t seed = 1) {
  EstimatorConfig c;
  c.kind = kind;
  c.seed = seed;
  c.replicates = 50;
  c.lcmcr.chains = 2;
  c.lcmcr.iterations = 1000;
  c.lcmcr.thin_to = 50;
  return c;
}

EstimatorOutcome outcome(const std::string& name, double truth, double point, double lo, double hi) {
  EstimatorOutcome o;
  o.estimator = name;
  Estimate e;
  e.point = point;
  e.lower = lo;
  e.upper = hi;
  o.estimate = e;
  o.log_bias = std::log(point / truth);
  o.covered = lo <= truth && truth <= hi;
  return o;
}

}  // namespace

TEST_CASE("internal consistency rows match the published conditioned datasets") {
  const auto datasets = catalog_datasets();
  const auto run = run_internal_consistency(datasets, {truth_oracle(datasets)});
  REQUIRE(run.rows.size() == 11);
  const std::set<std::tuple<std::string, std::string, std::int64_t, std::int64_t, std::int64_t>> expected = {
      {"uk", "LA", 94, 40, 3},          {"uk", "NG", 567, 104, 7},         {"uk", "PFNCA", 1169, 174, 6},
      {"uk", "GO", 807, 112, 6},        {"netherlands", "IO", 929, 173, 13}, {"netherlands", "K", 1348, 49, 0},
      {"netherlands", "P", 4812, 346, 14}, {"netherlands", "R", 742, 92, 3},   {"netherlands", "Z", 848, 216, 12},
      {"australia", "B", 77, 64, 23},   {"australia", "C", 260, 62, 22}};
  std::set<std::tuple<std::string, std::string, std::int64_t, std::int64_t, std::int64_t>> got;
  for (const auto& r : run.rows) got.emplace(r.dataset, r.reference, r.truth, r.n_obs, r.overlap);
  CHECK(got == expected);
  std::size_t lists = 0;
  for (const auto& d : datasets) lists += static_cast<std::size_t>(d.table.lists());
  CHECK(run.exclusions.size() + run.rows.size() == lists);
  for (const auto& x : run.exclusions) CHECK(x.n_obs < 30);

  const auto metrics = consistency_metrics(run);
  REQUIRE(metrics.size() == 1);
  CHECK(metrics[0].mean == 0.0);
  CHECK(metrics[0].rmse == 0.0);
  CHECK(metrics[0].median == 0.0);
  CHECK(metrics[0].coverage == 1.0);
  CHECK(metrics[0].rows_used == 11);
}

TEST_CASE("rows without overlap are outliers") {
  const auto datasets = catalog_datasets();
  const auto run = run_internal_consistency(datasets, {make_estimator(quick(EstimatorKind::independence))});
  int outliers = 0;
  for (const auto& r : run.rows) {
    if (r.dataset == "netherlands" && r.reference == "K") {
      CHECK(r.outlier);
      CHECK_FALSE(r.outcomes[0].usable());
    }
    outliers += r.outlier;
  }
  CHECK(outliers >= 1);
  const auto m = consistency_metrics(run);
  CHECK(m[0].rows_used == 11u - static_cast<std::size_t>(outliers));
  CHECK(m[0].rows_total == 11u);
  const double scaled = m[0].coverage * static_cast<double>(m[0].rows_used);
  CHECK(std::abs(scaled - std::round(scaled)) < 1e-12);
  CHECK(m[0].coverage_all_rows <= m[0].coverage);
  std::ostringstream csv;
  write_consistency_csv(csv, run);
  CHECK(csv.str().rfind("dataset,reference,truth,estimator,point,lower,upper,logbias,covered,outlier\n", 0) == 0);
}

TEST_CASE("metrics against a hand computation") {
  ConsistencyRun run;
  const double truths[] = {100, 200, 400, 800};
  const double points[] = {50, 220, 400, 1600};
  for (int i = 0; i < 4; ++i) {
    ConsistencyRow row;
    row.dataset = "d";
    row.reference = std::to_string(i);
    row.truth = static_cast<std::int64_t>(truths[i]);
    row.outcomes.push_back(outcome("x", truths[i], points[i], points[i] * 0.9, points[i] * 1.1));
    run.rows.push_back(row);
  }
  ConsistencyRow bad;
  bad.dataset = "d";
  bad.reference = "bad";
  bad.truth = 10;
  EstimatorOutcome failed;
  failed.estimator = "x";
  failed.error = "inestimable";
  failed.log_bias = std::nan("");
  bad.outcomes.push_back(failed);
  bad.outlier = true;
  run.rows.push_back(bad);

  std::vector<double> b;
  for (int i = 0; i < 4; ++i) b.push_back(std::log(points[i] / truths[i]));
  double mean = 0.0, sq = 0.0;
  for (double x : b) {
    mean += x / 4;
    sq += x * x / 4;
  }
  std::sort(b.begin(), b.end());
  const auto m = consistency_metrics(run);
  REQUIRE(m.size() == 1);
  CHECK(m[0].mean == doctest::Approx(mean).epsilon(1e-14));
  CHECK(m[0].rmse == doctest::Approx(std::sqrt(sq)).epsilon(1e-14));
  CHECK(m[0].median == doctest::Approx((b[1] + b[2]) / 2).epsilon(1e-14));
  CHECK(m[0].coverage == doctest::Approx(0.5));
  CHECK(m[0].coverage_all_rows == doctest::Approx(0.4));
  CHECK(m[0].rows_used == 4);
  const auto per = consistency_metrics(run, true);
  CHECK(per[0].rows_used == 4);
}

TEST_CASE("default checkpoints") {
  for (std::int64_t n : {40, 185, 345, 2744, 8234}) {
    const auto c = default_checkpoints(n);
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(std::adjacent_find(c.begin(), c.end()) == c.end());
    CHECK(std::find(c.begin(), c.end(), n) != c.end());
    CHECK(c.front() == std::max<std::int64_t>(30, n / 20));
    CHECK(c.back() == 2 * n);
    CHECK(c.size() <= 51);
    CHECK(c.size() >= 50);
  }
}

TEST_CASE("trajectory sequence construction") {
  const auto t = load_catalog_dataset("western-us").table;
  const auto seq = trajectory_sequence(t, 12);
  REQUIRE(seq.size() == static_cast<std::size_t>(2 * t.n_obs()));
  CHECK(prefix_table(t.list_names(), seq, t.n_obs()) == t);
  const auto doubled = prefix_table(t.list_names(), seq, 2 * t.n_obs());
  for (PatternBits b = 1; b < t.cell_count(); ++b) CHECK(doubled.count(b) == 2 * t.count(b));
  CHECK(trajectory_sequence(t, 12) == seq);
  CHECK_FALSE(trajectory_sequence(t, 13) == seq);
}

TEST_CASE("trajectory value at n equals the full-data estimate") {
  const auto d = load_catalog_dataset("new-orleans");
  const auto n = d.table.n_obs();
  for (auto kind : {EstimatorKind::independence, EstimatorKind::sparsemse, EstimatorKind::dga, EstimatorKind::lcmcr}) {
    const auto cfg = quick(kind, 5);
    const auto est = make_estimator(cfg);
    const auto full = run_estimator(d.table, cfg);
    const std::vector<std::int64_t> cps = {n / 2, n, 2 * n};
    const auto s = estimate_trajectory(d, est, cps, 21);
    REQUIRE(s.points[1].estimate);
    CHECK(s.points[1].estimate->point == full.point);
    CHECK(s.points[1].estimate->lower == full.lower);
    CHECK(s.points[1].estimate->upper == full.upper);
    const auto again = estimate_trajectory(d, est, cps, 21);
    for (std::size_t i = 0; i < cps.size(); ++i) {
      CHECK(s.points[i].m == cps[i]);
      CHECK(s.points[i].estimate.has_value() == again.points[i].estimate.has_value());
      if (s.points[i].estimate) {
        CHECK(s.points[i].estimate->point == again.points[i].estimate->point);
        CHECK(s.points[i].estimate->lower <= s.points[i].estimate->point);
        CHECK(s.points[i].estimate->point <= s.points[i].estimate->upper);
      }
    }
  }
  std::ostringstream csv;
  write_trajectory_csv(csv, {estimate_trajectory(d, make_estimator(quick(EstimatorKind::independence)), {n}, 1)});
  CHECK(csv.str().rfind("dataset,estimator,seed,m,point,lower,upper,ratio\n", 0) == 0);
  CHECK_THROWS_AS(estimate_trajectory(d, make_estimator(quick(EstimatorKind::independence)), {n, n}, 1), Error);
}

TEST_CASE("trajectories on simulated independent data end near the truth") {
  const auto uk = load_catalog_dataset("uk").table;
  const auto fit = fit_loglinear(uk, LogLinearModel::independence(5));
  std::vector<double> inc;
  const double N = fit.n_hat;
  for (int j = 0; j < 5; ++j) {
    double on = 0.0;
    for (PatternBits b = 0; b < 32; ++b)
      if ((b >> j) & 1U) on += fit.fitted[b];
    inc.push_back(on / N);
  }
  const auto p = CellProbabilities::independent(inc);
  const auto population = static_cast<std::int64_t>(std::llround(N));
  auto cfg = quick(EstimatorKind::independence);
  int close = 0;
  for (int seed = 0; seed < 50; ++seed) {
    Dataset d{"sim", simulate_counts(p, population, derive_seed(77, seed)), "", ""};
    d.table = CountTable(uk.list_names(), std::vector<std::int64_t>(d.table.dense().begin(), d.table.dense().end()));
    const auto n = d.table.n_obs();
    cfg.seed = static_cast<std::uint64_t>(seed);
    const auto s = estimate_trajectory(d, make_estimator(cfg), {n}, static_cast<std::uint64_t>(seed));
    REQUIRE(s.points[0].estimate);
    const double truth_ratio = static_cast<double>(population) / static_cast<double>(n);
    close += std::abs(s.points[0].ratio() - truth_ratio) <= 0.2 * truth_ratio;
  }
  CHECK(close >= 45);
}

TEST_CASE("sweeps") {
  const auto t = load_catalog_dataset("new-orleans").table;
  SUBCASE("singleton grid equals a direct call") {
    auto cfg = quick(EstimatorKind::sparsemse, 3);
    const auto sweep = sensitivity_sweep(t, SweepKind::sparsemse_threshold, {0.05}, cfg);
    cfg.threshold = 0.05;
    const auto direct = run_estimator(t, cfg);
    REQUIRE(sweep.rows[0].estimate);
    CHECK(sweep.rows[0].estimate->point == direct.point);
    CHECK(sweep.rows[0].estimate->lower == direct.lower);
    CHECK(sweep.rows[0].estimate->upper == direct.upper);
  }
  SUBCASE("kappa one half reproduces the default posterior") {
    const auto sweep = sensitivity_sweep(t, SweepKind::dga_kappa, {0.5}, quick(EstimatorKind::dga));
    const auto direct = estimate_dga(t, DgaPrior{});
    CHECK(sweep.rows[0].estimate->point == direct.point);
    CHECK(sweep.rows[0].estimate->lower == direct.lower);
    CHECK(sweep.rows[0].estimate->upper == direct.upper);
  }
  SUBCASE("beta grid gives one row per value") {
    auto cfg = quick(EstimatorKind::dga);
    cfg.dga.kappa = 0.1;
    const std::vector<double> grid = {0.1, 0.3, 0.5, 0.7, 0.9};
    const auto sweep = sensitivity_sweep(t, SweepKind::dga_beta, grid, cfg);
    REQUIRE(sweep.rows.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(sweep.rows[i].value == grid[i]);
      CHECK(sweep.rows[i].estimate.has_value());
    }
    std::ostringstream csv;
    write_sweep_csv(csv, sweep);
    CHECK(csv.str().rfind("kind,value,point,lower,upper\ndga-beta,", 0) == 0);
  }
  SUBCASE("domain checks") {
    CHECK_THROWS_AS(sensitivity_sweep(t, SweepKind::dga_kappa, {1.0}, quick(EstimatorKind::dga)), Error);
    CHECK_THROWS_AS(sensitivity_sweep(t, SweepKind::sparsemse_threshold, {}, quick(EstimatorKind::sparsemse)), Error);
    CHECK(parse_sweep_kind("dga-beta") == SweepKind::dga_beta);
    CHECK_FALSE(parse_sweep_kind("nope").has_value());
  }
}
