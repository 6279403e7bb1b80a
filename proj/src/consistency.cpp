#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "msekit/diagnostics.hpp"

namespace msekit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v, 10) : ""; }

}  // namespace

bool EstimatorOutcome::usable() const { return estimate && std::isfinite(estimate->point) && std::isfinite(log_bias); }

ConsistencyRun run_internal_consistency(const std::vector<Dataset>& datasets,
                                        const std::vector<NamedEstimator>& estimators, std::int64_t min_obs) {
  ConsistencyRun run;
  std::vector<ConditionedDataset> conditioned;
  for (const auto& d : datasets)
    for (const auto& list : d.table.list_names()) {
      auto outcome = condition_on_reference(d, list, min_obs);
      if (auto* c = std::get_if<ConditionedDataset>(&outcome))
        conditioned.push_back(std::move(*c));
      else
        run.exclusions.push_back(std::get<Exclusion>(outcome));
    }

  run.rows.resize(conditioned.size());
  for (std::size_t i = 0; i < conditioned.size(); ++i) {
    const auto& c = conditioned[i];
    auto& row = run.rows[i];
    const auto summary = summarize(c.table);
    row.dataset = c.base;
    row.reference = c.reference_list;
    row.truth = c.ground_truth;
    row.n_obs = summary.n_obs;
    row.overlap = summary.overlap;
    row.outcomes.resize(estimators.size());
  }

  const std::size_t jobs = conditioned.size() * estimators.size();
  parallel_for(jobs, [&](std::size_t job) {
    const std::size_t i = job / estimators.size();
    const std::size_t e = job % estimators.size();
    auto& out = run.rows[i].outcomes[e];
    out.estimator = estimators[e].name;
    out.log_bias = kNaN;
    try {
      out.estimate = estimators[e].run(conditioned[i].table);
      const double truth = static_cast<double>(conditioned[i].ground_truth);
      if (std::isfinite(out.estimate->point) && out.estimate->point > 0.0) out.log_bias = std::log(out.estimate->point / truth);
      out.covered = out.estimate->lower <= truth && truth <= out.estimate->upper;
    } catch (const Error& ex) {
      out.error = ex.what();
    }
  });

  for (auto& row : run.rows)
    for (const auto& o : row.outcomes)
      if (!o.usable()) {
        row.outlier = true;
        if (!row.outlier_reason.empty()) row.outlier_reason += "; ";
        row.outlier_reason += o.estimator + ": " + (o.error.empty() ? "non-finite estimate" : o.error);
      }
  return run;
}

std::vector<ConsistencyMetrics> consistency_metrics(const ConsistencyRun& run, bool per_estimator_drop) {
  if (run.rows.empty()) throw Error("no consistency rows");
  std::vector<ConsistencyMetrics> out;
  const std::size_t n_est = run.rows.front().outcomes.size();
  for (std::size_t e = 0; e < n_est; ++e) {
    ConsistencyMetrics m;
    m.estimator = run.rows.front().outcomes[e].estimator;
    m.rows_total = run.rows.size();
    std::vector<double> biases;
    std::size_t covered_used = 0, covered_all = 0;
    for (const auto& row : run.rows) {
      const auto& o = row.outcomes[e];
      if (o.usable() && o.covered) ++covered_all;
      const bool drop = per_estimator_drop ? !o.usable() : row.outlier;
      if (drop) continue;
      biases.push_back(o.log_bias);
      if (o.covered) ++covered_used;
    }
    if (biases.empty()) throw Error("estimator " + m.estimator + " has no usable consistency rows");
    m.rows_used = biases.size();
    double sum = 0.0, sq = 0.0;
    for (double b : biases) {
      sum += b;
      sq += b * b;
    }
    const auto n = static_cast<double>(biases.size());
    m.mean = sum / n;
    m.rmse = std::sqrt(sq / n);
    m.median = quantile(biases, 0.5);
    m.coverage = static_cast<double>(covered_used) / n;
    m.coverage_all_rows = static_cast<double>(covered_all) / static_cast<double>(run.rows.size());
    out.push_back(m);
  }
  return out;
}

void write_consistency_csv(std::ostream& out, const ConsistencyRun& run) {
  out << "dataset,reference,truth,estimator,point,lower,upper,logbias,covered,outlier\n";
  for (const auto& row : run.rows)
    for (const auto& o : row.outcomes) {
      out << row.dataset << ',' << row.reference << ',' << row.truth << ',' << o.estimator << ',';
      if (o.estimate)
        out << csv_number(o.estimate->point) << ',' << csv_number(o.estimate->lower) << ','
            << csv_number(o.estimate->upper);
      else
        out << ",,";
      out << ',' << csv_number(o.log_bias) << ',' << (o.covered ? 1 : 0) << ',' << (row.outlier ? 1 : 0) << '\n';
    }
}

}  // namespace msekit
