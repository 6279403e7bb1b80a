#include "msekit/loglinear.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "msekit/lp.hpp"

namespace msekit {

namespace {

constexpr int kMaxIterations = 10000;
constexpr double kScoreTol = 1e-8;
constexpr double kDevianceTol = 1e-10;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Cells that can carry positive mass under some table with the same
// sufficient statistics. One LP per round; each round adds at least one cell.
std::vector<bool> facial_set(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  const auto cells = static_cast<std::size_t>(y.size());
  std::vector<bool> in_face(cells);
  std::vector<std::size_t> remaining;
  for (std::size_t c = 0; c < cells; ++c) {
    in_face[c] = y(static_cast<Eigen::Index>(c)) > 0;
    if (!in_face[c]) remaining.push_back(c);
  }
  if (remaining.empty()) return in_face;

  const Eigen::MatrixXd A = design.transpose();
  const Eigen::VectorXd b = A * y;
  const double tol = 1e-9 * std::max(1.0, y.sum());
  while (!remaining.empty()) {
    Eigen::VectorXd objective = Eigen::VectorXd::Zero(y.size());
    for (auto c : remaining) objective(static_cast<Eigen::Index>(c)) = 1.0;
    const auto res = lp::maximize(A, b, objective);
    if (!res.feasible || res.objective <= tol) break;
    std::vector<std::size_t> still;
    for (auto c : remaining) {
      if (res.x(static_cast<Eigen::Index>(c)) > tol)
        in_face[c] = true;
      else
        still.push_back(c);
    }
    if (still.size() == remaining.size()) break;
    remaining = std::move(still);
  }
  return in_face;
}

double poisson_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  return (y.array() * eta.array() - eta.array().exp()).sum();
}

double deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mean) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) > 0) d += y(i) * std::log(y(i) / mean(i));
    d -= y(i) - mean(i);
  }
  return 2.0 * d;
}

}  // namespace

// LogLinearModel -----------------------------------------------------------

LogLinearModel::LogLinearModel(int lists, std::vector<Term> terms) : lists_(lists), terms_(std::move(terms)) {
  if (lists < 1 || lists > kMaxLists) throw Error("log-linear model: list count out of range");
  const Term full = (Term{1} << lists) - 1;
  for (Term t : terms_) {
    if (std::popcount(t) < 2) throw Error("interaction terms need at least two lists");
    if ((t & ~full) != 0) throw Error("interaction term refers to a list beyond the model");
    if (t == full) throw Error("the full-way interaction term is not identifiable");
  }
  std::sort(terms_.begin(), terms_.end(), [lists](Term a, Term b) { return canonical_less(a, b, lists); });
  if (std::adjacent_find(terms_.begin(), terms_.end()) != terms_.end()) throw Error("duplicate interaction term");
}

LogLinearModel LogLinearModel::all_two_way(int lists) {
  std::vector<Term> terms;
  if (lists >= 3)
    for (int i = 0; i < lists; ++i)
      for (int j = i + 1; j < lists; ++j) terms.push_back((Term{1} << i) | (Term{1} << j));
  return LogLinearModel(lists, std::move(terms));
}

bool LogLinearModel::contains(Term term) const { return std::find(terms_.begin(), terms_.end(), term) != terms_.end(); }

LogLinearModel LogLinearModel::with_term(Term term) const {
  auto terms = terms_;
  terms.push_back(term);
  return LogLinearModel(lists_, std::move(terms));
}

std::string LogLinearModel::describe(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "independence";
  std::string out;
  for (Term t : terms_) {
    if (!out.empty()) out += " + ";
    std::string piece;
    for (int j = 0; j < lists_; ++j)
      if ((t >> j) & 1U) piece += (piece.empty() ? "" : "*") + names.at(static_cast<std::size_t>(j));
    out += piece;
  }
  return out;
}

// Fitting ------------------------------------------------------------------

FitResult fit_loglinear(const CountTable& table, const LogLinearModel& model) {
  if (model.lists() != table.lists()) throw Error("model and table list counts differ");
  const int lists = table.lists();
  const auto cells = static_cast<Eigen::Index>(table.cell_count() - 1);
  if (table.n_obs() <= 0) throw InestimableError("inestimable: no observed individuals");

  std::vector<Term> columns{0};
  for (int j = 0; j < lists; ++j) columns.push_back(Term{1} << j);
  for (Term t : model.terms()) columns.push_back(t);
  const auto ncols = static_cast<Eigen::Index>(columns.size());

  Eigen::MatrixXd design(cells, ncols);
  Eigen::VectorXd y(cells);
  for (Eigen::Index r = 0; r < cells; ++r) {
    const auto bits = static_cast<PatternBits>(r + 1);
    y(r) = static_cast<double>(table.count(bits));
    for (Eigen::Index c = 0; c < ncols; ++c)
      design(r, c) = (bits & columns[static_cast<std::size_t>(c)]) == columns[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
  }

  const auto in_face = facial_set(design, y);
  std::vector<Eigen::Index> rows;
  FitResult result{model, {}, {}, {}, 0.0, 0.0, 0.0, 0, {}};
  for (Eigen::Index r = 0; r < cells; ++r) {
    if (in_face[static_cast<std::size_t>(r)])
      rows.push_back(r);
    else
      result.boundary_cells.push_back(static_cast<PatternBits>(r + 1));
  }

  std::vector<Eigen::Index> active;
  for (Eigen::Index c = 0; c < ncols; ++c) {
    bool any = false;
    for (auto r : rows) any = any || design(r, c) != 0.0;
    if (any)
      active.push_back(c);
    else
      result.coefficients[columns[static_cast<std::size_t>(c)]] = kNegInf;
  }

  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto na = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd x(nr, na);
  Eigen::VectorXd yf(nr);
  for (Eigen::Index i = 0; i < nr; ++i) {
    yf(i) = y(rows[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < na; ++k) x(i, k) = design(rows[static_cast<std::size_t>(i)], active[static_cast<std::size_t>(k)]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < na)
    throw InestimableError("inestimable: design is rank-deficient after boundary reduction (" +
                           std::to_string(result.boundary_cells.size()) + " boundary cells)");

  // Intercept is always column 0 and always active.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(na);
  beta(0) = std::log(static_cast<double>(table.n_obs()) / std::ldexp(1.0, lists));
  Eigen::VectorXd eta = x * beta;
  double loglik = poisson_loglik(yf, eta);
  double dev = deviance(yf, eta.array().exp().matrix());
  bool converged = false;
  int iter = 0;
  for (; iter < kMaxIterations; ++iter) {
    const Eigen::VectorXd mean = eta.array().exp().matrix();
    const Eigen::VectorXd score = x.transpose() * (yf - mean);
    if (score.cwiseAbs().maxCoeff() < kScoreTol) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd info = x.transpose() * mean.asDiagonal() * x;
    const Eigen::VectorXd step = info.ldlt().solve(score);
    double t = 1.0;
    Eigen::VectorXd next_beta, next_eta;
    double next_loglik = -std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      next_beta = beta + t * step;
      next_eta = x * next_beta;
      if (next_eta.maxCoeff() > 700.0) continue;
      next_loglik = poisson_loglik(yf, next_eta);
      if (next_loglik >= loglik - 1e-12 * std::fabs(loglik)) break;
    }
    if (!std::isfinite(next_loglik)) break;
    beta = next_beta;
    eta = next_eta;
    loglik = next_loglik;
    const double next_dev = deviance(yf, eta.array().exp().matrix());
    const bool small_change = std::fabs(dev - next_dev) <= kDevianceTol * std::max(std::fabs(next_dev), 1.0);
    dev = next_dev;
    if (small_change && t == 1.0) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (!converged) throw ConvergenceError("log-linear fit did not converge after " + std::to_string(iter) + " iterations");

  const Eigen::MatrixXd info = x.transpose() * eta.array().exp().matrix().asDiagonal() * x;
  const Eigen::VectorXd variances = info.inverse().diagonal();
  for (Eigen::Index k = 0; k < na; ++k) {
    const Term term = columns[static_cast<std::size_t>(active[static_cast<std::size_t>(k)])];
    result.coefficients[term] = beta(k);
    result.std_errors[term] = std::sqrt(std::max(variances(k), 0.0));
  }
  result.fitted.assign(table.cell_count(), 0.0);
  for (Eigen::Index i = 0; i < nr; ++i) result.fitted[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)] + 1)] = std::exp(eta(i));
  result.deviance = dev;
  result.iterations = iter;
  result.n0_hat = std::exp(beta(0));
  result.fitted[0] = result.n0_hat;
  result.n_hat = static_cast<double>(table.n_obs()) + result.n0_hat;
  if (!std::isfinite(result.n_hat)) throw InestimableError("inestimable: unobserved count diverges");
  return result;
}

double lincoln_petersen(const CountTable& table) {
  if (table.lists() != 2) throw Error("Lincoln-Petersen needs exactly two lists");
  const auto both = table.count(0b11);
  if (both == 0) throw InestimableError("inestimable: the two lists do not overlap");
  const double n1 = static_cast<double>(table.count(0b01) + both);
  const double n2 = static_cast<double>(table.count(0b10) + both);
  return n1 * n2 / static_cast<double>(both);
}

// Stepwise selection -------------------------------------------------------

StepwiseResult stepwise_select(const CountTable& table, double threshold, SelectionTest test) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("p-value threshold must lie in [0, 1]");
  const int lists = table.lists();
  StepwiseResult result{LogLinearModel::independence(lists), {}, {}};
  FitResult current = fit_loglinear(table, result.model);

  std::vector<Term> pairs;
  if (lists >= 3)
    for (int i = 0; i < lists; ++i)
      for (int j = i + 1; j < lists; ++j) pairs.push_back((Term{1} << i) | (Term{1} << j));

  while (true) {
    std::optional<Term> best_term;
    double best_p = threshold;
    std::optional<FitResult> best_fit;
    for (Term pair : pairs) {
      if (result.model.contains(pair)) continue;
      std::optional<FitResult> candidate;
      try {
        candidate = fit_loglinear(table, result.model.with_term(pair));
      } catch (const Error& e) {
        result.warnings.push_back("candidate " + result.model.with_term(pair).describe(table.list_names()) +
                                  " skipped: " + e.what());
        continue;
      }
      const double stat = current.deviance - candidate->deviance;
      if (!std::isfinite(stat) || stat <= 1e-9 * std::max(1.0, current.deviance)) continue;
      double p = std::erfc(std::sqrt(stat / 2.0));
      if (test == SelectionTest::wald) {
        const double coef = candidate->coefficients.at(pair);
        const auto se = candidate->std_errors.find(pair);
        p = std::isfinite(coef) && se != candidate->std_errors.end() && se->second > 0.0
                ? std::erfc(std::fabs(coef / se->second) / std::sqrt(2.0))
                : 1.0;
      }
      if (p < best_p) {
        best_p = p;
        best_term = pair;
        best_fit = std::move(*candidate);
      }
    }
    if (!best_term) break;
    result.model = result.model.with_term(*best_term);
    result.steps.push_back({*best_term, best_p, best_fit->deviance});
    current = std::move(*best_fit);
  }
  return result;
}

// Estimators ---------------------------------------------------------------

namespace {

void check_bootstrap(const BootstrapConfig& cfg) {
  if (cfg.replicates < 50) throw Error("bootstrap needs at least 50 replicates");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw Error("interval level must lie in (0, 1)");
}

Estimate finish(std::string name, double point, const BcaResult& bca, const BootstrapConfig& cfg, ConfigEntries config) {
  Estimate e;
  e.estimator = std::move(name);
  e.point = point;
  // BCa endpoints can exclude the point when the replicate distribution is
  // strongly skewed; the reported interval always contains it.
  e.lower = std::min(bca.lower, point);
  e.upper = std::max(bca.upper, point);
  e.level = cfg.level;
  e.seed = cfg.seed;
  config.emplace_back("replicates", std::to_string(cfg.replicates));
  config.emplace_back("level", format_double(cfg.level));
  config.emplace_back("interval", "bca");
  e.config = std::move(config);
  e.fingerprint = fingerprint(e.estimator, e.config);
  if (bca.failed > 0) e.warnings.push_back(std::to_string(bca.failed) + " bootstrap replicates failed and were dropped");
  return e;
}

}  // namespace

Estimate estimate_independence(const CountTable& table, const BootstrapConfig& cfg) {
  check_bootstrap(cfg);
  const auto model = LogLinearModel::independence(table.lists());
  const double point = fit_loglinear(table, model).n_hat;
  auto estimator = [&model](const CountTable& t) { return fit_loglinear(t, model).n_hat; };
  const auto bca = bca_interval(table, estimator, cfg.replicates, cfg.level, cfg.seed);
  return finish("independence", point, bca, cfg, {});
}

Estimate estimate_sparsemse(const CountTable& table, const SparseMseConfig& cfg) {
  check_bootstrap(cfg.bootstrap);
  const auto selected = stepwise_select(table, cfg.threshold, cfg.test);
  const double point = fit_loglinear(table, selected.model).n_hat;
  const double threshold = cfg.threshold;
  const auto test = cfg.test;
  auto estimator = [threshold, test](const CountTable& t) {
    return fit_loglinear(t, stepwise_select(t, threshold, test).model).n_hat;
  };
  const auto bca = bca_interval(table, estimator, cfg.bootstrap.replicates, cfg.bootstrap.level, cfg.bootstrap.seed);
  auto e = finish("sparsemse", point, bca, cfg.bootstrap,
                  {{"threshold", format_double(threshold)}, {"selection", test == SelectionTest::wald ? "forward-wald-z" : "forward-lrt-chisq1"},
                   {"model", selected.model.describe(table.list_names())}});
  for (const auto& w : selected.warnings) e.warnings.push_back(w);
  return e;
}

}  // namespace msekit
