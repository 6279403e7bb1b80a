#include "msekit/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "msekit/bias.hpp"
#include "msekit/csv.hpp"
#include "msekit/data.hpp"
#include "msekit/dga.hpp"
#include "msekit/diagnostics.hpp"
#include "msekit/estimators.hpp"
#include "msekit/lcmcr.hpp"
#include "msekit/svg.hpp"

namespace msekit::cli {

namespace {

using Json = nlohmann::ordered_json;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Common {
  std::string data;
  std::string format = "csv";
  std::string output;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 0;
};

struct EstimatorFlags {
  std::string estimator;
  double threshold = 0.02;
  std::string selection = "lrt";
  double kappa = 0.5;
  double edge_beta = 0.5;
  std::int64_t nmax = 0;
  bool include_complete = false;
  int chains = 200;
  std::int64_t iters = 100000;
  int thin = 100;
  int kmax = 10;
  int replicates = 1000;
  double level = 0.95;
  bool full_budget = false;
};

void add_output_flags(CLI::App* app, Common& c, const std::string& formats) {
  app->add_option("--format", c.format, "Output format: " + formats)->capture_default_str();
  app->add_option("--output", c.output, "Write results to this file (default: standard output)");
  app->add_option("--jobs", c.jobs, "Worker threads (default: available parallelism)");
}

void add_seed_flag(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed (default: drawn at random and printed)");
}

void add_estimator_flags(CLI::App* app, EstimatorFlags& f, bool harness) {
  app->add_option("--threshold", f.threshold, "sparsemse: p-value threshold for adding a two-way term")->capture_default_str();
  app->add_option("--selection", f.selection, "sparsemse: term entry test, lrt or wald")
      ->check(CLI::IsMember({"lrt", "wald"}))
      ->capture_default_str();
  app->add_option("--kappa", f.kappa, "dga: per-list inclusion probability behind the prior counts")->capture_default_str();
  app->add_option("--edge-beta", f.edge_beta, "dga: edge inclusion probability of the graph prior")->capture_default_str();
  app->add_option("--nmax", f.nmax, "dga: grid bound on N (default 100 * n_obs)");
  app->add_flag("--include-complete", f.include_complete, "dga: include the complete graph in the model space");
  if (harness) {
    app->add_option("--chains", f.chains, "lcmcr: number of chains (default 20, 200 with --full-budget)");
    app->add_option("--iters", f.iters,
                    "lcmcr: sweeps per chain, first half is burn-in (default 10000, 100000 with --full-budget)");
  } else {
    app->add_option("--chains", f.chains, "lcmcr: number of chains")->capture_default_str();
    app->add_option("--iters", f.iters, "lcmcr: sweeps per chain (first half is burn-in)")->capture_default_str();
  }
  app->add_option("--thin", f.thin, "lcmcr: retained draws per chain")->capture_default_str();
  app->add_option("--kmax", f.kmax, "lcmcr: maximum number of latent classes")->capture_default_str();
  app->add_option("--replicates", f.replicates, "independence/sparsemse: bootstrap replicates")->capture_default_str();
  app->add_option("--level", f.level, "Interval level")->capture_default_str();
  if (harness)
    app->add_flag("--full-budget", f.full_budget, "lcmcr: 200 chains of 100000 sweeps instead of 20 of 10000");
}

EstimatorKind require_estimator(const std::string& name) {
  if (auto k = parse_estimator(name)) return *k;
  std::string known;
  for (const auto& n : estimator_names()) known += (known.empty() ? "" : ", ") + n;
  throw UsageError("unknown estimator '" + name + "'; choose one of: " + known);
}

EstimatorConfig make_config(const EstimatorFlags& f, EstimatorKind kind, std::uint64_t seed, CLI::App* app,
                            bool harness = false) {
  EstimatorConfig c;
  c.kind = kind;
  c.seed = seed;
  c.level = f.level;
  c.replicates = f.replicates;
  c.threshold = f.threshold;
  c.selection = f.selection == "wald" ? SelectionTest::wald : SelectionTest::likelihood_ratio;
  c.dga.kappa = f.kappa;
  c.dga.edge_beta = f.edge_beta;
  c.dga.include_complete = f.include_complete;
  if (f.nmax > 0) c.dga.n_max = f.nmax;
  c.lcmcr.k_max = f.kmax;
  c.lcmcr.chains = f.chains;
  c.lcmcr.iterations = f.iters;
  c.lcmcr.thin_to = f.thin;
  if (harness && !f.full_budget) {
    const auto reduced = reduced_lcmcr_budget();
    if (app->count("--chains") == 0) c.lcmcr.chains = reduced.chains;
    if (app->count("--iters") == 0) c.lcmcr.iterations = reduced.iterations;
  }
  return c;
}

std::uint64_t resolve_seed(const Common& c, std::ostream& err) {
  std::uint64_t seed;
  if (c.seed) {
    seed = *c.seed;
  } else {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  err << "seed: " << seed << '\n';
  return seed;
}

Dataset resolve_dataset(const std::string& spec) {
  if (spec.empty()) throw UsageError("--data is required (a catalog name or a CSV path)");
  for (const auto& name : catalog_names())
    if (name == spec) return load_catalog_dataset(spec);
  if (std::filesystem::is_regular_file(spec)) {
    std::ifstream in(spec);
    return parse_dataset(in, std::filesystem::path(spec).stem().string());
  }
  std::string known;
  for (const auto& n : catalog_names()) known += (known.empty() ? "" : ", ") + n;
  throw DataError("unknown dataset '" + spec + "' (not a catalog name or readable file); catalog: " + known);
}

void check_format(const Common& c, std::initializer_list<const char*> allowed) {
  std::string list;
  for (const char* a : allowed) {
    if (c.format == a) return;
    list += (list.empty() ? "" : ", ") + std::string(a);
  }
  throw UsageError("unsupported --format '" + c.format + "' for this command; use " + list);
}

std::string svg_from_csv(const std::string& csv, FigureKind kind, const FigureOptions& options = {}) {
  return render_figure(parse_csv(csv), kind, options);
}

Json estimate_json(const Estimate& e, const std::string& dataset) {
  Json j;
  j["estimator"] = e.estimator;
  j["point"] = e.point;
  j["lower"] = e.lower;
  j["upper"] = e.upper;
  j["level"] = e.level;
  j["seed"] = e.seed;
  j["fingerprint"] = e.fingerprint;
  j["dataset"] = dataset;
  Json cfg = Json::object();
  for (const auto& [k, v] : e.config) cfg[k] = v;
  j["config"] = cfg;
  j["warnings"] = e.warnings;
  return j;
}

std::string join_args(const std::vector<std::string>& args) {
  std::string s = "msekit";
  for (const auto& a : args) s += " " + (a.find_first_of(" \t'\"") == std::string::npos ? a : "'" + a + "'");
  return s;
}

// Writes the primary output and, when it goes to a file, a run record next to it.
class Emitter {
 public:
  Emitter(const Common& c, std::ostream& out, const std::vector<std::string>& args)
      : common_(c), out_(out), args_(args), start_(std::chrono::steady_clock::now()) {}

  void emit(const std::string& content) {
    if (common_.output.empty()) {
      out_ << content;
      return;
    }
    write_file(common_.output, content);
  }

  void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path + "'");
    f << content;
    if (!f) throw Error("failed writing '" + path + "'");
    manifest_.push_back(path);
  }

  void finish(const std::string& fingerprint_value, std::optional<std::uint64_t> seed) {
    if (common_.output.empty()) return;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json r;
    auto replay = args_;
    if (seed && std::find(args_.begin(), args_.end(), "--seed") == args_.end()) {
      replay.push_back("--seed");
      replay.push_back(std::to_string(*seed));
    }
    r["command_line"] = join_args(replay);
    r["fingerprint"] = fingerprint_value;
    if (seed)
      r["seed"] = *seed;
    else
      r["seed"] = nullptr;
    r["wall_time_seconds"] = wall;
    r["version"] = kVersion;
    r["outputs"] = manifest_;
    const auto path = common_.output + ".run.json";
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path + "'");
    f << r.dump(2) << '\n';
  }

 private:
  const Common& common_;
  std::ostream& out_;
  std::vector<std::string> args_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> manifest_;
};

void print_warnings(const Estimate& e, std::ostream& err) {
  for (const auto& w : e.warnings) err << "warning: " << w << '\n';
}

std::vector<double> parse_grid(const std::string& spec) {
  // "lo:hi:count" (linear), "lo:hi:log[:count]" or a comma list.
  if (spec.find(':') != std::string::npos) {
    const auto parts = split_fields(spec, ':');
    if (parts.size() < 2 || parts.size() > 4) throw UsageError("grid must be lo:hi:count, lo:hi:log[:count] or a list");
    try {
      const double lo = std::stod(parts[0]);
      const double hi = std::stod(parts[1]);
      if (parts.size() >= 3 && parts[2] == "log") {
        const int count = parts.size() == 4 ? std::stoi(parts[3]) : 50;
        return log_grid(lo, hi, count);
      }
      const int count = parts.size() >= 3 ? std::stoi(parts[2]) : 21;
      if (count < 1 || hi < lo) throw UsageError("grid needs lo <= hi and count >= 1");
      std::vector<double> g;
      for (int i = 0; i < count; ++i) g.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
      return g;
    } catch (const std::logic_error&) {
      throw UsageError("cannot parse grid '" + spec + "'");
    }
  }
  std::vector<double> g;
  try {
    for (const auto& p : split_fields(spec)) g.push_back(std::stod(p));
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse grid '" + spec + "'");
  }
  return g;
}

std::vector<int> parse_int_list(const std::string& spec) {
  std::vector<int> v;
  try {
    for (const auto& p : split_fields(spec)) v.push_back(std::stoi(p));
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse list '" + spec + "'");
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& spec) {
  std::vector<double> v;
  try {
    for (const auto& p : split_fields(spec)) v.push_back(std::stod(p));
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse list '" + spec + "'");
  }
  return v;
}

std::string list_letters(PatternBits set, const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t j = 0; j < names.size(); ++j)
    if ((set >> j) & 1U) s += (s.empty() ? "" : "*") + names[j];
  return s.empty() ? "{}" : s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"msekit: multiple systems estimation of hidden population sizes"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  EstimatorFlags flags;

  auto* datasets = app.add_subcommand("datasets", "List the embedded datasets");
  add_output_flags(datasets, common, "csv|json");
  bool show_table = false;
  datasets->add_option("--data", common.data, "Print the count table of this dataset instead");
  datasets->add_flag("--table", show_table, "With --data: print the cell counts as dataset CSV");

  auto* estimate = app.add_subcommand("estimate", "Estimate the population size of one dataset");
  estimate->add_option("--data", common.data, "Catalog name or dataset CSV path (required)");
  estimate->add_option("--estimator", flags.estimator, "independence|sparsemse|dga|lcmcr")->required();
  add_estimator_flags(estimate, flags, false);
  add_seed_flag(estimate, common);
  add_output_flags(estimate, common, "json|csv");
  std::string draws_path;
  estimate->add_option("--draws", draws_path, "lcmcr: write retained draws (chain,draw,n0,p0,kstar) to this CSV");

  auto* consistency = app.add_subcommand("consistency", "Internal consistency analysis over conditioned datasets");
  std::string estimator_list = "independence,sparsemse,dga,lcmcr";
  std::string dataset_list;
  std::int64_t min_obs = 30;
  bool per_estimator_drop = false;
  consistency->add_option("--estimators", estimator_list, "Comma-separated estimators")->capture_default_str();
  consistency->add_option("--datasets", dataset_list, "Comma-separated catalog names (default: all)");
  consistency->add_option("--min-obs", min_obs, "Minimum cases left after conditioning")->capture_default_str();
  consistency->add_flag("--per-estimator-drop", per_estimator_drop,
                        "Drop only the rows where an estimator itself failed (default: drop outlier rows)");
  add_estimator_flags(consistency, flags, true);
  add_seed_flag(consistency, common);
  add_output_flags(consistency, common, "csv|json|svg");

  auto* trajectory = app.add_subcommand("trajectory", "Estimates on growing random subsamples up to 2n");
  int n_seeds = 1;
  int n_checkpoints = 50;
  std::optional<double> truth_ratio;
  trajectory->add_option("--data", common.data, "Catalog name or dataset CSV path (required)");
  trajectory->add_option("--estimator", flags.estimator, "independence|sparsemse|dga|lcmcr")->required();
  trajectory->add_option("--seeds", n_seeds, "Number of permutation seeds (seed, seed+1, ...)")->capture_default_str();
  trajectory->add_option("--checkpoints", n_checkpoints, "Evenly spaced checkpoints in [max(30, n/20), 2n], plus n")
      ->capture_default_str();
  trajectory->add_option("--truth-ratio", truth_ratio, "svg: draw a reference rule at this ratio");
  add_estimator_flags(trajectory, flags, true);
  add_seed_flag(trajectory, common);
  add_output_flags(trajectory, common, "csv|svg");

  auto* sweep = app.add_subcommand("sweep", "Sensitivity of an estimator to one tuning parameter");
  std::string sweep_kind;
  std::string grid_spec;
  sweep->add_option("--data", common.data, "Catalog name or dataset CSV path")->required();
  sweep->add_option("--kind", sweep_kind, "sparsemse-threshold|dga-kappa|dga-beta")->required();
  sweep->add_option("--grid", grid_spec, "lo:hi:count, lo:hi:log[:count] or a comma list")->required();
  add_estimator_flags(sweep, flags, false);
  add_seed_flag(sweep, common);
  add_output_flags(sweep, common, "csv|svg");

  auto* bias = app.add_subcommand("bias", "Asymptotic bias under Beta-distributed capture heterogeneity");
  bool curve = false;
  double p0_target = 0.75;
  std::string lists_spec = "2,3,4,5,6";
  std::string precision_spec = "0.5:100:log";
  double beta_a = 1.0, beta_b = 8.0;
  bias->add_flag("--curve", curve, "Tabulate relative bias against the precision a+b");
  bias->add_option("--p0", p0_target, "Curve: target unobserved fraction (b/(a+b))^L")->capture_default_str();
  bias->add_option("--lists", lists_spec, "List counts (summary mode uses the first)")->capture_default_str();
  bias->add_option("--precision", precision_spec, "Curve: precision grid")->capture_default_str();
  bias->add_option("-a,--a", beta_a, "Summary: Beta shape a")->capture_default_str();
  bias->add_option("-b,--b", beta_b, "Summary: Beta shape b")->capture_default_str();
  add_output_flags(bias, common, "csv|json|svg");

  auto* graphs = app.add_subcommand("graphs", "Enumerate decomposable graphs on L lists");
  int graph_lists = 3;
  std::string cache_path;
  bool graphs_complete = false;
  graphs->add_option("--lists", graph_lists, "Number of lists (2 to 6)")->capture_default_str();
  graphs->add_flag("--include-complete", graphs_complete, "Include the complete graph");
  graphs->add_option("--cache", cache_path, "Graph cache file (edge bitmasks), rebuilt when invalid");
  add_output_flags(graphs, common, "csv|json");

  auto* simulate = app.add_subcommand("simulate", "Simulate a count table");
  std::int64_t population = 1000;
  std::string inclusion_spec;
  std::string beta_spec;
  int sim_lists = 3;
  simulate->add_option("--population", population, "True population size N")->capture_default_str();
  simulate->add_option("--inclusion", inclusion_spec, "Independent lists: comma-separated inclusion probabilities");
  simulate->add_option("--beta", beta_spec, "Heterogeneous capture: 'a,b' of a Beta distribution");
  simulate->add_option("--lists", sim_lists, "With --beta: number of lists")->capture_default_str();
  add_seed_flag(simulate, common);
  add_output_flags(simulate, common, "csv");

  std::vector<std::string> argv_store{"msekit"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (common.jobs > 0) set_default_jobs(common.jobs);
    Emitter emitter(common, out, args);

    if (*datasets) {
      check_format(common, {"csv", "json"});
      if (!common.data.empty()) {
        const auto d = resolve_dataset(common.data);
        if (show_table || common.format == "csv") {
          emitter.emit(serialize_dataset(d.table));
        } else {
          const auto s = summarize(d.table);
          Json j{{"name", d.name}, {"n_obs", s.n_obs}, {"overlap", s.overlap}, {"lists", d.table.list_names()},
                 {"list_totals", s.list_totals}, {"provenance", d.provenance}, {"timeframe", d.timeframe}};
          emitter.emit(j.dump(2) + "\n");
        }
        emitter.finish("", std::nullopt);
        return 0;
      }
      if (common.format == "json") {
        Json arr = Json::array();
        for (const auto& e : catalog()) {
          const auto d = load_catalog_dataset(e.key);
          const auto s = summarize(d.table);
          arr.push_back({{"name", e.key}, {"title", e.title}, {"lists", d.table.list_names()}, {"n_obs", s.n_obs},
                         {"overlap", s.overlap}, {"provenance", d.provenance}});
        }
        emitter.emit(arr.dump(2) + "\n");
      } else {
        std::ostringstream s;
        s << "name,title,lists,n_obs,overlap\n";
        for (const auto& e : catalog()) {
          const auto d = load_catalog_dataset(e.key);
          const auto sum = summarize(d.table);
          std::string names;
          for (const auto& n : d.table.list_names()) names += (names.empty() ? "" : " ") + n;
          s << e.key << ',' << e.title << ',' << names << ',' << sum.n_obs << ',' << sum.overlap << '\n';
        }
        emitter.emit(s.str());
      }
      emitter.finish("", std::nullopt);
      return 0;
    }

    if (*estimate) {
      check_format(common, {"json", "csv"});
      const auto kind = require_estimator(flags.estimator);
      const auto d = resolve_dataset(common.data);
      const auto seed = resolve_seed(common, err);
      const auto cfg = make_config(flags, kind, seed, estimate);
      Estimate e;
      Json extra;
      if (kind == EstimatorKind::lcmcr) {
        auto l = cfg.lcmcr;
        l.seed = seed;
        l.level = cfg.level;
        const auto r = multi_chain_posterior(d.table, l);
        e = r.estimate;
        const auto report = convergence_diagnostics(r.samples);
        auto q = [](const QuantityDiagnostics& qd) {
          Json j;
          j["rhat"] = qd.rhat ? Json(*qd.rhat) : Json("undefined");
          j["ess"] = qd.ess ? Json(*qd.ess) : Json("undefined");
          return j;
        };
        extra = {{"n0", q(report.n0)}, {"p0", q(report.p0)}, {"kstar", q(report.kstar)}, {"draws", report.draws}};
        if (!draws_path.empty()) {
          std::ostringstream s;
          write_draws_csv(s, r.samples);
          emitter.write_file(draws_path, s.str());
        }
      } else {
        e = run_estimator(d.table, cfg);
      }
      print_warnings(e, err);
      if (common.format == "json") {
        auto j = estimate_json(e, d.name);
        if (!extra.is_null()) j["diagnostics"] = extra;
        emitter.emit(j.dump(2) + "\n");
      } else {
        std::ostringstream s;
        s << "dataset,estimator,point,lower,upper,level,seed,fingerprint\n"
          << d.name << ',' << e.estimator << ',' << format_double(e.point, 10) << ',' << format_double(e.lower, 10) << ','
          << format_double(e.upper, 10) << ',' << format_double(e.level) << ',' << e.seed << ',' << e.fingerprint << '\n';
        emitter.emit(s.str());
      }
      emitter.finish(e.fingerprint, seed);
      return 0;
    }

    if (*consistency) {
      check_format(common, {"csv", "json", "svg"});
      const auto seed = resolve_seed(common, err);
      std::vector<NamedEstimator> estimators;
      std::string fp_text;
      for (const auto& name : split_fields(estimator_list)) {
        const auto cfg = make_config(flags, require_estimator(name), seed, consistency, true);
        estimators.push_back(make_estimator(cfg));
        fp_text += name + ";";
      }
      std::vector<Dataset> ds;
      if (dataset_list.empty())
        for (const auto& n : catalog_names()) ds.push_back(load_catalog_dataset(n));
      else
        for (const auto& n : split_fields(dataset_list)) ds.push_back(resolve_dataset(n));
      const auto run = run_internal_consistency(ds, estimators, min_obs);
      for (const auto& x : run.exclusions)
        err << "excluded " << x.base << "|" << x.reference_list << ": n_obs " << x.n_obs << " < " << x.min_obs << '\n';
      for (const auto& row : run.rows)
        if (row.outlier) err << "outlier " << row.dataset << "|" << row.reference << ": " << row.outlier_reason << '\n';
      const auto metrics = consistency_metrics(run, per_estimator_drop);
      for (const auto& m : metrics)
        err << m.estimator << ": mean " << format_double(m.mean, 4) << ", rmse " << format_double(m.rmse, 4) << ", median "
            << format_double(m.median, 4) << ", coverage " << format_double(m.coverage, 4) << " (" << m.rows_used
            << " rows), coverage over all rows " << format_double(m.coverage_all_rows, 4) << '\n';
      std::ostringstream csv;
      write_consistency_csv(csv, run);
      if (common.format == "csv") {
        emitter.emit(csv.str());
      } else if (common.format == "svg") {
        emitter.emit(svg_from_csv(csv.str(), FigureKind::consistency_dots));
      } else {
        Json j;
        j["rows"] = Json::array();
        for (const auto& row : run.rows)
          for (const auto& o : row.outcomes) {
            Json r{{"dataset", row.dataset}, {"reference", row.reference}, {"truth", row.truth},
                   {"n_obs", row.n_obs},     {"overlap", row.overlap},     {"estimator", o.estimator}};
            r["estimate"] = o.estimate ? estimate_json(*o.estimate, row.dataset + "|" + row.reference) : Json(nullptr);
            r["logbias"] = std::isfinite(o.log_bias) ? Json(o.log_bias) : Json(nullptr);
            r["covered"] = o.covered;
            r["outlier"] = row.outlier;
            if (!o.error.empty()) r["error"] = o.error;
            j["rows"].push_back(r);
          }
        j["metrics"] = Json::array();
        for (const auto& m : metrics)
          j["metrics"].push_back({{"estimator", m.estimator}, {"mean", m.mean}, {"rmse", m.rmse}, {"median", m.median},
                                  {"coverage", m.coverage}, {"coverage_all_rows", m.coverage_all_rows},
                                  {"rows_used", m.rows_used}, {"rows_total", m.rows_total}});
        emitter.emit(j.dump(2) + "\n");
      }
      emitter.finish(fingerprint("consistency", {{"estimators", fp_text}, {"min_obs", std::to_string(min_obs)}}), seed);
      return 0;
    }

    if (*trajectory) {
      check_format(common, {"csv", "svg"});
      const auto kind = require_estimator(flags.estimator);
      const auto d = resolve_dataset(common.data);
      const auto seed = resolve_seed(common, err);
      const auto cfg = make_config(flags, kind, seed, trajectory, true);
      const auto est = make_estimator(cfg);
      const auto checkpoints = default_checkpoints(d.table.n_obs(), n_checkpoints);
      std::vector<TrajectorySeries> series;
      for (int i = 0; i < n_seeds; ++i) series.push_back(estimate_trajectory(d, est, checkpoints, seed + static_cast<std::uint64_t>(i)));
      for (const auto& s : series)
        for (const auto& p : s.points)
          if (!p.error.empty()) err << "gap at m = " << p.m << " (seed " << s.seed << "): " << p.error << '\n';
      std::ostringstream csv;
      write_trajectory_csv(csv, series);
      if (common.format == "svg") {
        FigureOptions o;
        o.truth = truth_ratio;
        emitter.emit(svg_from_csv(csv.str(), FigureKind::trajectory, o));
      } else {
        emitter.emit(csv.str());
      }
      emitter.finish(fingerprint("trajectory", {{"estimator", est.name},
                                                {"seeds", std::to_string(n_seeds)},
                                                {"checkpoints", std::to_string(n_checkpoints)}}),
                     seed);
      return 0;
    }

    if (*sweep) {
      check_format(common, {"csv", "svg"});
      const auto kind = parse_sweep_kind(sweep_kind);
      if (!kind) throw UsageError("unknown sweep kind '" + sweep_kind + "'; choose sparsemse-threshold, dga-kappa or dga-beta");
      const auto d = resolve_dataset(common.data);
      const auto seed = resolve_seed(common, err);
      const auto cfg = make_config(flags, EstimatorKind::sparsemse, seed, sweep);
      const auto result = sensitivity_sweep(d.table, *kind, parse_grid(grid_spec), cfg);
      for (const auto& r : result.rows)
        if (!r.error.empty()) err << "gap at " << format_double(r.value) << ": " << r.error << '\n';
      std::ostringstream csv;
      write_sweep_csv(csv, result);
      emitter.emit(common.format == "svg" ? svg_from_csv(csv.str(), FigureKind::sweep_band) : csv.str());
      emitter.finish(fingerprint("sweep", {{"kind", sweep_kind}, {"grid", grid_spec}}), seed);
      return 0;
    }

    if (*bias) {
      check_format(common, {"csv", "json", "svg"});
      const auto lists = parse_int_list(lists_spec);
      if (curve) {
        const auto c = bias_curve(p0_target, lists, parse_grid(precision_spec));
        for (const auto& n : c.notices) err << "notice: " << n << '\n';
        std::ostringstream csv;
        write_bias_curve_csv(csv, c);
        if (common.format == "json") {
          Json arr = Json::array();
          for (const auto& p : c.points)
            arr.push_back({{"L", p.lists}, {"precision", p.precision}, {"a", p.a}, {"b", p.b}, {"gamma", p.gamma},
                           {"p0", p.p0}, {"relative_bias", p.relative_bias}});
          emitter.emit(arr.dump(2) + "\n");
        } else {
          emitter.emit(common.format == "svg" ? svg_from_csv(csv.str(), FigureKind::bias_curve) : csv.str());
        }
      } else {
        if (lists.empty()) throw UsageError("--lists needs at least one value");
        if (common.format == "svg") throw UsageError("svg output needs --curve");
        const auto r = beta_bias_summary(beta_a, beta_b, lists.front());
        if (common.format == "json") {
          Json j{{"a", beta_a},          {"b", beta_b},          {"L", lists.front()},
                 {"gamma", r.gamma},     {"p0", r.p0},           {"relative_bias", r.relative_bias},
                 {"multiplier", 1.0 + r.relative_bias}};
          emitter.emit(j.dump(2) + "\n");
        } else {
          std::ostringstream s;
          s << "L,precision,a,b,gamma,p0,relative_bias\n"
            << lists.front() << ',' << format_double(beta_a + beta_b, 10) << ',' << format_double(beta_a, 10) << ','
            << format_double(beta_b, 10) << ',' << format_double(r.gamma, 12) << ',' << format_double(r.p0, 12) << ','
            << format_double(r.relative_bias, 12) << '\n';
          emitter.emit(s.str());
        }
      }
      emitter.finish(fingerprint("bias", {{"curve", curve ? "true" : "false"}, {"p0", format_double(p0_target)},
                                          {"lists", lists_spec}, {"precision", precision_spec}}),
                     std::nullopt);
      return 0;
    }

    if (*graphs) {
      check_format(common, {"csv", "json"});
      const auto gs = cache_path.empty() ? enumerate_decomposable_graphs(graph_lists, graphs_complete)
                                         : cached_decomposable_graphs(cache_path, graph_lists, graphs_complete);
      const auto names = default_list_names(graph_lists);
      auto describe = [&](const std::vector<PatternBits>& sets) {
        std::string s;
        for (auto c : sets) s += (s.empty() ? "" : " ") + list_letters(c, names);
        return s;
      };
      if (common.format == "json") {
        Json arr = Json::array();
        for (const auto& g : gs) {
          Json cl = Json::array(), sp = Json::array();
          for (auto c : g.cliques()) cl.push_back(list_letters(c, names));
          for (auto s : g.separators()) sp.push_back(list_letters(s, names));
          arr.push_back({{"edges", g.edges()}, {"edge_count", g.edge_count()}, {"cliques", cl}, {"separators", sp}});
        }
        emitter.emit(Json{{"lists", graph_lists}, {"count", gs.size()}, {"graphs", arr}}.dump(2) + "\n");
      } else {
        std::ostringstream s;
        s << "edges,edge_count,cliques,separators\n";
        for (const auto& g : gs) s << g.edges() << ',' << g.edge_count() << ',' << describe(g.cliques()) << ',' << describe(g.separators()) << '\n';
        emitter.emit(s.str());
      }
      err << gs.size() << " decomposable graphs on " << graph_lists << " lists\n";
      emitter.finish("", std::nullopt);
      return 0;
    }

    if (*simulate) {
      check_format(common, {"csv"});
      const auto seed = resolve_seed(common, err);
      std::optional<CellProbabilities> probs;
      if (!inclusion_spec.empty() && !beta_spec.empty()) throw UsageError("give either --inclusion or --beta, not both");
      if (!inclusion_spec.empty()) {
        const auto p = parse_double_list(inclusion_spec);
        probs = CellProbabilities::independent(p);
      } else if (!beta_spec.empty()) {
        const auto ab = parse_double_list(beta_spec);
        if (ab.size() != 2) throw UsageError("--beta takes 'a,b'");
        probs = heterogeneity_cell_probs(HeterogeneityModel::beta(ab[0], ab[1], sim_lists));
      } else {
        throw UsageError("simulate needs --inclusion or --beta");
      }
      const auto t = simulate_counts(*probs, population, seed);
      emitter.emit(serialize_dataset(t));
      emitter.finish(fingerprint("simulate", {{"population", std::to_string(population)}, {"inclusion", inclusion_spec},
                                              {"beta", beta_spec}, {"lists", std::to_string(sim_lists)}}),
                     seed);
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace msekit::cli
