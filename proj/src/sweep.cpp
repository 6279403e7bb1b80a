#include <ostream>

#include "msekit/diagnostics.hpp"

namespace msekit {

std::string to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::sparsemse_threshold:
      return "sparsemse-threshold";
    case SweepKind::dga_kappa:
      return "dga-kappa";
    case SweepKind::dga_beta:
      return "dga-beta";
  }
  throw Error("unknown sweep kind");
}

std::optional<SweepKind> parse_sweep_kind(std::string_view name) {
  for (auto k : {SweepKind::sparsemse_threshold, SweepKind::dga_kappa, SweepKind::dga_beta})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

SweepResult sensitivity_sweep(const CountTable& table, SweepKind kind, const std::vector<double>& grid,
                              const EstimatorConfig& fixed) {
  if (grid.empty()) throw Error("sweep grid is empty");
  for (double v : grid) {
    const bool ok = kind == SweepKind::sparsemse_threshold ? (v >= 0.0 && v <= 1.0) : (v > 0.0 && v < 1.0);
    if (!ok) throw Error("sweep value " + format_double(v) + " is outside the parameter domain");
  }
  SweepResult r{kind, std::vector<SweepRow>(grid.size())};
  // Grid points run one after another; each estimator parallelizes inside.
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto cfg = fixed;
    switch (kind) {
      case SweepKind::sparsemse_threshold:
        cfg.kind = EstimatorKind::sparsemse;
        cfg.threshold = grid[i];
        break;
      case SweepKind::dga_kappa:
        cfg.kind = EstimatorKind::dga;
        cfg.dga.kappa = grid[i];
        break;
      case SweepKind::dga_beta:
        cfg.kind = EstimatorKind::dga;
        cfg.dga.edge_beta = grid[i];
        break;
    }
    r.rows[i].value = grid[i];
    try {
      r.rows[i].estimate = run_estimator(table, cfg);
    } catch (const Error& e) {
      r.rows[i].error = e.what();
    }
  }
  return r;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "kind,value,point,lower,upper\n";
  for (const auto& row : sweep.rows) {
    out << to_string(sweep.kind) << ',' << format_double(row.value, 10) << ',';
    if (row.estimate)
      out << format_double(row.estimate->point, 10) << ',' << format_double(row.estimate->lower, 10) << ','
          << format_double(row.estimate->upper, 10);
    else
      out << ",,";
    out << '\n';
  }
}

}  // namespace msekit
