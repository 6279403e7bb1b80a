#include "msekit/estimators.hpp"

namespace msekit {

const std::vector<std::string>& estimator_names() {
  static const std::vector<std::string> names = {"independence", "sparsemse", "dga", "lcmcr"};
  return names;
}

std::string to_string(EstimatorKind kind) { return estimator_names().at(static_cast<std::size_t>(kind)); }

std::optional<EstimatorKind> parse_estimator(std::string_view name) {
  const auto& names = estimator_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<EstimatorKind>(i);
  return std::nullopt;
}

LcmcrConfig reduced_lcmcr_budget() {
  LcmcrConfig c;
  c.chains = 20;
  c.iterations = 10000;
  return c;
}

Estimate run_estimator(const CountTable& table, const EstimatorConfig& cfg) {
  const BootstrapConfig boot{cfg.replicates, cfg.level, cfg.seed};
  switch (cfg.kind) {
    case EstimatorKind::independence:
      return estimate_independence(table, boot);
    case EstimatorKind::sparsemse:
      return estimate_sparsemse(table, SparseMseConfig{cfg.threshold, cfg.selection, boot});
    case EstimatorKind::dga: {
      auto e = estimate_dga(table, cfg.dga, cfg.level);
      e.seed = cfg.seed;
      return e;
    }
    case EstimatorKind::lcmcr: {
      auto l = cfg.lcmcr;
      l.seed = cfg.seed;
      l.level = cfg.level;
      return estimate_lcmcr(table, l);
    }
  }
  throw Error("unknown estimator");
}

NamedEstimator make_estimator(const EstimatorConfig& cfg) {
  return {to_string(cfg.kind), [cfg](const CountTable& t) { return run_estimator(t, cfg); }};
}

}  // namespace msekit
