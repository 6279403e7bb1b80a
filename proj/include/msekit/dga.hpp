#pragma once

// Bayesian model averaging over decomposable graphical models with
// hyper-Dirichlet priors. Graphs are labeled undirected graphs on the lists;
// an edge set is a bitmask over the pairs (0,1), (0,2), ..., (L-2,L-1).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msekit/common.hpp"
#include "msekit/data.hpp"

namespace msekit {

using EdgeMask = std::uint32_t;

inline constexpr int kMinGraphLists = 2;
inline constexpr int kMaxGraphLists = 6;

/// Position of the pair {i, j} in the edge bitmask.
int edge_index(int i, int j, int lists);
int edge_total(int lists);

struct JunctionDecomposition {
  /// Vertex subsets as list bitmasks, in junction-tree order.
  std::vector<PatternBits> cliques;
  /// One per clique after the first; may be empty (0).
  std::vector<PatternBits> separators;
};

class DecomposableGraph {
 public:
  /// Throws Error when the graph is not chordal.
  DecomposableGraph(int lists, EdgeMask edges);

  int lists() const { return lists_; }
  EdgeMask edges() const { return edges_; }
  int edge_count() const;
  bool has_edge(int i, int j) const;
  bool is_complete() const;
  const std::vector<PatternBits>& cliques() const { return junction_.cliques; }
  const std::vector<PatternBits>& separators() const { return junction_.separators; }

 private:
  int lists_;
  EdgeMask edges_;
  JunctionDecomposition junction_;
};

/// Maximum-cardinality-search order (ties to the lowest vertex).
std::vector<int> mcs_order(int lists, EdgeMask edges);
bool is_chordal(int lists, EdgeMask edges);
/// Throws Error for non-chordal input.
JunctionDecomposition junction_decomposition(int lists, EdgeMask edges);

/// Every labeled chordal graph on `lists` vertices, by increasing edge mask.
std::vector<DecomposableGraph> enumerate_decomposable_graphs(int lists, bool include_complete = false);

/// Reads edge masks from `path` when it holds a valid enumeration for
/// `lists`; otherwise enumerates and rewrites the file.
std::vector<DecomposableGraph> cached_decomposable_graphs(const std::filesystem::path& path, int lists,
                                                          bool include_complete = false);

struct DgaPrior {
  double kappa = 0.5;
  double edge_beta = 0.5;
  bool include_complete = false;
  /// Grid bound on N; 100 * n_obs when unset.
  std::optional<std::int64_t> n_max;
};

/// alpha_x = kappa^|x| (1 - kappa)^(L - |x|), indexed by pattern bits.
std::vector<double> prior_counts(int lists, double kappa);

/// Log marginal likelihood of the full table (observed cells plus n0 in the
/// zero cell) under graph g, including the multinomial coefficient.
double log_marginal_full_table(const CountTable& table, std::int64_t n0, const DecomposableGraph& g,
                               const DgaPrior& prior);

struct PosteriorGrid {
  std::int64_t n_obs = 0;
  /// Unnormalized log posterior of n0 = 0, 1, ..., n_max - n_obs.
  std::vector<double> log_weights;
  std::vector<double> probs;
  /// Normalized probability at the top grid point.
  double tail_mass = 0.0;

  std::int64_t population(std::size_t i) const { return n_obs + static_cast<std::int64_t>(i); }
  /// Smallest N whose posterior CDF reaches `prob`.
  std::int64_t quantile(double prob) const;
};

struct GraphWeight {
  EdgeMask edges;
  double posterior;
};

struct DgaResult {
  Estimate estimate;
  PosteriorGrid grid;
  std::vector<GraphWeight> graph_weights;
};

/// Posterior over N averaged over `graphs` (all decomposable graphs per the
/// prior's include_complete flag when null).
DgaResult posterior_population(const CountTable& table, const DgaPrior& prior, double level,
                               const std::vector<DecomposableGraph>* graphs = nullptr);

inline Estimate estimate_dga(const CountTable& table, const DgaPrior& prior, double level = 0.95) {
  return posterior_population(table, prior, level).estimate;
}

}  // namespace msekit
