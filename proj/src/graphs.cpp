#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include "msekit/dga.hpp"

namespace msekit {

namespace {

void check_lists(int lists) {
  if (lists < kMinGraphLists || lists > kMaxGraphLists)
    throw Error("graph enumeration supports 2 to 6 lists (got " + std::to_string(lists) + ")");
}

PatternBits neighbours(int lists, EdgeMask edges, int v) {
  PatternBits n = 0;
  for (int u = 0; u < lists; ++u)
    if (u != v && ((edges >> edge_index(u, v, lists)) & 1U)) n |= PatternBits{1} << u;
  return n;
}

bool is_clique(int lists, EdgeMask edges, PatternBits set) {
  for (int i = 0; i < lists; ++i)
    for (int j = i + 1; j < lists; ++j)
      if (((set >> i) & 1U) && ((set >> j) & 1U) && !((edges >> edge_index(i, j, lists)) & 1U)) return false;
  return true;
}

}  // namespace

int edge_index(int i, int j, int lists) {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= lists || i == j) throw Error("invalid edge");
  // Pairs before row i: sum_{r<i} (lists - 1 - r).
  return i * (2 * lists - i - 1) / 2 + (j - i - 1);
}

int edge_total(int lists) { return lists * (lists - 1) / 2; }

std::vector<int> mcs_order(int lists, EdgeMask edges) {
  std::vector<int> order;
  std::vector<int> weight(static_cast<std::size_t>(lists), 0);
  PatternBits numbered = 0;
  for (int step = 0; step < lists; ++step) {
    int best = -1;
    for (int v = 0; v < lists; ++v)
      if (!((numbered >> v) & 1U) && (best < 0 || weight[static_cast<std::size_t>(v)] > weight[static_cast<std::size_t>(best)]))
        best = v;
    order.push_back(best);
    numbered |= PatternBits{1} << best;
    const auto nb = neighbours(lists, edges, best);
    for (int u = 0; u < lists; ++u)
      if ((nb >> u) & 1U) ++weight[static_cast<std::size_t>(u)];
  }
  return order;
}

bool is_chordal(int lists, EdgeMask edges) {
  PatternBits earlier = 0;
  for (int v : mcs_order(lists, edges)) {
    if (!is_clique(lists, edges, neighbours(lists, edges, v) & earlier)) return false;
    earlier |= PatternBits{1} << v;
  }
  return true;
}

JunctionDecomposition junction_decomposition(int lists, EdgeMask edges) {
  if (!is_chordal(lists, edges)) throw Error("graph is not chordal");
  std::vector<PatternBits> candidates;
  PatternBits earlier = 0;
  for (int v : mcs_order(lists, edges)) {
    candidates.push_back((neighbours(lists, edges, v) & earlier) | (PatternBits{1} << v));
    earlier |= PatternBits{1} << v;
  }
  JunctionDecomposition j;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    bool maximal = true;
    for (std::size_t k = 0; k < candidates.size() && maximal; ++k)
      if (k != i && (candidates[i] & candidates[k]) == candidates[i] && (candidates[k] != candidates[i] || k < i))
        maximal = false;
    if (maximal) j.cliques.push_back(candidates[i]);
  }
  PatternBits covered = j.cliques.front();
  for (std::size_t k = 1; k < j.cliques.size(); ++k) {
    j.separators.push_back(j.cliques[k] & covered);
    covered |= j.cliques[k];
  }
  return j;
}

DecomposableGraph::DecomposableGraph(int lists, EdgeMask edges)
    : lists_(lists), edges_(edges), junction_((check_lists(lists), junction_decomposition(lists, edges))) {
  if ((edges >> edge_total(lists)) != 0) throw Error("edge mask has bits beyond the pair count");
}

int DecomposableGraph::edge_count() const { return std::popcount(edges_); }

bool DecomposableGraph::has_edge(int i, int j) const { return (edges_ >> edge_index(i, j, lists_)) & 1U; }

bool DecomposableGraph::is_complete() const { return edge_count() == edge_total(lists_); }

std::vector<DecomposableGraph> enumerate_decomposable_graphs(int lists, bool include_complete) {
  check_lists(lists);
  const EdgeMask full = (EdgeMask{1} << edge_total(lists)) - 1;
  std::vector<DecomposableGraph> graphs;
  for (EdgeMask e = 0; e <= full; ++e) {
    if (e == full && !include_complete) continue;
    if (is_chordal(lists, e)) graphs.emplace_back(lists, e);
  }
  return graphs;
}

std::vector<DecomposableGraph> cached_decomposable_graphs(const std::filesystem::path& path, int lists,
                                                          bool include_complete) {
  auto fresh = enumerate_decomposable_graphs(lists, true);
  auto select = [&](const std::vector<DecomposableGraph>& all) {
    std::vector<DecomposableGraph> out;
    for (const auto& g : all)
      if (include_complete || !g.is_complete()) out.push_back(g);
    return out;
  };

  std::ifstream in(path);
  if (in) {
    std::vector<EdgeMask> masks;
    std::string line;
    bool valid = std::getline(in, line) && line == "lists " + std::to_string(lists);
    while (valid && std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      EdgeMask m = 0;
      if (!(ls >> m)) valid = false;
      masks.push_back(m);
    }
    if (valid && masks.size() == fresh.size()) {
      for (std::size_t i = 0; i < masks.size() && valid; ++i) valid = masks[i] == fresh[i].edges();
      if (valid) return select(fresh);
    }
  }
  std::ofstream out(path);
  if (out) {
    out << "lists " << lists << '\n';
    for (const auto& g : fresh) out << g.edges() << '\n';
  }
  return select(fresh);
}

}  // namespace msekit
