#pragma once

// List-inclusion count tables: the universal input to every estimator.
//
// A pattern over L lists is stored as a bitmask where bit j is set when the
// individual appears on list j (column order of the dataset). The all-zero
// pattern is the unobservable cell and never carries a count.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "msekit/common.hpp"

namespace msekit {

inline constexpr int kMinLists = 2;
inline constexpr int kMaxLists = 8;

using PatternBits = std::uint32_t;

class Pattern {
 public:
  Pattern(PatternBits bits, int lists);

  PatternBits bits() const { return bits_; }
  int lists() const { return lists_; }
  /// Number of lists the pattern appears on, |x|.
  int weight() const;
  bool on(int list) const { return (bits_ >> list) & 1U; }
  bool is_zero() const { return bits_ == 0; }
  /// "x_1 x_2 ... x_L" as a string of 0/1 characters.
  std::string to_string() const;

  friend bool operator==(const Pattern&, const Pattern&) = default;

 private:
  PatternBits bits_;
  int lists_;
};

/// Canonical serialization order: by |x|, then by the 0/1 string.
bool canonical_less(PatternBits a, PatternBits b, int lists);

/// All patterns over `lists` lists in canonical order.
std::vector<PatternBits> canonical_patterns(int lists, bool include_zero = false);

class CountTable {
 public:
  CountTable() = default;
  explicit CountTable(std::vector<std::string> list_names);
  /// `dense` is indexed by pattern bits and has 2^L entries; entry 0 must be 0.
  CountTable(std::vector<std::string> list_names, std::vector<std::int64_t> dense);

  int lists() const { return static_cast<int>(names_.size()); }
  std::size_t cell_count() const { return counts_.size(); }
  const std::vector<std::string>& list_names() const { return names_; }
  /// Index of a list by name, or -1.
  int list_index(std::string_view name) const;

  std::int64_t count(PatternBits bits) const { return counts_.at(bits); }
  void set(PatternBits bits, std::int64_t count);
  void add(PatternBits bits, std::int64_t count) { set(bits, this->count(bits) + count); }

  std::int64_t n_obs() const;
  std::span<const std::int64_t> dense() const { return counts_; }

  /// Table whose list j is this table's list order[j].
  CountTable permuted(std::span<const int> order) const;

  friend bool operator==(const CountTable&, const CountTable&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::int64_t> counts_;
};

struct Dataset {
  std::string name;
  CountTable table;
  std::string provenance;
  std::string timeframe;
};

struct DatasetSummary {
  std::int64_t n_obs = 0;
  /// Individuals appearing on two or more lists.
  std::int64_t overlap = 0;
  std::vector<std::int64_t> list_totals;
};

struct ConditionedDataset {
  std::string base;
  std::string reference_list;
  CountTable table;
  /// Size of the reference list.
  std::int64_t ground_truth = 0;
};

/// Returned instead of a ConditionedDataset when too few cases remain.
struct Exclusion {
  std::string base;
  std::string reference_list;
  std::int64_t n_obs = 0;
  std::int64_t min_obs = 0;
};

using ConditioningOutcome = std::variant<ConditionedDataset, Exclusion>;

/// Probability of every pattern including the all-zero one.
class CellProbabilities {
 public:
  /// Rejects sums deviating from 1 by more than 1e-12 and, when
  /// `require_positive` is set, any non-positive cell.
  CellProbabilities(int lists, std::vector<double> probs, bool require_positive = true);

  /// Independent lists with the given per-list inclusion probabilities.
  static CellProbabilities independent(std::span<const double> inclusion);

  int lists() const { return lists_; }
  double p(PatternBits bits) const { return probs_.at(bits); }
  double p0() const { return probs_[0]; }
  /// Conditional probability of a non-zero pattern given observation.
  double q(PatternBits bits) const;
  std::span<const double> probs() const { return probs_; }

 private:
  int lists_;
  std::vector<double> probs_;
};

Dataset parse_dataset(std::istream& in, std::string name);
Dataset parse_dataset(std::string_view csv, std::string name);

/// `list1,...,listL,count` with one row per non-zero pattern, canonical order.
void write_dataset(std::ostream& out, const CountTable& table);
std::string serialize_dataset(const CountTable& table);

DatasetSummary summarize(const CountTable& table);
inline DatasetSummary summarize_dataset(const Dataset& d) { return summarize(d.table); }

ConditioningOutcome condition_on_reference(const Dataset& d, std::string_view reference,
                                           std::int64_t min_obs = 30);

/// n_obs ~ binomial(N, 1 - p0); counts | n_obs ~ multinomial(q).
CountTable simulate_counts(const CellProbabilities& p, std::int64_t population, Rng& rng);
CountTable simulate_counts(const CellProbabilities& p, std::int64_t population, std::uint64_t seed);

/// Draws multinomial(n, probs) into `out`; probs need not be normalized.
void sample_multinomial(Rng& rng, std::int64_t n, std::span<const double> probs,
                        std::span<std::int64_t> out);

/// Default list names "A", "B", ...
std::vector<std::string> default_list_names(int lists);

// Embedded catalog ---------------------------------------------------------

struct CatalogEntry {
  std::string key;
  std::string title;
  std::int64_t n_obs;
  std::int64_t overlap;
  int lists;
};

const std::vector<CatalogEntry>& catalog();
std::vector<std::string> catalog_names();

/// Loads `name` from $MSEKIT_DATA_DIR/<name>.csv when that file exists,
/// otherwise from the embedded fixtures. Either way the table is checked
/// against the catalog's (n_obs, overlap, lists) and a mismatch throws.
Dataset load_catalog_dataset(std::string_view name);

}  // namespace msekit
