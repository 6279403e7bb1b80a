#include "msekit/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace msekit {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

void check_lists(int lists) {
  if (lists < kMinLists || lists > kMaxLists)
    throw DataError("list count " + std::to_string(lists) + " outside supported range [2, 8]");
}

}  // namespace

// Pattern ------------------------------------------------------------------

Pattern::Pattern(PatternBits bits, int lists) : bits_(bits), lists_(lists) {
  if (lists < 1 || lists > kMaxLists || (bits >> lists) != 0)
    throw DataError("pattern bits out of range for " + std::to_string(lists) + " lists");
}

int Pattern::weight() const { return std::popcount(bits_); }

std::string Pattern::to_string() const {
  std::string s(static_cast<std::size_t>(lists_), '0');
  for (int j = 0; j < lists_; ++j)
    if (on(j)) s[static_cast<std::size_t>(j)] = '1';
  return s;
}

bool canonical_less(PatternBits a, PatternBits b, int lists) {
  const int wa = std::popcount(a), wb = std::popcount(b);
  if (wa != wb) return wa < wb;
  // String order compares list 0 first, i.e. the lowest bit is most significant.
  for (int j = 0; j < lists; ++j) {
    const bool ba = (a >> j) & 1U, bb = (b >> j) & 1U;
    if (ba != bb) return bb;
  }
  return false;
}

std::vector<PatternBits> canonical_patterns(int lists, bool include_zero) {
  std::vector<PatternBits> out;
  for (PatternBits bits = include_zero ? 0 : 1; bits < (PatternBits{1} << lists); ++bits) out.push_back(bits);
  std::sort(out.begin(), out.end(), [lists](PatternBits a, PatternBits b) { return canonical_less(a, b, lists); });
  return out;
}

std::vector<std::string> default_list_names(int lists) {
  std::vector<std::string> names;
  for (int j = 0; j < lists; ++j) names.emplace_back(1, static_cast<char>('A' + j));
  return names;
}

// CountTable ---------------------------------------------------------------

CountTable::CountTable(std::vector<std::string> list_names) : names_(std::move(list_names)) {
  check_lists(lists());
  counts_.assign(std::size_t{1} << names_.size(), 0);
}

CountTable::CountTable(std::vector<std::string> list_names, std::vector<std::int64_t> dense)
    : CountTable(std::move(list_names)) {
  if (dense.size() != counts_.size()) throw DataError("dense count vector has wrong size");
  if (dense[0] != 0) throw DataError("zero pattern not allowed");
  for (std::size_t i = 0; i < dense.size(); ++i)
    if (dense[i] < 0) throw DataError("negative count");
  counts_ = std::move(dense);
}

int CountTable::list_index(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

void CountTable::set(PatternBits bits, std::int64_t count) {
  if (bits == 0) throw DataError("zero pattern not allowed");
  if (count < 0) throw DataError("negative count");
  counts_.at(bits) = count;
}

std::int64_t CountTable::n_obs() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

CountTable CountTable::permuted(std::span<const int> order) const {
  if (static_cast<int>(order.size()) != lists()) throw DataError("permutation size mismatch");
  std::vector<std::string> names;
  for (int j : order) names.push_back(names_.at(static_cast<std::size_t>(j)));
  CountTable out(std::move(names));
  for (PatternBits bits = 1; bits < counts_.size(); ++bits) {
    PatternBits mapped = 0;
    for (int j = 0; j < lists(); ++j)
      if ((bits >> order[static_cast<std::size_t>(j)]) & 1U) mapped |= PatternBits{1} << j;
    out.counts_[mapped] = counts_[bits];
  }
  return out;
}

// CellProbabilities --------------------------------------------------------

CellProbabilities::CellProbabilities(int lists, std::vector<double> probs, bool require_positive)
    : lists_(lists), probs_(std::move(probs)) {
  if (lists < 1 || lists > kMaxLists) throw DataError("list count out of range");
  if (probs_.size() != (std::size_t{1} << lists)) throw DataError("cell probability vector has wrong size");
  long double sum = 0;
  for (double p : probs_) {
    if (!(p >= 0.0) || p > 1.0) throw DataError("cell probability outside [0, 1]");
    if (require_positive && p <= 0.0) throw DataError("cell probability must be positive");
    sum += p;
  }
  if (std::fabs(static_cast<double>(sum - 1.0L)) > 1e-12) throw DataError("cell probabilities do not sum to 1");
}

CellProbabilities CellProbabilities::independent(std::span<const double> inclusion) {
  const int lists = static_cast<int>(inclusion.size());
  std::vector<double> probs(std::size_t{1} << lists, 1.0);
  for (std::size_t bits = 0; bits < probs.size(); ++bits)
    for (int j = 0; j < lists; ++j) probs[bits] *= ((bits >> j) & 1U) ? inclusion[j] : 1.0 - inclusion[j];
  return CellProbabilities(lists, std::move(probs), false);
}

double CellProbabilities::q(PatternBits bits) const {
  if (bits == 0) throw DataError("q is undefined for the zero pattern");
  return probs_.at(bits) / (1.0 - probs_[0]);
}

// CSV ----------------------------------------------------------------------

Dataset parse_dataset(std::istream& in, std::string name) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.size() < 3 || header.back() != "count")
    throw DataError("malformed header: expected list names followed by 'count'");
  header.pop_back();
  const int lists = static_cast<int>(header.size());
  check_lists(lists);
  if (std::set<std::string>(header.begin(), header.end()).size() != header.size())
    throw DataError("duplicate list names in header");
  for (const auto& h : header)
    if (h.empty()) throw DataError("empty list name in header");

  CountTable table(header);
  std::vector<bool> seen(table.cell_count(), false);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = "line " + std::to_string(line_no);
    if (static_cast<int>(fields.size()) != lists + 1) throw DataError("malformed row at " + where);
    PatternBits bits = 0;
    for (int j = 0; j < lists; ++j) {
      const auto& f = fields[static_cast<std::size_t>(j)];
      if (f == "1")
        bits |= PatternBits{1} << j;
      else if (f != "0")
        throw DataError("malformed row at " + where + ": bits must be 0 or 1");
    }
    std::int64_t count = 0;
    try {
      std::size_t used = 0;
      count = std::stoll(fields.back(), &used);
      if (used != fields.back().size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw DataError("malformed row at " + where + ": bad count");
    }
    if (bits == 0) throw DataError("zero pattern not allowed (" + where + ")");
    if (count < 0) throw DataError("negative count (" + where + ")");
    if (seen[bits]) throw DataError("duplicate pattern (" + where + ")");
    seen[bits] = true;
    table.set(bits, count);
  }
  return Dataset{std::move(name), std::move(table), {}, {}};
}

Dataset parse_dataset(std::string_view csv, std::string name) {
  std::istringstream in{std::string(csv)};
  return parse_dataset(in, std::move(name));
}

void write_dataset(std::ostream& out, const CountTable& table) {
  for (const auto& n : table.list_names()) out << n << ',';
  out << "count\n";
  for (PatternBits bits : canonical_patterns(table.lists())) {
    for (int j = 0; j < table.lists(); ++j) out << (((bits >> j) & 1U) ? "1," : "0,");
    out << table.count(bits) << '\n';
  }
}

std::string serialize_dataset(const CountTable& table) {
  std::ostringstream out;
  write_dataset(out, table);
  return out.str();
}

// Operations ---------------------------------------------------------------

DatasetSummary summarize(const CountTable& table) {
  DatasetSummary s;
  s.list_totals.assign(static_cast<std::size_t>(table.lists()), 0);
  for (PatternBits bits = 1; bits < table.cell_count(); ++bits) {
    const auto n = table.count(bits);
    s.n_obs += n;
    if (std::popcount(bits) >= 2) s.overlap += n;
    for (int j = 0; j < table.lists(); ++j)
      if ((bits >> j) & 1U) s.list_totals[static_cast<std::size_t>(j)] += n;
  }
  return s;
}

ConditioningOutcome condition_on_reference(const Dataset& d, std::string_view reference, std::int64_t min_obs) {
  const int ref = d.table.list_index(reference);
  if (ref < 0) throw DataError("unknown reference list '" + std::string(reference) + "' in dataset " + d.name);
  if (d.table.lists() - 1 < kMinLists)
    throw DataError("conditioning needs at least three lists");

  std::vector<std::string> names;
  for (int j = 0; j < d.table.lists(); ++j)
    if (j != ref) names.push_back(d.table.list_names()[static_cast<std::size_t>(j)]);
  CountTable conditioned(std::move(names));

  std::int64_t truth = 0;
  const PatternBits low_mask = (PatternBits{1} << ref) - 1;
  for (PatternBits bits = 1; bits < d.table.cell_count(); ++bits) {
    if (!((bits >> ref) & 1U)) continue;
    const auto n = d.table.count(bits);
    truth += n;
    const PatternBits rest = (bits & low_mask) | ((bits >> (ref + 1)) << ref);
    if (rest != 0) conditioned.add(rest, n);
  }
  const std::string ref_name(reference);
  if (conditioned.n_obs() < min_obs) return Exclusion{d.name, ref_name, conditioned.n_obs(), min_obs};
  return ConditionedDataset{d.name, ref_name, std::move(conditioned), truth};
}

void sample_multinomial(Rng& rng, std::int64_t n, std::span<const double> probs, std::span<std::int64_t> out) {
  double remaining_mass = 0.0;
  for (double p : probs) remaining_mass += p;
  std::int64_t remaining = n;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (remaining == 0 || k + 1 == probs.size()) {
      out[k] = remaining;
      remaining = 0;
      continue;
    }
    const double share = remaining_mass > 0.0 ? std::clamp(probs[k] / remaining_mass, 0.0, 1.0) : 0.0;
    std::int64_t draw = 0;
    if (share >= 1.0)
      draw = remaining;
    else if (share > 0.0)
      draw = std::binomial_distribution<std::int64_t>(remaining, share)(rng);
    out[k] = draw;
    remaining -= draw;
    remaining_mass -= probs[k];
  }
}

CountTable simulate_counts(const CellProbabilities& p, std::int64_t population, Rng& rng) {
  if (population < 1) throw DataError("population size must be at least 1");
  if (p.p0() >= 1.0) throw DataError("no observable mass: p0 = 1");
  const int lists = p.lists();
  CountTable table(default_list_names(lists));
  const std::int64_t observed = std::binomial_distribution<std::int64_t>(population, 1.0 - p.p0())(rng);
  const auto patterns = canonical_patterns(lists);
  std::vector<double> q;
  for (PatternBits bits : patterns) q.push_back(p.p(bits));
  std::vector<std::int64_t> counts(patterns.size());
  sample_multinomial(rng, observed, q, counts);
  for (std::size_t i = 0; i < patterns.size(); ++i) table.set(patterns[i], counts[i]);
  return table;
}

CountTable simulate_counts(const CellProbabilities& p, std::int64_t population, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return simulate_counts(p, population, rng);
}

}  // namespace msekit
