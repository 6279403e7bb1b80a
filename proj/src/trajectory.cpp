#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "msekit/diagnostics.hpp"

namespace msekit {

double TrajectoryPoint::ratio() const {
  if (!estimate || m <= 0) return std::numeric_limits<double>::quiet_NaN();
  return estimate->point / static_cast<double>(m);
}

std::vector<std::int64_t> default_checkpoints(std::int64_t n, int count) {
  if (n < 1) throw Error("trajectory needs at least one observation");
  if (count < 2) throw Error("need at least two checkpoints");
  const std::int64_t lo = std::min(std::max<std::int64_t>(30, n / 20), 2 * n);
  const std::int64_t hi = 2 * n;
  std::vector<std::int64_t> pts;
  for (int i = 0; i < count; ++i)
    pts.push_back(lo + static_cast<std::int64_t>(std::llround(static_cast<double>(hi - lo) * i / (count - 1))));
  pts.push_back(n);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

std::vector<PatternBits> trajectory_sequence(const CountTable& table, std::uint64_t seed) {
  std::vector<PatternBits> base;
  for (auto bits : canonical_patterns(table.lists()))
    base.insert(base.end(), static_cast<std::size_t>(table.count(bits)), bits);
  auto first = base;
  auto second = base;
  Rng sigma(derive_seed(seed, 0));
  Rng pi(derive_seed(seed, 1));
  std::shuffle(first.begin(), first.end(), sigma);
  std::shuffle(second.begin(), second.end(), pi);
  first.insert(first.end(), second.begin(), second.end());
  return first;
}

CountTable prefix_table(const std::vector<std::string>& names, const std::vector<PatternBits>& sequence, std::int64_t m) {
  if (m < 0 || m > static_cast<std::int64_t>(sequence.size())) throw Error("checkpoint beyond the sequence length");
  CountTable t(names);
  for (std::int64_t i = 0; i < m; ++i) t.add(sequence[static_cast<std::size_t>(i)], 1);
  return t;
}

TrajectorySeries estimate_trajectory(const Dataset& d, const NamedEstimator& estimator,
                                     const std::vector<std::int64_t>& checkpoints, std::uint64_t seed) {
  const auto n = d.table.n_obs();
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1 || checkpoints[i] > 2 * n) throw Error("checkpoints must lie in [1, 2n]");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) throw Error("checkpoints must be strictly increasing");
  }
  const auto sequence = trajectory_sequence(d.table, seed);
  TrajectorySeries s;
  s.dataset = d.name;
  s.estimator = estimator.name;
  s.seed = seed;
  s.points.resize(checkpoints.size());
  parallel_for(checkpoints.size(), [&](std::size_t i) {
    auto& p = s.points[i];
    p.m = checkpoints[i];
    try {
      p.estimate = estimator.run(prefix_table(d.table.list_names(), sequence, p.m));
    } catch (const Error& e) {
      p.error = e.what();
    }
  });
  return s;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySeries>& series) {
  out << "dataset,estimator,seed,m,point,lower,upper,ratio\n";
  for (const auto& s : series)
    for (const auto& p : s.points) {
      out << s.dataset << ',' << s.estimator << ',' << s.seed << ',' << p.m << ',';
      if (p.estimate)
        out << format_double(p.estimate->point, 10) << ',' << format_double(p.estimate->lower, 10) << ','
            << format_double(p.estimate->upper, 10) << ',' << format_double(p.ratio(), 10);
      else
        out << ",,,";
      out << '\n';
    }
}

}  // namespace msekit
