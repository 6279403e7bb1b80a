#pragma once

// Shared vocabulary: error types, the Estimate record, seed derivation,
// a small bounded worker pool and sample quantiles.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace msekit {

inline constexpr const char* kVersion = "0.4.0";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invariant-violating input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// The population size is not identified from the data (e.g. no overlap).
class InestimableError : public Error {
 public:
  using Error::Error;
};

/// Iterative fitting did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Point and interval estimate of the population size N.
struct Estimate {
  std::string estimator;
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::string fingerprint;
  ConfigEntries config;
  std::vector<std::string> warnings;
};

/// FNV-1a over "estimator|k=v|..." rendered as 16 hex digits.
std::string fingerprint(const std::string& estimator, const ConfigEntries& config);

/// Order-independent per-task seed: splitmix64(seed XOR index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

inline Rng make_rng(std::uint64_t seed) { return Rng(derive_seed(seed, 0x9e3779b97f4a7c15ULL)); }

/// Worker count used by parallel_for; defaults to hardware concurrency.
std::size_t default_jobs();
void set_default_jobs(std::size_t jobs);

/// Runs fn(i) for i in [0, n) on at most default_jobs() threads. Exceptions
/// from fn are rethrown (lowest index first) after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Linear-interpolation sample quantile (R type 7) of already sorted values.
double sorted_quantile(std::span<const double> sorted, double prob);

/// Copies, sorts and returns the type-7 quantile.
double quantile(std::vector<double> values, double prob);

std::string format_double(double value, int precision = 6);

}  // namespace msekit
