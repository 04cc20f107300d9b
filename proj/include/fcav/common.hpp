#pragma once

// Shared numerics, error type and seeded random streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcav {

enum class ErrorCode {
  AttemptsExhausted,
  CapExceeded,
  SymViolation,
  ZeroMean,
  NumericalUnderflow,
  AssumptionViolation,
  NoCrossing,
  InvalidArgument,
  Parse,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AttemptsExhausted: return "AttemptsExhausted";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::SymViolation: return "SymViolation";
    case ErrorCode::ZeroMean: return "ZeroMean";
    case ErrorCode::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::AssumptionViolation: return "AssumptionViolation";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw Error(ErrorCode::InvalidArgument, what);
}

/// x ln x with the continuous extension 0 ln 0 = 0.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

inline std::size_t ipow(std::size_t base, int exponent) {
  std::size_t r = 1;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

/// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void scale(double factor) {
    sum_ *= factor;
    comp_ *= factor;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Streaming log-sum-exp. Terms equal to -inf are ignored.
class LogSumExp {
 public:
  void add(double log_term) {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (log_term > max_) {
      if (max_ != -std::numeric_limits<double>::infinity()) sum_.scale(std::exp(max_ - log_term));
      max_ = log_term;
    }
    sum_.add(std::exp(log_term - max_));
  }
  double value() const {
    if (max_ == -std::numeric_limits<double>::infinity()) return max_;
    return max_ + std::log(sum_.value());
  }
  double shift() const { return max_; }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  CompensatedSum sum_;
};

/// Welford mean/variance; merge is associative up to rounding.
class RunningStats {
 public:
  void add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }
  void merge(const RunningStats& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double n1 = static_cast<double>(count_);
    const double n2 = static_cast<double>(other.count_);
    const double delta = other.mean_ - mean_;
    const double total = n1 + n2;
    mean_ += delta * n2 / total;
    m2_ += other.m2_ + delta * delta * n1 * n2 / total;
    count_ += other.count_;
  }
  long count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double stderr_of_mean() const {
    return count_ > 1 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  }

 private:
  long count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// ---------------------------------------------------------------------------
// Random streams. Every sampler takes a 64-bit seed; independent sub-tasks
// draw from substream(seed, index) so results do not depend on scheduling.

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  std::uint64_t t = a ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  return splitmix64(t);
}

inline Rng substream(std::uint64_t seed, std::uint64_t stream = 0) {
  std::uint64_t s = derive_seed(seed, stream);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s))};
  return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n) without modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <class T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(values[i - 1], values[j]);
  }
}

/// Inverse-CDF draw from unnormalised nonnegative weights.
inline std::size_t sample_weighted(std::span<const double> weights, double total, Rng& rng) {
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // rounding: fall back to the last positive entry
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return 0;
}

/// Draw from a cumulative table (last entry = total mass).
inline std::size_t sample_cumulative(std::span<const double> cumulative, Rng& rng) {
  const double u = uniform01(rng) * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto idx = static_cast<std::size_t>(it - cumulative.begin());
  return std::min(idx, cumulative.size() - 1);
}

inline int poisson(double mean, Rng& rng) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<int> dist(mean);
  return dist(rng);
}

/// Dirichlet(alpha, ..., alpha) point written into out.
inline void dirichlet(double alpha, std::span<double> out, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  double total = 0.0;
  for (double& x : out) {
    x = gamma(rng);
    total += x;
  }
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return;
  }
  for (double& x : out) x /= total;
}

}  // namespace fcav
