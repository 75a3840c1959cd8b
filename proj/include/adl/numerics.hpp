#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace adl {

// Neumaier compensated summation. Used wherever totals must be stable
// under reordering of the inputs.
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);

// Lower (inf) empirical quantile: smallest sample x with F(x) >= level.
// level in [0,1]; level <= 0 returns the minimum, level >= 1 the maximum.
double lower_quantile(std::vector<double> samples, double level);

// Inverse standard normal CDF (Wichura's AS241, double precision).
double inverse_normal_cdf(double p);

// splitmix64; used to derive independent per-seed streams.
std::uint64_t splitmix64(std::uint64_t& state);

// Small deterministic RNG wrapper (xoshiro256**). Streams are identical
// across platforms, which keeps seeded experiments reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller on the uniform stream.
  double normal();
  // Exponential with rate lambda.
  double exponential(double lambda);
  // Pareto with scale x_m and shape alpha.
  double pareto(double x_m, double alpha);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Least-squares slope of y against x.
double regression_slope(std::span<const double> x, std::span<const double> y);

}  // namespace adl
