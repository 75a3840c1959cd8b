#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace adl {

struct RiskSample {
  std::vector<double> winners_post;  // post-ADL endowments
  double socialized_total = 0.0;     // D_pi = theta * D
  double socialized_max = 0.0;       // Delta_pi = theta * Delta
};

// max(winners_post) / socialized_total.
double ptsr(const RiskSample& sample);
// max(winners_post) / socialized_max.
double pmr(const RiskSample& sample);

struct VarEs {
  double var = 0.0;
  double es = 0.0;
};

// Lower-quantile VaR at tail level alpha (quantile level 1-alpha); ES is the
// mean of samples at or above the VaR.
VarEs var_es(std::span<const double> samples, double alpha);

// Weak submajorization: prefix sums of the decreasing rearrangement of x
// never exceed those of y. Shorter input is zero-padded.
bool submajorizes(std::span<const double> x, std::span<const double> y,
                  double tol = 1e-9);

struct PostPosition {
  double equity = 0.0;
  double notional = 0.0;
  double eff_leverage = 1.0;
};

// Monte-Carlo E[sum_i n_i * ((1/lambda_i + Z_i))_- magnitude] with a
// per-winner shock law. Deterministic under a fixed seed.
double next_deficit(std::span<const PostPosition> post_book,
                    const std::function<void(std::uint64_t, std::vector<double>&)>& shock_sampler,
                    std::size_t n_samples, std::uint64_t seed);

enum class TailFamily { pareto, gaussian, exponential };

struct TailModel {
  TailFamily family = TailFamily::pareto;
  double shape = 2.0;  // pareto alpha / gaussian sigma / exponential lambda
  double scale = 1.0;  // pareto x_m; unused otherwise

  void validate() const;
  double sample(class Rng& rng) const;
};

// Upper-quantile normalizer b_n = F^{-1}(1 - 1/n).
double ev_scale(const TailModel& model, std::size_t n);

struct ScalingRow {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double ptsr = 0.0;
  double pmr = 0.0;
  double b_n = 0.0;
  double severity_load = 0.0;
};

enum class SeveritySchedule { fixed, ev_scaled };

struct ScalingResult {
  std::vector<ScalingRow> rows;
  std::vector<double> mean_ptsr;  // aligned with n_grid
  double slope_vs_n = 0.0;        // log mean PTSR against log n
};

// Pro-rata books with n/2 winners and n/2 losers per draw.
ScalingResult ptsr_scaling_experiment(const TailModel& winner_model,
                                      const TailModel& loser_model,
                                      SeveritySchedule schedule, double theta0,
                                      std::span<const std::size_t> n_grid,
                                      std::size_t seeds, std::uint64_t seed0);

// kappa = theta * n / b_n.
double severity_load(double theta, std::size_t n, double b_n);

enum class RegimeClass { static_ok, dynamic_required };

struct ScreeningThresholds {
  double max_load = 10.0;       // K
  double min_leverage_ratio = 0.1;
  double max_leverage_ratio = 10.0;
};

RegimeClass classify(double load, double leverage_ratio,
                     const ScreeningThresholds& thresholds);

}  // namespace adl
