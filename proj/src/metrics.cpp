#include "adl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "adl/errors.hpp"
#include "adl/numerics.hpp"

namespace adl {

double ptsr(const RiskSample& sample) {
  if (!(sample.socialized_total > 0.0))
    throw InputError("ptsr: undefined with zero socialized total");
  const double top = sample.winners_post.empty()
                         ? 0.0
                         : *std::max_element(sample.winners_post.begin(),
                                             sample.winners_post.end());
  return top / sample.socialized_total;
}

double pmr(const RiskSample& sample) {
  if (!(sample.socialized_max > 0.0))
    throw InputError("pmr: undefined with zero socialized max");
  const double top = sample.winners_post.empty()
                         ? 0.0
                         : *std::max_element(sample.winners_post.begin(),
                                             sample.winners_post.end());
  return top / sample.socialized_max;
}

VarEs var_es(std::span<const double> samples, double alpha) {
  if (samples.empty()) throw InputError("var_es: empty sample set");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("var_es: alpha outside (0,1)");
  std::vector<double> xs(samples.begin(), samples.end());
  VarEs out;
  out.var = lower_quantile(xs, 1.0 - alpha);
  KahanSum tail;
  std::size_t count = 0;
  for (double x : xs) {
    if (x >= out.var) {
      tail.add(x);
      ++count;
    }
  }
  out.es = tail.value() / static_cast<double>(count);
  return out;
}

bool submajorizes(std::span<const double> x, std::span<const double> y, double tol) {
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> b(y.begin(), y.end());
  const std::size_t n = std::max(a.size(), b.size());
  a.resize(n, 0.0);
  b.resize(n, 0.0);
  std::sort(a.begin(), a.end(), std::greater<>());
  std::sort(b.begin(), b.end(), std::greater<>());
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  KahanSum pa, pb;
  for (std::size_t i = 0; i < n; ++i) {
    pa.add(a[i]);
    pb.add(b[i]);
    if (pa.value() > pb.value() + tol * scale) return false;
  }
  return true;
}

double next_deficit(std::span<const PostPosition> post_book,
                    const std::function<void(std::uint64_t, std::vector<double>&)>& shock_sampler,
                    std::size_t n_samples, std::uint64_t seed) {
  for (const auto& p : post_book)
    if (!(p.eff_leverage > 0.0)) throw InputError("next_deficit: lambda must be > 0");
  if (n_samples == 0) return 0.0;
  std::vector<double> shocks(post_book.size(), 0.0);
  KahanSum acc;
  for (std::size_t s = 0; s < n_samples; ++s) {
    shock_sampler(seed + s, shocks);
    if (shocks.size() != post_book.size())
      throw InputError("next_deficit: shock vector misaligned");
    KahanSum draw;
    for (std::size_t i = 0; i < post_book.size(); ++i) {
      const double buffered = 1.0 / post_book[i].eff_leverage + shocks[i];
      if (buffered < 0.0) draw.add(-post_book[i].notional * buffered);
    }
    acc.add(draw.value());
  }
  return acc.value() / static_cast<double>(n_samples);
}

void TailModel::validate() const {
  if (!(shape > 0.0)) throw InputError("TailModel: shape must be > 0");
  if (family == TailFamily::pareto && !(scale > 0.0))
    throw InputError("TailModel: pareto scale must be > 0");
}

double TailModel::sample(Rng& rng) const {
  switch (family) {
    case TailFamily::pareto:
      return rng.pareto(scale, shape);
    case TailFamily::gaussian:
      return shape * rng.normal();
    case TailFamily::exponential:
      return rng.exponential(shape);
  }
  throw InputError("TailModel: unknown family");
}

double ev_scale(const TailModel& model, std::size_t n) {
  model.validate();
  if (n < 2) throw InputError("ev_scale: n must be >= 2");
  const double level = 1.0 - 1.0 / static_cast<double>(n);
  switch (model.family) {
    case TailFamily::pareto:
      return model.scale * std::pow(static_cast<double>(n), 1.0 / model.shape);
    case TailFamily::gaussian:
      return model.shape * inverse_normal_cdf(level);
    case TailFamily::exponential:
      return std::log(static_cast<double>(n)) / model.shape;
  }
  throw InputError("ev_scale: unknown family");
}

ScalingResult ptsr_scaling_experiment(const TailModel& winner_model,
                                      const TailModel& loser_model,
                                      SeveritySchedule schedule, double theta0,
                                      std::span<const std::size_t> n_grid,
                                      std::size_t seeds, std::uint64_t seed0) {
  winner_model.validate();
  loser_model.validate();
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw InputError("scaling experiment: grid not increasing");

  ScalingResult result;
  std::vector<double> log_n, log_mean;
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    const std::size_t n = n_grid[gi];
    const std::size_t k = n / 2;
    const double b_n = ev_scale(winner_model, k);
    double theta = theta0;
    if (schedule == SeveritySchedule::ev_scaled)
      theta = std::min(1.0, theta0 * b_n / static_cast<double>(n));
    KahanSum mean_acc;
    for (std::size_t s = 0; s < seeds; ++s) {
      std::uint64_t stream = seed0;
      stream = stream * 1000003ULL + gi * 131ULL + s;
      Rng rng(stream);
      KahanSum capacity, deficit;
      double top = 0.0, worst = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double w = std::abs(winner_model.sample(rng));
        capacity.add(w);
        top = std::max(top, w);
      }
      for (std::size_t i = 0; i < n - k; ++i) {
        const double d = std::abs(loser_model.sample(rng));
        deficit.add(d);
        worst = std::max(worst, d);
      }
      const double budget = std::min(theta * deficit.value(), capacity.value());
      if (!(budget > 0.0)) continue;
      const double h = budget / capacity.value();
      ScalingRow row;
      row.n = n;
      row.seed = s;
      row.b_n = b_n;
      row.severity_load = severity_load(theta, n, b_n);
      row.ptsr = (1.0 - h) * top / budget;
      row.pmr = (theta * worst > 0.0) ? (1.0 - h) * top / (theta * worst) : 0.0;
      result.rows.push_back(row);
      mean_acc.add(row.ptsr);
    }
    result.mean_ptsr.push_back(mean_acc.value() / static_cast<double>(seeds));
    log_n.push_back(std::log(static_cast<double>(n)));
    log_mean.push_back(std::log(result.mean_ptsr.back()));
  }
  result.slope_vs_n = regression_slope(log_n, log_mean);
  return result;
}

double severity_load(double theta, std::size_t n, double b_n) {
  if (!(b_n > 0.0)) throw InputError("severity_load: b_n must be > 0");
  return theta * static_cast<double>(n) / b_n;
}

RegimeClass classify(double load, double leverage_ratio,
                     const ScreeningThresholds& thresholds) {
  const bool bounded_load = load <= thresholds.max_load;
  const bool balanced = leverage_ratio >= thresholds.min_leverage_ratio &&
                        leverage_ratio <= thresholds.max_leverage_ratio;
  return (bounded_load && balanced) ? RegimeClass::static_ok
                                    : RegimeClass::dynamic_required;
}

}  // namespace adl
