#include "adl/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adl/errors.hpp"
#include "adl/numerics.hpp"

namespace adl {

double severity_match(double total_endowment, double total_deficit) {
  if (total_endowment < 0.0 || total_deficit < 0.0)
    throw InputError("severity_match: negative input");
  if (total_deficit == 0.0) return 1.0;
  return std::min(1.0, total_endowment / total_deficit);
}

double severity_backoff(double theta0, double decay, std::int64_t shock_count) {
  if (!(decay > 0.0 && decay <= 1.0)) throw InputError("severity_backoff: decay outside (0,1]");
  if (shock_count < 0) throw InputError("severity_backoff: negative shock count");
  return theta0 * std::pow(decay, static_cast<double>(shock_count));
}

ControllerState ControllerState::make(double theta0, std::size_t n_winners,
                                      std::size_t n_constraints, double max_step,
                                      double grad_bound) {
  ControllerState s;
  s.theta = theta0;
  s.weights.assign(n_winners, n_winners ? 1.0 / static_cast<double>(n_winners) : 0.0);
  s.duals.assign(n_constraints, 0.0);
  s.max_step = max_step;
  s.grad_bound = grad_bound;
  return s;
}

namespace {

double step_size(const ControllerState& s, double scale) {
  const double t = static_cast<double>(s.round + 1);
  return scale * s.max_step / (s.grad_bound * std::sqrt(t));
}

void renormalize_weights(ControllerState& s) {
  if (s.weights.empty()) return;
  KahanSum total;
  for (double w : s.weights) total.add(w);
  if (!(total.value() > 0.0)) {
    // Weight mass collapsed; rebuild from the floor and flag it.
    s.weight_floor_hit = true;
    for (double& w : s.weights) w = 1e-12;
    total = KahanSum();
    for (double w : s.weights) total.add(w);
  }
  for (double& w : s.weights) w /= total.value();
}

}  // namespace

ControllerState omd_severity_step(const ControllerState& state, double subgradient,
                                  double theta_cap) {
  ControllerState next = state;
  const double eta = step_size(state, state.primal_scale);
  next.theta = std::clamp(state.theta - eta * subgradient, 0.0, theta_cap);
  next.round = state.round + 1;
  return next;
}

ControllerState mdic_step(const ControllerState& state, double loss_grad_theta,
                          std::span<const double> loss_grad_weights,
                          std::span<const double> constraint_values,
                          std::span<const double> constraint_grad_theta,
                          double theta_cap) {
  if (loss_grad_weights.size() != state.weights.size())
    throw InputError("mdic_step: weight gradient misaligned");
  if (constraint_values.size() != state.duals.size() ||
      constraint_grad_theta.size() != state.duals.size())
    throw InputError("mdic_step: constraint vectors misaligned");
  for (double c : constraint_values)
    if (!std::isfinite(c)) throw InputError("mdic_step: non-finite constraint value");

  ControllerState next = state;
  const double eta = step_size(state, state.primal_scale);
  const double gamma = step_size(state, state.dual_scale);

  const double damping =
      std::max(0.0, 1.0 - state.dual_regularization * eta * gamma);
  for (std::size_t i = 0; i < next.duals.size(); ++i)
    next.duals[i] =
        std::max(0.0, damping * state.duals[i] + gamma * constraint_values[i]);

  double lagrangian_grad = loss_grad_theta;
  for (std::size_t i = 0; i < next.duals.size(); ++i)
    lagrangian_grad += next.duals[i] * constraint_grad_theta[i];
  next.theta = std::clamp(state.theta - eta * lagrangian_grad, 0.0, theta_cap);

  bool floored = false;
  for (std::size_t i = 0; i < next.weights.size(); ++i) {
    next.weights[i] = state.weights[i] * std::exp(-eta * loss_grad_weights[i]);
    if (next.weights[i] < 1e-12) {
      next.weights[i] = 1e-12;
      floored = true;
    }
  }
  renormalize_weights(next);
  next.weight_floor_hit = state.weight_floor_hit || floored || next.weight_floor_hit;

  next.round = state.round + 1;
  return next;
}

double regret(std::span<const double> losses_played,
              std::span<const std::vector<double>> loss_grid,
              RegretComparator comparator) {
  if (losses_played.empty()) throw InputError("regret: empty loss sequence");
  if (loss_grid.size() != losses_played.size())
    throw InputError("regret: grid misaligned with played losses");
  KahanSum played;
  for (double l : losses_played) played.add(l);

  if (comparator == RegretComparator::per_round_best) {
    KahanSum best;
    for (const auto& row : loss_grid) {
      if (row.empty()) throw InputError("regret: empty grid row");
      best.add(*std::min_element(row.begin(), row.end()));
    }
    return played.value() - best.value();
  }

  const std::size_t cols = loss_grid.front().size();
  double best_total = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cols; ++j) {
    KahanSum total;
    for (const auto& row : loss_grid) {
      if (row.size() != cols) throw InputError("regret: ragged grid");
      total.add(row[j]);
    }
    best_total = std::min(best_total, total.value());
  }
  return played.value() - best_total;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("kl_divergence: misaligned inputs");
  KahanSum acc;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (!(q[i] > 0.0)) throw InputError("kl_divergence: q has zero mass where p > 0");
    acc.add(p[i] * std::log(p[i] / q[i]));
  }
  return acc.value();
}

CoordinationOutcome stackelberg_coordination(double unwind_cost, double penalty,
                                             double threshold) {
  if (!(penalty > unwind_cost && unwind_cost > 0.0))
    throw InputError("stackelberg_coordination: requires penalty > unwind cost > 0");
  if (!(threshold > 1.0 && threshold <= 2.0))
    throw InputError("stackelberg_coordination: threshold outside (1,2]");

  auto cost = [&](int mine, int other) {
    const bool adl = (mine + other) < threshold;
    return unwind_cost * mine + (adl ? penalty : 0.0);
  };

  CoordinationOutcome out;
  for (int a : {0, 1}) {
    for (int b : {0, 1}) {
      const bool a_best = cost(a, b) <= cost(1 - a, b);
      const bool b_best = cost(b, a) <= cost(1 - b, a);
      if (a_best && b_best) out.nash_equilibria.emplace_back(a, b);
    }
  }

  // Backward induction: the follower matches, so the leader compares f vs c.
  auto follower_best = [&](int leader) {
    return cost(1, leader) <= cost(0, leader) ? 1 : 0;
  };
  double best_leader_cost = std::numeric_limits<double>::infinity();
  for (int a : {0, 1}) {
    const int b = follower_best(a);
    const double c = cost(a, b);
    if (c < best_leader_cost) {
      best_leader_cost = c;
      out.spe = {a, b};
      out.spe_leader_cost = c;
      out.spe_follower_cost = cost(b, a);
    }
  }
  return out;
}

SelectionResult adverse_selection_sim(std::span<const TraderProfile> traders,
                                      std::span<const double> deficits, double u0,
                                      SelectionPolicy policy,
                                      const std::function<double(double)>& risk_model) {
  SelectionResult result;
  std::vector<std::size_t> active(traders.size());
  std::iota(active.begin(), active.end(), std::size_t{0});

  for (double deficit : deficits) {
    if (deficit < 0.0) throw InputError("adverse_selection_sim: negative deficit");
    SelectionRound round;
    round.deficit = deficit;

    KahanSum equity_mass, weight_mass;
    for (std::size_t i : active) {
      equity_mass.add(traders[i].equity);
      const double w = (policy == SelectionPolicy::pro_rata)
                           ? traders[i].equity
                           : traders[i].equity * traders[i].leverage *
                                 risk_model(traders[i].leverage);
      weight_mass.add(w);
    }
    round.remaining_equity = equity_mass.value();
    if (deficit > round.remaining_equity * (1.0 + 1e-12)) {
      result.insolvent = true;
      result.rounds.push_back(std::move(round));
      break;
    }

    std::vector<std::size_t> survivors;
    for (std::size_t i : active) {
      const double w = (policy == SelectionPolicy::pro_rata)
                           ? traders[i].equity
                           : traders[i].equity * traders[i].leverage *
                                 risk_model(traders[i].leverage);
      const double mass = weight_mass.value() > 0.0 ? deficit * w / weight_mass.value() : 0.0;
      const double utility = traders[i].base_utility - mass;
      round.active.push_back(traders[i].id);
      round.haircut_mass.push_back(mass);
      round.utility.push_back(utility);
      if (utility < u0)
        round.exits.push_back(traders[i].id);
      else
        survivors.push_back(i);
    }
    active = std::move(survivors);
    result.rounds.push_back(std::move(round));
  }
  return result;
}

bool no_wait_check(double theta, double deficit, double expected_future,
                   double liquidity_premium) {
  if (theta < 0.0 || deficit < 0.0 || expected_future < 0.0 || liquidity_premium < 0.0)
    throw InputError("no_wait_check: negative input");
  return theta * deficit <= expected_future - liquidity_premium;
}

RecoveryClocks recovery_clocks(std::span<const double> fund_path,
                               std::span<const double> ltv_path, double fund_threshold,
                               double epsilon, double ltv_pre) {
  if (fund_path.empty()) throw InputError("recovery_clocks: empty trajectory");
  RecoveryClocks clocks;
  for (std::size_t t = 0; t < fund_path.size(); ++t) {
    if (fund_path[t] >= fund_threshold) {
      clocks.solvency = t;
      break;
    }
  }
  const double target = (1.0 - epsilon) * ltv_pre;
  for (std::size_t t = 0; t < ltv_path.size(); ++t) {
    if (ltv_path[t] >= target) {
      clocks.revenue = t;
      break;
    }
  }
  return clocks;
}

LtvModel LtvModel::exponential(double discount, double churn_rate) {
  LtvModel m;
  m.discount = discount;
  m.retention = [churn_rate](double h) { return std::exp(-churn_rate * h); };
  return m;
}

double ltv(const LtvModel& model, std::span<const std::vector<double>> equities,
           std::span<const std::vector<double>> haircuts) {
  if (equities.size() != haircuts.size()) throw InputError("ltv: misaligned rounds");
  if (!(model.discount > 0.0 && model.discount <= 1.0))
    throw InputError("ltv: discount outside (0,1]");
  KahanSum acc;
  double beta_t = 1.0;
  for (std::size_t t = 0; t < equities.size(); ++t) {
    if (equities[t].size() != haircuts[t].size()) throw InputError("ltv: misaligned round");
    KahanSum round;
    for (std::size_t i = 0; i < equities[t].size(); ++i)
      round.add(equities[t][i] * model.retention(haircuts[t][i]));
    acc.add(beta_t * round.value());
    beta_t *= model.discount;
  }
  return acc.value();
}

}  // namespace adl
