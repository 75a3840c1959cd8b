#include "adl/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adl/errors.hpp"
#include "adl/numerics.hpp"

namespace adl {

namespace {

constexpr double kBalanceTol = 1e-9;

// Push any float residual into the account with the most headroom (or the
// largest seizure, when shrinking) so the budget identity holds exactly.
void close_budget_residual(AdlAllocation& alloc, std::span<const WinnerSlice> winners,
                           double budget) {
  KahanSum total;
  for (double x : alloc.seized) total.add(x);
  double residual = budget - total.value();
  if (residual == 0.0) return;
  if (std::abs(residual) > kBalanceTol * std::max(1.0, std::abs(budget)))
    throw InputError("allocation residual exceeds adjustment tolerance");
  std::size_t target = alloc.seized.size();
  if (residual > 0.0) {
    double best = -1.0;
    for (std::size_t i = 0; i < winners.size(); ++i) {
      const double headroom = winners[i].cap * winners[i].endowment - alloc.seized[i];
      if (headroom > best) {
        best = headroom;
        target = i;
      }
    }
  } else {
    double best = -1.0;
    for (std::size_t i = 0; i < winners.size(); ++i) {
      if (alloc.seized[i] > best) {
        best = alloc.seized[i];
        target = i;
      }
    }
  }
  if (target == alloc.seized.size()) return;
  alloc.seized[target] += residual;
  if (winners[target].endowment > 0.0)
    alloc.haircuts[target] = alloc.seized[target] / winners[target].endowment;
}

}  // namespace

WinnerSlice WinnerSlice::make(std::string id, double cash, double pnl, Numeraire mode) {
  WinnerSlice w;
  w.id = std::move(id);
  w.cash = cash;
  w.pnl = pnl;
  w.equity = cash + pnl;
  w.endowment = (mode == Numeraire::pnl_only) ? std::max(pnl, 0.0)
                                              : std::max(w.equity, 0.0);
  return w;
}

double effective_cap(double cash, double endowment, double max_haircut,
                     double min_equity) {
  if (!(endowment > 0.0)) return 0.0;
  const double equity_room = 1.0 - (min_equity - cash) / endowment;
  return std::clamp(std::min(max_haircut, equity_room), 0.0, 1.0);
}

double AdlAllocation::total_seized() const { return compensated_sum(seized); }

DeficitCapacity deficit_and_capacity(std::span<const double> equities,
                                     std::span<const double> endowments) {
  if (equities.size() != endowments.size())
    throw InputError("deficit_and_capacity: misaligned sequences");
  DeficitCapacity out;
  KahanSum deficit, capacity;
  for (std::size_t i = 0; i < equities.size(); ++i) {
    const double shortfall = std::max(-equities[i], 0.0);
    deficit.add(shortfall);
    out.max_deficit = std::max(out.max_deficit, shortfall);
    capacity.add(endowments[i]);
    out.max_capacity = std::max(out.max_capacity, endowments[i]);
  }
  out.total_deficit = deficit.value();
  out.total_capacity = capacity.value();
  return out;
}

AdlAllocation queue_allocate(std::span<const WinnerSlice> winners, double budget) {
  if (budget < 0.0) throw InputError("queue_allocate: negative budget");
  KahanSum cap;
  for (const auto& w : winners) cap.add(w.endowment);
  if (budget > cap.value() * (1.0 + 1e-12))
    throw InfeasibleError("queue_allocate: budget exceeds total endowment");

  std::vector<std::size_t> order(winners.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (winners[a].score != winners[b].score) return winners[a].score > winners[b].score;
    return winners[a].id < winners[b].id;
  });

  AdlAllocation alloc;
  alloc.policy = "queue";
  alloc.budget = budget;
  alloc.haircuts.assign(winners.size(), 0.0);
  alloc.seized.assign(winners.size(), 0.0);

  double remaining = budget;
  for (std::size_t rank : order) {
    if (remaining <= 0.0) break;
    const double w = winners[rank].endowment;
    if (w <= 0.0) continue;
    const double take = std::min(w, remaining);
    alloc.seized[rank] = take;
    alloc.haircuts[rank] = take / w;
    remaining -= take;
  }
  close_budget_residual(alloc, winners, budget);
  return alloc;
}

double adl_score(double leverage, double mark_price, double reference_price,
                 ScoreVariant variant) {
  switch (variant) {
    case ScoreVariant::binance_bankruptcy:
    case ScoreVariant::hyperliquid_entry:
      if (reference_price <= 0.0) return std::numeric_limits<double>::infinity();
      return leverage * mark_price / reference_price;
    case ScoreVariant::hyperliquid_ratio:
      throw InputError("adl_score: ratio variant takes precomputed ratios");
  }
  throw InputError("adl_score: unknown variant");
}

double adl_score_ratio(double mark_over_entry, double notional_over_account_value) {
  return mark_over_entry * notional_over_account_value;
}

AdlAllocation pro_rata(std::span<const WinnerSlice> winners, double severity,
                       double total_deficit) {
  if (severity < 0.0 || severity > 1.0) throw InputError("pro_rata: severity outside [0,1]");
  const double budget = severity * total_deficit;
  KahanSum cap;
  for (const auto& w : winners) cap.add(w.endowment);
  const double capacity = cap.value();
  AdlAllocation alloc;
  alloc.policy = "pro_rata";
  alloc.severity = severity;
  alloc.budget = budget;
  alloc.haircuts.assign(winners.size(), 0.0);
  alloc.seized.assign(winners.size(), 0.0);
  if (budget == 0.0) return alloc;
  if (!(capacity > 0.0) || budget > capacity * (1.0 + 1e-12))
    throw InfeasibleError("pro_rata: budget exceeds total endowment");
  const double h = budget / capacity;
  for (std::size_t i = 0; i < winners.size(); ++i) {
    if (winners[i].endowment <= 0.0) continue;
    alloc.haircuts[i] = h;
    alloc.seized[i] = h * winners[i].endowment;
  }
  close_budget_residual(alloc, winners, budget);
  return alloc;
}

AdlAllocation levered_pro_rata(std::span<const WinnerSlice> winners, double severity,
                               double total_deficit) {
  if (severity < 0.0 || severity > 1.0)
    throw InputError("levered_pro_rata: severity outside [0,1]");
  const double budget = severity * total_deficit;
  AdlAllocation alloc;
  alloc.policy = "levered_pro_rata";
  alloc.severity = severity;
  alloc.budget = budget;
  alloc.haircuts.assign(winners.size(), 0.0);
  alloc.seized.assign(winners.size(), 0.0);
  if (budget == 0.0) return alloc;

  KahanSum cap;
  for (const auto& w : winners) cap.add(w.endowment);
  if (budget > cap.value() * (1.0 + 1e-12))
    throw InfeasibleError("levered_pro_rata: budget exceeds total endowment");

  // Seize proportionally to lambda*w; clamp h at 1 and spread the residual
  // over the unclamped accounts until fixpoint.
  std::vector<bool> clamped(winners.size(), false);
  double residual_budget = budget;
  for (std::size_t pass = 0; pass <= winners.size(); ++pass) {
    KahanSum mass;
    for (std::size_t i = 0; i < winners.size(); ++i)
      if (!clamped[i] && winners[i].endowment > 0.0)
        mass.add(winners[i].eff_leverage * winners[i].endowment);
    if (!(mass.value() > 0.0)) break;
    bool newly_clamped = false;
    for (std::size_t i = 0; i < winners.size(); ++i) {
      if (clamped[i] || winners[i].endowment <= 0.0) continue;
      const double share = winners[i].eff_leverage * winners[i].endowment / mass.value();
      const double x = share * residual_budget;
      if (x >= winners[i].endowment * (1.0 - 1e-15)) {
        alloc.seized[i] = winners[i].endowment;
        alloc.haircuts[i] = 1.0;
        clamped[i] = true;
        newly_clamped = true;
      }
    }
    if (!newly_clamped) {
      for (std::size_t i = 0; i < winners.size(); ++i) {
        if (clamped[i] || winners[i].endowment <= 0.0) continue;
        const double share = winners[i].eff_leverage * winners[i].endowment / mass.value();
        alloc.seized[i] = share * residual_budget;
        alloc.haircuts[i] = alloc.seized[i] / winners[i].endowment;
      }
      break;
    }
    KahanSum taken;
    for (std::size_t i = 0; i < winners.size(); ++i)
      if (clamped[i]) taken.add(alloc.seized[i]);
    residual_budget = budget - taken.value();
  }
  close_budget_residual(alloc, winners, budget);
  return alloc;
}

AdlAllocation capped_pro_rata(std::span<const WinnerSlice> winners, double budget) {
  if (budget < 0.0) throw InputError("capped_pro_rata: negative budget");
  KahanSum capacity_acc;
  for (const auto& w : winners) capacity_acc.add(w.endowment * w.cap);
  const double capacity = capacity_acc.value();
  if (budget > capacity * (1.0 + 1e-12))
    throw InfeasibleError("capped_pro_rata: budget exceeds capped capacity");

  AdlAllocation alloc;
  alloc.policy = "capped_pro_rata";
  alloc.budget = budget;
  alloc.haircuts.assign(winners.size(), 0.0);
  alloc.seized.assign(winners.size(), 0.0);
  if (budget == 0.0) return alloc;

  // Walk the caps in ascending order until the water level eta is bracketed.
  std::vector<std::size_t> order(winners.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return winners[a].cap < winners[b].cap;
  });

  double level_prev = 0.0;
  double covered = 0.0;
  KahanSum mass_acc;
  for (const auto& w : winners) mass_acc.add(w.endowment);
  double active_mass = mass_acc.value();
  double eta = -1.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double cap_k = winners[order[k]].cap;
    const double step = (cap_k - level_prev) * active_mass;
    if (covered + step >= budget && active_mass > 0.0) {
      eta = level_prev + (budget - covered) / active_mass;
      break;
    }
    covered += step;
    active_mass -= winners[order[k]].endowment;
    level_prev = cap_k;
  }
  if (eta < 0.0) eta = winners.empty() ? 0.0 : winners[order.back()].cap;

  for (std::size_t i = 0; i < winners.size(); ++i) {
    if (winners[i].endowment <= 0.0) continue;
    alloc.haircuts[i] = std::min(eta, winners[i].cap);
    alloc.seized[i] = alloc.haircuts[i] * winners[i].endowment;
  }
  close_budget_residual(alloc, winners, budget);
  return alloc;
}

AdlAllocation rap_allocate(std::span<const WinnerSlice> winners,
                           std::span<const double> risk_weights, double budget) {
  if (winners.size() != risk_weights.size())
    throw InputError("rap_allocate: weight vector misaligned");
  if (budget < 0.0) throw InputError("rap_allocate: negative budget");
  for (double w : risk_weights)
    if (w < 0.0) throw InputError("rap_allocate: negative risk weight");

  KahanSum capacity_acc;
  for (const auto& w : winners) capacity_acc.add(w.endowment * w.cap);
  if (budget > capacity_acc.value() * (1.0 + 1e-12))
    throw InfeasibleError("rap_allocate: budget exceeds capped capacity");

  AdlAllocation alloc;
  alloc.policy = "rap";
  alloc.budget = budget;
  alloc.haircuts.assign(winners.size(), 0.0);
  alloc.seized.assign(winners.size(), 0.0);
  if (budget == 0.0) return alloc;

  // For zero risk weight the ratio beta/weight is +inf: the account joins
  // only past every finite level, i.e. it is never haircut.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> ratio(winners.size());
  for (std::size_t i = 0; i < winners.size(); ++i)
    ratio[i] = (risk_weights[i] > 0.0) ? winners[i].cap / risk_weights[i] : inf;

  std::vector<std::size_t> order(winners.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ratio[a] < ratio[b]; });

  KahanSum weighted_mass_acc;
  for (std::size_t i = 0; i < winners.size(); ++i)
    if (risk_weights[i] > 0.0) weighted_mass_acc.add(winners[i].endowment * risk_weights[i]);
  double weighted_mass = weighted_mass_acc.value();

  double level_prev = 0.0;
  double covered = 0.0;
  double tau = -1.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (ratio[i] == inf) break;  // remaining accounts never bind
    const double step = (ratio[i] - level_prev) * weighted_mass;
    if (covered + step >= budget && weighted_mass > 0.0) {
      tau = level_prev + (budget - covered) / weighted_mass;
      break;
    }
    covered += step;
    weighted_mass -= winners[i].endowment * risk_weights[i];
    level_prev = ratio[i];
  }
  if (tau < 0.0) {
    double max_finite = 0.0;
    for (std::size_t i = 0; i < winners.size(); ++i)
      if (ratio[i] != inf) max_finite = std::max(max_finite, ratio[i]);
    tau = max_finite;
  }

  for (std::size_t i = 0; i < winners.size(); ++i) {
    if (winners[i].endowment <= 0.0 || risk_weights[i] <= 0.0) continue;
    alloc.haircuts[i] = std::min(winners[i].cap, tau * risk_weights[i]);
    alloc.seized[i] = alloc.haircuts[i] * winners[i].endowment;
  }
  close_budget_residual(alloc, winners, budget);
  return alloc;
}

std::vector<double> perspective_weights(std::span<const double> lambdas,
                                        const std::function<double(double)>& psi) {
  std::vector<double> rho(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw InputError("perspective_weights: lambda must be > 0");
    rho[i] = lambdas[i] * psi(1.0 / lambdas[i]);
  }
  return rho;
}

std::vector<double> risk_model_from_perspective(std::span<const double> lambdas,
                                                std::span<const double> rhos) {
  if (lambdas.size() != rhos.size())
    throw InputError("risk_model_from_perspective: misaligned inputs");
  std::vector<double> g(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) g[i] = rhos[i] / lambdas[i];
  return g;
}

std::vector<double> post_adl_equity(std::span<const double> cash,
                                    std::span<const double> pnl,
                                    std::span<const double> seized, Numeraire mode) {
  if (cash.size() != pnl.size() || cash.size() != seized.size())
    throw InputError("post_adl_equity: misaligned sequences");
  std::vector<double> out(cash.size());
  for (std::size_t i = 0; i < cash.size(); ++i) {
    if (mode == Numeraire::pnl_only) {
      const double limit = std::max(pnl[i], 0.0);
      if (seized[i] > limit * (1.0 + 1e-12) + 1e-15)
        throw InputError("post_adl_equity: seizure exceeds endowment");
    }
    out[i] = cash[i] + pnl[i] - seized[i];
  }
  return out;
}

AllocationDiagnostics validate(const AdlAllocation& alloc,
                               std::span<const WinnerSlice> winners) {
  AllocationDiagnostics d;
  KahanSum total, capacity;
  for (std::size_t i = 0; i < winners.size(); ++i) {
    total.add(alloc.seized[i]);
    capacity.add(winners[i].endowment * winners[i].cap);
    d.max_cap_violation =
        std::max(d.max_cap_violation, alloc.haircuts[i] - winners[i].cap);
  }
  d.max_cap_violation = std::max(d.max_cap_violation, 0.0);
  d.balance_residual = std::abs(total.value() - alloc.budget);
  d.feasible = alloc.budget <= capacity.value() * (1.0 + 1e-12);
  d.balanced = d.balance_residual <= kBalanceTol * std::max(1.0, std::abs(alloc.budget));
  d.respects_caps = d.max_cap_violation <= 1e-12;
  return d;
}

std::vector<WinnerSlice> winners_from_book(const Book& book, const PricePath& path,
                                           std::span<const double> rates,
                                           std::int64_t horizon, Numeraire mode) {
  std::vector<WinnerSlice> out;
  const double price = path.mark[static_cast<std::size_t>(horizon)];
  for (const auto& pos : book.positions()) {
    const double position_pnl = pnl(pos, path, rates, horizon);
    WinnerSlice w = WinnerSlice::make(pos.id, pos.collateral, position_pnl, mode);
    if (w.equity > 0.0)
      w.eff_leverage = pos.quantity * price / w.equity;
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace adl
