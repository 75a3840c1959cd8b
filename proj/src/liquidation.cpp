#include "adl/liquidation.hpp"

#include <algorithm>
#include <cmath>

#include "adl/errors.hpp"
#include "adl/numerics.hpp"

namespace adl {

void ImpactModel::validate() const {
  if (alpha < 0.0) throw InputError("ImpactModel: alpha must be >= 0");
  if (!(price_floor > 0.0)) throw InputError("ImpactModel: price floor must be > 0");
}

void FeeSchedule::validate() const {
  if (fixed_fee < 0.0 || mark_rate < 0.0 || exec_rate < 0.0)
    throw InputError("FeeSchedule: negative fee component");
}

double bankruptcy_price(const Position& pos, double collateral_now,
                        double funding_accrued, double price) {
  if (!(pos.quantity > 0.0))
    throw InputError("bankruptcy_price: undefined for zero quantity");
  const double buffer = (collateral_now + funding_accrued) / (sign(pos.side) * pos.quantity);
  return std::max(price - buffer, 0.0);
}

double liquidation_price(const Position& pos, double collateral_now,
                         double funding_accrued, const MarginParams& params) {
  if (!(pos.quantity > 0.0))
    throw InputError("liquidation_price: undefined for zero quantity");
  if (params.maintenance_margin_ratio >= 1.0)
    throw InputError("liquidation_price: maintenance margin ratio must be < 1");
  const double cushion = (collateral_now + funding_accrued) / pos.quantity;
  if (pos.side == Side::long_)
    return std::max((pos.entry_price - cushion) / (1.0 - params.maintenance_margin_ratio), 0.0);
  return (pos.entry_price + cushion) / (1.0 + params.maintenance_margin_ratio);
}

double execution_price(double price, double slice, Side side, const ImpactModel& impact,
                       bool* degenerate) {
  impact.validate();
  if (slice < 0.0) throw InputError("execution_price: negative slice");
  const double shift = 0.5 * impact.alpha * slice;
  double exec = (side == Side::long_) ? price - shift : price + shift;
  if (degenerate) *degenerate = false;
  if (exec <= 0.0) {
    exec = impact.price_floor;
    if (degenerate) *degenerate = true;
  }
  return exec;
}

double liquidation_fee(double slice, double mark_price, double exec_price,
                       const FeeSchedule& sched) {
  sched.validate();
  if (slice < 0.0) throw InputError("liquidation_fee: negative slice");
  if (slice == 0.0) return 0.0;
  return sched.fixed_fee + sched.mark_rate * mark_price * slice +
         sched.exec_rate * exec_price * slice;
}

double greedy_liquidation_size(const Position& pos, double position_equity, double price,
                               const MarginParams& params, const ImpactModel& impact,
                               const FeeSchedule& sched,
                               std::optional<double> exec_price_hint) {
  if (!(pos.quantity > 0.0)) return 0.0;
  const double mu_p = params.maintenance_margin_ratio * price;
  const double fee_rate = (sched.mark_rate + sched.exec_rate) * price;

  if (exec_price_hint) {
    // Fixed execution price: the restoration condition is linear in the slice.
    const double slippage = sign(pos.side) * (*exec_price_hint - price);
    const double denom = mu_p + slippage - fee_rate;
    const double need = mu_p * pos.quantity - position_equity + sched.fixed_fee;
    if (need <= 0.0) return 0.0;
    if (denom <= 0.0) return pos.quantity;  // closing never catches up
    return std::min(need / denom, pos.quantity);
  }

  // (alpha/2) dq^2 - (mu p - fee') dq + (mu p q - e + fee_fix) = 0, fees
  // linearized at the mark price.
  const double a = 0.5 * impact.alpha;
  const double b = -(mu_p - fee_rate);
  const double c = mu_p * pos.quantity - position_equity + sched.fixed_fee;
  if (c <= 0.0) return 0.0;  // already at or above the maintenance line
  if (a == 0.0) {
    if (b >= 0.0) return pos.quantity;
    return std::min(c / -b, pos.quantity);
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return pos.quantity;  // impact too strong; full close
  const double root = (-b - std::sqrt(disc)) / (2.0 * a);
  if (root < 0.0 || root > pos.quantity) return pos.quantity;
  return root;
}

double slice_bad_debt(double exec_price, double bankruptcy, double slice, Side side) {
  if (slice < 0.0) throw InputError("slice_bad_debt: negative slice");
  const double gap = (side == Side::long_) ? bankruptcy - exec_price
                                           : exec_price - bankruptcy;
  return std::max(gap, 0.0) * slice;
}

double adjusted_equity(double position_equity, Side side, double slice, double exec_price,
                       double price, double fee) {
  return position_equity + sign(side) * slice * (exec_price - price) - fee;
}

namespace {

struct SliceResult {
  LiquidationOutcome outcome;
  double post_equity = 0.0;
};

SliceResult execute_slice(Position& pos, double pos_equity, double funding_accrued,
                          double price, std::int64_t t, double slice,
                          const ImpactModel& impact, const FeeSchedule& sched,
                          bool full_close) {
  SliceResult r;
  bool degenerate = false;
  const double exec = execution_price(price, slice, pos.side, impact, &degenerate);
  const double fee = liquidation_fee(slice, price, exec, sched);
  const double bankruptcy = bankruptcy_price(pos, pos.collateral, funding_accrued, price);
  const double post = adjusted_equity(pos_equity, pos.side, slice, exec, price, fee);

  r.outcome.position_id = pos.id;
  r.outcome.time = t;
  r.outcome.slice = slice;
  r.outcome.exec_price = exec;
  r.outcome.fee = fee;
  r.outcome.bad_debt = slice_bad_debt(exec, bankruptcy, slice, pos.side);
  r.outcome.adjusted_equity = post;
  r.outcome.full_close = full_close;
  r.outcome.degenerate_fill = degenerate;
  r.post_equity = post;

  // Realize the slice: cash moves by the slice PNL against the entry price,
  // so the updated position's equity equals the adjusted equity.
  pos.collateral += sign(pos.side) * slice * (exec - pos.entry_price) - fee;
  pos.quantity -= slice;
  if (pos.quantity < 1e-15) pos.quantity = 0.0;
  return r;
}

}  // namespace

std::vector<LiquidationOutcome> liquidation_tick(Book& book, const PricePath& path,
                                                 std::span<const double> rates,
                                                 std::int64_t t, const MarginParams& params,
                                                 const ImpactModel& impact,
                                                 const FeeSchedule& sched) {
  if (t < 0 || static_cast<std::size_t>(t) >= path.size())
    throw InputError("liquidation_tick: time outside path bounds");
  const double price = path.mark[static_cast<std::size_t>(t)];
  std::vector<LiquidationOutcome> outcomes;

  for (auto& pos : book.positions()) {
    if (pos.quantity <= 0.0) continue;
    const double funding = funding_accrual(pos, path, rates, pos.open_time, t);
    const double e = pos.collateral + sign(pos.side) * pos.quantity *
                                          (price - pos.entry_price) +
                     funding;
    if (!maintenance_breach(pos, e, price, params)) continue;

    double slice = greedy_liquidation_size(pos, e, price, params, impact, sched);
    const bool full = slice >= pos.quantity - 1e-15;
    if (full) slice = pos.quantity;
    SliceResult first = execute_slice(pos, e, funding, price, t, slice, impact, sched, full);
    outcomes.push_back(first.outcome);

    if (pos.quantity > 0.0) {
      // Retry once with a full close if the slice left the position breached.
      const double threshold = params.maintenance_margin_ratio * price * pos.quantity;
      const double tol = 1e-9 * std::max(1.0, threshold);
      if (first.post_equity < threshold - tol) {
        SliceResult second = execute_slice(pos, first.post_equity, funding, price, t,
                                           pos.quantity, impact, sched, true);
        second.outcome.retried = true;
        outcomes.push_back(second.outcome);
      }
    }
  }
  return outcomes;
}

double total_bad_debt(std::span<const LiquidationOutcome> outcomes) {
  KahanSum acc;
  for (const auto& o : outcomes) acc.add(o.bad_debt);
  return acc.value();
}

}  // namespace adl
