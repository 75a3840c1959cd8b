#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adl/exchange.hpp"

namespace adl {

// Linear impact: a slice of dq contracts fills at mark -/+ (alpha/2)*dq.
struct ImpactModel {
  double alpha = 0.0;            // price impact per contract, >= 0
  double price_floor = 1e-9;     // degenerate-fill clamp

  void validate() const;
};

// Affine liquidation fee: fixed + mark_bps on mark notional + exec_bps on
// execution notional. Rates are plain fractions, not basis points.
struct FeeSchedule {
  double fixed_fee = 0.0;
  double mark_rate = 0.0;
  double exec_rate = 0.0;

  void validate() const;
};

struct LiquidationOutcome {
  std::string position_id;
  std::int64_t time = 0;
  double slice = 0.0;
  double exec_price = 0.0;
  double fee = 0.0;
  double bad_debt = 0.0;         // slice shortfall past the bankruptcy price
  double adjusted_equity = 0.0;  // equity after slippage and fees
  bool full_close = false;
  bool degenerate_fill = false;  // execution price clamped at the floor
  bool retried = false;          // second pass forced a full close
};

// Highest price at which the position is totally insolvent, measured from
// the current price and current cash: max(p - (c + funding)/(side*q), 0).
double bankruptcy_price(const Position& pos, double collateral_now,
                        double funding_accrued, double price);

// Entry-price form of the liquidation trigger price.
double liquidation_price(const Position& pos, double collateral_now,
                         double funding_accrued, const MarginParams& params);

// Mark price adjusted for walking the book: long closes sell below the mark,
// short closes buy above it.
double execution_price(double price, double slice, Side side, const ImpactModel& impact,
                       bool* degenerate = nullptr);

double liquidation_fee(double slice, double mark_price, double exec_price,
                       const FeeSchedule& sched);

// Smallest slice that restores the maintenance condition, capped at the full
// quantity when no feasible root exists. Fees are linearized at the mark
// price inside the quadratic. When `exec_price_hint` is set the slice fills
// at that fixed price instead of the impact model.
double greedy_liquidation_size(const Position& pos, double position_equity, double price,
                               const MarginParams& params, const ImpactModel& impact,
                               const FeeSchedule& sched,
                               std::optional<double> exec_price_hint = std::nullopt);

// Shortfall realized by one slice relative to the bankruptcy price.
double slice_bad_debt(double exec_price, double bankruptcy, double slice, Side side);

// Equity after realizing `slice` at `exec_price` with fee `fee`.
double adjusted_equity(double position_equity, Side side, double slice, double exec_price,
                       double price, double fee);

// One pass of the liquidation loop at time t over breached positions, in id
// order. Mutates quantities and collateral in place. A slice that leaves the
// position still breached triggers one immediate full close.
std::vector<LiquidationOutcome> liquidation_tick(Book& book, const PricePath& path,
                                                 std::span<const double> rates,
                                                 std::int64_t t, const MarginParams& params,
                                                 const ImpactModel& impact,
                                                 const FeeSchedule& sched);

// Aggregate bad debt of a tick's outcomes.
double total_bad_debt(std::span<const LiquidationOutcome> outcomes);

}  // namespace adl
