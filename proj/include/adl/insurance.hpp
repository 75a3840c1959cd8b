#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace adl {

// Shares of liquidation, funding, and trading fee revenue diverted to the fund.
struct FundParams {
  double alpha_liq = 0.0;
  double beta_fund = 0.0;
  double eta_trade = 0.0;

  void validate() const;
};

struct FundState {
  double balance = 0.0;
  std::int64_t breach_count = 0;
};

struct FundStepResult {
  FundState state;
  double inflow = 0.0;
  double coverage = 0.0;  // paid against this step's bad debt
  double residual = 0.0;  // shortfall left for socialization
};

// One step of the fund process: coverage is drawn from the pre-inflow
// balance, capped by it; the same step's fee inflow is then added.
FundStepResult fund_step(const FundState& state, double liq_fees, double trade_notional,
                         double funding_notional, double bad_debt,
                         const FundParams& params);

// Newsvendor sizing: empirical lower quantile of the deficit samples at
// level 1 - r/kappa; zero when r >= kappa.
double optimal_fund_size(std::span<const double> deficit_samples, double r, double kappa);

}  // namespace adl
