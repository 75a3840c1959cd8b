#include "adl/insurance.hpp"

#include <algorithm>

#include "adl/errors.hpp"
#include "adl/numerics.hpp"

namespace adl {

void FundParams::validate() const {
  for (double v : {alpha_liq, beta_fund, eta_trade})
    if (v < 0.0 || v > 1.0) throw InputError("FundParams: share outside [0,1]");
}

FundStepResult fund_step(const FundState& state, double liq_fees, double trade_notional,
                         double funding_notional, double bad_debt,
                         const FundParams& params) {
  params.validate();
  if (liq_fees < 0.0 || trade_notional < 0.0 || funding_notional < 0.0 || bad_debt < 0.0)
    throw InputError("fund_step: negative input");

  FundStepResult r;
  r.inflow = params.alpha_liq * liq_fees + params.eta_trade * trade_notional +
             params.beta_fund * funding_notional;
  r.coverage = std::min(state.balance, bad_debt);
  r.residual = bad_debt - r.coverage;
  r.state.balance = state.balance - r.coverage + r.inflow;
  r.state.breach_count = state.breach_count + (r.residual > 0.0 ? 1 : 0);
  return r;
}

double optimal_fund_size(std::span<const double> deficit_samples, double r, double kappa) {
  if (!(kappa > 0.0)) throw InputError("optimal_fund_size: kappa must be > 0");
  if (deficit_samples.empty()) throw InputError("optimal_fund_size: empty sample set");
  if (r >= kappa) return 0.0;
  std::vector<double> samples(deficit_samples.begin(), deficit_samples.end());
  return lower_quantile(std::move(samples), 1.0 - r / kappa);
}

}  // namespace adl
