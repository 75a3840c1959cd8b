#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "adl/exchange.hpp"

namespace adl {

// Which quantity a haircut may seize. PNL-only is the default everywhere;
// equity mode exists for the wealth-space diagnostic.
enum class Numeraire { pnl_only, equity };

// One winner as seen by an allocation rule.
struct WinnerSlice {
  std::string id;
  double cash = 0.0;          // protected principal
  double pnl = 0.0;
  double endowment = 0.0;     // w: what a haircut may seize
  double cap = 1.0;           // beta, effective per-account haircut cap
  double score = 0.0;         // queue ranking score
  double eff_leverage = 1.0;  // lambda = notional / equity
  double equity = 0.0;

  static WinnerSlice make(std::string id, double cash, double pnl,
                          Numeraire mode = Numeraire::pnl_only);
};

// Effective cap from a per-round haircut limit and an equity floor.
double effective_cap(double cash, double endowment, double max_haircut,
                     double min_equity);

struct AdlAllocation {
  std::string policy;
  double severity = 0.0;         // theta
  double budget = 0.0;           // B = theta * D
  std::vector<double> haircuts;  // h_i in [0,1], aligned with the winner span
  std::vector<double> seized;    // x_i = h_i * w_i
  double total_seized() const;
};

struct DeficitCapacity {
  double total_deficit = 0.0;    // D
  double max_deficit = 0.0;      // Delta
  double total_capacity = 0.0;   // U
  double max_capacity = 0.0;     // upsilon
};

DeficitCapacity deficit_and_capacity(std::span<const double> equities,
                                     std::span<const double> endowments);

// Greedy score-ranked waterfall. Ties break by ascending id.
AdlAllocation queue_allocate(std::span<const WinnerSlice> winners, double budget);

enum class ScoreVariant { binance_bankruptcy, hyperliquid_entry, hyperliquid_ratio };

// Ranking score for the queue. `reference_price` is the bankruptcy price for
// the Binance variant and the entry price for the Hyperliquid variant; the
// ratio variant takes mark/entry and notional/account_value directly.
double adl_score(double leverage, double mark_price, double reference_price,
                 ScoreVariant variant);
double adl_score_ratio(double mark_over_entry, double notional_over_account_value);

// Uniform haircut fraction theta*D/U on every positive endowment.
AdlAllocation pro_rata(std::span<const WinnerSlice> winners, double severity,
                       double total_deficit);

// Seizure proportional to leverage-weighted endowment, clamped at h=1 with
// the residual redistributed over unclamped accounts.
AdlAllocation levered_pro_rata(std::span<const WinnerSlice> winners, double severity,
                               double total_deficit);

// Water-filling under per-account caps: h_i = min(eta, beta_i) with eta
// solving the budget identity. Throws InfeasibleError past capacity.
AdlAllocation capped_pro_rata(std::span<const WinnerSlice> winners, double budget);

// Weighted water-filling: h_i = min(beta_i, tau * weight_i). Zero-weight
// accounts receive no haircut.
AdlAllocation rap_allocate(std::span<const WinnerSlice> winners,
                           std::span<const double> risk_weights, double budget);

// rho_i = lambda_i * psi(1/lambda_i), the perspective transform of psi.
std::vector<double> perspective_weights(std::span<const double> lambdas,
                                        const std::function<double(double)>& psi);

// Derived risk model g*(lambda) = rho(lambda)/lambda.
std::vector<double> risk_model_from_perspective(std::span<const double> lambdas,
                                                std::span<const double> rhos);

// e'_i = cash_i + pnl_i - x_i. Seizure above the positive PNL endowment is
// rejected in PNL-only mode.
std::vector<double> post_adl_equity(std::span<const double> cash,
                                    std::span<const double> pnl,
                                    std::span<const double> seized,
                                    Numeraire mode = Numeraire::pnl_only);

struct AllocationDiagnostics {
  double balance_residual = 0.0;   // |sum x - B|
  double max_cap_violation = 0.0;  // max over i of (h_i - beta_i)+
  bool feasible = true;            // B within total capped capacity
  bool balanced = false;
  bool respects_caps = false;
};

AllocationDiagnostics validate(const AdlAllocation& alloc,
                               std::span<const WinnerSlice> winners);

// Winner slices of a book at a horizon under the chosen numeraire.
std::vector<WinnerSlice> winners_from_book(const Book& book, const PricePath& path,
                                           std::span<const double> rates,
                                           std::int64_t horizon,
                                           Numeraire mode = Numeraire::pnl_only);

}  // namespace adl
