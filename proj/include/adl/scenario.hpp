#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adl/control.hpp"
#include "adl/exchange.hpp"
#include "adl/insurance.hpp"
#include "adl/liquidation.hpp"
#include "adl/policies.hpp"

namespace adl {

struct PolicySpec {
  std::string name;           // queue | pro_rata | levered_pro_rata |
                              // capped_pro_rata | rap
  double theta = 1.0;         // severity for severity-driven policies
  std::string score = "endowment";  // endowment | binance | hyperliquid
  std::string risk_model = "linear";  // linear | power | cvar (RAP)
  double risk_power = 2.0;
  double risk_threshold = 0.9;
  double max_haircut = 1.0;   // per-account cap
};

struct ScenarioConfig {
  Book book;
  PricePath path;
  MarginParams margin;
  FundingParams funding;
  bool funding_enabled = true;
  ImpactModel impact;
  FeeSchedule fees;
  FundParams fund;
  double fund_initial = 0.0;
  bool liquidation_enabled = true;
  std::string severity_rule = "fixed";  // fixed | match | backoff
  double backoff_decay = 0.5;
  std::vector<PolicySpec> policies;
  Numeraire numeraire = Numeraire::pnl_only;
  std::uint64_t seed = 0;

  static ScenarioConfig from_json_file(const std::string& path, bool strict = true);
};

struct SimulateOutputs {
  std::string equities_csv;
  std::string funding_csv;
  std::string liquidations_csv;
  std::string fund_csv;
  std::string allocations_json;
};

// Runs the per-tick loop (funding, liquidation, fund, ADL) over the scenario
// and writes trajectory files to out_dir.
SimulateOutputs run_simulate(const ScenarioConfig& config, const std::string& out_dir);

// Runs every configured policy at one severity on the terminal book and
// writes the comparison table. Requires >= 2 policies.
void run_policy_compare(const ScenarioConfig& config, const std::string& out_dir);

struct SweepConfig {
  std::string experiment;  // ptsr_scaling | regret | adverse_selection
  std::vector<std::size_t> n_grid = {100, 1000, 10000, 100000};
  std::size_t seeds = 20;
  std::uint64_t seed0 = 1;
  double theta = 0.5;
  std::string schedule = "fixed";   // fixed | ev_scaled
  double winner_alpha = 2.0;        // Pareto shape for winners
  std::size_t regret_horizon = 10000;
  int jobs = 1;

  static SweepConfig from_json_file(const std::string& path, bool strict = true);
};

void run_sweep(const SweepConfig& config, const std::string& out_dir);

}  // namespace adl
