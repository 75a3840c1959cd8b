#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adl {

// One execution row from the fill stream.
struct FillRecord {
  std::int64_t time_ms = 0;
  std::string coin;
  bool is_buy = false;
  double px = 0.0;
  std::optional<double> mark_px;
  double sz = 0.0;
  std::string user;
  bool is_adl = false;
  std::string liquidated_user;                    // empty when absent
  std::optional<double> liquidated_total_equity;  // may be negative
};

struct Wave {
  std::size_t index = 0;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::vector<FillRecord> fills;
};

struct CoinPosition {
  std::string coin;
  double quantity = 0.0;  // signed, positive long
  double entry_px = 0.0;
};

struct AccountSnapshot {
  std::string user;
  double equity = 0.0;
  double unrealized_pnl = 0.0;
  std::int64_t ts_ms = 0;
  std::vector<CoinPosition> positions;
};

// Timestamped mark used to evolve counterfactual equities.
struct MarkPoint {
  std::int64_t ts_ms = 0;
  std::string coin;
  double mark = 0.0;
};

struct DataQuality {
  std::int64_t fills_missing_mark = 0;  // excluded from the needed budget
  std::int64_t rows_skipped = 0;
  std::int64_t winners_missing_snapshot = 0;
};

// --- ingestion ---------------------------------------------------------------

std::vector<FillRecord> load_fills_csv(const std::string& path, bool strict,
                                       DataQuality* quality = nullptr);
std::vector<AccountSnapshot> load_snapshots_csv(const std::string& path, bool strict,
                                                DataQuality* quality = nullptr);

// Fill in missing marks from the nearest same-coin mark within a window.
void backfill_marks(std::vector<FillRecord>& fills, std::int64_t window_ms = 1000,
                    DataQuality* quality = nullptr);

// --- wave machinery ----------------------------------------------------------

// Maximal runs of fills whose inter-fill gap never exceeds gap_ms; a strictly
// greater gap starts a new wave. Sorts defensively by time.
std::vector<Wave> partition_waves(std::vector<FillRecord> fills,
                                  std::int64_t gap_ms = 5000);

// Sum over distinct liquidated users of the negative part of their minimum
// observed equity in the wave.
double loser_deficit(const Wave& wave);

// Sum over ADL fills of |mark - exec| * size. Fills without a mark are
// excluded (counted upstream as data-quality events).
double needed_budget(const Wave& wave);

// min(positive unrealized PNL, positive equity).
double capacity_proxy(const AccountSnapshot& snapshot);

// --- two-pass replay ---------------------------------------------------------

struct ReplayResult {
  double production_haircut = 0.0;              // H_prod at the horizon
  std::vector<std::string> winners;             // users with ADL fills in the wave
  std::vector<double> induced_haircut_fraction; // per §-definition, e(p)>0 guard
  std::vector<double> wealth_removed;           // (e_no_adl - e_adl)+
  std::int64_t missing_snapshots = 0;
};

// Pass 1 applies every fill; pass 2 skips ADL fills on the same price path.
// Both passes are marked at wave end + horizon_ms along `marks`.
ReplayResult two_pass_replay(const Wave& wave,
                             std::span<const AccountSnapshot> snapshots,
                             std::span<const MarkPoint> marks,
                             std::int64_t horizon_ms);

// --- benchmark allocators ------------------------------------------------------

enum class BenchmarkPolicy {
  wealth_pro_rata,
  vector_projection,
  contract_pro_rata,
  min_max_integer,
};

std::string to_string(BenchmarkPolicy policy);
std::optional<BenchmarkPolicy> benchmark_policy_from_string(const std::string& name);

struct BenchmarkWinner {
  std::string user;
  double capacity = 0.0;        // c_u, USD
  double position_value = 0.0;  // notional available to close, USD
  double contract_value = 0.0;  // USD per whole contract
};

struct BenchmarkAllocation {
  BenchmarkPolicy policy;
  std::vector<double> haircut_usd;  // aligned with winners
  double allocated = 0.0;
  double shortfall = 0.0;           // allocated - budget (signed)
  double max_haircut_fraction = 0.0;
};

BenchmarkAllocation allocate_benchmark(std::span<const BenchmarkWinner> winners,
                                       double budget, BenchmarkPolicy policy);

// --- reporting ----------------------------------------------------------------

struct RegretDecomposition {
  double fairness = 0.0;   // max_i (h_i - h_pr_i)/e_i
  double overshoot = 0.0;  // B_policy - B_needed, signed
  std::int64_t excluded_rows = 0;
};

RegretDecomposition regret_decomposition(std::span<const double> policy_haircut_usd,
                                         std::span<const double> pro_rata_haircut_usd,
                                         std::span<const double> equities,
                                         double policy_budget, double needed);

struct ChurnEstimate {
  std::vector<double> exit_probability;
  double retained_fee = 0.0;
};

// p_i = 1 - exp(-beta * h_i / w_i); fee proxy scales notional * fee_rate by
// the survival probability.
ChurnEstimate churn_revenue_proxy(std::span<const double> haircuts,
                                  std::span<const double> capacities, double beta,
                                  std::span<const double> notionals, double fee_rate);

struct PolicyWaveRow {
  std::string policy;
  double budget = 0.0;
  double overshoot = 0.0;
  double fairness_regret = 0.0;
  double overshoot_regret = 0.0;
  double max_haircut_pct = 0.0;
  double shortfall = 0.0;
};

struct WaveReport {
  std::size_t index = 0;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::size_t fill_count = 0;
  double deficit = 0.0;
  double needed = 0.0;
  std::map<std::int64_t, double> production_haircut;  // horizon -> H_prod
  std::vector<PolicyWaveRow> policies;
  double churn_exit_mean = 0.0;
};

struct EventReport {
  std::vector<WaveReport> waves;
  double total_deficit = 0.0;
  double total_needed = 0.0;
  std::map<std::int64_t, double> total_production;  // horizon -> sum H_prod
  std::map<std::int64_t, double> total_overshoot;   // horizon -> production - needed
  std::map<std::string, double> policy_total_budget;
  std::map<std::string, double> policy_total_overshoot;
  std::map<std::string, double> policy_total_fairness;
  DataQuality quality;
};

struct ReplayConfig {
  std::int64_t gap_ms = 5000;
  std::vector<std::int64_t> horizons_ms = {0};
  std::vector<BenchmarkPolicy> policies = {BenchmarkPolicy::wealth_pro_rata};
  bool equity_numeraire = false;  // diagnostic mode: capacity = positive equity
  bool strict = false;
  double churn_beta = 1.0;
  double fee_rate = 2e-4;
};

EventReport event_report(std::span<const FillRecord> fills,
                         std::span<const AccountSnapshot> snapshots,
                         const ReplayConfig& config);

// Serialize a report to out_dir: wave_reports.csv, aggregate.json, and one
// allocations CSV per policy.
void write_event_report(const EventReport& report, const ReplayConfig& config,
                        const std::string& out_dir);

}  // namespace adl
