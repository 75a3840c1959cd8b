#include "adl/replay.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "adl/errors.hpp"
#include "adl/numerics.hpp"
#include "adl/policies.hpp"

namespace adl {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct HeaderMap {
  std::unordered_map<std::string, std::size_t> index;

  std::optional<std::size_t> find(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
  std::size_t require(const std::string& name, const std::string& file) const {
    auto idx = find(name);
    if (!idx) throw InputError(file + ": missing required column '" + name + "'");
    return *idx;
  }
};

HeaderMap parse_header(const std::string& line, std::span<const std::string> known,
                       bool strict, const std::string& file) {
  HeaderMap map;
  auto fields = split_csv_line(line);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    map.index[fields[i]] = i;
    if (strict &&
        std::find(known.begin(), known.end(), fields[i]) == known.end())
      throw DataQualityError(file + ": unknown column '" + fields[i] +
                             "' rejected in strict mode");
  }
  return map;
}

std::optional<double> parse_opt_double(const std::vector<std::string>& row,
                                       std::optional<std::size_t> idx) {
  if (!idx || *idx >= row.size() || row[*idx].empty()) return std::nullopt;
  return std::stod(row[*idx]);
}

bool parse_bool(const std::string& s) {
  return s == "1" || s == "true" || s == "True" || s == "TRUE";
}

}  // namespace

std::vector<FillRecord> load_fills_csv(const std::string& path, bool strict,
                                       DataQuality* quality) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open fills file: " + path);
  static const std::vector<std::string> known = {
      "time_ms", "coin",   "side", "px",     "markPx",          "sz",
      "user",    "is_adl", "liquidated_user", "liquidated_total_equity"};
  std::string line;
  if (!std::getline(in, line)) return {};
  const HeaderMap hdr = parse_header(line, known, strict, path);
  const auto c_time = hdr.require("time_ms", path);
  const auto c_coin = hdr.require("coin", path);
  const auto c_side = hdr.require("side", path);
  const auto c_px = hdr.require("px", path);
  const auto c_mark = hdr.find("markPx");
  const auto c_sz = hdr.require("sz", path);
  const auto c_user = hdr.require("user", path);
  const auto c_adl = hdr.require("is_adl", path);
  const auto c_liq_user = hdr.find("liquidated_user");
  const auto c_liq_eq = hdr.find("liquidated_total_equity");

  std::vector<FillRecord> fills;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    try {
      FillRecord f;
      f.time_ms = std::stoll(row.at(c_time));
      f.coin = row.at(c_coin);
      f.is_buy = row.at(c_side) == "buy" || row.at(c_side) == "B";
      f.px = std::stod(row.at(c_px));
      f.mark_px = parse_opt_double(row, c_mark);
      f.sz = std::stod(row.at(c_sz));
      f.user = row.at(c_user);
      f.is_adl = parse_bool(row.at(c_adl));
      if (c_liq_user && *c_liq_user < row.size()) f.liquidated_user = row[*c_liq_user];
      f.liquidated_total_equity = parse_opt_double(row, c_liq_eq);
      if (!(f.px > 0.0) || !(f.sz > 0.0))
        throw InputError("non-positive px/sz");
      if (f.mark_px && !(*f.mark_px > 0.0)) throw InputError("non-positive markPx");
      fills.push_back(std::move(f));
    } catch (const std::exception& e) {
      if (strict)
        throw DataQualityError(path + ":" + std::to_string(line_no) + ": " + e.what());
      if (quality) ++quality->rows_skipped;
    }
  }
  return fills;
}

std::vector<AccountSnapshot> load_snapshots_csv(const std::string& path, bool strict,
                                                DataQuality* quality) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open snapshots file: " + path);
  static const std::vector<std::string> known = {
      "user", "equity", "unrealized_pnl", "coin", "position_qty", "entry_px", "ts_ms"};
  std::string line;
  if (!std::getline(in, line)) return {};
  const HeaderMap hdr = parse_header(line, known, strict, path);
  const auto c_user = hdr.require("user", path);
  const auto c_eq = hdr.require("equity", path);
  const auto c_upnl = hdr.require("unrealized_pnl", path);
  const auto c_coin = hdr.find("coin");
  const auto c_qty = hdr.find("position_qty");
  const auto c_entry = hdr.find("entry_px");
  const auto c_ts = hdr.find("ts_ms");

  // Rows with the same (user, ts) aggregate into one snapshot with one
  // position row per coin.
  std::vector<AccountSnapshot> snaps;
  std::unordered_map<std::string, std::size_t> keyed;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    try {
      const std::string user = row.at(c_user);
      const std::int64_t ts =
          (c_ts && *c_ts < row.size() && !row[*c_ts].empty()) ? std::stoll(row[*c_ts]) : 0;
      const std::string key = user + "\x1f" + std::to_string(ts);
      auto it = keyed.find(key);
      if (it == keyed.end()) {
        AccountSnapshot s;
        s.user = user;
        s.equity = std::stod(row.at(c_eq));
        s.unrealized_pnl = std::stod(row.at(c_upnl));
        s.ts_ms = ts;
        keyed.emplace(key, snaps.size());
        snaps.push_back(std::move(s));
        it = keyed.find(key);
      }
      if (c_coin && *c_coin < row.size() && !row[*c_coin].empty()) {
        CoinPosition p;
        p.coin = row[*c_coin];
        p.quantity = (c_qty && *c_qty < row.size()) ? std::stod(row[*c_qty]) : 0.0;
        p.entry_px = (c_entry && *c_entry < row.size()) ? std::stod(row[*c_entry]) : 0.0;
        snaps[it->second].positions.push_back(std::move(p));
      }
    } catch (const std::exception& e) {
      if (strict)
        throw DataQualityError(path + ":" + std::to_string(line_no) + ": " + e.what());
      if (quality) ++quality->rows_skipped;
    }
  }
  return snaps;
}

void backfill_marks(std::vector<FillRecord>& fills, std::int64_t window_ms,
                    DataQuality* quality) {
  std::unordered_map<std::string, std::vector<std::pair<std::int64_t, double>>> by_coin;
  for (const auto& f : fills)
    if (f.mark_px) by_coin[f.coin].emplace_back(f.time_ms, *f.mark_px);
  for (auto& [coin, points] : by_coin) std::sort(points.begin(), points.end());

  for (auto& f : fills) {
    if (f.mark_px) continue;
    const auto it = by_coin.find(f.coin);
    double best = 0.0;
    std::int64_t best_gap = window_ms + 1;
    if (it != by_coin.end()) {
      for (const auto& [ts, mark] : it->second) {
        const std::int64_t gap = std::abs(ts - f.time_ms);
        if (gap < best_gap) {
          best_gap = gap;
          best = mark;
        }
      }
    }
    if (best_gap <= window_ms)
      f.mark_px = best;
    else if (quality)
      ++quality->fills_missing_mark;
  }
}

std::vector<Wave> partition_waves(std::vector<FillRecord> fills, std::int64_t gap_ms) {
  std::stable_sort(fills.begin(), fills.end(),
                   [](const FillRecord& a, const FillRecord& b) {
                     return a.time_ms < b.time_ms;
                   });
  std::vector<Wave> waves;
  for (auto& f : fills) {
    if (waves.empty() || f.time_ms - waves.back().end_ms > gap_ms) {
      Wave w;
      w.index = waves.size();
      w.start_ms = f.time_ms;
      w.end_ms = f.time_ms;
      waves.push_back(std::move(w));
    }
    waves.back().end_ms = f.time_ms;
    waves.back().fills.push_back(std::move(f));
  }
  return waves;
}

double loser_deficit(const Wave& wave) {
  std::map<std::string, double> min_equity;
  for (const auto& f : wave.fills) {
    if (f.liquidated_user.empty() || !f.liquidated_total_equity) continue;
    auto [it, inserted] = min_equity.emplace(f.liquidated_user, *f.liquidated_total_equity);
    if (!inserted) it->second = std::min(it->second, *f.liquidated_total_equity);
  }
  KahanSum acc;
  for (const auto& [user, eq] : min_equity) acc.add(std::max(-eq, 0.0));
  return acc.value();
}

double needed_budget(const Wave& wave) {
  KahanSum acc;
  for (const auto& f : wave.fills)
    if (f.is_adl && f.mark_px) acc.add(std::abs(*f.mark_px - f.px) * std::abs(f.sz));
  return acc.value();
}

double capacity_proxy(const AccountSnapshot& snapshot) {
  return std::min(std::max(snapshot.unrealized_pnl, 0.0), std::max(snapshot.equity, 0.0));
}

namespace {

// Winner account state for the replay passes.
struct ReplayAccount {
  double equity = 0.0;
  std::unordered_map<std::string, double> qty;        // signed position per coin
  std::unordered_map<std::string, double> last_mark;  // last seen mark per coin
};

void apply_mark(ReplayAccount& acc, const std::string& coin, double mark) {
  auto q = acc.qty.find(coin);
  auto m = acc.last_mark.find(coin);
  if (q != acc.qty.end() && m != acc.last_mark.end())
    acc.equity += q->second * (mark - m->second);
  acc.last_mark[coin] = mark;
}

void apply_fill(ReplayAccount& acc, const FillRecord& f) {
  const double dq = f.is_buy ? f.sz : -f.sz;
  const auto m = acc.last_mark.find(f.coin);
  const double mark = (m != acc.last_mark.end()) ? m->second : f.mark_px.value_or(f.px);
  acc.last_mark[f.coin] = mark;
  acc.equity += dq * (mark - f.px);
  acc.qty[f.coin] += dq;
}

}  // namespace

ReplayResult two_pass_replay(const Wave& wave, std::span<const AccountSnapshot> snapshots,
                             std::span<const MarkPoint> marks, std::int64_t horizon_ms) {
  if (horizon_ms < 0) throw InputError("two_pass_replay: negative horizon");
  ReplayResult result;

  std::set<std::string> winner_set;
  for (const auto& f : wave.fills)
    if (f.is_adl) winner_set.insert(f.user);

  std::unordered_map<std::string, const AccountSnapshot*> snap_of;
  for (const auto& s : snapshots) {
    auto [it, inserted] = snap_of.emplace(s.user, &s);
    if (!inserted && s.ts_ms > it->second->ts_ms) it->second = &s;
  }

  const std::int64_t eval_ms = wave.end_ms + horizon_ms;
  std::vector<MarkPoint> path(marks.begin(), marks.end());
  std::stable_sort(path.begin(), path.end(),
                   [](const MarkPoint& a, const MarkPoint& b) { return a.ts_ms < b.ts_ms; });

  KahanSum total_removed;
  for (const auto& user : winner_set) {
    auto snap_it = snap_of.find(user);
    if (snap_it == snap_of.end()) {
      ++result.missing_snapshots;
      continue;
    }
    const AccountSnapshot& snap = *snap_it->second;

    auto init_account = [&snap]() {
      ReplayAccount acc;
      acc.equity = snap.equity;
      for (const auto& p : snap.positions) acc.qty[p.coin] = p.quantity;
      return acc;
    };
    ReplayAccount with_adl = init_account();
    ReplayAccount without_adl = init_account();
    const double equity_pre = snap.equity;

    // Merge marks and the wave's fills in time order up to the horizon.
    std::size_t mi = 0, fi = 0;
    while (true) {
      const bool has_mark = mi < path.size() && path[mi].ts_ms <= eval_ms;
      const bool has_fill = fi < wave.fills.size();
      if (!has_mark && !has_fill) break;
      const bool take_mark =
          has_mark && (!has_fill || path[mi].ts_ms <= wave.fills[fi].time_ms);
      if (take_mark) {
        apply_mark(with_adl, path[mi].coin, path[mi].mark);
        apply_mark(without_adl, path[mi].coin, path[mi].mark);
        ++mi;
      } else {
        const FillRecord& f = wave.fills[fi];
        if (f.user == user) {
          apply_fill(with_adl, f);
          if (!f.is_adl) apply_fill(without_adl, f);
        }
        ++fi;
      }
    }

    const double removed = std::max(without_adl.equity - with_adl.equity, 0.0);
    total_removed.add(removed);
    result.winners.push_back(user);
    result.wealth_removed.push_back(removed);
    result.induced_haircut_fraction.push_back(
        equity_pre > 0.0 ? (without_adl.equity - with_adl.equity) / equity_pre : 0.0);
  }
  result.production_haircut = total_removed.value();
  return result;
}

std::string to_string(BenchmarkPolicy policy) {
  switch (policy) {
    case BenchmarkPolicy::wealth_pro_rata: return "wealth_pro_rata";
    case BenchmarkPolicy::vector_projection: return "vector_projection";
    case BenchmarkPolicy::contract_pro_rata: return "contract_pro_rata";
    case BenchmarkPolicy::min_max_integer: return "min_max_integer";
  }
  return "unknown";
}

std::optional<BenchmarkPolicy> benchmark_policy_from_string(const std::string& name) {
  if (name == "wealth_pro_rata") return BenchmarkPolicy::wealth_pro_rata;
  if (name == "vector_projection") return BenchmarkPolicy::vector_projection;
  if (name == "contract_pro_rata") return BenchmarkPolicy::contract_pro_rata;
  if (name == "min_max_integer") return BenchmarkPolicy::min_max_integer;
  return std::nullopt;
}

namespace {

BenchmarkAllocation wealth_pro_rata_alloc(std::span<const BenchmarkWinner> winners,
                                          double budget) {
  std::vector<WinnerSlice> slices;
  slices.reserve(winners.size());
  for (const auto& w : winners) {
    WinnerSlice s;
    s.id = w.user;
    s.endowment = w.capacity;
    s.cap = 1.0;
    slices.push_back(std::move(s));
  }
  AdlAllocation alloc = capped_pro_rata(slices, budget);
  BenchmarkAllocation out;
  out.policy = BenchmarkPolicy::wealth_pro_rata;
  out.haircut_usd = alloc.seized;
  out.allocated = alloc.total_seized();
  out.shortfall = out.allocated - budget;
  for (std::size_t i = 0; i < winners.size(); ++i)
    if (winners[i].capacity > 0.0)
      out.max_haircut_fraction =
          std::max(out.max_haircut_fraction, alloc.seized[i] / winners[i].capacity);
  return out;
}

BenchmarkAllocation vector_projection_alloc(std::span<const BenchmarkWinner> winners,
                                            double budget) {
  KahanSum cap;
  for (const auto& w : winners) cap.add(w.capacity);
  if (budget > cap.value() * (1.0 + 1e-12))
    throw InfeasibleError("vector_projection: budget exceeds capacity " +
                          format_double(cap.value()));

  // Projection of the origin onto {x in [0,1]^n : c^T x = B}: x = clamp(mu*c),
  // refined by re-solving mu over the unclamped coordinates.
  const std::size_t n = winners.size();
  std::vector<double> x(n, 0.0);
  std::vector<bool> fixed(n, false);
  double fixed_mass = 0.0;
  for (std::size_t pass = 0; pass <= n; ++pass) {
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!fixed[i]) denom += winners[i].capacity * winners[i].capacity;
    if (denom <= 0.0) break;
    const double mu = (budget - fixed_mass) / denom;
    bool newly_fixed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      const double xi = mu * winners[i].capacity;
      if (xi >= 1.0) {
        x[i] = 1.0;
        fixed[i] = true;
        fixed_mass += winners[i].capacity;
        newly_fixed = true;
      } else {
        x[i] = std::max(xi, 0.0);
      }
    }
    if (!newly_fixed) break;
  }

  BenchmarkAllocation out;
  out.policy = BenchmarkPolicy::vector_projection;
  out.haircut_usd.resize(n);
  KahanSum total;
  for (std::size_t i = 0; i < n; ++i) {
    out.haircut_usd[i] = x[i] * winners[i].capacity;
    total.add(out.haircut_usd[i]);
    out.max_haircut_fraction = std::max(out.max_haircut_fraction, x[i]);
  }
  out.allocated = total.value();
  out.shortfall = out.allocated - budget;
  return out;
}

BenchmarkAllocation contract_pro_rata_alloc(std::span<const BenchmarkWinner> winners,
                                            double budget) {
  KahanSum value_mass;
  for (const auto& w : winners) value_mass.add(w.position_value);
  BenchmarkAllocation out;
  out.policy = BenchmarkPolicy::contract_pro_rata;
  out.haircut_usd.assign(winners.size(), 0.0);
  if (value_mass.value() <= 0.0) {
    out.shortfall = -budget;
    return out;
  }
  KahanSum total;
  for (std::size_t i = 0; i < winners.size(); ++i) {
    const auto& w = winners[i];
    const double share = budget * w.position_value / value_mass.value();
    if (!(w.contract_value > 0.0)) continue;
    const double contracts = std::floor(share / w.contract_value);
    out.haircut_usd[i] = contracts * w.contract_value;
    total.add(out.haircut_usd[i]);
    if (w.capacity > 0.0)
      out.max_haircut_fraction =
          std::max(out.max_haircut_fraction, out.haircut_usd[i] / w.capacity);
  }
  out.allocated = total.value();
  out.shortfall = out.allocated - budget;  // floor rounding only reduces
  return out;
}

BenchmarkAllocation min_max_integer_alloc(std::span<const BenchmarkWinner> winners,
                                          double budget) {
  const std::size_t n = winners.size();
  auto closed_value = [&](double phi, std::size_t i) {
    const auto& w = winners[i];
    if (!(w.contract_value > 0.0)) return 0.0;
    const double limit = std::min(phi * w.capacity, w.position_value);
    return std::floor(limit / w.contract_value + 1e-12) * w.contract_value;
  };
  auto total_at = [&](double phi) {
    KahanSum acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(closed_value(phi, i));
    return acc.value();
  };

  double max_total = total_at(std::numeric_limits<double>::max() / 4.0);
  if (max_total + 1e-9 < budget)
    throw InfeasibleError("min_max_integer: required capacity " + format_double(budget) +
                          " exceeds closable value " + format_double(max_total));

  // Smallest phi whose floor-closures reach the budget.
  double lo = 0.0, hi = 1.0;
  while (total_at(hi) + 1e-12 < budget) hi *= 2.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (total_at(mid) + 1e-12 >= budget)
      hi = mid;
    else
      lo = mid;
  }

  std::vector<double> usd(n);
  for (std::size_t i = 0; i < n; ++i) usd[i] = closed_value(hi, i);

  // Trim redundant contracts from the highest-fraction accounts while the
  // budget stays met; this minimizes the positive overshoot reachable by
  // single-contract removals and lowers the max haircut.
  KahanSum total_acc;
  for (double v : usd) total_acc.add(v);
  double total = total_acc.value();
  while (true) {
    std::size_t best = n;
    double best_fraction = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (usd[i] < winners[i].contract_value - 1e-12) continue;
      if (total - winners[i].contract_value + 1e-9 < budget) continue;
      const double frac = winners[i].capacity > 0.0 ? usd[i] / winners[i].capacity : 0.0;
      if (frac > best_fraction) {
        best_fraction = frac;
        best = i;
      }
    }
    if (best == n) break;
    usd[best] -= winners[best].contract_value;
    total -= winners[best].contract_value;
  }

  BenchmarkAllocation out;
  out.policy = BenchmarkPolicy::min_max_integer;
  out.haircut_usd = std::move(usd);
  out.allocated = total;
  out.shortfall = total - budget;
  for (std::size_t i = 0; i < n; ++i)
    if (winners[i].capacity > 0.0)
      out.max_haircut_fraction =
          std::max(out.max_haircut_fraction, out.haircut_usd[i] / winners[i].capacity);
  return out;
}

}  // namespace

BenchmarkAllocation allocate_benchmark(std::span<const BenchmarkWinner> winners,
                                       double budget, BenchmarkPolicy policy) {
  if (budget < 0.0) throw InputError("allocate_benchmark: negative budget");
  switch (policy) {
    case BenchmarkPolicy::wealth_pro_rata: return wealth_pro_rata_alloc(winners, budget);
    case BenchmarkPolicy::vector_projection: return vector_projection_alloc(winners, budget);
    case BenchmarkPolicy::contract_pro_rata: return contract_pro_rata_alloc(winners, budget);
    case BenchmarkPolicy::min_max_integer: return min_max_integer_alloc(winners, budget);
  }
  throw InputError("allocate_benchmark: unknown policy");
}

RegretDecomposition regret_decomposition(std::span<const double> policy_haircut_usd,
                                         std::span<const double> pro_rata_haircut_usd,
                                         std::span<const double> equities,
                                         double policy_budget, double needed) {
  if (policy_haircut_usd.size() != pro_rata_haircut_usd.size() ||
      policy_haircut_usd.size() != equities.size())
    throw InputError("regret_decomposition: misaligned winner sets");
  RegretDecomposition out;
  out.overshoot = policy_budget - needed;
  double max_dev = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < equities.size(); ++i) {
    if (!(equities[i] > 0.0)) {
      ++out.excluded_rows;
      continue;
    }
    any = true;
    max_dev = std::max(max_dev, (policy_haircut_usd[i] - pro_rata_haircut_usd[i]) /
                                    equities[i]);
  }
  out.fairness = any ? max_dev : 0.0;
  return out;
}

ChurnEstimate churn_revenue_proxy(std::span<const double> haircuts,
                                  std::span<const double> capacities, double beta,
                                  std::span<const double> notionals, double fee_rate) {
  if (haircuts.size() != capacities.size() || haircuts.size() != notionals.size())
    throw InputError("churn_revenue_proxy: misaligned inputs");
  ChurnEstimate out;
  out.exit_probability.resize(haircuts.size());
  KahanSum retained;
  for (std::size_t i = 0; i < haircuts.size(); ++i) {
    double p = 0.0;
    if (haircuts[i] > 0.0) {
      if (!(capacities[i] > 0.0))
        throw InputError("churn_revenue_proxy: haircut on zero capacity");
      p = 1.0 - std::exp(-beta * haircuts[i] / capacities[i]);
    }
    out.exit_probability[i] = p;
    retained.add(notionals[i] * fee_rate * (1.0 - p));
  }
  out.retained_fee = retained.value();
  return out;
}

EventReport event_report(std::span<const FillRecord> fills,
                         std::span<const AccountSnapshot> snapshots,
                         const ReplayConfig& config) {
  EventReport report;

  std::vector<FillRecord> all(fills.begin(), fills.end());
  backfill_marks(all, 1000, &report.quality);

  std::vector<MarkPoint> marks;
  for (const auto& f : all)
    if (f.mark_px) marks.push_back({f.time_ms, f.coin, *f.mark_px});

  std::vector<FillRecord> adl_fills;
  for (const auto& f : all)
    if (f.is_adl) adl_fills.push_back(f);
  std::vector<Wave> waves = partition_waves(std::move(adl_fills), config.gap_ms);

  KahanSum total_deficit, total_needed;
  std::map<std::int64_t, KahanSum> total_prod;
  std::map<std::string, KahanSum> policy_budget, policy_overshoot, policy_fairness;

  for (const auto& wave : waves) {
    WaveReport wr;
    wr.index = wave.index;
    wr.start_ms = wave.start_ms;
    wr.end_ms = wave.end_ms;
    wr.fill_count = wave.fills.size();
    wr.deficit = loser_deficit(wave);
    wr.needed = needed_budget(wave);
    total_deficit.add(wr.deficit);
    total_needed.add(wr.needed);

    for (std::int64_t h : config.horizons_ms) {
      ReplayResult rr = two_pass_replay(wave, snapshots, marks, h);
      wr.production_haircut[h] = rr.production_haircut;
      total_prod[h].add(rr.production_haircut);
      report.quality.winners_missing_snapshot += rr.missing_snapshots;
    }

    // Latest snapshot per user at or before the wave end forms the winner set.
    std::unordered_map<std::string, const AccountSnapshot*> latest;
    for (const auto& s : snapshots) {
      if (s.ts_ms > wave.end_ms) continue;
      auto [it, inserted] = latest.emplace(s.user, &s);
      if (!inserted && s.ts_ms > it->second->ts_ms) it->second = &s;
    }
    std::vector<BenchmarkWinner> winners;
    std::unordered_map<std::string, double> equity_of;
    for (const auto& [user, snap] : latest) {
      BenchmarkWinner w;
      w.user = user;
      w.capacity = config.equity_numeraire ? std::max(snap->equity, 0.0)
                                           : capacity_proxy(*snap);
      KahanSum value;
      double contract_value = 0.0;
      for (const auto& p : snap->positions) {
        value.add(std::abs(p.quantity) * p.entry_px);
        if (p.entry_px > 0.0) contract_value = p.entry_px;
      }
      w.position_value = value.value();
      w.contract_value = contract_value;
      if (w.capacity > 0.0) {
        equity_of[w.user] = std::max(snap->equity, 0.0);
        winners.push_back(std::move(w));
      }
    }
    std::sort(winners.begin(), winners.end(),
              [](const BenchmarkWinner& a, const BenchmarkWinner& b) {
                return a.user < b.user;
              });
    std::vector<double> equities;
    equities.reserve(winners.size());
    for (const auto& w : winners) equities.push_back(equity_of.at(w.user));

    BenchmarkAllocation reference =
        allocate_benchmark(winners, wr.needed, BenchmarkPolicy::wealth_pro_rata);

    for (BenchmarkPolicy policy : config.policies) {
      BenchmarkAllocation alloc = allocate_benchmark(winners, wr.needed, policy);
      RegretDecomposition reg = regret_decomposition(
          alloc.haircut_usd, reference.haircut_usd, equities, alloc.allocated, wr.needed);
      PolicyWaveRow row;
      row.policy = to_string(policy);
      row.budget = alloc.allocated;
      row.overshoot = alloc.allocated - wr.needed;
      row.fairness_regret = reg.fairness;
      row.overshoot_regret = reg.overshoot;
      row.max_haircut_pct = alloc.max_haircut_fraction;
      row.shortfall = alloc.shortfall;
      wr.policies.push_back(row);
      policy_budget[row.policy].add(row.budget);
      policy_overshoot[row.policy].add(row.overshoot_regret);
      policy_fairness[row.policy].add(row.fairness_regret);

      if (policy == BenchmarkPolicy::wealth_pro_rata && !winners.empty()) {
        std::vector<double> caps, notionals;
        for (const auto& w : winners) {
          caps.push_back(w.capacity);
          notionals.push_back(w.position_value);
        }
        ChurnEstimate churn = churn_revenue_proxy(alloc.haircut_usd, caps,
                                                  config.churn_beta, notionals,
                                                  config.fee_rate);
        KahanSum mean;
        for (double p : churn.exit_probability) mean.add(p);
        wr.churn_exit_mean = mean.value() / static_cast<double>(winners.size());
      }
    }
    report.waves.push_back(std::move(wr));
  }

  report.total_deficit = total_deficit.value();
  report.total_needed = total_needed.value();
  for (const auto& [h, acc] : total_prod) {
    report.total_production[h] = acc.value();
    report.total_overshoot[h] = acc.value() - report.total_needed;
  }
  for (const auto& [name, acc] : policy_budget) report.policy_total_budget[name] = acc.value();
  for (const auto& [name, acc] : policy_overshoot)
    report.policy_total_overshoot[name] = acc.value();
  for (const auto& [name, acc] : policy_fairness)
    report.policy_total_fairness[name] = acc.value();
  return report;
}

void write_event_report(const EventReport& report, const ReplayConfig& config,
                        const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream out(fs::path(out_dir) / "wave_reports.csv");
    out << "wave,start_ms,end_ms,fills,deficit,needed";
    for (std::int64_t h : config.horizons_ms) out << ",h_prod_" << h;
    out << ",churn_exit_mean\n";
    for (const auto& w : report.waves) {
      out << w.index << ',' << w.start_ms << ',' << w.end_ms << ',' << w.fill_count << ','
          << format_double(w.deficit) << ',' << format_double(w.needed);
      for (std::int64_t h : config.horizons_ms) {
        auto it = w.production_haircut.find(h);
        out << ',' << format_double(it == w.production_haircut.end() ? 0.0 : it->second);
      }
      out << ',' << format_double(w.churn_exit_mean) << '\n';
    }
  }

  for (BenchmarkPolicy policy : config.policies) {
    const std::string name = to_string(policy);
    std::ofstream out(fs::path(out_dir) / ("policy_" + name + ".csv"));
    out << "wave,policy,budget,overshoot,fairness_regret,overshoot_regret,"
           "max_haircut_pct,shortfall\n";
    for (const auto& w : report.waves) {
      for (const auto& row : w.policies) {
        if (row.policy != name) continue;
        out << w.index << ',' << row.policy << ',' << format_double(row.budget) << ','
            << format_double(row.overshoot) << ',' << format_double(row.fairness_regret)
            << ',' << format_double(row.overshoot_regret) << ','
            << format_double(row.max_haircut_pct) << ',' << format_double(row.shortfall)
            << '\n';
      }
    }
  }

  nlohmann::ordered_json j;
  j["waves"] = report.waves.size();
  j["total_deficit"] = report.total_deficit;
  j["total_needed"] = report.total_needed;
  nlohmann::ordered_json prod = nlohmann::ordered_json::object();
  for (const auto& [h, v] : report.total_production) prod[std::to_string(h)] = v;
  j["total_production"] = prod;
  nlohmann::ordered_json over = nlohmann::ordered_json::object();
  for (const auto& [h, v] : report.total_overshoot) over[std::to_string(h)] = v;
  j["total_overshoot"] = over;
  nlohmann::ordered_json policies = nlohmann::ordered_json::object();
  for (const auto& [name, budget] : report.policy_total_budget) {
    nlohmann::ordered_json p;
    p["budget"] = budget;
    p["overshoot"] = report.policy_total_overshoot.at(name);
    p["fairness"] = report.policy_total_fairness.at(name);
    policies[name] = p;
  }
  j["policies"] = policies;
  nlohmann::ordered_json quality;
  quality["fills_missing_mark"] = report.quality.fills_missing_mark;
  quality["rows_skipped"] = report.quality.rows_skipped;
  quality["winners_missing_snapshot"] = report.quality.winners_missing_snapshot;
  j["data_quality"] = quality;

  std::ofstream out(fs::path(out_dir) / "aggregate.json");
  out << j.dump(2) << '\n';
}

}  // namespace adl
