#include "adl/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <thread>

#include <json.hpp>

#include "adl/errors.hpp"
#include "adl/metrics.hpp"
#include "adl/numerics.hpp"

namespace adl {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void reject_unknown_keys(const json& obj, std::set<std::string> known,
                         const std::string& where, bool strict) {
  if (!strict) return;
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw InputError("config: unknown key '" + it.key() + "' in " + where);
}

PolicySpec parse_policy(const json& p, bool strict) {
  reject_unknown_keys(p,
                      {"name", "theta", "score", "risk_model", "risk_power",
                       "risk_threshold", "max_haircut"},
                      "policy", strict);
  PolicySpec spec;
  spec.name = p.at("name").get<std::string>();
  static const std::set<std::string> names = {"queue", "pro_rata", "levered_pro_rata",
                                              "capped_pro_rata", "rap"};
  if (!names.count(spec.name)) throw InputError("config: unknown policy " + spec.name);
  if (p.contains("theta")) spec.theta = p.at("theta").get<double>();
  if (p.contains("score")) spec.score = p.at("score").get<std::string>();
  if (p.contains("risk_model")) spec.risk_model = p.at("risk_model").get<std::string>();
  if (p.contains("risk_power")) spec.risk_power = p.at("risk_power").get<double>();
  if (p.contains("risk_threshold"))
    spec.risk_threshold = p.at("risk_threshold").get<double>();
  if (p.contains("max_haircut")) spec.max_haircut = p.at("max_haircut").get<double>();
  if (spec.theta < 0.0 || spec.theta > 1.0)
    throw InputError("config: policy theta outside [0,1]");
  return spec;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config parse error: ") + e.what());
  }
  return j;
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path, bool strict) {
  const json j = load_json(path);
  reject_unknown_keys(j,
                      {"positions", "mark", "oracle", "margin", "funding", "impact",
                       "fees", "fund", "liquidation", "severity", "policies",
                       "numeraire", "seed"},
                      "root", strict);
  ScenarioConfig cfg;

  std::vector<Position> positions;
  for (const auto& p : j.value("positions", json::array())) {
    reject_unknown_keys(p, {"id", "q", "c", "t", "side", "entry_price"}, "position",
                        strict);
    Position pos;
    pos.id = p.at("id").get<std::string>();
    pos.quantity = p.at("q").get<double>();
    pos.collateral = p.at("c").get<double>();
    pos.open_time = p.value("t", 0);
    const int side = p.at("side").get<int>();
    if (side != 1 && side != -1) throw InputError("config: side must be +1 or -1");
    pos.side = side == 1 ? Side::long_ : Side::short_;
    pos.entry_price = p.at("entry_price").get<double>();
    positions.push_back(std::move(pos));
  }
  cfg.book = Book(std::move(positions));

  cfg.path.mark = j.at("mark").get<std::vector<double>>();
  cfg.path.oracle = j.value("oracle", cfg.path.mark);
  cfg.path.validate();

  if (j.contains("margin")) {
    const auto& m = j.at("margin");
    reject_unknown_keys(m, {"initial", "maintenance"}, "margin", strict);
    cfg.margin.initial_margin_ratio = m.value("initial", 0.1);
    cfg.margin.maintenance_margin_ratio = m.value("maintenance", 0.1);
  }
  cfg.margin.validate();
  cfg.book.validate(cfg.margin);

  if (j.contains("funding")) {
    const auto& f = j.at("funding");
    reject_unknown_keys(f, {"kappa", "enabled"}, "funding", strict);
    cfg.funding.kappa = f.value("kappa", 1.0);
    cfg.funding_enabled = f.value("enabled", true);
  }
  if (cfg.funding_enabled) cfg.funding.validate();

  if (j.contains("impact")) {
    const auto& m = j.at("impact");
    reject_unknown_keys(m, {"alpha"}, "impact", strict);
    cfg.impact.alpha = m.value("alpha", 0.0);
  }
  cfg.impact.validate();

  if (j.contains("fees")) {
    const auto& f = j.at("fees");
    reject_unknown_keys(f, {"fixed", "mark_bps", "exec_bps"}, "fees", strict);
    cfg.fees.fixed_fee = f.value("fixed", 0.0);
    cfg.fees.mark_rate = f.value("mark_bps", 0.0) * 1e-4;
    cfg.fees.exec_rate = f.value("exec_bps", 0.0) * 1e-4;
  }
  cfg.fees.validate();

  if (j.contains("fund")) {
    const auto& f = j.at("fund");
    reject_unknown_keys(f, {"alpha", "beta", "eta", "initial"}, "fund", strict);
    cfg.fund.alpha_liq = f.value("alpha", 0.0);
    cfg.fund.beta_fund = f.value("beta", 0.0);
    cfg.fund.eta_trade = f.value("eta", 0.0);
    cfg.fund_initial = f.value("initial", 0.0);
  }
  cfg.fund.validate();

  if (j.contains("liquidation")) {
    const auto& l = j.at("liquidation");
    reject_unknown_keys(l, {"enabled"}, "liquidation", strict);
    cfg.liquidation_enabled = l.value("enabled", true);
  }

  if (j.contains("severity")) {
    const auto& s = j.at("severity");
    reject_unknown_keys(s, {"rule", "backoff_decay"}, "severity", strict);
    cfg.severity_rule = s.value("rule", "fixed");
    cfg.backoff_decay = s.value("backoff_decay", 0.5);
    static const std::set<std::string> rules = {"fixed", "match", "backoff"};
    if (!rules.count(cfg.severity_rule))
      throw InputError("config: unknown severity rule " + cfg.severity_rule);
  }

  for (const auto& p : j.value("policies", json::array()))
    cfg.policies.push_back(parse_policy(p, strict));

  const std::string numeraire = j.value("numeraire", "pnl");
  if (numeraire == "pnl")
    cfg.numeraire = Numeraire::pnl_only;
  else if (numeraire == "equity")
    cfg.numeraire = Numeraire::equity;
  else
    throw InputError("config: numeraire must be 'pnl' or 'equity'");

  cfg.seed = j.value("seed", 0);
  return cfg;
}

namespace {

// Queue scores and RAP risk weights for a policy on the current winner set.
void decorate_winners(std::vector<WinnerSlice>& winners, const Book& book,
                      const PricePath& path, std::span<const double> rates,
                      std::int64_t t, const PolicySpec& spec) {
  const double mark = path.mark[static_cast<std::size_t>(t)];
  const double oracle = path.oracle[static_cast<std::size_t>(t)];
  for (auto& w : winners) {
    w.cap = std::clamp(spec.max_haircut, 0.0, 1.0);
    if (!book.contains(w.id)) continue;
    const Position& pos = book.at(w.id);
    if (spec.score == "endowment") {
      w.score = w.endowment;
    } else if (spec.score == "binance") {
      const double p_bk = std::max(mark - w.equity / (sign(pos.side) * std::max(pos.quantity, 1e-300)), 0.0);
      const double lev = pos.collateral > 0.0 ? current_leverage(pos, mark, pos.collateral) : 0.0;
      w.score = p_bk > 0.0 ? lev * oracle / p_bk
                           : std::numeric_limits<double>::infinity();
    } else if (spec.score == "hyperliquid") {
      const double lev = pos.collateral > 0.0 ? current_leverage(pos, mark, pos.collateral) : 0.0;
      w.score = lev * oracle / pos.entry_price;
    } else {
      throw InputError("config: unknown score variant " + spec.score);
    }
  }
}

std::vector<double> rap_weights(std::span<const WinnerSlice> winners,
                                const PolicySpec& spec) {
  std::vector<double> weights(winners.size(), 0.0);
  for (std::size_t i = 0; i < winners.size(); ++i) {
    const double lam = winners[i].eff_leverage;
    double g = 0.0;
    if (spec.risk_model == "linear")
      g = lam;
    else if (spec.risk_model == "power")
      g = std::pow(lam, spec.risk_power);
    else if (spec.risk_model == "cvar")
      g = std::max(lam - spec.risk_threshold, 0.0);
    else
      throw InputError("config: unknown risk model " + spec.risk_model);
    weights[i] = lam * g;
  }
  return weights;
}

AdlAllocation run_policy(const PolicySpec& spec, std::span<const WinnerSlice> winners,
                         double deficit, double theta) {
  const double budget = theta * deficit;
  if (spec.name == "queue") {
    AdlAllocation a = queue_allocate(winners, budget);
    a.severity = theta;
    return a;
  }
  if (spec.name == "pro_rata") return pro_rata(winners, theta, deficit);
  if (spec.name == "levered_pro_rata") return levered_pro_rata(winners, theta, deficit);
  if (spec.name == "capped_pro_rata") {
    AdlAllocation a = capped_pro_rata(winners, budget);
    a.severity = theta;
    return a;
  }
  if (spec.name == "rap") {
    AdlAllocation a = rap_allocate(winners, rap_weights(winners, spec), budget);
    a.severity = theta;
    return a;
  }
  throw InputError("unknown policy " + spec.name);
}

}  // namespace

SimulateOutputs run_simulate(const ScenarioConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  SimulateOutputs outputs;
  outputs.equities_csv = (fs::path(out_dir) / "equities.csv").string();
  outputs.funding_csv = (fs::path(out_dir) / "funding.csv").string();
  outputs.liquidations_csv = (fs::path(out_dir) / "liquidations.csv").string();
  outputs.fund_csv = (fs::path(out_dir) / "fund.csv").string();
  outputs.allocations_json = (fs::path(out_dir) / "allocations.json").string();

  Book book = config.book;
  const PricePath& path = config.path;
  std::vector<double> rates(path.size(), 0.0);

  std::ofstream equities_out(outputs.equities_csv);
  std::ofstream funding_out(outputs.funding_csv);
  std::ofstream liq_out(outputs.liquidations_csv);
  std::ofstream fund_out(outputs.fund_csv);

  equities_out << "t,id,quantity,collateral,pnl,equity,maintenance_breach\n";
  funding_out << "t,id,rate,cash\n";
  liq_out << "t,position_id,slice,exec_price,fee,bad_debt,post_equity\n";
  fund_out << "t,balance,inflow,bad_debt,coverage,residual\n";

  FundState fund{config.fund_initial, 0};
  nlohmann::ordered_json allocations = nlohmann::ordered_json::array();
  std::int64_t shock_count = 0;

  const PolicySpec* policy = config.policies.empty() ? nullptr : &config.policies.front();

  for (std::size_t t = 0; t < path.size(); ++t) {
    const auto ti = static_cast<std::int64_t>(t);
    // Funding rate from the current book; shorts may be gone after closes.
    if (config.funding_enabled && t > 0) {
      const OpenInterest oi = open_interest(book, path.mark[t]);
      rates[t] = (oi.short_oi > 0.0)
                     ? funding_rate(book, path.mark[t], path.oracle[t], config.funding)
                     : 0.0;
    }

    for (const auto& pos : book.positions()) {
      if (pos.open_time > ti) continue;
      const double rate_cash = t > 0 ? funding_cash(pos, rates[t], path.mark[t]) : 0.0;
      funding_out << t << ',' << pos.id << ',' << format_double(rates[t]) << ','
                  << format_double(rate_cash) << '\n';
    }

    double tick_fees = 0.0;
    double tick_debt = 0.0;
    std::vector<LiquidationOutcome> outcomes;
    if (config.liquidation_enabled) {
      outcomes = liquidation_tick(book, path, rates, ti, config.margin, config.impact,
                                  config.fees);
      for (const auto& o : outcomes) {
        liq_out << t << ',' << o.position_id << ',' << format_double(o.slice) << ','
                << format_double(o.exec_price) << ',' << format_double(o.fee) << ','
                << format_double(o.bad_debt) << ',' << format_double(o.adjusted_equity)
                << '\n';
        tick_fees += o.fee;
      }
      tick_debt = total_bad_debt(outcomes);
      if (tick_debt > 0.0) ++shock_count;
    }

    const FundStepResult step = fund_step(fund, tick_fees, 0.0, 0.0, tick_debt, config.fund);
    fund_out << t << ',' << format_double(step.state.balance) << ','
             << format_double(step.inflow) << ',' << format_double(tick_debt) << ','
             << format_double(step.coverage) << ',' << format_double(step.residual)
             << '\n';
    fund = step.state;

    if (step.residual > 0.0 && policy) {
      std::vector<WinnerSlice> winners =
          winners_from_book(book, path, rates, ti, config.numeraire);
      decorate_winners(winners, book, path, rates, ti, *policy);
      KahanSum capacity;
      for (const auto& w : winners) capacity.add(w.endowment * w.cap);
      double theta = policy->theta;
      if (config.severity_rule == "match")
        theta = severity_match(capacity.value(), step.residual);
      else if (config.severity_rule == "backoff")
        theta = severity_backoff(policy->theta, config.backoff_decay, shock_count - 1);
      const AdlAllocation alloc = run_policy(*policy, winners, step.residual, theta);

      nlohmann::ordered_json entry;
      entry["t"] = t;
      entry["policy"] = alloc.policy;
      entry["theta"] = theta;
      entry["budget"] = alloc.budget;
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < winners.size(); ++i) {
        nlohmann::ordered_json row;
        row["id"] = winners[i].id;
        row["w"] = winners[i].endowment;
        row["beta"] = winners[i].cap;
        row["h"] = alloc.haircuts[i];
        row["x"] = alloc.seized[i];
        row["e_before"] = winners[i].equity;
        row["e_after"] = winners[i].equity - alloc.seized[i];
        rows.push_back(row);
      }
      entry["accounts"] = rows;
      allocations.push_back(entry);

      // Seizures land on collateral; the venue keeps the cash.
      for (std::size_t i = 0; i < winners.size(); ++i) {
        if (alloc.seized[i] <= 0.0) continue;
        if (book.contains(winners[i].id)) book.at(winners[i].id).collateral -= alloc.seized[i];
      }
    }

    for (const auto& pos : book.positions()) {
      const double position_pnl = pnl(pos, path, rates, ti);
      const double e = pos.collateral + position_pnl;
      const bool breach =
          pos.quantity > 0.0 && maintenance_breach(pos, e, path.mark[t], config.margin);
      equities_out << t << ',' << pos.id << ',' << format_double(pos.quantity) << ','
                   << format_double(pos.collateral) << ',' << format_double(position_pnl)
                   << ',' << format_double(e) << ',' << (breach ? 1 : 0) << '\n';
    }
  }

  std::ofstream alloc_out(outputs.allocations_json);
  alloc_out << allocations.dump(2) << '\n';
  return outputs;
}

void run_policy_compare(const ScenarioConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (config.policies.size() < 2)
    throw InputError("policy-compare: need at least two policies");
  fs::create_directories(out_dir);

  const auto horizon = static_cast<std::int64_t>(config.path.size()) - 1;
  std::vector<double> rates(config.path.size(), 0.0);
  if (config.funding_enabled)
    rates = funding_rates_for_path(config.book, config.path, config.funding);

  std::vector<WinnerSlice> winners =
      winners_from_book(config.book, config.path, rates, horizon, config.numeraire);
  std::vector<double> equities, endowments;
  for (const auto& w : winners) {
    equities.push_back(w.equity);
    endowments.push_back(w.endowment);
  }
  const DeficitCapacity dc = deficit_and_capacity(equities, endowments);

  std::ofstream out(fs::path(out_dir) / "policy_compare.csv");
  out << "policy,theta,budget,top_winner_survivor,max_survivor,ptsr,pmr,"
         "submajorized_by_first\n";

  std::vector<double> first_seized;
  for (std::size_t pi = 0; pi < config.policies.size(); ++pi) {
    const PolicySpec& spec = config.policies[pi];
    std::vector<WinnerSlice> decorated = winners;
    decorate_winners(decorated, config.book, config.path, rates, horizon, spec);
    const AdlAllocation alloc = run_policy(spec, decorated, dc.total_deficit, spec.theta);

    double top_survivor = 0.0, max_survivor = 0.0, top_endowment = -1.0;
    for (std::size_t i = 0; i < decorated.size(); ++i) {
      const double survivor = decorated[i].endowment - alloc.seized[i];
      max_survivor = std::max(max_survivor, survivor);
      if (decorated[i].endowment > top_endowment) {
        top_endowment = decorated[i].endowment;
        top_survivor = survivor;
      }
    }
    RiskSample sample{.winners_post = {},
                      .socialized_total = alloc.budget,
                      .socialized_max = spec.theta * dc.max_deficit};
    for (std::size_t i = 0; i < decorated.size(); ++i)
      sample.winners_post.push_back(decorated[i].endowment - alloc.seized[i]);
    const double ptsr_v = alloc.budget > 0.0 ? ptsr(sample) : 0.0;
    const double pmr_v = sample.socialized_max > 0.0 ? pmr(sample) : 0.0;
    const bool sub = pi == 0 ? true : submajorizes(first_seized, alloc.seized);
    if (pi == 0) first_seized = alloc.seized;
    out << spec.name << ',' << format_double(spec.theta) << ','
        << format_double(alloc.budget) << ',' << format_double(top_survivor) << ','
        << format_double(max_survivor) << ',' << format_double(ptsr_v) << ','
        << format_double(pmr_v) << ',' << (sub ? 1 : 0) << '\n';
  }
}

void run_sweep(const SweepConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  if (config.experiment == "ptsr_scaling") {
    TailModel winners{TailFamily::pareto, config.winner_alpha, 1.0};
    TailModel losers{TailFamily::exponential, 1.0, 1.0};
    const SeveritySchedule schedule = config.schedule == "ev_scaled"
                                          ? SeveritySchedule::ev_scaled
                                          : SeveritySchedule::fixed;
    const ScalingResult result = ptsr_scaling_experiment(
        winners, losers, schedule, config.theta, config.n_grid, config.seeds,
        config.seed0);
    std::ofstream out(fs::path(out_dir) / "scaling.csv");
    out << "n,seed,ptsr,pmr,b_n,severity_load\n";
    for (const auto& row : result.rows)
      out << row.n << ',' << row.seed << ',' << format_double(row.ptsr) << ','
          << format_double(row.pmr) << ',' << format_double(row.b_n) << ','
          << format_double(row.severity_load) << '\n';
    std::ofstream summary(fs::path(out_dir) / "scaling_summary.json");
    nlohmann::ordered_json j;
    j["slope_log_ptsr_vs_log_n"] = result.slope_vs_n;
    j["mean_ptsr"] = result.mean_ptsr;
    summary << j.dump(2) << '\n';
    return;
  }

  if (config.experiment == "regret") {
    // Two-regime alternating stream; OMD against the static grid.
    const std::size_t horizon = config.regret_horizon;
    const double theta_bar = 1.0;
    ControllerState state = ControllerState::make(0.5, 0, 0, theta_bar, 1.0);
    std::ofstream out(fs::path(out_dir) / "regret_trace.csv");
    out << "t,theta,loss,cumulative_regret\n";
    KahanSum played, best;
    for (std::size_t t = 0; t < horizon; ++t) {
      const bool regime_a = (t % 2) == 0;
      const double loss = regime_a ? state.theta : theta_bar - state.theta;
      const double grad = regime_a ? 1.0 : -1.0;
      played.add(loss);
      best.add(0.0);
      state = omd_severity_step(state, grad, theta_bar);
      if ((t + 1) % 100 == 0)
        out << (t + 1) << ',' << format_double(state.theta) << ',' << format_double(loss)
            << ',' << format_double(played.value() - best.value()) << '\n';
    }
    return;
  }

  if (config.experiment == "adverse_selection") {
    const std::vector<TraderProfile> traders = {{"L", 60.0, 2.0, 12.0},
                                                {"H", 40.0, 6.0, 40.0}};
    const std::vector<double> deficits = {40.0, 30.0};
    std::ofstream out(fs::path(out_dir) / "adverse_selection.csv");
    out << "policy,round,trader,haircut_mass,utility,exited\n";
    for (const auto policy : {SelectionPolicy::pro_rata, SelectionPolicy::rap}) {
      const SelectionResult result = adverse_selection_sim(
          traders, deficits, 2.0, policy, [](double lam) { return lam; });
      const std::string name = policy == SelectionPolicy::pro_rata ? "pro_rata" : "rap";
      for (std::size_t r = 0; r < result.rounds.size(); ++r) {
        const auto& round = result.rounds[r];
        for (std::size_t i = 0; i < round.active.size(); ++i) {
          const bool exited = std::find(round.exits.begin(), round.exits.end(),
                                        round.active[i]) != round.exits.end();
          out << name << ',' << r << ',' << round.active[i] << ','
              << format_double(round.haircut_mass[i]) << ','
              << format_double(round.utility[i]) << ',' << (exited ? 1 : 0) << '\n';
        }
      }
    }
    return;
  }

  throw InputError("sweep: unknown experiment " + config.experiment);
}

SweepConfig SweepConfig::from_json_file(const std::string& path, bool strict) {
  const json j = load_json(path);
  reject_unknown_keys(j,
                      {"experiment", "n_grid", "seeds", "seed0", "theta", "schedule",
                       "winner_alpha", "regret_horizon", "jobs"},
                      "sweep", strict);
  SweepConfig cfg;
  cfg.experiment = j.at("experiment").get<std::string>();
  if (j.contains("n_grid")) cfg.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
  cfg.seeds = j.value("seeds", cfg.seeds);
  cfg.seed0 = j.value("seed0", cfg.seed0);
  cfg.theta = j.value("theta", cfg.theta);
  cfg.schedule = j.value("schedule", cfg.schedule);
  cfg.winner_alpha = j.value("winner_alpha", cfg.winner_alpha);
  cfg.regret_horizon = j.value("regret_horizon", cfg.regret_horizon);
  cfg.jobs = j.value("jobs", cfg.jobs);
  return cfg;
}

}  // namespace adl
