#include "adl/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "adl/errors.hpp"
#include "test_helpers.hpp"

using namespace adl;
using adl::testing::fixture_dir;
using adl::testing::scenario_dir;

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (first) {
      table.header = fields;
      first = false;
    } else {
      table.rows.push_back(fields);
    }
  }
  return table;
}

std::size_t column(const CsvTable& table, const std::string& name) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == name) return i;
  FAIL("missing column ", name);
  return 0;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config loading validates the schema") {
  const auto config = ScenarioConfig::from_json_file(scenario_dir() + "/p5.json");
  CHECK(config.book.size() == 5);
  CHECK(config.path.mark.size() == 3);
  CHECK(config.margin.initial_margin_ratio == doctest::Approx(0.1));
  CHECK_FALSE(config.liquidation_enabled);

  CHECK_THROWS_AS(ScenarioConfig::from_json_file(fixture_dir() + "/bad_config.json"),
                  InputError);
  CHECK_THROWS_AS(ScenarioConfig::from_json_file("does_not_exist.json"), InputError);
}

TEST_CASE("simulate reproduces the running-example trajectory") {
  const auto config = ScenarioConfig::from_json_file(scenario_dir() + "/p5.json");
  const auto outputs = run_simulate(config, "scenario_test_p5");

  const auto equities = read_csv(outputs.equities_csv);
  const auto t_col = column(equities, "t");
  const auto id_col = column(equities, "id");
  const auto e_col = column(equities, "equity");
  const auto breach_col = column(equities, "maintenance_breach");

  std::map<std::pair<std::string, std::string>, std::vector<std::string>> by_key;
  for (const auto& row : equities.rows) by_key[{row[t_col], row[id_col]}] = row;

  auto equity_at = [&](const std::string& t, const std::string& id) {
    return std::stod(by_key.at({t, id})[e_col]);
  };
  CHECK(equity_at("2", "A") == doctest::Approx(1.2613).epsilon(5e-4));
  CHECK(equity_at("2", "B") == doctest::Approx(-0.0720).epsilon(5e-4));
  CHECK(equity_at("2", "C") == doctest::Approx(5.6214).epsilon(5e-4));
  CHECK(equity_at("2", "D") == doctest::Approx(-0.6334).epsilon(5e-4));
  CHECK(equity_at("2", "E") == doctest::Approx(0.8397).epsilon(5e-4));
  // D is flagged at t=1.
  CHECK(by_key.at({"1", "D"})[breach_col] == "1");
  CHECK(by_key.at({"1", "A"})[breach_col] == "0");

  const auto funding = read_csv(outputs.funding_csv);
  const auto rate_col = column(funding, "rate");
  const auto cash_col = column(funding, "cash");
  const auto fid_col = column(funding, "id");
  const auto ft_col = column(funding, "t");
  bool saw_c1 = false;
  for (const auto& row : funding.rows) {
    if (row[ft_col] == "1" && row[fid_col] == "C") {
      CHECK(std::stod(row[rate_col]) == doctest::Approx(-1.0 / 3.0).epsilon(1e-9));
      CHECK(std::stod(row[cash_col]) == doctest::Approx(1.8667).epsilon(5e-4));
      saw_c1 = true;
    }
  }
  CHECK(saw_c1);
}

TEST_CASE("simulate output is byte-identical across runs") {
  const auto config = ScenarioConfig::from_json_file(scenario_dir() + "/p5.json");
  const auto first = run_simulate(config, "scenario_test_repeat_a");
  const auto second = run_simulate(config, "scenario_test_repeat_b");
  CHECK(slurp(first.equities_csv) == slurp(second.equities_csv));
  CHECK(slurp(first.funding_csv) == slurp(second.funding_csv));
  CHECK(slurp(first.fund_csv) == slurp(second.fund_csv));
  CHECK(slurp(first.allocations_json) == slurp(second.allocations_json));
}

TEST_CASE("simulate runs liquidations, the fund, and the allocation step") {
  const auto config =
      ScenarioConfig::from_json_file(scenario_dir() + "/p5_liquidation.json");
  const auto outputs = run_simulate(config, "scenario_test_liq");

  const auto liq = read_csv(outputs.liquidations_csv);
  REQUIRE(liq.rows.size() >= 2);
  const auto t_col = column(liq, "t");
  const auto id_col = column(liq, "position_id");
  const auto exec_col = column(liq, "exec_price");
  const auto debt_col = column(liq, "bad_debt");
  CHECK(liq.rows[0][id_col] == "D");
  CHECK(liq.rows[0][t_col] == "1");
  CHECK(liq.rows[1][id_col] == "E");
  CHECK(liq.rows[1][t_col] == "4");
  CHECK(std::stod(liq.rows[1][exec_col]) == doctest::Approx(1.55));
  CHECK(std::stod(liq.rows[1][debt_col]) == doctest::Approx(0.399).epsilon(1e-2));

  // Fund trajectory: coverage + residual equals the tick's bad debt.
  const auto fund = read_csv(outputs.fund_csv);
  const auto cov_col = column(fund, "coverage");
  const auto res_col = column(fund, "residual");
  const auto bd_col = column(fund, "bad_debt");
  const auto bal_col = column(fund, "balance");
  for (const auto& row : fund.rows) {
    CHECK(std::stod(row[cov_col]) + std::stod(row[res_col]) ==
          doctest::Approx(std::stod(row[bd_col])).epsilon(1e-9));
    CHECK(std::stod(row[bal_col]) >= 0.0);
  }

  // The fund starts at 0.5: the first shortfall is covered, the second
  // breaches and triggers an allocation.
  const std::string alloc_json = slurp(outputs.allocations_json);
  CHECK(alloc_json.find("pro_rata") != std::string::npos);
}

TEST_CASE("policy compare emits the survivor gap data") {
  const auto config = ScenarioConfig::from_json_file(scenario_dir() + "/p5_compare.json");
  run_policy_compare(config, "scenario_test_compare");
  const auto table = read_csv("scenario_test_compare/policy_compare.csv");
  REQUIRE(table.rows.size() == 2);
  const auto policy_col = column(table, "policy");
  const auto survivor_col = column(table, "top_winner_survivor");
  const auto budget_col = column(table, "budget");
  const auto sub_col = column(table, "submajorized_by_first");
  REQUIRE(table.rows[0][policy_col] == "pro_rata");
  REQUIRE(table.rows[1][policy_col] == "queue");

  // Survivor gap equals B*(1 - w_max/U) for budgets within the top
  // endowment; recompute the inputs from the config.
  const auto rates = funding_rates_for_path(config.book, config.path, config.funding);
  const auto winners = winners_from_book(config.book, config.path, rates, 2);
  double top = 0.0, capacity = 0.0, deficit = 0.0;
  for (const auto& w : winners) {
    top = std::max(top, w.endowment);
    capacity += w.endowment;
    deficit += std::max(-w.equity, 0.0);
  }
  const double budget = std::stod(table.rows[0][budget_col]);
  CHECK(budget == doctest::Approx(deficit).epsilon(1e-9));
  REQUIRE(budget <= top);
  const double gap = std::stod(table.rows[0][survivor_col]) -
                     std::stod(table.rows[1][survivor_col]);
  CHECK(gap == doctest::Approx(budget * (1.0 - top / capacity)).epsilon(1e-9));
  // Pro-rata seizures are submajorized by the queue's.
  CHECK(table.rows[1][sub_col] == "1");

  ScenarioConfig single = config;
  single.policies.resize(1);
  CHECK_THROWS_AS(run_policy_compare(single, "scenario_test_compare_one"), InputError);
}

TEST_CASE("identical policies show zero gap") {
  auto config = ScenarioConfig::from_json_file(scenario_dir() + "/p5_compare.json");
  config.policies[1] = config.policies[0];
  run_policy_compare(config, "scenario_test_compare_same");
  const auto table = read_csv("scenario_test_compare_same/policy_compare.csv");
  REQUIRE(table.rows.size() == 2);
  const auto survivor_col = column(table, "top_winner_survivor");
  CHECK(std::stod(table.rows[0][survivor_col]) ==
        doctest::Approx(std::stod(table.rows[1][survivor_col])));
}

TEST_CASE("sweep experiments write their tables") {
  SweepConfig config;
  config.experiment = "ptsr_scaling";
  config.n_grid = {100, 1000};
  config.seeds = 5;
  run_sweep(config, "scenario_test_sweep");
  const auto table = read_csv("scenario_test_sweep/scaling.csv");
  CHECK(table.rows.size() == 10);

  SweepConfig regret;
  regret.experiment = "regret";
  regret.regret_horizon = 2000;
  run_sweep(regret, "scenario_test_sweep_regret");
  CHECK(std::filesystem::exists("scenario_test_sweep_regret/regret_trace.csv"));

  SweepConfig adverse;
  adverse.experiment = "adverse_selection";
  run_sweep(adverse, "scenario_test_sweep_adverse");
  const auto rows = read_csv("scenario_test_sweep_adverse/adverse_selection.csv");
  CHECK(rows.rows.size() == 7);  // 3 pro-rata rows (L exits) + 4 retention rows

  SweepConfig unknown;
  unknown.experiment = "nope";
  CHECK_THROWS_AS(run_sweep(unknown, "scenario_test_sweep_bad"), InputError);
}

TEST_CASE("empty book scenario produces empty outputs") {
  ScenarioConfig config;
  config.path.mark = {1.0, 1.1};
  config.path.oracle = {1.0, 1.1};
  config.funding_enabled = false;
  config.liquidation_enabled = false;
  const auto outputs = run_simulate(config, "scenario_test_empty");
  const auto equities = read_csv(outputs.equities_csv);
  CHECK(equities.rows.empty());
}
