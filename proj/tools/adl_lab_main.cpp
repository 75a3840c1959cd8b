// Command-line front end. Links the shared library through the C interface
// only; every subcommand maps to one adl_* entry point and the process exit
// code is the returned status.
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "adl/capi.h"

namespace {

struct CtxGuard {
  adl_ctx* ctx = adl_ctx_new();
  ~CtxGuard() { adl_ctx_free(ctx); }
};

int finish(const CtxGuard& guard, int rc, const std::string& what) {
  if (rc != 0)
    std::cerr << "adl-lab " << what << ": " << adl_last_error(guard.ctx) << "\n";
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perpetual-futures deleveraging lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(adl_version()));

  std::string config_path, out_dir;
  std::string fills_csv, snapshots_csv;
  std::string horizons = "0";
  std::string policies;
  std::string numeraire = "pnl";
  std::int64_t gap_ms = 5000;
  bool strict = false;
  int jobs = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario end to end");
  simulate->add_option("config", config_path, "Scenario JSON")->required();
  simulate->add_option("-o,--out", out_dir, "Output directory")->required();
  simulate->add_option("--seed", seed, "Seed override")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* compare = app.add_subcommand("policy-compare",
                                     "Run configured policies on one book");
  compare->add_option("config", config_path, "Scenario JSON")->required();
  compare->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Seed-parallel experiments");
  sweep->add_option("config", config_path, "Sweep JSON")->required();
  sweep->add_option("-o,--out", out_dir, "Output directory")->required();
  sweep->add_option("-j,--jobs", jobs, "Parallel jobs");

  auto* replay = app.add_subcommand("replay", "Replay a fill stream");
  replay->add_option("--fills", fills_csv, "Fills CSV")->required();
  replay->add_option("--snapshots", snapshots_csv, "Account snapshots CSV");
  replay->add_option("-o,--out", out_dir, "Output directory")->required();
  replay->add_option("--gap-ms", gap_ms, "Wave gap in milliseconds");
  replay->add_option("--horizons", horizons, "Comma-separated horizons (ms)");
  replay->add_option("--policies", policies, "Comma-separated benchmark policies");
  replay->add_option("--numeraire", numeraire, "pnl or equity")
      ->check(CLI::IsMember({"pnl", "equity"}));
  replay->add_flag("--strict", strict, "Reject unknown columns and bad rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CtxGuard guard;
  if (seed_set) adl_ctx_set_seed(guard.ctx, seed);

  if (simulate->parsed())
    return finish(guard, adl_simulate(guard.ctx, config_path.c_str(), out_dir.c_str()),
                  "simulate");
  if (compare->parsed())
    return finish(guard,
                  adl_policy_compare(guard.ctx, config_path.c_str(), out_dir.c_str()),
                  "policy-compare");
  if (sweep->parsed())
    return finish(guard,
                  adl_sweep(guard.ctx, config_path.c_str(), out_dir.c_str(), jobs),
                  "sweep");
  if (replay->parsed()) {
    adl_replay_opts opts{};
    opts.gap_ms = gap_ms;
    opts.horizons_ms = horizons.c_str();
    opts.policies = policies.empty() ? nullptr : policies.c_str();
    opts.equity_numeraire = numeraire == "equity" ? 1 : 0;
    opts.strict = strict ? 1 : 0;
    return finish(guard,
                  adl_replay(guard.ctx, fills_csv.c_str(),
                             snapshots_csv.empty() ? nullptr : snapshots_csv.c_str(),
                             out_dir.c_str(), &opts),
                  "replay");
  }
  return 2;
}
