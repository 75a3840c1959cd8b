#include "adl/capi.h"

#include <cstdlib>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adl/errors.hpp"
#include "adl/replay.hpp"
#include "adl/scenario.hpp"

struct adl_ctx {
  std::string last_error;
  std::optional<uint64_t> seed_override;
};

namespace {

constexpr const char* kVersion = "0.1.0";

int run_guarded(adl_ctx* ctx, const std::function<void()>& body) {
  if (!ctx) return static_cast<int>(adl::Status::input_error);
  ctx->last_error.clear();
  try {
    body();
    return static_cast<int>(adl::Status::ok);
  } catch (const adl::InfeasibleError& e) {
    ctx->last_error = e.what();
    return static_cast<int>(adl::Status::infeasible);
  } catch (const adl::DataQualityError& e) {
    ctx->last_error = e.what();
    return static_cast<int>(adl::Status::data_quality);
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return static_cast<int>(adl::Status::input_error);
  }
}

std::optional<uint64_t> env_seed() {
  if (const char* env = std::getenv("ADL_LAB_SEED")) return std::strtoull(env, nullptr, 10);
  return std::nullopt;
}

uint64_t effective_seed(const adl_ctx* ctx, uint64_t config_seed) {
  if (auto s = env_seed()) return *s;
  if (ctx->seed_override) return *ctx->seed_override;
  return config_seed;
}

std::vector<std::string> split_list(const char* csv) {
  std::vector<std::string> out;
  if (!csv) return out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

extern "C" {

adl_ctx* adl_ctx_new(void) { return new adl_ctx; }

void adl_ctx_free(adl_ctx* ctx) { delete ctx; }

void adl_ctx_set_seed(adl_ctx* ctx, uint64_t seed) {
  if (ctx) ctx->seed_override = seed;
}

const char* adl_last_error(const adl_ctx* ctx) {
  return ctx ? ctx->last_error.c_str() : "null context";
}

const char* adl_version(void) { return kVersion; }

int adl_simulate(adl_ctx* ctx, const char* config_path, const char* out_dir) {
  return run_guarded(ctx, [&] {
    if (!config_path || !out_dir) throw adl::InputError("simulate: null argument");
    adl::ScenarioConfig config = adl::ScenarioConfig::from_json_file(config_path);
    config.seed = effective_seed(ctx, config.seed);
    adl::run_simulate(config, out_dir);
  });
}

int adl_policy_compare(adl_ctx* ctx, const char* config_path, const char* out_dir) {
  return run_guarded(ctx, [&] {
    if (!config_path || !out_dir) throw adl::InputError("policy-compare: null argument");
    adl::ScenarioConfig config = adl::ScenarioConfig::from_json_file(config_path);
    config.seed = effective_seed(ctx, config.seed);
    adl::run_policy_compare(config, out_dir);
  });
}

int adl_sweep(adl_ctx* ctx, const char* config_path, const char* out_dir, int jobs) {
  return run_guarded(ctx, [&] {
    if (!config_path || !out_dir) throw adl::InputError("sweep: null argument");
    adl::SweepConfig config = adl::SweepConfig::from_json_file(config_path);
    if (jobs > 0) config.jobs = jobs;
    if (auto s = env_seed())
      config.seed0 = *s;
    else if (ctx->seed_override)
      config.seed0 = *ctx->seed_override;
    adl::run_sweep(config, out_dir);
  });
}

int adl_replay(adl_ctx* ctx, const char* fills_csv, const char* snapshots_csv,
               const char* out_dir, const adl_replay_opts* opts) {
  return run_guarded(ctx, [&] {
    if (!fills_csv || !out_dir) throw adl::InputError("replay: null argument");
    adl::ReplayConfig config;
    if (opts) {
      if (opts->gap_ms > 0) config.gap_ms = opts->gap_ms;
      config.equity_numeraire = opts->equity_numeraire != 0;
      config.strict = opts->strict != 0;
      if (opts->horizons_ms) {
        config.horizons_ms.clear();
        for (const auto& h : split_list(opts->horizons_ms))
          config.horizons_ms.push_back(std::stoll(h));
        if (config.horizons_ms.empty()) config.horizons_ms = {0};
      }
      const auto names = split_list(opts->policies);
      if (!names.empty()) {
        config.policies.clear();
        for (const auto& name : names) {
          auto policy = adl::benchmark_policy_from_string(name);
          if (!policy) throw adl::InputError("replay: unknown policy " + name);
          config.policies.push_back(*policy);
        }
      }
    }
    if (config.policies.empty() || (!opts || !opts->policies)) {
      config.policies = {adl::BenchmarkPolicy::wealth_pro_rata,
                         adl::BenchmarkPolicy::vector_projection,
                         adl::BenchmarkPolicy::contract_pro_rata,
                         adl::BenchmarkPolicy::min_max_integer};
    }

    adl::DataQuality quality;
    auto fills = adl::load_fills_csv(fills_csv, config.strict, &quality);
    std::vector<adl::AccountSnapshot> snapshots;
    if (snapshots_csv && snapshots_csv[0] != '\0')
      snapshots = adl::load_snapshots_csv(snapshots_csv, config.strict, &quality);
    adl::EventReport report = adl::event_report(fills, snapshots, config);
    report.quality.rows_skipped += quality.rows_skipped;
    adl::write_event_report(report, config, out_dir);
  });
}

}  // extern "C"
