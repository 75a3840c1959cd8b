#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adl {

// min(1, capacity/deficit); 1 when there is nothing to socialize.
double severity_match(double total_endowment, double total_deficit);

// theta0 * decay^shock_count.
double severity_backoff(double theta0, double decay, std::int64_t shock_count);

struct ControllerState {
  double theta = 0.0;             // severity in [0, cap]
  std::vector<double> weights;    // simplex over active winners
  std::vector<double> duals;      // nonnegative multipliers
  std::int64_t round = 0;         // completed steps
  double max_step = 1.0;          // D_max in the step-size rule
  double grad_bound = 1.0;        // G in the step-size rule
  double primal_scale = 1.0;      // eta_t multiplier
  double dual_scale = 1.0;        // gamma_t multiplier
  // Damping on the dual ascent (augmented-Lagrangian style). Keeps the
  // primal-dual pair from orbiting so average violations actually decay;
  // zero recovers plain projected ascent.
  double dual_regularization = 1.0;
  bool weight_floor_hit = false;  // renormalization floor engaged

  static ControllerState make(double theta0, std::size_t n_winners,
                              std::size_t n_constraints, double max_step,
                              double grad_bound);
};

// Euclidean mirror step on the severity with eta_t = D_max/(G*sqrt(t)).
ControllerState omd_severity_step(const ControllerState& state, double subgradient,
                                  double theta_cap);

// Primal-dual step. The damped dual ascent ingests this round's constraint
// feedback first; the severity then steps against the Lagrangian gradient
// loss_grad_theta + sum_i dual_i * constraint_grad_theta_i, and the weights
// move multiplicatively on the simplex. Step sizes decay as t^(-1/2).
ControllerState mdic_step(const ControllerState& state, double loss_grad_theta,
                          std::span<const double> loss_grad_weights,
                          std::span<const double> constraint_values,
                          std::span<const double> constraint_grad_theta,
                          double theta_cap);

enum class RegretComparator { best_fixed, per_round_best };

// losses_played[t] is the realized loss; loss_grid[t][j] evaluates round t's
// loss at candidate j of a fixed policy grid.
double regret(std::span<const double> losses_played,
              std::span<const std::vector<double>> loss_grid,
              RegretComparator comparator);

double kl_divergence(std::span<const double> p, std::span<const double> q);

// --- coordination game ------------------------------------------------------

struct CoordinationOutcome {
  std::vector<std::pair<int, int>> nash_equilibria;  // pure profiles
  std::pair<int, int> spe;                           // sequential outcome
  double spe_leader_cost = 0.0;
  double spe_follower_cost = 0.0;
};

// Two agents choose unwind (1) or hold (0); a penalty c hits everyone when
// total unwinds fall short of the threshold. Requires c > f > 0, T in (1,2].
CoordinationOutcome stackelberg_coordination(double unwind_cost, double penalty,
                                             double threshold);

// --- adverse selection ------------------------------------------------------

struct TraderProfile {
  std::string id;
  double equity = 0.0;
  double leverage = 0.0;
  double base_utility = 0.0;
};

enum class SelectionPolicy { pro_rata, rap };

struct SelectionRound {
  double deficit = 0.0;
  std::vector<std::string> active;
  std::vector<double> haircut_mass;  // aligned with `active`
  std::vector<double> utility;
  std::vector<std::string> exits;
  double remaining_equity = 0.0;
};

struct SelectionResult {
  std::vector<SelectionRound> rounds;
  bool insolvent = false;  // a round's deficit exceeded remaining equity
};

// Fully-socialized rounds: each deficit is allocated over the still-active
// traders; a trader exits when utility minus haircut mass drops below u0.
SelectionResult adverse_selection_sim(std::span<const TraderProfile> traders,
                                      std::span<const double> deficits, double u0,
                                      SelectionPolicy policy,
                                      const std::function<double(double)>& risk_model);

// True when waiting is incentivized: theta*D <= expected_future - premium.
bool no_wait_check(double theta, double deficit, double expected_future,
                   double liquidity_premium);

struct RecoveryClocks {
  std::optional<std::size_t> solvency;  // first index with fund >= threshold
  std::optional<std::size_t> revenue;   // first index with LTV >= (1-eps)*pre
};

RecoveryClocks recovery_clocks(std::span<const double> fund_path,
                               std::span<const double> ltv_path, double fund_threshold,
                               double epsilon, double ltv_pre);

struct LtvModel {
  double discount = 1.0;                       // beta in (0,1]
  std::function<double(double)> retention;     // r(h), nonincreasing, r(0)=1

  static LtvModel exponential(double discount, double churn_rate);
};

// Discounted sum over rounds of sum_i equity_i * r(h_i).
double ltv(const LtvModel& model, std::span<const std::vector<double>> equities,
           std::span<const std::vector<double>> haircuts);

}  // namespace adl
