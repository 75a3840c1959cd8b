#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adl {

enum class Side : int { long_ = +1, short_ = -1 };

inline int sign(Side s) { return static_cast<int>(s); }

// One trader's contract position. `collateral` is the current cash margin;
// collateral top-ups are applied as events on the book, not stored here.
struct Position {
  std::string id;
  double quantity = 0.0;       // contracts, >= 0
  double collateral = 0.0;     // USD, >= 0
  std::int64_t open_time = 0;  // discrete time index
  Side side = Side::long_;
  double entry_price = 0.0;    // USD per contract, > 0

  double notional(double price) const { return price * quantity; }
};

// Paired mark/oracle series on one clock, indexed from t = 0.
struct PricePath {
  std::vector<double> mark;
  std::vector<double> oracle;

  std::size_t size() const { return mark.size(); }
  void validate() const;
};

struct MarginParams {
  double initial_margin_ratio = 0.1;      // m_I in (0,1)
  double maintenance_margin_ratio = 0.1;  // mu in (0,1)

  double max_leverage() const { return 1.0 / initial_margin_ratio; }
  void validate() const;
};

struct FundingParams {
  double kappa = 1.0;  // > 0
  void validate() const;
};

// (time, position id, collateral delta) top-up/withdrawal event.
struct CollateralEvent {
  std::int64_t time = 0;
  std::string position_id;
  double delta = 0.0;
};

// Ordered set of positions plus the venue-side net inventory used only for
// zero-sum accounting. Iteration order is always ascending by id.
class Book {
 public:
  Book() = default;
  explicit Book(std::vector<Position> positions);

  void add(Position pos);
  const std::vector<Position>& positions() const { return positions_; }
  std::vector<Position>& positions() { return positions_; }
  const Position& at(const std::string& id) const;
  Position& at(const std::string& id);
  bool contains(const std::string& id) const;
  std::size_t size() const { return positions_.size(); }

  // Net signed trader quantity; the venue holds the negative of this.
  double net_trader_quantity() const;
  double venue_quantity() const { return -net_trader_quantity(); }

  // Enforces the initial-margin bound on every position.
  void validate(const MarginParams& params) const;

 private:
  std::vector<Position> positions_;  // sorted by id
};

// --- position-level quantities -------------------------------------------

double notional_exposure(const Position& pos, double price);

struct OpenInterest {
  double long_oi = 0.0;
  double short_oi = 0.0;
  double total = 0.0;
};

OpenInterest open_interest(const Book& book, double price);

// kappa * (L/S - p/p_hat); positive means shorts pay longs.
double funding_rate(const Book& book, double price, double oracle_price,
                    const FundingParams& params);

// Per-step funding cash at time t for one position: side * q * rate_t * p_t.
double funding_cash(const Position& pos, double rate, double price);

// Sum of per-step funding cash over (from, to]. `rates[t]` pairs with
// `path.mark[t]`.
double funding_accrual(const Position& pos, const PricePath& path,
                       std::span<const double> rates, std::int64_t from,
                       std::int64_t to);

// side*q*(p_T - entry) + funding over (open, T].
double pnl(const Position& pos, const PricePath& path,
           std::span<const double> rates, std::int64_t horizon);

double equity(const Position& pos, const PricePath& path,
              std::span<const double> rates, std::int64_t horizon,
              double collateral_override);

inline double equity(const Position& pos, const PricePath& path,
                     std::span<const double> rates, std::int64_t horizon) {
  return equity(pos, path, rates, horizon, pos.collateral);
}

// Inclusive boundary: equity == threshold counts as breached.
bool maintenance_breach(const Position& pos, double position_equity, double price,
                        const MarginParams& params);

// Volume-weighted average price of the first `quantity` contracts consumed
// from `levels` (sorted by price priority).
double vwap_fill(std::span<const std::pair<double, double>> levels, double quantity);

double opening_leverage(const Position& pos);
double current_leverage(const Position& pos, double price, double collateral_now);

struct LeverageMasses {
  double winner_mass = 0.0;  // sum over e>0 of notional/equity
  double loser_mass = 0.0;   // sum over e<0 of notional/|equity|
  std::vector<std::string> winners;
  std::vector<std::string> losers;
};

LeverageMasses leverage_masses(const Book& book, const PricePath& path,
                               std::span<const double> rates, std::int64_t horizon);

// Collateral value of `id` at time t given the base amount and event stream.
double collateral_at(const Book& book, std::span<const CollateralEvent> events,
                     const std::string& id, std::int64_t t);

// Funding rates for every step of the path computed from a static book.
std::vector<double> funding_rates_for_path(const Book& book, const PricePath& path,
                                           const FundingParams& params);

}  // namespace adl
