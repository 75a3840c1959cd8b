#include "adl/exchange.hpp"

#include <algorithm>
#include <cmath>

#include "adl/errors.hpp"
#include "adl/numerics.hpp"

namespace adl {

void PricePath::validate() const {
  if (mark.size() != oracle.size())
    throw InputError("PricePath: mark and oracle series differ in length");
  for (double p : mark)
    if (!(p > 0.0)) throw InputError("PricePath: non-positive mark price");
  for (double p : oracle)
    if (!(p > 0.0)) throw InputError("PricePath: non-positive oracle price");
}

void MarginParams::validate() const {
  if (!(initial_margin_ratio > 0.0 && initial_margin_ratio < 1.0))
    throw InputError("MarginParams: initial margin ratio outside (0,1)");
  if (!(maintenance_margin_ratio > 0.0 && maintenance_margin_ratio < 1.0))
    throw InputError("MarginParams: maintenance margin ratio outside (0,1)");
}

void FundingParams::validate() const {
  if (!(kappa > 0.0)) throw InputError("FundingParams: kappa must be > 0");
}

Book::Book(std::vector<Position> positions) : positions_(std::move(positions)) {
  std::sort(positions_.begin(), positions_.end(),
            [](const Position& a, const Position& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < positions_.size(); ++i)
    if (positions_[i].id == positions_[i - 1].id)
      throw InputError("Book: duplicate position id " + positions_[i].id);
}

void Book::add(Position pos) {
  auto it = std::lower_bound(
      positions_.begin(), positions_.end(), pos.id,
      [](const Position& p, const std::string& id) { return p.id < id; });
  if (it != positions_.end() && it->id == pos.id)
    throw InputError("Book: duplicate position id " + pos.id);
  positions_.insert(it, std::move(pos));
}

const Position& Book::at(const std::string& id) const {
  auto it = std::lower_bound(
      positions_.begin(), positions_.end(), id,
      [](const Position& p, const std::string& key) { return p.id < key; });
  if (it == positions_.end() || it->id != id)
    throw InputError("Book: unknown position id " + id);
  return *it;
}

Position& Book::at(const std::string& id) {
  return const_cast<Position&>(static_cast<const Book*>(this)->at(id));
}

bool Book::contains(const std::string& id) const {
  auto it = std::lower_bound(
      positions_.begin(), positions_.end(), id,
      [](const Position& p, const std::string& key) { return p.id < key; });
  return it != positions_.end() && it->id == id;
}

double Book::net_trader_quantity() const {
  KahanSum acc;
  for (const auto& p : positions_) acc.add(sign(p.side) * p.quantity);
  return acc.value();
}

void Book::validate(const MarginParams& params) const {
  params.validate();
  for (const auto& p : positions_) {
    if (p.quantity < 0.0) throw InputError("Position " + p.id + ": negative quantity");
    if (p.collateral < 0.0) throw InputError("Position " + p.id + ": negative collateral");
    if (!(p.entry_price > 0.0)) throw InputError("Position " + p.id + ": entry price must be > 0");
    if (p.open_time < 0) throw InputError("Position " + p.id + ": negative open time");
    const double required = params.initial_margin_ratio * p.entry_price * p.quantity;
    if (required > p.collateral * (1.0 + 1e-12))
      throw InputError("Position " + p.id + ": initial margin not met");
  }
}

double notional_exposure(const Position& pos, double price) {
  if (!(price > 0.0)) throw InputError("notional_exposure: price must be > 0");
  return price * pos.quantity;
}

OpenInterest open_interest(const Book& book, double price) {
  if (!(price > 0.0)) throw InputError("open_interest: price must be > 0");
  KahanSum longs, shorts;
  for (const auto& p : book.positions()) {
    if (p.side == Side::long_)
      longs.add(p.quantity * price);
    else
      shorts.add(p.quantity * price);
  }
  OpenInterest oi;
  oi.long_oi = longs.value();
  oi.short_oi = shorts.value();
  oi.total = oi.long_oi + oi.short_oi;
  return oi;
}

double funding_rate(const Book& book, double price, double oracle_price,
                    const FundingParams& params) {
  params.validate();
  if (!(oracle_price > 0.0)) throw InputError("funding_rate: oracle price must be > 0");
  const OpenInterest oi = open_interest(book, price);
  if (!(oi.short_oi > 0.0))
    throw InputError("funding_rate: undefined with zero short open interest");
  return params.kappa * (oi.long_oi / oi.short_oi - price / oracle_price);
}

double funding_cash(const Position& pos, double rate, double price) {
  return sign(pos.side) * pos.quantity * rate * price;
}

double funding_accrual(const Position& pos, const PricePath& path,
                       std::span<const double> rates, std::int64_t from,
                       std::int64_t to) {
  if (from > to) throw InputError("funding_accrual: from > to");
  if (from < 0 || static_cast<std::size_t>(to) >= path.size() || rates.size() < path.size())
    throw InputError("funding_accrual: time range outside path bounds");
  KahanSum acc;
  for (std::int64_t s = from + 1; s <= to; ++s)
    acc.add(funding_cash(pos, rates[static_cast<std::size_t>(s)],
                         path.mark[static_cast<std::size_t>(s)]));
  return acc.value();
}

double pnl(const Position& pos, const PricePath& path, std::span<const double> rates,
           std::int64_t horizon) {
  if (horizon < 0 || static_cast<std::size_t>(horizon) >= path.size())
    throw InputError("pnl: horizon outside path bounds");
  if (horizon < pos.open_time) return 0.0;
  const double price_move =
      sign(pos.side) * pos.quantity *
      (path.mark[static_cast<std::size_t>(horizon)] - pos.entry_price);
  return price_move + funding_accrual(pos, path, rates, pos.open_time, horizon);
}

double equity(const Position& pos, const PricePath& path, std::span<const double> rates,
              std::int64_t horizon, double collateral_override) {
  return collateral_override + pnl(pos, path, rates, horizon);
}

bool maintenance_breach(const Position& pos, double position_equity, double price,
                        const MarginParams& params) {
  if (!(price > 0.0)) throw InputError("maintenance_breach: price must be > 0");
  return position_equity <= params.maintenance_margin_ratio * price * pos.quantity;
}

double vwap_fill(std::span<const std::pair<double, double>> levels, double quantity) {
  if (!(quantity > 0.0)) throw InputError("vwap_fill: quantity must be > 0");
  double remaining = quantity;
  KahanSum notional;
  for (const auto& [price, size] : levels) {
    if (remaining <= 0.0) break;
    const double take = std::min(size, remaining);
    notional.add(take * price);
    remaining -= take;
  }
  if (remaining > 1e-12 * quantity)
    throw InputError("vwap_fill: insufficient depth for requested quantity");
  return notional.value() / quantity;
}

double opening_leverage(const Position& pos) {
  if (!(pos.collateral > 0.0)) throw InputError("opening_leverage: zero collateral");
  return pos.entry_price * pos.quantity / pos.collateral;
}

double current_leverage(const Position& pos, double price, double collateral_now) {
  if (!(collateral_now > 0.0)) throw InputError("current_leverage: zero collateral");
  return price * pos.quantity / collateral_now;
}

LeverageMasses leverage_masses(const Book& book, const PricePath& path,
                               std::span<const double> rates, std::int64_t horizon) {
  LeverageMasses out;
  KahanSum winner_mass, loser_mass;
  const double price = path.mark[static_cast<std::size_t>(horizon)];
  for (const auto& p : book.positions()) {
    const double e = equity(p, path, rates, horizon);
    const double n = p.quantity * price;
    if (e > 0.0) {
      winner_mass.add(n / e);
      out.winners.push_back(p.id);
    } else if (e < 0.0) {
      loser_mass.add(n / -e);
      out.losers.push_back(p.id);
    }
    // e == 0 sits in neither set.
  }
  out.winner_mass = winner_mass.value();
  out.loser_mass = loser_mass.value();
  return out;
}

double collateral_at(const Book& book, std::span<const CollateralEvent> events,
                     const std::string& id, std::int64_t t) {
  double c = book.at(id).collateral;
  for (const auto& ev : events)
    if (ev.position_id == id && ev.time <= t) c += ev.delta;
  if (c < 0.0) throw InputError("collateral_at: negative collateral for " + id);
  return c;
}

std::vector<double> funding_rates_for_path(const Book& book, const PricePath& path,
                                           const FundingParams& params) {
  path.validate();
  std::vector<double> rates(path.size(), 0.0);
  for (std::size_t t = 0; t < path.size(); ++t)
    rates[t] = funding_rate(book, path.mark[t], path.oracle[t], params);
  return rates;
}

}  // namespace adl
