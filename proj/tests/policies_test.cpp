#include "adl/policies.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adl/errors.hpp"
#include "adl/numerics.hpp"

using namespace adl;

namespace {

// Five-account wealth example: equities (10,5,1,-3,-12), protected cash
// (2,1,0.5,0,0), PNL-only endowments (8,4,0.5,0,0).
std::vector<WinnerSlice> wealth_example() {
  std::vector<WinnerSlice> ws;
  ws.push_back(WinnerSlice::make("1", 2.0, 8.0));
  ws.push_back(WinnerSlice::make("2", 1.0, 4.0));
  ws.push_back(WinnerSlice::make("3", 0.5, 0.5));
  ws.push_back(WinnerSlice::make("4", 0.0, -3.0));
  ws.push_back(WinnerSlice::make("5", 0.0, -12.0));
  // Scores inducing the queue order 2, 1, 3, 5, 4.
  const double scores[] = {5.0, 6.0, 3.0, 1.0, 2.0};
  for (std::size_t i = 0; i < ws.size(); ++i) ws[i].score = scores[i];
  return ws;
}

std::vector<double> equities(const std::vector<WinnerSlice>& ws) {
  std::vector<double> out;
  for (const auto& w : ws) out.push_back(w.equity);
  return out;
}

std::vector<double> endowments(const std::vector<WinnerSlice>& ws) {
  std::vector<double> out;
  for (const auto& w : ws) out.push_back(w.endowment);
  return out;
}

}  // namespace

TEST_CASE("deficit and capacity aggregates") {
  const auto ws = wealth_example();
  const auto dc = deficit_and_capacity(equities(ws), endowments(ws));
  CHECK(dc.total_deficit == doctest::Approx(15.0));
  CHECK(dc.max_deficit == doctest::Approx(12.0));
  CHECK(dc.total_capacity == doctest::Approx(12.5));
  CHECK(dc.max_capacity == doctest::Approx(8.0));

  const std::vector<double> all_positive = {1.0, 2.0};
  const std::vector<double> w2 = {1.0, 2.0};
  const auto dc2 = deficit_and_capacity(all_positive, w2);
  CHECK(dc2.total_deficit == 0.0);
  CHECK(dc2.max_deficit == 0.0);

  // Random book against a naive loop.
  Rng rng(3);
  std::vector<double> e(10), w(10);
  for (int i = 0; i < 10; ++i) {
    e[i] = rng.uniform(-5.0, 5.0);
    w[i] = std::max(e[i], 0.0);
  }
  const auto dc3 = deficit_and_capacity(e, w);
  double d = 0, u = 0;
  for (int i = 0; i < 10; ++i) {
    d += std::max(-e[i], 0.0);
    u += w[i];
  }
  CHECK(dc3.total_deficit == doctest::Approx(d).epsilon(1e-12));
  CHECK(dc3.total_capacity == doctest::Approx(u).epsilon(1e-12));
}

TEST_CASE("queue waterfall on the wealth example") {
  const auto ws = wealth_example();
  const auto alloc = queue_allocate(ws, 7.5);
  CHECK(alloc.haircuts[0] == doctest::Approx(0.4375).epsilon(1e-12));
  CHECK(alloc.haircuts[1] == doctest::Approx(1.0));
  CHECK(alloc.haircuts[2] == 0.0);
  CHECK(alloc.haircuts[3] == 0.0);
  CHECK(alloc.haircuts[4] == 0.0);
  CHECK(alloc.seized[0] == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(alloc.seized[1] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(alloc.total_seized() == doctest::Approx(7.5).epsilon(1e-12));

  const auto none = queue_allocate(ws, 0.0);
  for (double h : none.haircuts) CHECK(h == 0.0);

  const auto full = queue_allocate(ws, 12.5);
  for (std::size_t i = 0; i < ws.size(); ++i)
    if (ws[i].endowment > 0.0) CHECK(full.haircuts[i] == doctest::Approx(1.0));

  CHECK_THROWS_AS(queue_allocate(ws, 12.6), InfeasibleError);
}

TEST_CASE("queue post-ADL equities") {
  const auto ws = wealth_example();
  const auto alloc = queue_allocate(ws, 7.5);
  std::vector<double> cash, pnl;
  for (const auto& w : ws) {
    cash.push_back(w.cash);
    pnl.push_back(w.pnl);
  }
  const auto post = post_adl_equity(cash, pnl, alloc.seized);
  const std::vector<double> expected = {6.5, 1.0, 1.0, -3.0, -12.0};
  for (std::size_t i = 0; i < post.size(); ++i)
    CHECK(post[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("ranking scores") {
  CHECK(adl_score_ratio(1.2, 12'000'000.0 / 2'500'000.0) == doctest::Approx(5.76));
  // A proportional 100-way split leaves each child's score unchanged.
  CHECK(adl_score_ratio(1.2, 120'000.0 / 25'000.0) == doctest::Approx(5.76));
  CHECK(adl_score_ratio(1.0, 1.0) == doctest::Approx(1.0));

  CHECK(adl_score(2.0, 1.5, 0.75, ScoreVariant::binance_bankruptcy) ==
        doctest::Approx(4.0));
  CHECK(adl_score(2.0, 1.5, 1.0, ScoreVariant::hyperliquid_entry) ==
        doctest::Approx(3.0));
  CHECK(std::isinf(adl_score(2.0, 1.5, 0.0, ScoreVariant::binance_bankruptcy)));
}

TEST_CASE("pro-rata uniform haircut") {
  const auto ws = wealth_example();
  const auto alloc = pro_rata(ws, 0.5, 15.0);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(alloc.haircuts[i] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(alloc.seized[0] == doctest::Approx(4.8).epsilon(1e-12));
  CHECK(alloc.seized[1] == doctest::Approx(2.4).epsilon(1e-12));
  CHECK(alloc.seized[2] == doctest::Approx(0.3).epsilon(1e-12));

  std::vector<double> cash, pnl;
  for (const auto& w : ws) {
    cash.push_back(w.cash);
    pnl.push_back(w.pnl);
  }
  const auto post = post_adl_equity(cash, pnl, alloc.seized);
  const std::vector<double> expected = {5.2, 2.6, 0.7, -3.0, -12.0};
  for (std::size_t i = 0; i < post.size(); ++i)
    CHECK(post[i] == doctest::Approx(expected[i]).epsilon(1e-12));

  const auto zero = pro_rata(ws, 0.0, 15.0);
  CHECK(zero.total_seized() == 0.0);

  // Equal endowments at half capacity.
  std::vector<WinnerSlice> equal = {WinnerSlice::make("a", 0.0, 2.0),
                                    WinnerSlice::make("b", 0.0, 2.0)};
  const auto half = pro_rata(equal, 1.0, 2.0);
  CHECK(half.haircuts[0] == doctest::Approx(0.5));
  CHECK(half.haircuts[1] == doctest::Approx(0.5));

  std::vector<WinnerSlice> empty = {WinnerSlice::make("a", 1.0, -1.0)};
  CHECK_THROWS_AS(pro_rata(empty, 1.0, 4.0), InfeasibleError);
}

TEST_CASE("levered pro-rata tilts by leverage") {
  std::vector<WinnerSlice> ws = {WinnerSlice::make("a", 0.0, 10.0),
                                 WinnerSlice::make("b", 0.0, 10.0)};
  ws[0].eff_leverage = 1.0;
  ws[1].eff_leverage = 3.0;
  const auto alloc = levered_pro_rata(ws, 0.5, 8.0);  // budget 4
  CHECK(alloc.seized[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(alloc.seized[1] == doctest::Approx(3.0).epsilon(1e-12));

  // Equal leverage reduces to pro-rata.
  std::vector<WinnerSlice> flat = wealth_example();
  for (auto& w : flat) w.eff_leverage = 2.0;
  const auto lpr = levered_pro_rata(flat, 0.5, 15.0);
  const auto pr = pro_rata(flat, 0.5, 15.0);
  for (std::size_t i = 0; i < flat.size(); ++i)
    CHECK(lpr.seized[i] == doctest::Approx(pr.seized[i]).epsilon(1e-9));

  // Full capacity: everything is taken.
  const auto full = levered_pro_rata(ws, 1.0, 20.0);
  CHECK(full.haircuts[0] == doctest::Approx(1.0));
  CHECK(full.haircuts[1] == doctest::Approx(1.0));

  // Clamped redistribution keeps the budget exact.
  std::vector<WinnerSlice> skew = {WinnerSlice::make("a", 0.0, 1.0),
                                   WinnerSlice::make("b", 0.0, 10.0)};
  skew[0].eff_leverage = 100.0;
  skew[1].eff_leverage = 1.0;
  const auto clamped = levered_pro_rata(skew, 1.0, 5.0);
  CHECK(clamped.haircuts[0] == doctest::Approx(1.0));
  CHECK(clamped.total_seized() == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("capped pro-rata water level") {
  std::vector<WinnerSlice> ws = {WinnerSlice::make("a", 0.0, 8.0),
                                 WinnerSlice::make("b", 0.0, 4.0),
                                 WinnerSlice::make("c", 0.0, 0.5)};
  ws[0].cap = 0.25;
  const auto alloc = capped_pro_rata(ws, 4.5);
  CHECK(alloc.haircuts[0] == doctest::Approx(0.25));
  CHECK(alloc.haircuts[1] == doctest::Approx(5.0 / 9.0).epsilon(1e-12));
  CHECK(alloc.haircuts[2] == doctest::Approx(5.0 / 9.0).epsilon(1e-12));
  CHECK(alloc.total_seized() == doctest::Approx(4.5).epsilon(1e-12));

  // Non-binding caps reproduce plain pro-rata.
  const auto flat = wealth_example();
  const auto capped = capped_pro_rata(flat, 7.5);
  const auto pr = pro_rata(flat, 0.5, 15.0);
  for (std::size_t i = 0; i < flat.size(); ++i)
    CHECK(capped.haircuts[i] == doctest::Approx(pr.haircuts[i]).epsilon(1e-12));

  CHECK_THROWS_AS(capped_pro_rata(ws, 8.0 * 0.25 + 4.5 + 1.0), InfeasibleError);
}

namespace {

// Bisection oracle on the monotone budget identity sum_i w_i*min(eta, b_i).
double water_level_bisection(const std::vector<WinnerSlice>& ws, double budget) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    double total = 0.0;
    for (const auto& w : ws) total += w.endowment * std::min(mid, w.cap);
    (total < budget ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("water level agrees with the bisection oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<WinnerSlice> ws;
    double capacity = 0.0;
    const int n = 2 + static_cast<int>(rng.below(8));
    for (int i = 0; i < n; ++i) {
      WinnerSlice w = WinnerSlice::make("w" + std::to_string(i), 0.0, rng.uniform(0.1, 5.0));
      w.cap = rng.uniform(0.05, 1.0);
      capacity += w.endowment * w.cap;
      ws.push_back(std::move(w));
    }
    const double budget = rng.uniform(0.0, 1.0) * capacity * 0.999;
    const auto alloc = capped_pro_rata(ws, budget);
    const double eta_oracle = water_level_bisection(ws, budget);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const double expected = std::min(eta_oracle, ws[i].cap);
      // The final residual adjustment may nudge one coordinate by <= 1e-9*B.
      CHECK(std::abs(alloc.haircuts[i] - expected) <= 1e-6 + 1e-6 * expected);
    }
    CHECK(alloc.total_seized() == doctest::Approx(budget).epsilon(1e-9));
  }
}

TEST_CASE("weighted water-filling reproduces the reference shares") {
  // Equity-numeraire winners at the later horizon of the running book.
  auto make_winners = []() {
    std::vector<WinnerSlice> ws;
    ws.push_back(WinnerSlice::make("A", 0.0, 1.2613, Numeraire::equity));
    ws.push_back(WinnerSlice::make("C", 0.0, 5.6214, Numeraire::equity));
    ws.push_back(WinnerSlice::make("E", 0.0, 0.8397, Numeraire::equity));
    ws[0].eff_leverage = 1.031;
    ws[1].eff_leverage = 0.925;
    ws[2].eff_leverage = 1.548;
    return ws;
  };
  const auto ws = make_winners();

  auto shares_for = [&](auto g) {
    std::vector<double> weights;
    for (const auto& w : ws) weights.push_back(w.eff_leverage * g(w.eff_leverage));
    const auto alloc = rap_allocate(ws, weights, 0.5);
    std::vector<double> shares;
    const double total = alloc.total_seized();
    for (double x : alloc.seized) shares.push_back(x / total);
    return shares;
  };

  const auto linear = shares_for([](double l) { return l; });
  CHECK(linear[0] == doctest::Approx(0.164).epsilon(5e-3));
  CHECK(linear[1] == doctest::Approx(0.589).epsilon(5e-3));
  CHECK(linear[2] == doctest::Approx(0.246).epsilon(5e-3));

  const auto power = shares_for([](double l) { return l * l; });
  CHECK(power[0] == doctest::Approx(0.155).epsilon(5e-3));
  CHECK(power[1] == doctest::Approx(0.498).epsilon(5e-3));
  CHECK(power[2] == doctest::Approx(0.348).epsilon(5e-3));

  const auto cvar = shares_for([](double l) { return std::max(l - 0.9, 0.0); });
  CHECK(cvar[0] == doctest::Approx(0.149).epsilon(5e-3));
  CHECK(cvar[1] == doctest::Approx(0.114).epsilon(5e-3));
  CHECK(cvar[2] == doctest::Approx(0.737).epsilon(5e-3));
}

TEST_CASE("uniform risk weights reduce weighted filling to capped pro-rata") {
  auto ws = wealth_example();
  ws[0].cap = 0.5;
  const std::vector<double> uniform(ws.size(), 1.0);
  const auto rap = rap_allocate(ws, uniform, 5.0);
  const auto capped = capped_pro_rata(ws, 5.0);
  for (std::size_t i = 0; i < ws.size(); ++i)
    CHECK(rap.haircuts[i] == doctest::Approx(capped.haircuts[i]).epsilon(1e-9));
}

TEST_CASE("zero-weight accounts are never haircut") {
  std::vector<WinnerSlice> ws = {WinnerSlice::make("a", 0.0, 5.0),
                                 WinnerSlice::make("b", 0.0, 5.0)};
  const std::vector<double> weights = {0.0, 2.0};
  const auto alloc = rap_allocate(ws, weights, 3.0);
  CHECK(alloc.seized[0] == 0.0);
  CHECK(alloc.seized[1] == doctest::Approx(3.0));
}

TEST_CASE("perspective transform") {
  const std::vector<double> lambdas = {10.0};

  // Identically-zero cost gives zero weights.
  auto rho0 = perspective_weights(lambdas, [](double) { return 0.0; });
  CHECK(rho0[0] == 0.0);

  // psi(u) = E[(u+Z)_-] for Z uniform on [-0.2, 0.2]; at u=0.1 the closed
  // form is -0.0125, so rho = 10 * psi(0.1) = -0.125.
  Rng rng(99);
  auto psi_mc = [&rng](double u) {
    KahanSum acc;
    const int n = 200000;
    for (int i = 0; i < n; ++i) acc.add(std::min(u + rng.uniform(-0.2, 0.2), 0.0));
    return acc.value() / n;
  };
  const auto rho = perspective_weights(lambdas, psi_mc);
  CHECK(rho[0] == doctest::Approx(-0.125).epsilon(1e-2));
  CHECK(std::abs(rho[0] - (-0.125)) <= 1e-3);

  // Dual reading: net solvency gain of a yield y at insurance cost psi*(y).
  const double net_gain = 0.08 - 10.0 * 0.005;
  CHECK(net_gain == doctest::Approx(0.03));

  const auto g = risk_model_from_perspective(lambdas, rho);
  CHECK(g[0] == doctest::Approx(rho[0] / 10.0));

  const std::vector<double> negative = {-1.0};
  CHECK_THROWS_AS(perspective_weights(negative, [](double) { return 0.0; }), InputError);
}

TEST_CASE("post-ADL equity guards the endowment") {
  const std::vector<double> cash = {2.0};
  const std::vector<double> pnl = {8.0};
  const std::vector<double> x = {9.0};
  CHECK_THROWS_AS(post_adl_equity(cash, pnl, x), InputError);
  const std::vector<double> zero = {0.0};
  CHECK(post_adl_equity(cash, pnl, zero)[0] == doctest::Approx(10.0));
}

TEST_CASE("validation diagnostics") {
  const auto ws = wealth_example();
  const auto alloc = queue_allocate(ws, 7.5);
  const auto good = validate(alloc, ws);
  CHECK(good.balanced);
  CHECK(good.respects_caps);
  CHECK(good.feasible);

  AdlAllocation broken = alloc;
  broken.seized[0] += 1.0;  // budget no longer matches
  const auto bad_balance = validate(broken, ws);
  CHECK_FALSE(bad_balance.balanced);
  CHECK(bad_balance.balance_residual == doctest::Approx(1.0));

  AdlAllocation above_cap = alloc;
  above_cap.haircuts[2] = 1.5;
  const auto bad_cap = validate(above_cap, ws);
  CHECK_FALSE(bad_cap.respects_caps);
  CHECK(bad_cap.max_cap_violation == doctest::Approx(0.5));
}

TEST_CASE("effective cap combines the haircut limit and equity floor") {
  // cap = min(hbar, 1 - (floor - cash)/w) clamped to [0,1].
  CHECK(effective_cap(2.0, 8.0, 1.0, 4.0) == doctest::Approx(0.75));
  CHECK(effective_cap(2.0, 8.0, 0.5, 4.0) == doctest::Approx(0.5));
  CHECK(effective_cap(2.0, 8.0, 1.0, 20.0) == 0.0);
  CHECK(effective_cap(2.0, 0.0, 1.0, 0.0) == 0.0);
}

// --- fairness properties ------------------------------------------------------

TEST_CASE("protected-cash invariance across allocations") {
  const auto ws = wealth_example();
  const auto a = queue_allocate(ws, 7.5);
  const auto b = pro_rata(ws, 0.5, 15.0);
  std::vector<double> cash, pnl;
  for (const auto& w : ws) {
    cash.push_back(w.cash);
    pnl.push_back(w.pnl);
  }
  const auto post_a = post_adl_equity(cash, pnl, a.seized);
  const auto post_b = post_adl_equity(cash, pnl, b.seized);
  for (std::size_t i = 0; i < ws.size(); ++i)
    CHECK(post_a[i] - post_b[i] ==
          doctest::Approx(b.seized[i] - a.seized[i]).epsilon(1e-12));
}

TEST_CASE("pro-rata fairness axioms on random books") {
  Rng rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(9));
    std::vector<WinnerSlice> ws;
    double capacity = 0.0;
    for (int i = 0; i < n; ++i) {
      const double pnl = rng.uniform(0.05, 4.0);
      ws.push_back(WinnerSlice::make("w" + std::to_string(i), rng.uniform(0.0, 2.0), pnl));
      capacity += ws.back().endowment;
    }
    const double budget = rng.uniform(1e-6, 1.0) * capacity;
    const auto alloc = pro_rata(ws, 1.0, budget);

    // Monotonicity: larger endowments keep larger survivors.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (ws[i].endowment >= ws[j].endowment)
          CHECK(ws[i].endowment - alloc.seized[i] >=
                ws[j].endowment - alloc.seized[j] - 1e-9);

    // Scale invariance of the haircut fractions.
    const double scale = rng.uniform(0.5, 20.0);
    std::vector<WinnerSlice> scaled = ws;
    for (auto& w : scaled) {
      w.pnl *= scale;
      w.cash *= scale;
      w.endowment *= scale;
    }
    const auto alloc_scaled = pro_rata(scaled, 1.0, budget * scale);
    for (int i = 0; i < n; ++i)
      CHECK(alloc_scaled.haircuts[i] == doctest::Approx(alloc.haircuts[i]).epsilon(1e-9));

    // Split (Sybil) invariance: any account split into up to 8 parts keeps
    // its aggregate seizure.
    const int target = static_cast<int>(rng.below(n));
    const int parts = 2 + static_cast<int>(rng.below(7));
    std::vector<double> fractions(parts);
    double fraction_mass = 0.0;
    for (auto& f : fractions) {
      f = rng.uniform(0.05, 1.0);
      fraction_mass += f;
    }
    std::vector<WinnerSlice> split;
    for (int i = 0; i < n; ++i) {
      if (i != target) {
        split.push_back(ws[i]);
        continue;
      }
      for (int p = 0; p < parts; ++p)
        split.push_back(WinnerSlice::make(
            ws[i].id + "#" + std::to_string(p), 0.0,
            ws[i].endowment * fractions[p] / fraction_mass));
    }
    const auto alloc_split = pro_rata(split, 1.0, budget);
    double child_total = 0.0;
    for (std::size_t i = 0; i < split.size(); ++i)
      if (split[i].id.rfind(ws[target].id + "#", 0) == 0) child_total += alloc_split.seized[i];
    CHECK(child_total == doctest::Approx(alloc.seized[target]).epsilon(1e-6));
  }
}

TEST_CASE("queue monotonicity counterexample family") {
  Rng rng(55);
  for (int trial = 0; trial < 500; ++trial) {
    const double w2 = rng.uniform(0.5, 5.0);
    const double w1 = w2 + rng.uniform(0.1, 5.0);
    std::vector<WinnerSlice> ws = {WinnerSlice::make("1", 0.0, w1),
                                   WinnerSlice::make("2", 0.0, w2)};
    ws[0].score = 2.0;
    ws[1].score = 1.0;
    const double budget = rng.uniform(w1 - w2 + 1e-9, w1);
    const auto alloc = queue_allocate(ws, budget);
    const double s1 = ws[0].endowment - alloc.seized[0];
    const double s2 = ws[1].endowment - alloc.seized[1];
    CHECK(s1 < s2);  // survivor order reverses
  }
}

TEST_CASE("queue is split-invariant for score-preserving splits") {
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(5));
    std::vector<WinnerSlice> ws;
    double capacity = 0.0;
    for (int i = 0; i < n; ++i) {
      WinnerSlice w = WinnerSlice::make("w" + std::to_string(i), 0.0, rng.uniform(0.2, 3.0));
      w.score = 10.0 + i;  // unique score levels
      capacity += w.endowment;
      ws.push_back(std::move(w));
    }
    const double budget = rng.uniform(0.0, capacity);
    const int target = static_cast<int>(rng.below(n));
    const auto base = queue_allocate(ws, budget);

    std::vector<WinnerSlice> split;
    const int parts = 2 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i) {
      if (i != target) {
        split.push_back(ws[i]);
        continue;
      }
      for (int p = 0; p < parts; ++p) {
        WinnerSlice child = ws[i];
        child.id = ws[i].id + "#" + std::to_string(p);
        child.endowment = ws[i].endowment / parts;
        split.push_back(std::move(child));  // children keep the parent score
      }
    }
    const auto split_alloc = queue_allocate(split, budget);
    double child_total = 0.0;
    for (std::size_t i = 0; i < split.size(); ++i)
      if (split[i].id.rfind(ws[target].id + "#", 0) == 0) child_total += split_alloc.seized[i];
    CHECK(child_total == doctest::Approx(base.seized[target]).epsilon(1e-9));
  }
}

TEST_CASE("top-winner gap between pro-rata and the endowment-ranked queue") {
  Rng rng(88);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(8));
    std::vector<WinnerSlice> ws;
    double capacity = 0.0, top = 0.0;
    for (int i = 0; i < n; ++i) {
      WinnerSlice w = WinnerSlice::make("w" + std::to_string(i), 0.0, rng.uniform(0.1, 4.0));
      w.score = w.endowment;  // rank by endowment
      capacity += w.endowment;
      top = std::max(top, w.endowment);
      ws.push_back(std::move(w));
    }
    const double budget = rng.uniform(0.0, top);
    const auto queue = queue_allocate(ws, budget);
    const auto pr = pro_rata(ws, 1.0, budget);
    // Survivor of the largest pre-ADL endowment under each rule.
    std::size_t top_idx = 0;
    for (std::size_t i = 0; i < ws.size(); ++i)
      if (ws[i].endowment > ws[top_idx].endowment) top_idx = i;
    const double queue_survivor = ws[top_idx].endowment - queue.seized[top_idx];
    const double pr_survivor = ws[top_idx].endowment - pr.seized[top_idx];
    const double expected_gap = budget * (1.0 - ws[top_idx].endowment / capacity);
    CHECK(pr_survivor - queue_survivor == doctest::Approx(expected_gap).epsilon(1e-9));
  }
}
