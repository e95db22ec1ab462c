#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "forkgame/metrics.hpp"

using namespace forkgame;

namespace {

HashDistribution skewed_pools() {
  std::vector<double> x{0.33, 0.21, 0.11, 0.08, 0.04};
  x.insert(x.end(), 100, 0.0023);
  return HashDistribution::from_hash_rates(x);
}

PoolMarket two_pool_market() { return PoolMarket{{30.0, 20.0}, 5000.0, 0.01}; }

}  // namespace

TEST_CASE("gini examples") {
  CHECK(gini(std::vector<double>{0.2, 0.2, 0.2, 0.2, 0.2}) == doctest::Approx(0.0));
  CHECK(gini(std::vector<double>{1.0}) == 0.0);
  CHECK(gini(std::vector<double>{0.75, 0.25}) == doctest::Approx(0.25));
  std::vector<double> one_hot(10, 0.0);
  one_hot[3] = 1.0;
  CHECK(gini(one_hot) == doctest::Approx(0.9));
  CHECK(gini(HashDistribution({0.5, 0.5})) == 0.0);
}

TEST_CASE("property: gini bounds and scale invariance") {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + trial % 12;
    std::vector<double> h(m);
    for (auto& v : h) v = u(g) < 0.2 ? 0.0 : 100.0 * u(g);
    h[0] += 1.0;
    const auto x = HashDistribution::from_hash_rates(h);
    const double gx = gini(x);
    CHECK(gx >= 0.0);
    CHECK(gx <= (static_cast<double>(m) - 1.0) / static_cast<double>(m) + 1e-12);
    CHECK(gini(h) == doctest::Approx(gx).epsilon(1e-12));
  }
}

TEST_CASE("fairness spread") {
  const auto x = skewed_pools();
  const auto none = fairness_spread(x, NetworkParams::with_delay(1.0, 0.0, 1.0, 0.0));
  CHECK(none.min_ratio == 1.0);
  CHECK(none.max_ratio == 1.0);
  CHECK(none.spread == 0.0);
  const auto full = fairness_spread(x, NetworkParams::with_delay(1.0, 0.2, 1.0, 1.0));
  CHECK(full.spread == 0.0);
  CHECK(full.min_ratio == 1.0);

  const auto fr = fairness_spread(x, NetworkParams::with_delay(1.0, 0.2, 1.0, 0.0));
  CHECK(fr.argmax == 0);
  CHECK(fr.argmin >= 5);
  CHECK(fr.spread > 0.0);
  CHECK(fr.spread == doctest::Approx(fr.max_ratio - fr.min_ratio));
  // The approximate form orders pools the same way.
  const auto ap = fairness_spread(x, NetworkParams::with_delay(1.0, 0.2, 1.0, 0.0), FailMode::approx);
  CHECK(ap.argmax == 0);
  CHECK(ap.argmin >= 5);

  CHECK_THROWS_AS(fairness_spread(HashDistribution({0.5, 0.5, 0.0}), NetworkParams::with_delay(1, 1, 1, 0)),
                  std::domain_error);
  CHECK(fairness_spread(HashDistribution({1.0}), NetworkParams::with_delay(1, 1, 1, 0)).spread == 0.0);
}

TEST_CASE("property: spread is zero exactly without a fork penalty") {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> h(2 + trial % 6);
    for (auto& v : h) v = u(g);
    const auto x = HashDistribution::from_hash_rates(h);
    const double tau = trial % 3 == 0 ? 0.0 : 5.0 * u(g);
    const double theta = trial % 3 == 1 ? 1.0 : 0.9 * u(g);
    const auto s = fairness_spread(x, NetworkParams::with_delay(0.1, tau, 1.0, theta));
    CHECK(s.spread >= 0.0);
    const bool distinct = *std::max_element(h.begin(), h.end()) - *std::min_element(h.begin(), h.end()) > 1e-9;
    if (tau == 0.0 || theta == 1.0) {
      CHECK(s.spread == 0.0);
    } else if (distinct) {
      CHECK(s.spread > 0.0);
    }
  }
}

TEST_CASE("grids") {
  CHECK(linspace(0, 1, 5) == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK(parse_grid("0:10:3") == std::vector<double>{0, 5, 10});
  CHECK(parse_grid("2:2:1") == std::vector<double>{2});
  CHECK_THROWS_AS(parse_grid("0:1"), std::domain_error);
  CHECK_THROWS_AS(parse_grid("0:1:0"), std::domain_error);
  CHECK_THROWS_AS(parse_grid("a:1:3"), std::domain_error);
  CHECK_THROWS_AS(parse_grid("0:1:3:4"), std::domain_error);
  CHECK_THROWS_AS(linspace(0, 1, 1), std::domain_error);
}

TEST_CASE("sweep") {
  SweepSpec spec;
  spec.market = two_pool_market();
  spec.network = NetworkParams::with_delay(0.1, 0.5, 1200.0, 0.0);
  spec.r0 = PopulationState({0.6, 0.4});
  spec.threads = 2;

  SUBCASE("penalty-free row does not depend on the delay") {
    spec.tau_grid = linspace(0.0, 10.0, 6);
    spec.theta_grid = {1.0};
    const auto rows = sweep(spec);
    REQUIRE(rows.size() == 6);
    for (const auto& row : rows) {
      CHECK(row.status == "ok");
      CHECK(row.gini == doctest::Approx(rows.front().gini).epsilon(1e-9));
      CHECK(row.r[0] == doctest::Approx(0.4).epsilon(1e-6));
    }
  }

  SUBCASE("zero delay matches the penalty-free column") {
    spec.tau_grid = {0.0};
    spec.theta_grid = {0.0, 0.3, 0.7};
    const auto zero = sweep(spec);
    spec.tau_grid = {2.0};
    spec.theta_grid = {1.0};
    const auto free = sweep(spec);
    for (const auto& row : zero) {
      CHECK(row.r[0] == doctest::Approx(free.front().r[0]).epsilon(1e-12));
      CHECK(row.gini == doctest::Approx(free.front().gini).epsilon(1e-12));
    }
  }

  SUBCASE("grid order and shape") {
    spec.tau_grid = {0.1, 0.2};
    spec.theta_grid = {0.0, 0.5, 1.0};
    spec.method = SweepMethod::analytic;
    const auto rows = sweep(spec);
    REQUIRE(rows.size() == 6);
    CHECK(rows[1].tau == 0.1);
    CHECK(rows[1].theta == 0.5);
    CHECK(rows[3].tau == 0.2);
    CHECK(rows[3].theta == 0.0);
    for (const auto& row : rows) {
      CHECK(row.method == "analytic");
      CHECK(row.r.size() == 2);
    }
  }

  SUBCASE("the dominant pool flips with the delay") {
    spec.tau_grid = linspace(0.1, 10.0, 34);
    spec.theta_grid = {0.0};
    spec.r0 = std::nullopt;
    const auto rows = sweep(spec);
    auto big_first = [&](const SweepRow& row) {
      return hash_fraction(PopulationState(row.r), spec.market)[0] > 0.5;
    };
    CHECK_FALSE(big_first(rows.front()));
    CHECK(big_first(rows.back()));
    std::size_t flips = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) flips += big_first(rows[i]) != big_first(rows[i - 1]);
    CHECK(flips == 1);
    // Weakly increasing concentration on each side of the flip.
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (big_first(rows[i]) != big_first(rows[i - 1])) continue;
      CHECK(rows[i].gini >= rows[i - 1].gini - 1e-6);
    }
  }

  SUBCASE("a failing point is reported in its row") {
    spec.tau_grid = {0.5, 1.0};
    spec.theta_grid = {0.0};
    spec.r0 = PopulationState({0.2, 0.3, 0.5});  // wrong size for the market
    const auto rows = sweep(spec);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
      CHECK(row.status.rfind("error: ", 0) == 0);
      CHECK(std::isnan(row.gini));
      CHECK(std::isnan(row.r[1]));
    }
  }

  CHECK_THROWS_AS(sweep(SweepSpec{{}, {0.0}, two_pool_market()}), std::domain_error);
  CHECK_THROWS_AS(sweep(SweepSpec{{-1.0}, {0.0}, two_pool_market()}), std::domain_error);
  CHECK_THROWS_AS(sweep(SweepSpec{{1.0}, {1.5}, two_pool_market()}), std::domain_error);
}
