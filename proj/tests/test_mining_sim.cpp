#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "forkgame/json_io.hpp"
#include "forkgame/mining_sim.hpp"

using namespace forkgame;

namespace {

SimConfig config(std::vector<double> x, double lambda_tau, std::uint64_t blocks, std::uint64_t seed = 5,
                 double theta = 0.0) {
  return SimConfig{NetworkParams::with_delay(1.0, lambda_tau, 2.0, theta), HashDistribution(std::move(x)), blocks,
                   seed, TieMode::coin_flip, SplitMode::deterministic_half};
}

double z_score(double observed, double expected, double n) {
  return (observed - expected) / std::sqrt(expected * (1.0 - expected) / n);
}

}  // namespace

TEST_CASE("monopoly never forks") {
  const auto rep = simulate(config({1.0}, 0.7, 1000));
  CHECK(rep.fork_events == 0);
  CHECK(rep.pools[0].uncles == 0);
  CHECK(rep.pools[0].blocks_won == 1000);
  CHECK(rep.pools[0].reward == 2000.0);
  const auto r = empirical_rates(rep);
  CHECK(r[0].uncle_rate == 0.0);
  CHECK(r[0].fork_rate == 0.0);
  CHECK(r[0].fail_rate == 0.0);
}

TEST_CASE("zero horizon is rejected") { CHECK_THROWS_AS(simulate(config({0.5, 0.5}, 0.2, 0)), std::domain_error); }

TEST_CASE("symmetric pools match the closed-form uncle rate") {
  const auto cfg = config({0.5, 0.5}, -std::log(0.8), 1000000, 17);
  const auto rep = simulate(cfg);
  const auto rates = empirical_rates(rep);
  for (std::size_t i = 0; i < 2; ++i) {
    const double n = static_cast<double>(rep.pools[i].blocks_won + rep.pools[i].uncles);
    CHECK(std::abs(z_score(rates[i].uncle_rate, 0.05, n)) < 3.0);
  }
  // The two pools' triples agree with each other.
  const double n0 = static_cast<double>(rep.pools[0].blocks_won + rep.pools[0].uncles);
  const double n1 = static_cast<double>(rep.pools[1].blocks_won + rep.pools[1].uncles);
  auto close = [](double a, double b, double na, double nb) {
    const double p = 0.5 * (a + b);
    return std::abs(a - b) < 3.0 * std::sqrt(p * (1.0 - p) * (1.0 / na + 1.0 / nb));
  };
  CHECK(close(rates[0].uncle_rate, rates[1].uncle_rate, n0, n1));
  CHECK(close(rates[0].fail_rate, rates[1].fail_rate, double(rep.pools[0].forks_involved),
              double(rep.pools[1].forks_involved)));
  // Fork involvement per leader block is a count ratio, compare through its mean.
  CHECK(std::abs(rates[0].fork_rate - rates[1].fork_rate) < 0.01);
}

TEST_CASE("bookkeeping identities") {
  for (auto split : {SplitMode::deterministic_half, SplitMode::random_per_pool}) {
    for (auto tie : {TieMode::coin_flip, TieMode::recursive_race}) {
      auto cfg = config({0.4, 0.3, 0.2, 0.1}, 0.8, 20000, 3, 0.375);
      cfg.split = split;
      cfg.tie = tie;
      const auto rep = simulate(cfg);
      std::uint64_t won = 0, uncles = 0, lost = 0, involved = 0, initiated = 0;
      for (const auto& t : rep.pools) {
        won += t.blocks_won;
        uncles += t.uncles;
        lost += t.forks_lost;
        involved += t.forks_involved;
        initiated += t.forks_initiated;
        CHECK(t.reward == static_cast<double>(t.blocks_won) * 2.0 + static_cast<double>(t.uncles) * 0.375 * 2.0);
      }
      CHECK(won == 20000);
      CHECK(won + uncles == rep.total_blocks);
      CHECK(lost == rep.fork_events);
      CHECK(involved == 2 * rep.fork_events);
      CHECK(initiated == rep.fork_events);
      CHECK(uncles <= rep.fork_events);
      CHECK(rep.fork_events <= rep.total_blocks);
    }
  }
}

TEST_CASE("same config and seed give identical reports") {
  const auto cfg = config({0.5, 0.3, 0.2}, 0.4, 50000, 99);
  const auto a = to_json(simulate(cfg)).dump();
  const auto b = to_json(simulate(cfg)).dump();
  CHECK(a == b);
  auto other = cfg;
  other.seed = 100;
  CHECK(to_json(simulate(other)).dump() != a);
}

TEST_CASE("trace matches the report") {
  SimTrace trace;
  const auto rep = simulate(config({0.6, 0.4}, 0.5, 3000), &trace);
  CHECK(trace.blocks.size() == rep.total_blocks);
  CHECK(trace.forks.size() == rep.fork_events);
  std::uint64_t uncles0 = 0;
  for (const auto& b : trace.blocks) uncles0 += (b.miner == 0 && !b.canonical);
  CHECK(uncles0 == rep.pools[0].uncles);
}

TEST_CASE("empirical rates from a constructed report") {
  SimReport r;
  r.pools.resize(2);
  r.pools[0].blocks_won = 3;
  r.pools[0].uncles = 1;
  r.pools[0].forks_involved = 2;
  r.pools[0].forks_lost = 1;
  const auto e = empirical_rates(r);
  CHECK(e[0].uncle_rate == doctest::Approx(0.25));
  CHECK(e[0].fork_rate == doctest::Approx(0.5));
  CHECK(e[0].fail_rate == doctest::Approx(0.5));
  CHECK(e[1].uncle_rate == 0.0);
  CHECK(e[1].fail_rate == 0.0);
}

TEST_CASE("property: share of leader blocks follows the hash shares") {
  const std::vector<double> x{0.33, 0.21, 0.11, 0.08, 0.04, 0.23};
  const auto rep = simulate(config(x, 0.2, 200000, 8));
  const double total = static_cast<double>(rep.total_blocks);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double share = static_cast<double>(rep.pools[i].blocks_won + rep.pools[i].uncles) / total;
    CHECK(std::abs(z_score(share, x[i], total)) < 3.0);
  }
}

TEST_CASE("property: tie handling is immaterial at the symmetric point") {
  auto coin = config({0.5, 0.5}, 1.0, 300000, 21);
  auto race = coin;
  race.tie = TieMode::recursive_race;
  const auto a = simulate(coin), b = simulate(race);
  for (std::size_t i = 0; i < 2; ++i) {
    const double na = static_cast<double>(a.pools[i].forks_involved);
    const double nb = static_cast<double>(b.pools[i].forks_involved);
    const double fa = static_cast<double>(a.pools[i].forks_lost) / na;
    const double fb = static_cast<double>(b.pools[i].forks_lost) / nb;
    CHECK(std::abs(fa - fb) < 3.0 * std::sqrt(0.25 / na + 0.25 / nb));
  }
}
