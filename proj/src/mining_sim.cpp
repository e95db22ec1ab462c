#include "forkgame/mining_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

namespace forkgame {

namespace {

// mt19937_64 is fully pinned down by the standard, unlike the std
// distributions, so the conversions below are done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}

  double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
  bool coin() { return (g_() >> 63) != 0; }

 private:
  std::mt19937_64 g_;
};

class Picker {
 public:
  explicit Picker(std::span<const double> x) : cum_(x.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) cum_[i] = acc += x[i];
  }
  std::size_t pick(Rng& rng) const {
    const double v = rng.uniform() * cum_.back();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), v);
    if (it == cum_.end()) --it;
    return static_cast<std::size_t>(it - cum_.begin());
  }

 private:
  std::vector<double> cum_;
};

}  // namespace

SimReport simulate(const SimConfig& cfg, SimTrace* trace) {
  if (cfg.horizon_blocks == 0) throw std::domain_error("horizon_blocks must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  const std::span<const double> x = cfg.x.fractions();
  const std::size_t m = x.size();
  const double lambda = cfg.params.lambda();
  const double tau = cfg.params.tau();
  const double concurrent = cfg.params.concurrent_prob();

  Rng rng(cfg.seed);
  Picker picker(x);
  SimReport rep;
  rep.pools.resize(m);
  rep.seed = cfg.seed;

  std::uint64_t won = 0;
  std::uint64_t height = 0;
  while (won < cfg.horizon_blocks) {
    const std::size_t leader = picker.pick(rng);
    bool leader_won = true;

    // Someone else finished a block before hearing about the leader's.
    // The leader keeps mining on its own block, hence the self-draw is harmless.
    if (concurrent > 0.0 && rng.uniform() < concurrent) {
      const std::size_t rival = picker.pick(rng);
      if (rival != leader) {
        double share1 = 0.0;
        if (cfg.split == SplitMode::deterministic_half) {
          share1 = 0.5 * (1.0 + x[leader] - x[rival]);
        } else {
          share1 = x[leader];
          for (std::size_t k = 0; k < m; ++k) {
            if (k != leader && k != rival && rng.coin()) share1 += x[k];
          }
        }
        const double share2 = std::max(0.0, 1.0 - share1);
        const double rate1 = lambda * share1;
        const double rate2 = lambda * share2;

        int outcome = 0;  // 1 leader branch, 2 rival branch
        while (outcome == 0) {
          const double t1 = rate1 > 0.0 ? rng.exponential(rate1) : INFINITY;
          const double t2 = rate2 > 0.0 ? rng.exponential(rate2) : INFINITY;
          if (t1 + tau <= t2) {
            outcome = 1;
          } else if (t2 + tau <= t1) {
            outcome = 2;
          } else if (cfg.tie == TieMode::coin_flip) {
            outcome = rng.coin() ? 1 : 2;
          }
        }
        leader_won = outcome == 1;

        ++rep.fork_events;
        rep.pools[leader].forks_initiated++;
        rep.pools[leader].forks_involved++;
        rep.pools[rival].forks_involved++;
        rep.pools[leader_won ? rival : leader].forks_lost++;
        if (trace) trace->forks.push_back({height, leader, rival, leader_won});
      }
    }

    if (leader_won) {
      rep.pools[leader].blocks_won++;
      ++won;
    } else {
      rep.pools[leader].uncles++;
    }
    if (trace) trace->blocks.push_back({height, leader, leader_won});
    ++height;
  }

  const double reward = cfg.params.reward();
  const double uncle_reward = cfg.params.theta() * reward;
  for (auto& t : rep.pools) {
    t.reward = static_cast<double>(t.blocks_won) * reward + static_cast<double>(t.uncles) * uncle_reward;
  }
  rep.total_blocks = height;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::vector<EmpiricalRates> empirical_rates(const SimReport& r) {
  std::vector<EmpiricalRates> out;
  out.reserve(r.pools.size());
  for (const auto& t : r.pools) {
    const double n = static_cast<double>(t.blocks_won + t.uncles);
    EmpiricalRates e;
    if (n > 0) {
      e.uncle_rate = static_cast<double>(t.uncles) / n;
      e.fork_rate = static_cast<double>(t.forks_involved) / n;
    }
    if (t.forks_involved > 0) {
      e.fail_rate = static_cast<double>(t.forks_lost) / static_cast<double>(t.forks_involved);
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace forkgame
