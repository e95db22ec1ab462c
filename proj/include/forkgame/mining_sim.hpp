#pragma once

#include <cstdint>
#include <vector>

#include "forkgame/fork_model.hpp"

namespace forkgame {

enum class TieMode { coin_flip, recursive_race };
enum class SplitMode { deterministic_half, random_per_pool };

struct SimConfig {
  NetworkParams params;
  HashDistribution x;
  std::uint64_t horizon_blocks = 0;
  std::uint64_t seed = 0;
  TieMode tie = TieMode::coin_flip;
  SplitMode split = SplitMode::deterministic_half;
};

// Every round a pool mines the block the round is about. That block ends up
// either canonical (blocks_won) or stale (uncles). A fork event is charged to
// both combatants through forks_involved; the rival's own block only settles
// the race and is not entered in any pool's block ledger.
struct PoolTally {
  std::uint64_t blocks_won = 0;
  std::uint64_t uncles = 0;
  std::uint64_t forks_initiated = 0;
  std::uint64_t forks_involved = 0;
  std::uint64_t forks_lost = 0;
  double reward = 0.0;
};

struct SimReport {
  std::vector<PoolTally> pools;
  std::uint64_t total_blocks = 0;  // rounds played = sum of blocks_won + uncles
  std::uint64_t fork_events = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;  // informational, never serialized
};

struct BlockEvent {
  std::uint64_t height = 0;
  std::size_t miner = 0;
  bool canonical = true;
};

struct ForkEvent {
  std::uint64_t height = 0;
  std::size_t initiator = 0;
  std::size_t rival = 0;
  bool initiator_won = true;
};

struct SimTrace {
  std::vector<BlockEvent> blocks;
  std::vector<ForkEvent> forks;
};

/// Runs until horizon_blocks canonical blocks have been credited. Pass a trace
/// to record every block and fork (memory grows with the horizon).
SimReport simulate(const SimConfig& cfg, SimTrace* trace = nullptr);

struct EmpiricalRates {
  double uncle_rate = 0.0;
  double fork_rate = 0.0;
  double fail_rate = 0.0;
};

std::vector<EmpiricalRates> empirical_rates(const SimReport& r);

}  // namespace forkgame
