#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forkgame/mining_sim.hpp"

namespace forkgame {

enum class BlockStatus { canonical, uncle };

struct BlockRecord {
  std::uint64_t height = 0;
  std::string miner;
  BlockStatus status = BlockStatus::canonical;
};

struct ForkRecord {
  std::uint64_t height = 0;
  std::string miner_a;
  std::string miner_b;
  bool a_won = true;
  int branches = 2;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

template <class Record>
struct Loaded {
  std::vector<Record> records;
  std::vector<RowError> errors;
};

/// Header `height,miner,status`. Bad rows are collected in `errors`; with
/// strict set the first bad row throws ParseError instead.
Loaded<BlockRecord> load_blocks(std::istream& in, bool strict = false);
Loaded<BlockRecord> load_blocks(const std::filesystem::path& path, bool strict = false);

/// Header `height,miner_a,miner_b,winner` with an optional `branches` column.
Loaded<ForkRecord> load_forks(std::istream& in, bool strict = false);
Loaded<ForkRecord> load_forks(const std::filesystem::path& path, bool strict = false);

struct MinerStats {
  std::string miner;
  std::uint64_t canonical = 0;
  std::uint64_t uncles = 0;
  std::uint64_t forks_involved = 0;
  std::uint64_t forks_lost = 0;
  // Missing when the miner has no blocks at all.
  std::optional<double> uncle_rate;
  std::optional<double> fork_rate;
  double fail_rate = 0.0;
  std::uint64_t total() const { return canonical + uncles; }
};

struct StatsBin {
  double lo = 0.0;  // interval (lo, hi] over blocks mined
  double hi = 0.0;
  std::uint64_t miners = 0;
  std::uint64_t blocks = 0;
  std::uint64_t uncles = 0;
  std::uint64_t forks_involved = 0;
  std::uint64_t forks_lost = 0;
  double uncle_rate = 0.0;
  double fork_rate = 0.0;
  double fail_rate = 0.0;
};

struct BinnedStats {
  std::vector<StatsBin> bins;
  std::vector<MinerStats> miners;  // sorted by name
  std::vector<std::string> warnings;
};

/// Default bin edges 0, 10, 100, 1000, 10000, inf.
std::vector<double> default_bin_edges();

BinnedStats miner_stats(const std::vector<BlockRecord>& blocks, const std::vector<ForkRecord>& forks,
                        const std::vector<double>& edges = default_bin_edges());

struct BranchCount {
  std::uint64_t count = 0;
  double fraction = 0.0;
};

std::map<int, BranchCount> branch_histogram(const std::vector<ForkRecord>& forks);

struct TopKGini {
  double gini = 0.0;
  std::vector<std::pair<std::string, std::uint64_t>> miners;  // the ones used, largest first
  std::vector<std::string> warnings;
};

TopKGini top_k_gini(const std::vector<BlockRecord>& blocks, std::size_t k);

/// Aligned text table, one row per bin.
std::string format_stats_table(const BinnedStats& s);

/// Simulator trace as records; pool i is named "pool<i>".
std::vector<BlockRecord> trace_blocks(const SimTrace& t);
std::vector<ForkRecord> trace_forks(const SimTrace& t);
void write_blocks_csv(std::ostream& out, const std::vector<BlockRecord>& blocks);
void write_forks_csv(std::ostream& out, const std::vector<ForkRecord>& forks);

}  // namespace forkgame
