#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forkgame/evolution.hpp"
#include "forkgame/fork_model.hpp"
#include "forkgame/metrics.hpp"
#include "forkgame/mining_sim.hpp"

namespace forkgame::cli {

struct RunConfig {
  NetworkParams network = NetworkParams::with_delay(1.0, 0.0, 1.0, 0.0);
  FailMode analytic_mode = FailMode::exact;

  std::optional<PoolMarket> market;
  std::optional<std::vector<double>> hash_fractions;

  std::optional<PopulationState> initial;
  IntegratorOptions integrator;
  FailMode population_mode = FailMode::approx;

  std::uint64_t sim_blocks = 100000;
  std::uint64_t sim_seed = 1;
  TieMode tie = TieMode::coin_flip;
  SplitMode split = SplitMode::deterministic_half;

  std::vector<double> sweep_tau;
  std::vector<double> sweep_theta;
  SweepMethod sweep_method = SweepMethod::ode;

  /// Hash distribution for the fork model and simulator: explicit fractions,
  /// or the one induced by the market and the initial population.
  HashDistribution hash_distribution() const;
  const PoolMarket& require_market() const;
  PopulationState initial_or_uniform() const;
};

/// Throws ParseError naming the offending key on unknown keys, wrong types or
/// inconsistent sizes; IoError when the file cannot be read.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Every field with defaults filled in; parse_config(resolved(c)) == c.
nlohmann::json resolved(const RunConfig& c);

const char* to_string(FailMode m);
const char* to_string(TieMode m);
const char* to_string(SplitMode m);
const char* to_string(SweepMethod m);
FailMode parse_fail_mode(const std::string& s);
TieMode parse_tie_mode(const std::string& s);
SplitMode parse_split_mode(const std::string& s);
SweepMethod parse_sweep_method(const std::string& s);

}  // namespace forkgame::cli
