#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include <json.hpp>

#include "forkgame/chain_data.hpp"
#include "forkgame/equilibrium.hpp"
#include "forkgame/evolution.hpp"
#include "forkgame/metrics.hpp"
#include "forkgame/mining_sim.hpp"

namespace forkgame {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const SimReport& r);
nlohmann::json to_json(const Trajectory& t);
nlohmann::json to_json(const EquilibriumResult& r);
nlohmann::json to_json(const InvasionResult& r);
nlohmann::json to_json(const JacobianMinors& j);
nlohmann::json to_json(const BinnedStats& s);
nlohmann::json to_json(const std::map<int, BranchCount>& h);
nlohmann::json to_json(const TopKGini& g);
nlohmann::json to_json(const std::vector<SweepRow>& rows);

/// Columns t, r_1..r_M.
void write_trajectory_csv(std::ostream& out, const Trajectory& t);
/// Columns tau, theta, r_1..r_M, gini, method, status.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace forkgame
