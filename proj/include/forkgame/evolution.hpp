#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "forkgame/fork_model.hpp"

namespace forkgame {

/// Pools defined by the hash rate each member miner must supply.
struct PoolMarket {
  std::vector<double> omega;  // hash units per miner, one entry per pool
  double miners = 1.0;        // N
  double cost = 0.0;          // p, per hash unit per block period

  /// Throws std::domain_error unless M >= 1, omega > 0, N >= M and p >= 0.
  void validate() const;
  std::size_t size() const { return omega.size(); }
};

/// Population shares over the pools.
class PopulationState {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit PopulationState(std::vector<double> r);
  static PopulationState vertex(std::size_t m, std::size_t i);
  static PopulationState uniform(std::size_t m);

  std::size_t size() const { return r_.size(); }
  double operator[](std::size_t i) const { return r_[i]; }
  std::span<const double> values() const { return r_; }

 private:
  std::vector<double> r_;
};

HashDistribution hash_fraction(const PopulationState& r, const PoolMarket& m);

/// Expected payoff per block period of a miner in pool i. Requires r_i > 0.
double miner_payoff(std::size_t i, const PopulationState& r, const PoolMarket& m,
                    const NetworkParams& p, FailMode mode = FailMode::approx);

std::vector<double> replicator_rhs(const PopulationState& r, const PoolMarket& m,
                                   const NetworkParams& p, FailMode mode = FailMode::approx);

struct IntegratorOptions {
  double step = 0.01;
  double t_max = 1e4;
  double eps = 1e-9;
  std::size_t sample_every = 100;  // keep every n-th step in the trajectory
};

struct Trajectory {
  std::vector<double> times;
  std::vector<PopulationState> states;
  PopulationState terminal{std::vector<double>{1.0}};
  bool converged = false;
  double residual = 0.0;  // max |dr/dt| at the terminal state
  double t_end = 0.0;
};

/// Fixed-step RK4 with clamp-and-renormalize after each step. Stops once
/// max |dr/dt| < eps held for 10 consecutive steps, or at t_max.
Trajectory integrate(const PopulationState& r0, const PoolMarket& m, const NetworkParams& p,
                     FailMode mode = FailMode::approx, const IntegratorOptions& opt = {});

namespace detail {

/// Workspace for the allocation-free kernels below.
struct PayoffScratch {
  std::vector<double> x;
  std::vector<double> uncle;
  std::vector<double> y;
  void resize(std::size_t m) {
    x.resize(m);
    uncle.resize(m);
    y.resize(m);
  }
};

/// Payoffs of all pools at r (entries with r_i <= 0 are left at 0).
void payoffs(std::span<const double> r, const PoolMarket& m, const NetworkParams& p,
             FailMode mode, PayoffScratch& s);

/// Replicator velocity at r into out.
void rhs(std::span<const double> r, const PoolMarket& m, const NetworkParams& p, FailMode mode,
         PayoffScratch& s, std::span<double> out);

/// Payoff of pool i at a state r, usable for r_i = 0 too (invasion checks).
double payoff_at(std::size_t i, std::span<const double> r, const PoolMarket& m,
                 const NetworkParams& p, FailMode mode, PayoffScratch& s);

}  // namespace detail

}  // namespace forkgame
