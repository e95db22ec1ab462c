#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace forkgame {

/// Which form of the per-pool fail probability to use. `exact` keeps the
/// exponentials of the two-branch race, `approx` is the first-order form
/// that the payoff and the equilibrium theorems are built on.
enum class FailMode { exact, approx };

/// Block size decomposition of the propagation delay: transmission
/// s / (gamma * bandwidth) plus verification verify_beta * s.
struct BlockSizeModel {
  double size = 0.0;         // data units
  double gamma = 1.0;        // network-scale factor
  double bandwidth = 1.0;    // data units per second
  double verify_beta = 0.0;  // seconds per data unit
};

/// Propagation delay in seconds. An empty block (size 0) yields 0 and a zero
/// verification coefficient leaves the pure transmission term. Throws
/// std::domain_error on negative size/verify_beta or non-positive
/// gamma/bandwidth.
double propagation_delay(const BlockSizeModel& m);

class NetworkParams {
 public:
  /// lambda > 0 blocks/s, tau >= 0 s, reward > 0, theta in [0, 1].
  static NetworkParams with_delay(double lambda, double tau, double reward, double theta);
  static NetworkParams with_block_size(double lambda, const BlockSizeModel& block,
                                       double reward, double theta);

  double lambda() const { return lambda_; }
  double tau() const { return tau_; }
  double reward() const { return reward_; }
  double theta() const { return theta_; }
  double lambda_tau() const { return lambda_tau_; }
  /// 1 - exp(-lambda * tau), cached at construction.
  double concurrent_prob() const { return concurrent_prob_; }
  const std::optional<BlockSizeModel>& block_size() const { return block_; }

  /// Same network with a different delay or uncle fraction (used by sweeps).
  NetworkParams with_tau(double tau) const;
  NetworkParams with_theta(double theta) const;

 private:
  NetworkParams(double lambda, double tau, double reward, double theta,
                std::optional<BlockSizeModel> block);

  double lambda_;
  double tau_;
  double reward_;
  double theta_;
  double lambda_tau_;
  double concurrent_prob_;
  std::optional<BlockSizeModel> block_;
};

/// Normalized hash-rate fractions on the simplex.
class HashDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Throws std::domain_error unless every entry is finite and >= 0 and the
  /// entries sum to 1 within kSumTolerance.
  explicit HashDistribution(std::vector<double> fractions);

  /// Normalizes raw hash rates h_i by their total V.
  static HashDistribution from_hash_rates(std::span<const double> rates);

  std::size_t size() const { return x_.size(); }
  double operator[](std::size_t i) const { return x_[i]; }
  std::span<const double> fractions() const { return x_; }

 private:
  std::vector<double> x_;
};

/// Two-branch race between the pool that mined the last block (alpha) and
/// the pool that forked it (beta_rival). Non-combatants split evenly.
struct ForkRace {
  double alpha = 0.0;
  double beta_rival = 0.0;

  static ForkRace make(double alpha, double beta_rival);

  /// Hash share of the rival's branch c2.
  double eta1() const { return (1.0 - alpha + beta_rival) / 2.0; }
  /// Hash share of the initiator's branch c1.
  double eta2() const { return (1.0 + alpha - beta_rival) / 2.0; }
  double lambda1(const NetworkParams& p) const { return eta2() * p.lambda(); }
  double lambda2(const NetworkParams& p) const { return eta1() * p.lambda(); }
};

struct RaceOutcome {
  double initiator_wins = 0.0;  // c1 leads by at least tau
  double rival_wins = 0.0;      // c2 leads by at least tau
  double tie = 0.0;
};

double prob_concurrent_block(const NetworkParams& p);

/// Probability that the block just mined by pool i gets forked.
/// Throws std::out_of_range for a bad index.
double prob_fork_after(std::size_t i, const HashDistribution& x, const NetworkParams& p);

RaceOutcome race_win_probabilities(const ForkRace& race, const NetworkParams& p);

/// Probability that pool i's block loses a fork that has already happened.
/// Requires M >= 2 and x_i < 1 (std::domain_error otherwise).
double prob_fail(std::size_t i, const HashDistribution& x, const NetworkParams& p, FailMode mode);

/// Probability that a block of pool i ends up stale; 0 for a monopoly.
double prob_uncle(std::size_t i, const HashDistribution& x, const NetworkParams& p, FailMode mode);

/// Expected reward per block period, x_i R (1 - (1 - theta) P^uncle_i).
double expected_reward(std::size_t i, const HashDistribution& x, const NetworkParams& p,
                       FailMode mode);

/// Expected reward per unit of hash share, normalized so that a fork-free
/// network gives 1 for every pool. Requires x_i > 0.
double reward_ratio(std::size_t i, const HashDistribution& x, const NetworkParams& p,
                    FailMode mode);

/// Probability that exactly one competing block appears given that at least
/// one does. Defined as 1 at lambda_tau = 0.
double prob_single_rival_branch(double lambda_tau);

namespace detail {

/// P(initiator's block is stale | fork by a rival), closed form
/// 1/2 (1 + eta1 e^{-lt eta2} - eta2 e^{-lt eta1}).
double pair_fail(double x_initiator, double x_rival, double lambda_tau);

/// Uncle probability of every pool at once, writing into `out`. Operates on
/// raw fractions without re-validating the simplex; used by inner loops.
void uncle_probs(std::span<const double> x, double concurrent_prob, double lambda_tau,
                 FailMode mode, std::span<double> out);

}  // namespace detail

}  // namespace forkgame
