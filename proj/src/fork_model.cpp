#include "forkgame/fork_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace forkgame {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

void check_index(std::size_t i, const HashDistribution& x) {
  if (i >= x.size()) {
    throw std::out_of_range("pool index " + std::to_string(i) + " out of range for " +
                            std::to_string(x.size()) + " pools");
  }
}

}  // namespace

double propagation_delay(const BlockSizeModel& m) {
  require(std::isfinite(m.size) && m.size >= 0.0, "block size must be >= 0");
  require(std::isfinite(m.gamma) && m.gamma > 0.0, "network-scale factor gamma must be > 0");
  require(std::isfinite(m.bandwidth) && m.bandwidth > 0.0, "bandwidth must be > 0");
  require(std::isfinite(m.verify_beta) && m.verify_beta >= 0.0,
          "verification coefficient must be >= 0");
  return m.size / (m.gamma * m.bandwidth) + m.verify_beta * m.size;
}

NetworkParams::NetworkParams(double lambda, double tau, double reward, double theta,
                             std::optional<BlockSizeModel> block)
    : lambda_(lambda), tau_(tau), reward_(reward), theta_(theta), block_(block) {
  require(std::isfinite(lambda) && lambda > 0.0, "block rate lambda must be > 0");
  require(std::isfinite(tau) && tau >= 0.0, "propagation delay tau must be >= 0");
  require(std::isfinite(reward) && reward > 0.0, "block reward R must be > 0");
  require(std::isfinite(theta) && theta >= 0.0 && theta <= 1.0,
          "uncle fraction theta must lie in [0, 1]");
  lambda_tau_ = lambda_ * tau_;
  concurrent_prob_ = -std::expm1(-lambda_tau_);
}

NetworkParams NetworkParams::with_delay(double lambda, double tau, double reward, double theta) {
  return NetworkParams(lambda, tau, reward, theta, std::nullopt);
}

NetworkParams NetworkParams::with_block_size(double lambda, const BlockSizeModel& block,
                                             double reward, double theta) {
  return NetworkParams(lambda, propagation_delay(block), reward, theta, block);
}

NetworkParams NetworkParams::with_tau(double tau) const {
  return NetworkParams(lambda_, tau, reward_, theta_, std::nullopt);
}

NetworkParams NetworkParams::with_theta(double theta) const {
  return NetworkParams(lambda_, tau_, reward_, theta, block_);
}

HashDistribution::HashDistribution(std::vector<double> fractions) : x_(std::move(fractions)) {
  require(!x_.empty(), "hash distribution needs at least one pool");
  for (double v : x_) {
    require(std::isfinite(v) && v >= 0.0, "hash fractions must be finite and >= 0");
  }
  const double total = std::accumulate(x_.begin(), x_.end(), 0.0);
  require(std::abs(total - 1.0) <= kSumTolerance, "hash fractions must sum to 1");
}

HashDistribution HashDistribution::from_hash_rates(std::span<const double> rates) {
  require(!rates.empty(), "hash distribution needs at least one pool");
  double total = 0.0;
  for (double h : rates) {
    require(std::isfinite(h) && h >= 0.0, "hash rates must be finite and >= 0");
    total += h;
  }
  require(total > 0.0, "total hash rate must be > 0");
  std::vector<double> x(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) x[i] = rates[i] / total;
  // Push the rounding residue onto the largest entry so the sum check holds.
  const double sum = std::accumulate(x.begin(), x.end(), 0.0);
  auto largest = std::max_element(x.begin(), x.end());
  *largest += 1.0 - sum;
  return HashDistribution(std::move(x));
}

ForkRace ForkRace::make(double alpha, double beta_rival) {
  require(std::isfinite(alpha) && alpha >= 0.0, "initiator fraction must be >= 0");
  require(std::isfinite(beta_rival) && beta_rival >= 0.0, "rival fraction must be >= 0");
  require(alpha + beta_rival <= 1.0 + HashDistribution::kSumTolerance,
          "combatant fractions must sum to at most 1");
  return ForkRace{alpha, beta_rival};
}

double prob_concurrent_block(const NetworkParams& p) { return p.concurrent_prob(); }

double prob_fork_after(std::size_t i, const HashDistribution& x, const NetworkParams& p) {
  check_index(i, x);
  return (1.0 - x[i]) * p.concurrent_prob();
}

RaceOutcome race_win_probabilities(const ForkRace& race, const NetworkParams& p) {
  const double lt = p.lambda_tau();
  RaceOutcome out;
  out.initiator_wins = race.eta2() * std::exp(-lt * race.eta1());
  out.rival_wins = race.eta1() * std::exp(-lt * race.eta2());
  out.tie = 1.0 - (out.initiator_wins + out.rival_wins);
  return out;
}

namespace detail {

double pair_fail(double x_initiator, double x_rival, double lambda_tau) {
  const double eta1 = (1.0 - x_initiator + x_rival) / 2.0;
  const double eta2 = (1.0 + x_initiator - x_rival) / 2.0;
  return 0.5 * (1.0 + eta1 * std::exp(-lambda_tau * eta2) - eta2 * std::exp(-lambda_tau * eta1));
}

void uncle_probs(std::span<const double> x, double concurrent_prob, double lambda_tau,
                 FailMode mode, std::span<double> out) {
  const std::size_t m = x.size();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i || x[j] == 0.0) continue;
      // (1 - x_i) from P^fork cancels the 1 / (1 - x_i) of the rival draw.
      acc += mode == FailMode::exact ? x[j] * pair_fail(x[i], x[j], lambda_tau)
                                     : 0.5 * x[j] * (1.0 - x[i] + x[j]);
    }
    out[i] = concurrent_prob * acc;
  }
}

}  // namespace detail

double prob_fail(std::size_t i, const HashDistribution& x, const NetworkParams& p, FailMode mode) {
  check_index(i, x);
  require(x.size() >= 2, "fail probability needs at least two pools");
  require(x[i] < 1.0, "fail probability undefined for a monopoly pool (no possible rival)");
  const double rest = 1.0 - x[i];
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i || x[j] == 0.0) continue;
    if (mode == FailMode::exact) {
      acc += x[j] / rest * detail::pair_fail(x[i], x[j], p.lambda_tau());
    } else {
      acc += x[j] * (1.0 - x[i] + x[j]) / (2.0 * rest);
    }
  }
  return acc;
}

double prob_uncle(std::size_t i, const HashDistribution& x, const NetworkParams& p, FailMode mode) {
  check_index(i, x);
  if (x.size() == 1) return 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i || x[j] == 0.0) continue;
    acc += mode == FailMode::exact ? x[j] * detail::pair_fail(x[i], x[j], p.lambda_tau())
                                   : 0.5 * x[j] * (1.0 - x[i] + x[j]);
  }
  return p.concurrent_prob() * acc;
}

double expected_reward(std::size_t i, const HashDistribution& x, const NetworkParams& p,
                       FailMode mode) {
  const double uncle = prob_uncle(i, x, p, mode);
  return x[i] * p.reward() * (1.0 - (1.0 - p.theta()) * uncle);
}

double reward_ratio(std::size_t i, const HashDistribution& x, const NetworkParams& p,
                    FailMode mode) {
  check_index(i, x);
  require(x[i] > 0.0, "reward ratio undefined for a pool with zero hash share");
  return 1.0 - (1.0 - p.theta()) * prob_uncle(i, x, p, mode);
}

double prob_single_rival_branch(double lambda_tau) {
  require(std::isfinite(lambda_tau) && lambda_tau >= 0.0, "lambda * tau must be >= 0");
  if (lambda_tau == 0.0) return 1.0;
  return lambda_tau * std::exp(-lambda_tau) / -std::expm1(-lambda_tau);
}

}  // namespace forkgame
