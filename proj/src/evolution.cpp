#include "forkgame/evolution.hpp"

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

double weighted_total(std::span<const double> r, const std::vector<double>& omega) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += omega[i] * std::max(r[i], 0.0);
  return s;
}

void project_to_simplex(std::vector<double>& r) {
  double total = 0.0;
  for (double& v : r) {
    if (!(v > 0.0)) v = 0.0;
    total += v;
  }
  if (total <= 0.0) throw std::domain_error("population collapsed to zero during integration");
  for (double& v : r) v /= total;
}

}  // namespace

void PoolMarket::validate() const {
  require(!omega.empty(), "market needs at least one pool");
  for (double w : omega) require(std::isfinite(w) && w > 0.0, "hash specifications omega must be > 0");
  require(std::isfinite(miners) && miners >= static_cast<double>(omega.size()),
          "miner count N must be >= number of pools");
  require(std::isfinite(cost) && cost >= 0.0, "cost p must be >= 0");
}

PopulationState::PopulationState(std::vector<double> r) : r_(std::move(r)) {
  require(!r_.empty(), "population needs at least one pool");
  for (double v : r_) require(std::isfinite(v) && v >= 0.0, "population shares must be >= 0");
  const double total = std::accumulate(r_.begin(), r_.end(), 0.0);
  require(std::abs(total - 1.0) <= kSumTolerance, "population shares must sum to 1");
}

PopulationState PopulationState::vertex(std::size_t m, std::size_t i) {
  if (i >= m) throw std::out_of_range("vertex index out of range");
  std::vector<double> r(m, 0.0);
  r[i] = 1.0;
  return PopulationState(std::move(r));
}

PopulationState PopulationState::uniform(std::size_t m) {
  require(m >= 1, "population needs at least one pool");
  std::vector<double> r(m, 1.0 / static_cast<double>(m));
  const double total = std::accumulate(r.begin(), r.end(), 0.0);
  r[0] += 1.0 - total;
  return PopulationState(std::move(r));
}

HashDistribution hash_fraction(const PopulationState& r, const PoolMarket& m) {
  require(r.size() == m.size(), "population and market sizes differ");
  const double s = weighted_total(r.values(), m.omega);
  require(s > 0.0, "weighted population sum must be > 0");
  std::vector<double> rates(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) rates[i] = m.omega[i] * r[i];
  return HashDistribution::from_hash_rates(rates);
}

namespace detail {

void payoffs(std::span<const double> r, const PoolMarket& m, const NetworkParams& p, FailMode mode,
             PayoffScratch& s) {
  const std::size_t n = r.size();
  s.resize(n);
  const double total = weighted_total(r, m.omega);
  for (std::size_t i = 0; i < n; ++i) s.x[i] = m.omega[i] * std::max(r[i], 0.0) / total;
  detail::uncle_probs(s.x, p.concurrent_prob(), p.lambda_tau(), mode, s.uncle);
  const double scale = p.reward() / (m.miners * total);
  const double keep = 1.0 - p.theta();
  for (std::size_t i = 0; i < n; ++i) {
    // x_i / r_i = omega_i / total, so empty pools need no special case here.
    s.y[i] = scale * m.omega[i] * (1.0 - keep * s.uncle[i]) - m.cost * m.omega[i];
  }
}

void rhs(std::span<const double> r, const PoolMarket& m, const NetworkParams& p, FailMode mode,
         PayoffScratch& s, std::span<double> out) {
  payoffs(r, m, p, mode, s);
  double mass = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double ri = std::max(r[i], 0.0);
    mass += ri;
    mean += ri * s.y[i];
  }
  mean /= mass;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double ri = std::max(r[i], 0.0);
    out[i] = ri > 0.0 ? ri * (s.y[i] - mean) : 0.0;
  }
}

double payoff_at(std::size_t i, std::span<const double> r, const PoolMarket& m,
                 const NetworkParams& p, FailMode mode, PayoffScratch& s) {
  payoffs(r, m, p, mode, s);
  return s.y[i];
}

}  // namespace detail

double miner_payoff(std::size_t i, const PopulationState& r, const PoolMarket& m,
                    const NetworkParams& p, FailMode mode) {
  require(r.size() == m.size(), "population and market sizes differ");
  if (i >= r.size()) throw std::out_of_range("pool index out of range");
  require(r[i] > 0.0, "payoff of an empty pool (r_i = 0) is undefined");
  detail::PayoffScratch s;
  return detail::payoff_at(i, r.values(), m, p, mode, s);
}

std::vector<double> replicator_rhs(const PopulationState& r, const PoolMarket& m,
                                   const NetworkParams& p, FailMode mode) {
  require(r.size() == m.size(), "population and market sizes differ");
  detail::PayoffScratch s;
  std::vector<double> out(r.size());
  detail::rhs(r.values(), m, p, mode, s, out);
  return out;
}

Trajectory integrate(const PopulationState& r0, const PoolMarket& m, const NetworkParams& p,
                     FailMode mode, const IntegratorOptions& opt) {
  require(std::isfinite(opt.step) && opt.step > 0.0, "integration step must be > 0");
  require(std::isfinite(opt.t_max) && opt.t_max > 0.0, "t_max must be > 0");
  require(r0.size() == m.size(), "initial population and market sizes differ");
  m.validate();

  const std::size_t n = r0.size();
  const double h = opt.step;
  const std::size_t every = std::max<std::size_t>(opt.sample_every, 1);
  const auto steps = static_cast<std::uint64_t>(std::ceil(opt.t_max / h - 1e-9));

  detail::PayoffScratch s;
  std::vector<double> r(r0.values().begin(), r0.values().end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), vel(n);
  auto inf_norm = [](const std::vector<double>& v) {
    double a = 0.0;
    for (double e : v) a = std::max(a, std::abs(e));
    return a;
  };

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.emplace_back(r);

  int calm = 0;
  std::uint64_t k = 0;
  double t = 0.0;
  detail::rhs(r, m, p, mode, s, vel);
  while (k < steps) {
    if (inf_norm(vel) < opt.eps) {
      if (++calm >= 10) {
        traj.converged = true;
        break;
      }
    } else {
      calm = 0;
    }

    detail::rhs(r, m, p, mode, s, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = r[i] + 0.5 * h * k1[i];
    detail::rhs(tmp, m, p, mode, s, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = r[i] + 0.5 * h * k2[i];
    detail::rhs(tmp, m, p, mode, s, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = r[i] + h * k3[i];
    detail::rhs(tmp, m, p, mode, s, k4);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    project_to_simplex(r);
    ++k;
    t = static_cast<double>(k) * h;
    detail::rhs(r, m, p, mode, s, vel);
    if (k % every == 0) {
      traj.times.push_back(t);
      traj.states.emplace_back(r);
    }
  }

  if (traj.times.back() < t) {
    traj.times.push_back(t);
    traj.states.emplace_back(r);
  }
  traj.terminal = PopulationState(r);
  traj.residual = inf_norm(vel);
  traj.t_end = t;
  return traj;
}

}  // namespace forkgame
