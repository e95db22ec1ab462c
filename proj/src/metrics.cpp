#include "forkgame/metrics.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "forkgame/equilibrium.hpp"

namespace forkgame {

double gini(std::span<const double> shares) {
  const std::size_t m = shares.size();
  if (m <= 1) return 0.0;
  double total = 0.0;
  for (double v : shares) total += v;
  if (total <= 0.0) throw std::domain_error("gini needs a positive total");
  double diff = 0.0;
  for (double a : shares) {
    for (double b : shares) diff += std::abs(a - b);
  }
  const double mean = total / static_cast<double>(m);
  return diff / (2.0 * static_cast<double>(m) * static_cast<double>(m) * mean);
}

FairnessSpread fairness_spread(const HashDistribution& x, const NetworkParams& p, FailMode mode) {
  FairnessSpread out;
  out.min_ratio = INFINITY;
  out.max_ratio = -INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw std::domain_error("fairness spread needs every pool share > 0");
    const double v = reward_ratio(i, x, p, mode);
    if (v < out.min_ratio) {
      out.min_ratio = v;
      out.argmin = i;
    }
    if (v > out.max_ratio) {
      out.max_ratio = v;
      out.argmax = i;
    }
  }
  out.spread = out.max_ratio - out.min_ratio;
  return out;
}

namespace {

SweepRow sweep_point(const SweepSpec& spec, double tau, double theta) {
  SweepRow row;
  row.tau = tau;
  row.theta = theta;
  row.method = spec.method == SweepMethod::ode ? "ode" : "analytic";
  const std::size_t m = spec.market.size();
  try {
    const NetworkParams p = spec.network.with_tau(tau).with_theta(theta);
    const PopulationState start = spec.r0 ? *spec.r0 : PopulationState::uniform(m);
    std::optional<PopulationState> state;
    row.status = "ok";
    if (spec.method == SweepMethod::analytic) {
      const EquilibriumResult res = classify(spec.market, p, start, spec.integrator);
      if (res.kind == EquilibriumKind::nss_manifold) {
        row.status = "ok:manifold, point reached from r0";
      } else if (res.ambiguous) {
        row.status = "ok:ambiguous, point reached from r0";
      } else if (res.kind == EquilibriumKind::ode_estimate) {
        row.status = "ok:no closed form, ode";
        state = res.points.front().state;
      } else {
        state = res.points.front().state;
      }
    }
    if (!state) {
      const Trajectory tr = integrate(start, spec.market, p, FailMode::approx, spec.integrator);
      if (!tr.converged && row.status == "ok") row.status = "ok:t_max reached";
      state = tr.terminal;
    }
    row.r.assign(state->values().begin(), state->values().end());
    row.gini = gini(hash_fraction(*state, spec.market));
  } catch (const std::exception& e) {
    row.r.assign(m, std::numeric_limits<double>::quiet_NaN());
    row.gini = std::numeric_limits<double>::quiet_NaN();
    row.status = std::string("error: ") + e.what();
  }
  return row;
}

}  // namespace

std::vector<SweepRow> sweep(const SweepSpec& spec) {
  if (spec.tau_grid.empty() || spec.theta_grid.empty()) {
    throw std::domain_error("sweep grids must be nonempty");
  }
  spec.market.validate();
  for (double t : spec.tau_grid) {
    if (!(t >= 0.0)) throw std::domain_error("sweep tau values must be >= 0");
  }
  for (double t : spec.theta_grid) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("sweep theta values must lie in [0, 1]");
  }

  const std::size_t nt = spec.theta_grid.size();
  const std::size_t total = spec.tau_grid.size() * nt;
  std::vector<SweepRow> rows(total);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      rows[k] = sweep_point(spec, spec.tau_grid[k / nt], spec.theta_grid[k % nt]);
    }
  };
  unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return rows;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 0) throw std::domain_error("grid needs at least one point");
  if (n == 1) {
    if (a != b) throw std::domain_error("a one-point grid needs a == b");
    return {a};
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  out.back() = b;
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  const auto c1 = text.find(':');
  const auto c2 = c1 == std::string::npos ? c1 : text.find(':', c1 + 1);
  if (c2 == std::string::npos || text.find(':', c2 + 1) != std::string::npos) {
    throw std::domain_error("grid must look like a:b:n, got '" + text + "'");
  }
  try {
    std::size_t used = 0;
    const std::string sa = text.substr(0, c1), sb = text.substr(c1 + 1, c2 - c1 - 1),
                      sn = text.substr(c2 + 1);
    const double a = std::stod(sa, &used);
    if (used != sa.size()) throw std::invalid_argument(sa);
    const double b = std::stod(sb, &used);
    if (used != sb.size()) throw std::invalid_argument(sb);
    const long n = std::stol(sn, &used);
    if (used != sn.size() || n < 1) throw std::invalid_argument(sn);
    return linspace(a, b, static_cast<std::size_t>(n));
  } catch (const std::invalid_argument&) {
    throw std::domain_error("grid must look like a:b:n, got '" + text + "'");
  } catch (const std::out_of_range&) {
    throw std::domain_error("grid value out of range in '" + text + "'");
  }
}

}  // namespace forkgame
