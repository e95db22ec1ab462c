#pragma once

// Independent reference computations used to check the library.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "forkgame/evolution.hpp"

namespace oracle {

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// P(first block on branch 2 arrives at least tau before branch 1's) by
// integrating over the arrival time of branch 2's block.
inline double lead_probability(double rate_leader, double rate_other, double tau) {
  const double upper = 60.0 / rate_leader;
  return simpson([&](double s) { return rate_leader * std::exp(-rate_leader * s) * std::exp(-rate_other * (s + tau)); },
                 0.0, upper);
}

// Stale probability of the initiator's block from the race outcome, with
// ties split evenly.
inline double pair_fail_by_quadrature(double xi, double xj, double lambda, double tau) {
  const double share_i = (1.0 + xi - xj) / 2.0;
  const double share_j = 1.0 - share_i;
  const double rival = lead_probability(lambda * share_j, lambda * share_i, tau);
  const double init = lead_probability(lambda * share_i, lambda * share_j, tau);
  return rival + 0.5 * (1.0 - rival - init);
}

inline double determinant(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (a[piv][c] == 0.0) return 0.0;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

// Central-difference Jacobian of the reduced system in r_1..r_{M-1} with
// r_M = 1 - sum of the others.
inline std::vector<std::vector<double>> reduced_jacobian(const std::vector<double>& r,
                                                         const forkgame::PoolMarket& m,
                                                         const forkgame::NetworkParams& p, double h = 1e-6) {
  const std::size_t n = r.size() - 1;
  forkgame::detail::PayoffScratch s;
  auto f = [&](std::vector<double> red) {
    double rest = 1.0;
    for (double v : red) rest -= v;
    red.push_back(rest);
    std::vector<double> out(red.size());
    forkgame::detail::rhs(red, m, p, forkgame::FailMode::approx, s, out);
    out.pop_back();
    return out;
  };
  std::vector<double> base(r.begin(), r.end() - 1);
  std::vector<std::vector<double>> jac(n, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    auto up = base, dn = base;
    up[j] += h;
    dn[j] -= h;
    const auto fu = f(up), fd = f(dn);
    for (std::size_t i = 0; i < n; ++i) jac[i][j] = (fu[i] - fd[i]) / (2.0 * h);
  }
  return jac;
}

inline std::vector<double> leading_minors(const std::vector<std::vector<double>>& a) {
  std::vector<double> out;
  for (std::size_t k = 1; k <= a.size(); ++k) {
    std::vector<std::vector<double>> sub(k, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) sub[i][j] = a[i][j];
    out.push_back(determinant(sub));
  }
  return out;
}

// Payoff difference y_1 - y_2 straight from the payoff formula, used to
// check the cubic coefficients and the stability slope.
inline double two_pool_gap(double r1, const forkgame::PoolMarket& m, const forkgame::NetworkParams& p) {
  const double w1 = m.omega[0], w2 = m.omega[1];
  const double S = w1 * r1 + w2 * (1.0 - r1);
  const double a = w1 * r1 / S, b = 1.0 - a;
  const double k = -std::expm1(-p.lambda() * p.tau()) * (1.0 - p.theta());
  // Two pools, first-order form: uncle_i = P/2 * x_j (1 - x_i + x_j) = P x_j^2.
  const double y1 = p.reward() * w1 / (m.miners * S) * (1.0 - k * b * b) - m.cost * w1;
  const double y2 = p.reward() * w2 / (m.miners * S) * (1.0 - k * a * a) - m.cost * w2;
  return y1 - y2;
}

// Random point on the affine set {r >= 0, sum r = 1, sum r w = level} with all
// r_i > 0, by rejection from the flat Dirichlet then correcting along a
// direction that keeps the sum fixed.
template <class Rng>
std::vector<double> manifold_point(const std::vector<double>& w, double level, Rng& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = w.size();
  for (;;) {
    std::vector<double> r(n);
    double t = 0.0;
    for (auto& v : r) t += v = -std::log(1.0 - u(g));
    for (auto& v : r) v /= t;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += r[i] * w[i];
    // Move mass between the first and last pool: changes s by (w_1 - w_M) per unit.
    const double d = (level - s) / (w.front() - w.back());
    r.front() += d;
    r.back() -= d;
    if (r.front() > 1e-3 && r.back() > 1e-3) {
      double sum = 0.0;
      for (double v : r) sum += v;
      r.back() += 1.0 - sum;
      return r;
    }
  }
}

}  // namespace oracle
