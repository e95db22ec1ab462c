#include "forkgame/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace forkgame {

namespace {

constexpr double kBoundary = 1e-9;       // roots this close to 0 or 1 are vertices
constexpr double kNoPenalty = 1e-9;      // (1 - theta) P^delta below this counts as zero
constexpr double kManifoldTol = 1e-9;
constexpr double kOrderTol = 1e-12;

void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

double penalty(const NetworkParams& p) { return p.concurrent_prob() * (1.0 - p.theta()); }

double poly(const std::vector<double>& k, double r) {
  return ((k[0] * r + k[1]) * r + k[2]) * r + k[3];
}

double dpoly(const std::vector<double>& k, double r) {
  return (3.0 * k[0] * r + 2.0 * k[1]) * r + k[2];
}

EquilibriumPoint vertex_point(std::size_t m, std::size_t i, Stability s) {
  return {EquilibriumKind::vertex_ess, PopulationState::vertex(m, i), s};
}

PopulationState two_state(double r1) {
  r1 = std::clamp(r1, 0.0, 1.0);
  return PopulationState({r1, 1.0 - r1});
}

void check_two_pools(const PoolMarket& m) {
  m.validate();
  require(m.size() == 2, "two-pool classifier needs exactly two pools");
  require(m.omega[0] > m.omega[1], "two-pool classifier needs omega_1 > omega_2");
}

void finish(EquilibriumResult& res) {
  res.ambiguous = res.points.size() > 1;
  if (!res.points.empty()) {
    res.kind = res.points.front().kind;
    res.stability = res.points.front().stability;
  }
}

// Newton refinement that never accepts a step making the residual worse.
double polish(double a, double b, double c, double d, double r) {
  auto f = [&](double t) { return ((a * t + b) * t + c) * t + d; };
  auto df = [&](double t) { return (3.0 * a * t + 2.0 * b) * t + c; };
  double fr = std::abs(f(r));
  for (int it = 0; it < 60 && fr > 0.0; ++it) {
    const double g = df(r);
    if (g == 0.0) break;
    const double next = r - f(r) / g;
    const double fn = std::abs(f(next));
    if (!(fn < fr)) break;
    r = next;
    fr = fn;
  }
  return r;
}

std::vector<double> quadratic_roots(double a, double b, double c) {
  std::vector<double> out;
  if (a == 0.0) {
    if (b != 0.0) out.push_back(-c / b);
    return out;
  }
  const double disc = b * b - 4.0 * a * c;
  const double scale = std::max(b * b, std::abs(4.0 * a * c));
  if (disc < 0.0) {
    if (-disc <= 1e-14 * scale) out.push_back(-b / (2.0 * a));
    return out;
  }
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  if (q != 0.0) {
    out.push_back(q / a);
    out.push_back(c / q);
  } else {
    out.push_back(0.0);  // b = 0 and c = 0
  }
  return out;
}

}  // namespace

const char* to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::vertex_ess: return "vertex_ess";
    case EquilibriumKind::interior_ess: return "interior_ess";
    case EquilibriumKind::nss_manifold: return "nss_manifold";
    case EquilibriumKind::ode_estimate: return "ode_estimate";
  }
  return "?";
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::asymptotically_stable: return "asymptotically_stable";
    case Stability::lyapunov_stable: return "lyapunov_stable";
    case Stability::unknown: return "unknown";
  }
  return "?";
}

const char* to_string(InvasionVerdict v) {
  switch (v) {
    case InvasionVerdict::ess_confirmed: return "ess_confirmed";
    case InvasionVerdict::nss_confirmed: return "nss_confirmed";
    case InvasionVerdict::refuted: return "refuted";
  }
  return "?";
}

std::vector<double> cubic_real_roots(double a, double b, double c, double d) {
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
  require(scale > 0.0, "cubic with all coefficients zero");
  a /= scale;
  b /= scale;
  c /= scale;
  d /= scale;

  std::vector<double> cand;
  if (std::abs(a) <= 1e-15) {
    a = 0.0;
    if (std::abs(b) <= 1e-15) b = 0.0;
    if (b == 0.0 && std::abs(c) <= 1e-15) return {};
    cand = quadratic_roots(b, c, d);
  } else {
    const double B = b / a, C = c / a, D = d / a;
    const double P = C - B * B / 3.0;
    const double Q = 2.0 * B * B * B / 27.0 - B * C / 3.0 + D;
    const double disc = Q * Q / 4.0 + P * P * P / 27.0;
    const double shift = -B / 3.0;
    if (disc < 0.0) {
      const double m = 2.0 * std::sqrt(-P / 3.0);
      const double arg = std::clamp(3.0 * Q / (P * m), -1.0, 1.0);
      const double phi = std::acos(arg) / 3.0;
      for (int k = 0; k < 3; ++k) {
        cand.push_back(m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) + shift);
      }
    } else {
      const double sq = std::sqrt(disc);
      const double t = std::cbrt(-Q / 2.0 + sq) + std::cbrt(-Q / 2.0 - sq);
      cand.push_back(t + shift);
    }
    // A double root sits on a critical point; the closed forms can miss it
    // when rounding pushes the discriminant the wrong way.
    for (double s : quadratic_roots(3.0 * a, 2.0 * b, c)) {
      const double v = ((a * s + b) * s + c) * s + d;
      if (std::abs(v) <= 1e-10 * std::max(1.0, std::abs(s * s * s))) cand.push_back(s);
    }
  }

  std::vector<double> out;
  for (double r : cand) {
    if (!std::isfinite(r)) continue;
    out.push_back(polish(a, b, c, d, r));
  }
  std::sort(out.begin(), out.end());
  std::vector<double> uniq;
  for (double r : out) {
    if (!uniq.empty() && std::abs(r - uniq.back()) <= 1e-7 * std::max(1.0, std::abs(r))) {
      auto f = [&](double t) { return std::abs(((a * t + b) * t + c) * t + d); };
      if (f(r) < f(uniq.back())) uniq.back() = r;
      continue;
    }
    uniq.push_back(r);
  }
  return uniq;
}

std::vector<double> two_pool_cubic(const PoolMarket& m, const NetworkParams& p) {
  check_two_pools(m);
  const double w1 = m.omega[0], w2 = m.omega[1];
  const double dw = w1 - w2;
  const double R = p.reward();
  const double np = m.miners * m.cost;
  const double k = penalty(p);
  const double a = -np * std::pow(dw, 4);
  const double b = R * dw * dw * dw + k * R * w1 * w2 * dw - 3.0 * np * w2 * dw * dw * dw;
  const double c = 2.0 * R * w2 * dw * dw + 2.0 * k * R * w1 * w2 * w2 - 3.0 * np * w2 * w2 * dw * dw;
  const double d = -w2 * w2 * (k * R * w1 - (R - np * w2) * dw);
  return {a, b, c, d};
}

std::vector<EquilibriumResult> classify_equal_spec(const PoolMarket& m, const NetworkParams* p) {
  m.validate();
  const double w = m.omega.front();
  for (double v : m.omega) {
    require(std::abs(v - w) <= kOrderTol * std::max(1.0, w),
            "equal-spec classifier needs all omega equal");
  }
  const bool flat = p != nullptr && penalty(*p) <= 0.0;
  const Stability s = flat ? Stability::lyapunov_stable : Stability::asymptotically_stable;
  std::vector<EquilibriumResult> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    EquilibriumResult res;
    res.points.push_back(vertex_point(m.size(), i, s));
    res.witness.theorem = 2;
    res.witness.case_no = 1;
    res.witness.values = {{"omega", w}, {"vertex", static_cast<double>(i + 1)}};
    if (flat) res.witness.note = "no fork penalty: payoffs are equal everywhere, vertices are only neutrally stable";
    finish(res);
    out.push_back(std::move(res));
  }
  return out;
}

EquilibriumResult two_pool_ess(const PoolMarket& m, const NetworkParams& p) {
  check_two_pools(m);
  const double w1 = m.omega[0], w2 = m.omega[1];
  const double dw = w1 - w2;
  const double R = p.reward();
  const double np = m.miners * m.cost;
  const double k = penalty(p);

  const double lhs5 = np * w1, rhs5 = R + R * k * w2 / dw;
  const double lhs6 = np * w2, rhs6 = R - R * k * w1 / dw;
  const bool top = lhs5 < rhs5;
  const bool bottom = lhs6 > rhs6;

  EquilibriumResult res;
  res.witness.theorem = 3;
  res.witness.values = {{"pN_omega1", lhs5},
                        {"top_vertex_bound", rhs5},
                        {"pN_omega2", lhs6},
                        {"bottom_vertex_bound", rhs6},
                        {"fork_penalty", k}};

  const auto coef = two_pool_cubic(m, p);
  const double cscale = std::max({std::abs(coef[0]), std::abs(coef[1]), std::abs(coef[2]),
                                  std::abs(coef[3])});
  std::vector<double> interior;
  std::optional<double> boundary_top, boundary_bottom;
  if (cscale > 0.0) {
    for (double r : cubic_real_roots(coef[0], coef[1], coef[2], coef[3])) {
      CubicRoot cr{r, std::abs(poly(coef, r)), dpoly(coef, r), dpoly(coef, r) < 0.0};
      if (r > kBoundary && r < 1.0 - kBoundary) {
        res.witness.roots.push_back(cr);
        if (cr.stable) interior.push_back(r);
      } else if (std::abs(r - 1.0) <= kBoundary && cr.stable) {
        res.witness.roots.push_back(cr);
        boundary_top = 1.0;
      } else if (std::abs(r) <= kBoundary && cr.stable) {
        res.witness.roots.push_back(cr);
        boundary_bottom = 0.0;
      }
    }
  }

  if (top) res.points.push_back(vertex_point(2, 0, Stability::asymptotically_stable));
  if (bottom) res.points.push_back(vertex_point(2, 1, Stability::asymptotically_stable));
  for (double r : interior) {
    res.points.push_back({EquilibriumKind::interior_ess, two_state(r), Stability::asymptotically_stable});
  }
  res.witness.case_no = top ? 1 : bottom ? 2 : 3;

  if (res.points.empty()) {
    // Exactly on a vertex bound: the crossing sits on the boundary itself.
    if (boundary_top) {
      res.points.push_back(vertex_point(2, 0, Stability::asymptotically_stable));
      res.witness.case_no = 1;
    } else if (boundary_bottom) {
      res.points.push_back(vertex_point(2, 1, Stability::asymptotically_stable));
      res.witness.case_no = 2;
    } else {
      throw std::runtime_error("no stable root of the two-pool cubic in (0, 1)");
    }
  }
  if (top && bottom) res.witness.note = "bistable: both vertices resist invasion";
  finish(res);
  return res;
}

EquilibriumResult two_pool_ess_limit(const PoolMarket& m, const NetworkParams& p) {
  check_two_pools(m);
  const double w1 = m.omega[0], w2 = m.omega[1];
  const double R = p.reward();
  const double np = m.miners * m.cost;
  EquilibriumResult res;
  res.witness.theorem = 4;
  res.witness.values = {{"R", R}, {"pN_omega1", np * w1}, {"pN_omega2", np * w2}};
  if (R >= np * w1) {
    res.witness.case_no = 1;
    res.points.push_back(vertex_point(2, 0, Stability::asymptotically_stable));
  } else if (R <= np * w2) {
    res.witness.case_no = 2;
    res.points.push_back(vertex_point(2, 1, Stability::asymptotically_stable));
  } else {
    res.witness.case_no = 3;
    const double r = (R - w2 * np) / (np * (w1 - w2));
    res.witness.values.emplace_back("r_star", r);
    res.points.push_back({EquilibriumKind::interior_ess, two_state(r), Stability::asymptotically_stable});
  }
  finish(res);
  return res;
}

EquilibriumResult multi_pool_nss(const PoolMarket& m, const NetworkParams& p) {
  m.validate();
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    require(m.omega[i] - m.omega[i + 1] > kOrderTol, "omega must be strictly decreasing");
  }
  require(penalty(p) <= kNoPenalty, "neutral-manifold classifier needs tau = 0 or theta = 1");
  const std::size_t n = m.size();
  const double R = p.reward();
  const double np = m.miners * m.cost;
  EquilibriumResult res;
  res.witness.theorem = 5;
  res.witness.values = {{"R", R}, {"pN_omega1", np * m.omega.front()}, {"pN_omegaM", np * m.omega.back()}};
  if (R >= np * m.omega.front()) {
    res.witness.case_no = 1;
    res.points.push_back(vertex_point(n, 0, Stability::asymptotically_stable));
  } else if (R <= np * m.omega.back()) {
    res.witness.case_no = 2;
    res.points.push_back(vertex_point(n, n - 1, Stability::asymptotically_stable));
  } else {
    res.witness.case_no = 3;
    res.kind = EquilibriumKind::nss_manifold;
    res.stability = Stability::lyapunov_stable;
    res.manifold_level = R / np;
    res.witness.values.emplace_back("manifold_level", R / np);
    res.witness.note = "every point with sum r_i omega_i = level is neutrally stable; "
                       "points with all r_i > 0 attract nearby trajectories onto the manifold";
    return res;
  }
  finish(res);
  return res;
}

EquilibriumResult classify(const PoolMarket& m, const NetworkParams& p,
                           const std::optional<PopulationState>& r0,
                           const IntegratorOptions& opt) {
  m.validate();
  const bool equal = std::all_of(m.omega.begin(), m.omega.end(), [&](double w) {
    return std::abs(w - m.omega.front()) <= kOrderTol * std::max(1.0, w);
  });
  if (equal) {
    auto all = classify_equal_spec(m, &p);
    EquilibriumResult res = all.front();
    for (std::size_t i = 1; i < all.size(); ++i) res.points.push_back(all[i].points.front());
    finish(res);
    return res;
  }
  std::vector<double> order(m.omega);
  const bool decreasing = std::is_sorted(order.rbegin(), order.rend()) &&
                          std::adjacent_find(order.begin(), order.end(), [](double a, double b) {
                            return a - b <= kOrderTol;
                          }) == order.end();
  if (m.size() == 2 && decreasing) {
    return penalty(p) <= kNoPenalty ? two_pool_ess_limit(m, p) : two_pool_ess(m, p);
  }
  if (decreasing && penalty(p) <= kNoPenalty) return multi_pool_nss(m, p);

  const PopulationState start = r0 ? *r0 : PopulationState::uniform(m.size());
  const Trajectory tr = integrate(start, m, p, FailMode::approx, opt);
  EquilibriumResult res;
  res.kind = EquilibriumKind::ode_estimate;
  res.stability = Stability::unknown;
  res.points.push_back({EquilibriumKind::ode_estimate, tr.terminal, Stability::unknown});
  res.witness.theorem = 0;
  res.witness.values = {{"t_end", tr.t_end}, {"residual", tr.residual},
                        {"converged", tr.converged ? 1.0 : 0.0}};
  res.witness.note = decreasing
                         ? "no closed form for these parameters; terminal state of the replicator dynamics"
                         : "omega not strictly decreasing; terminal state of the replicator dynamics";
  return res;
}

JacobianMinors jacobian_minors(const PopulationState& r, const PoolMarket& m,
                               const NetworkParams& p) {
  m.validate();
  require(r.size() == m.size(), "population and market sizes differ");
  require(penalty(p) <= kNoPenalty, "Jacobian minors need tau = 0 or theta = 1");
  require(m.cost > 0.0, "Jacobian minors need a positive cost p");
  const double R = p.reward();
  const double np = m.miners * m.cost;
  const double level = R / np;
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * m.omega[i];
  require(std::abs(s - level) <= kManifoldTol, "state is off the neutral manifold");

  const std::size_t n = m.size();
  const double wm = m.omega.back();
  const double base = m.miners * m.cost * m.cost / R;
  JacobianMinors out;
  double prod = 1.0;
  double inv = 0.0;
  double sign = 1.0;
  double pw = 1.0;
  bool nd = true;
  for (std::size_t k = 1; k < n; ++k) {
    const double w = m.omega[k - 1];
    prod *= w * r[k - 1] * (w - wm);
    inv += 1.0 / w;
    sign = -sign;
    pw *= base;
    const double dk = sign * pw * prod * (1.0 - level * inv);
    out.minors.push_back(dk);
    if (!(dk * sign > 0.0)) nd = false;
  }
  out.negative_definite = nd;
  return out;
}

InvasionResult invasion_test(const PopulationState& r_star, const PoolMarket& m,
                             const NetworkParams& p, FailMode mode,
                             const std::vector<double>& epsilons,
                             const std::vector<PopulationState>& invaders) {
  m.validate();
  require(r_star.size() == m.size(), "population and market sizes differ");
  for (double e : epsilons) require(e > 0.0 && e < 1.0, "invasion share epsilon must lie in (0, 1)");

  const std::size_t n = m.size();
  const double wmax = *std::max_element(m.omega.begin(), m.omega.end());
  const double wmin = *std::min_element(m.omega.begin(), m.omega.end());
  const double zero = 1e-14 * (p.reward() / m.miners * wmax / wmin + m.cost * wmax);

  detail::PayoffScratch s;
  std::vector<double> mix(n);
  InvasionResult res;
  res.min_margin = INFINITY;
  bool any_zero = false;
  for (const auto& inv : invaders) {
    require(inv.size() == n, "invader size differs from the market");
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) dist += std::abs(inv[i] - r_star[i]);
    if (dist < 1e-6) continue;
    for (double e : epsilons) {
      for (std::size_t i = 0; i < n; ++i) mix[i] = (1.0 - e) * r_star[i] + e * inv[i];
      detail::payoffs(mix, m, p, mode, s);
      double margin = 0.0;
      for (std::size_t i = 0; i < n; ++i) margin += (r_star[i] - inv[i]) * s.y[i];
      ++res.checked;
      res.min_margin = std::min(res.min_margin, margin);
      if (margin < -zero) {
        if (!res.epsilon) {
          res.epsilon = e;
          res.invader = inv;
        }
      } else if (margin <= zero) {
        any_zero = true;
      }
    }
  }
  if (res.epsilon) {
    res.verdict = InvasionVerdict::refuted;
  } else {
    res.verdict = any_zero ? InvasionVerdict::nss_confirmed : InvasionVerdict::ess_confirmed;
  }
  if (res.checked == 0) res.min_margin = 0.0;
  return res;
}

std::vector<double> default_epsilons() { return {0.005, 0.01, 0.05, 0.1, 0.25}; }

std::vector<PopulationState> default_invaders(std::size_t m, std::size_t count, std::uint64_t seed) {
  require(m >= 1, "need at least one pool");
  std::vector<PopulationState> out;
  for (std::size_t i = 0; i < m && out.size() < count; ++i) out.push_back(PopulationState::vertex(m, i));
  if (out.size() < count) out.push_back(PopulationState::uniform(m));
  std::mt19937_64 g(seed);
  std::vector<double> v(m);
  while (out.size() < count) {
    double total = 0.0;
    for (double& e : v) {
      const double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
      e = -std::log1p(-u);
      total += e;
    }
    for (double& e : v) e /= total;
    double sum = 0.0;
    for (double e : v) sum += e;
    v[0] += 1.0 - sum;
    if (v[0] < 0.0) continue;
    out.emplace_back(v);
  }
  return out;
}

}  // namespace forkgame
