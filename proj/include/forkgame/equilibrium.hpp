#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "forkgame/evolution.hpp"
#include "forkgame/fork_model.hpp"

namespace forkgame {

enum class EquilibriumKind { vertex_ess, interior_ess, nss_manifold, ode_estimate };
enum class Stability { asymptotically_stable, lyapunov_stable, unknown };

const char* to_string(EquilibriumKind k);
const char* to_string(Stability s);

struct CubicRoot {
  double r = 0.0;
  double residual = 0.0;  // |poly(r)|
  double slope = 0.0;     // poly'(r), same sign as d(y1 - y2)/dr
  bool stable = false;
};

/// Which result fired and the numbers it was decided on.
struct Witness {
  int theorem = 0;  // 0 when no closed form applies (ODE fallback)
  int case_no = 0;
  std::vector<std::pair<std::string, double>> values;
  std::vector<CubicRoot> roots;
  std::string note;
};

struct EquilibriumPoint {
  EquilibriumKind kind = EquilibriumKind::vertex_ess;
  PopulationState state{std::vector<double>{1.0}};
  Stability stability = Stability::asymptotically_stable;
};

struct EquilibriumResult {
  EquilibriumKind kind = EquilibriumKind::vertex_ess;
  std::vector<EquilibriumPoint> points;  // empty for the manifold
  std::optional<double> manifold_level;  // sum r_i omega_i on the manifold
  Stability stability = Stability::asymptotically_stable;
  bool ambiguous = false;  // more than one stable point was found
  Witness witness;
};

/// Equal hash specifications: every vertex is an ESS. When a network is given
/// and its fork penalty is zero the payoffs are flat, and the vertices are
/// reported as only Lyapunov stable.
std::vector<EquilibriumResult> classify_equal_spec(const PoolMarket& m,
                                                   const NetworkParams* p = nullptr);

/// Two pools, omega_1 > omega_2, first-order fork penalty.
EquilibriumResult two_pool_ess(const PoolMarket& m, const NetworkParams& p);

/// Two pools with the fork penalty switched off (theta -> 1).
EquilibriumResult two_pool_ess_limit(const PoolMarket& m, const NetworkParams& p);

/// Strictly decreasing omega with tau = 0 or theta = 1.
EquilibriumResult multi_pool_nss(const PoolMarket& m, const NetworkParams& p);

/// Picks the applicable classifier; falls back to integrating from r0
/// (uniform when absent) when no closed form covers the parameters.
EquilibriumResult classify(const PoolMarket& m, const NetworkParams& p,
                           const std::optional<PopulationState>& r0 = std::nullopt,
                           const IntegratorOptions& opt = {});

/// Real roots of a r^3 + b r^2 + c r + d, ascending, Newton polished and
/// with repeated roots collapsed.
std::vector<double> cubic_real_roots(double a, double b, double c, double d);

/// Coefficients (a, b, c, d) with h N S^3 = a r^3 + b r^2 + c r + d, where
/// h = y_1 - y_2 and S = omega_1 r + omega_2 (1 - r).
std::vector<double> two_pool_cubic(const PoolMarket& m, const NetworkParams& p);

struct JacobianMinors {
  std::vector<double> minors;  // D_1 .. D_{M-1}
  bool negative_definite = false;
};

/// Closed-form leading principal minors of the reduced Jacobian at a point
/// of the neutral manifold.
JacobianMinors jacobian_minors(const PopulationState& r, const PoolMarket& m,
                               const NetworkParams& p);

enum class InvasionVerdict { ess_confirmed, nss_confirmed, refuted };
const char* to_string(InvasionVerdict v);

struct InvasionResult {
  InvasionVerdict verdict = InvasionVerdict::ess_confirmed;
  double min_margin = 0.0;
  // Set when refuted: the first violating pair.
  std::optional<double> epsilon;
  std::optional<PopulationState> invader;
  std::size_t checked = 0;
};

/// Evaluates sum_i (r*_i - r'_i) y_i((1 - eps) r* + eps r') over every pair.
InvasionResult invasion_test(const PopulationState& r_star, const PoolMarket& m,
                             const NetworkParams& p, FailMode mode,
                             const std::vector<double>& epsilons,
                             const std::vector<PopulationState>& invaders);

std::vector<double> default_epsilons();

/// All vertices, the barycenter, then flat-Dirichlet samples up to `count`.
std::vector<PopulationState> default_invaders(std::size_t m, std::size_t count = 200,
                                              std::uint64_t seed = 7);

}  // namespace forkgame
