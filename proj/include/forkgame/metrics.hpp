#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forkgame/evolution.hpp"
#include "forkgame/fork_model.hpp"

namespace forkgame {

/// Mean absolute pairwise difference over twice the mean. Scale free, so raw
/// hash rates give the same value as fractions. 0 for a single pool.
double gini(std::span<const double> shares);
inline double gini(const HashDistribution& x) { return gini(x.fractions()); }

struct FairnessSpread {
  double min_ratio = 1.0;
  double max_ratio = 1.0;
  double spread = 0.0;
  std::size_t argmin = 0;
  std::size_t argmax = 0;
};

FairnessSpread fairness_spread(const HashDistribution& x, const NetworkParams& p,
                               FailMode mode = FailMode::exact);

enum class SweepMethod { analytic, ode };

struct SweepSpec {
  std::vector<double> tau_grid;
  std::vector<double> theta_grid;
  PoolMarket market;
  NetworkParams network = NetworkParams::with_delay(1.0, 0.0, 1.0, 0.0);
  SweepMethod method = SweepMethod::ode;
  std::optional<PopulationState> r0;  // uniform when absent
  IntegratorOptions integrator;
  unsigned threads = 0;  // 0 picks the hardware concurrency
};

struct SweepRow {
  double tau = 0.0;
  double theta = 0.0;
  std::vector<double> r;  // NaN entries when the point failed
  double gini = 0.0;
  std::string method;
  std::string status;  // "ok", or what went wrong / which fallback was used
};

/// Rows in grid order: tau outer, theta inner. A failing point is reported in
/// its row's status and does not stop the sweep.
std::vector<SweepRow> sweep(const SweepSpec& spec);

/// n evenly spaced points from a to b inclusive; parses "a:b:n".
std::vector<double> linspace(double a, double b, std::size_t n);
std::vector<double> parse_grid(const std::string& text);

}  // namespace forkgame
