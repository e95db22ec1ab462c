#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "forkgame/chain_data.hpp"
#include "forkgame/equilibrium.hpp"
#include "forkgame/errors.hpp"
#include "forkgame/json_io.hpp"

namespace forkgame::cli {

using nlohmann::json;

namespace {

struct Globals {
  std::string output;  // empty: the command's default
  std::string out_path;
  bool quiet = false;
};

class Session {
 public:
  Session(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

  std::string format(const std::string& fallback, std::initializer_list<const char*> allowed) const {
    const std::string f = g_.output.empty() ? fallback : g_.output;
    for (const char* a : allowed) {
      if (f == a) return f;
    }
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    throw ParseError("--output " + f + " is not available here (choose " + list + ")");
  }

  void warn(const std::string& msg) const {
    if (!g_.quiet) err_ << "warning: " << msg << '\n';
  }

  void note(const std::string& msg) const {
    if (!g_.quiet) err_ << "note: " << msg << '\n';
  }

  // JSON results carry their config inline; other formats put it next to the
  // output file, or on stderr when writing to stdout.
  void emit(const std::string& fmt, const std::string& body, const json& config) const {
    write(g_.out_path, body);
    if (fmt == "json") return;
    if (!g_.out_path.empty()) {
      write(g_.out_path + ".config.json", config.dump(2) + "\n");
    } else if (!g_.quiet) {
      err_ << "resolved config: " << config.dump() << '\n';
    }
  }

 private:
  void write(const std::string& path, const std::string& body) const {
    if (path.empty()) {
      out_ << body;
      out_.flush();
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << body;
    f.close();
    if (!f) throw IoError("failed writing " + path);
  }

  const Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
};

std::string num(double v, int prec = 6) {
  if (!std::isfinite(v)) return "-";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

std::string row(const std::vector<std::string>& cells, const std::vector<int>& widths) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    char buf[96];
    std::snprintf(buf, sizeof buf, i == 0 ? "%-*s" : " %*s", widths[i], cells[i].c_str());
    s += buf;
  }
  return s + "\n";
}

json with_config(json body, const json& config) {
  body["config"] = config;
  return body;
}

// ---- analytic ---------------------------------------------------------------

void cmd_analytic(const Session& s, RunConfig c, const std::string& mode_flag) {
  if (!mode_flag.empty()) c.analytic_mode = parse_fail_mode(mode_flag);
  const auto fmt = s.format("table", {"json", "csv", "table"});
  const HashDistribution x = c.hash_distribution();
  const NetworkParams& p = c.network;
  const json config = resolved(c);

  json pools = json::array();
  std::ostringstream text;
  const std::vector<int> w{5, 10, 10, 10, 10, 12, 10};
  if (fmt == "table") {
    text << row({"pool", "x", "fork", "fail", "uncle", "reward", "ratio"}, w);
  } else if (fmt == "csv") {
    text << "pool,x,fork,fail,uncle,reward,ratio\n";
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fork = prob_fork_after(i, x, p);
    double fail = NAN;
    if (x.size() >= 2 && x[i] < 1.0) fail = prob_fail(i, x, p, c.analytic_mode);
    const double uncle = prob_uncle(i, x, p, c.analytic_mode);
    const double reward = expected_reward(i, x, p, c.analytic_mode);
    const double ratio = x[i] > 0.0 ? reward_ratio(i, x, p, c.analytic_mode) : NAN;
    auto jn = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    pools.push_back({{"pool", i + 1}, {"x", x[i]}, {"fork", fork}, {"fail", jn(fail)},
                     {"uncle", uncle}, {"reward", reward}, {"ratio", jn(ratio)}});
    if (fmt == "table") {
      text << row({std::to_string(i + 1), num(x[i]), num(fork), num(fail), num(uncle), num(reward),
                   num(ratio)},
                  w);
    } else if (fmt == "csv") {
      text << i + 1 << ',' << num(x[i], 17) << ',' << num(fork, 17) << ',' << num(fail, 17) << ','
           << num(uncle, 17) << ',' << num(reward, 17) << ',' << num(ratio, 17) << '\n';
    }
  }
  if (fmt == "json") {
    json body = {{"schema_version", kSchemaVersion}, {"mode", to_string(c.analytic_mode)},
                 {"concurrent_prob", p.concurrent_prob()}, {"pools", pools}};
    s.emit(fmt, with_config(body, config).dump(2) + "\n", config);
  } else {
    s.emit(fmt, text.str(), config);
  }
}

// ---- simulate ---------------------------------------------------------------

struct SimFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> blocks;
  std::string tie;
  std::string split;
  std::string trace_dir;
};

void cmd_simulate(const Session& s, RunConfig c, const SimFlags& f) {
  if (f.seed) c.sim_seed = *f.seed;
  if (f.blocks) c.sim_blocks = *f.blocks;
  if (!f.tie.empty()) c.tie = parse_tie_mode(f.tie);
  if (!f.split.empty()) c.split = parse_split_mode(f.split);
  const auto fmt = s.format("json", {"json", "csv", "table"});
  const json config = resolved(c);

  SimConfig sc{c.network, c.hash_distribution(), c.sim_blocks, c.sim_seed, c.tie, c.split};
  SimTrace trace;
  const SimReport rep = simulate(sc, f.trace_dir.empty() ? nullptr : &trace);
  if (!f.trace_dir.empty()) {
    const std::filesystem::path dir(f.trace_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream b(dir / "blocks.csv"), k(dir / "forks.csv");
    if (!b || !k) throw IoError("cannot write trace files under " + dir.string());
    write_blocks_csv(b, trace_blocks(trace));
    write_forks_csv(k, trace_forks(trace));
  }

  const auto rates = empirical_rates(rep);
  json cmp = json::array();
  std::ostringstream text;
  const std::vector<int> w{5, 10, 10, 12, 12, 12, 8};
  if (fmt == "table") {
    text << row({"pool", "x", "blocks", "uncle_sim", "uncle_model", "std_err", "z"}, w);
  } else if (fmt == "csv") {
    text << "pool,x,blocks,uncle_sim,uncle_model,std_err,z\n";
  }
  for (std::size_t i = 0; i < rep.pools.size(); ++i) {
    const double model = prob_uncle(i, sc.x, sc.params, FailMode::exact);
    const double n = static_cast<double>(rep.pools[i].blocks_won + rep.pools[i].uncles);
    const double se = n > 0 ? std::sqrt(model * (1.0 - model) / n) : NAN;
    const double z = se > 0 ? (rates[i].uncle_rate - model) / se : NAN;
    auto jn = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    cmp.push_back({{"pool", i + 1}, {"x", sc.x[i]}, {"blocks", n}, {"uncle_rate", rates[i].uncle_rate},
                   {"fork_rate", rates[i].fork_rate}, {"fail_rate", rates[i].fail_rate},
                   {"uncle_model", model}, {"std_err", jn(se)}, {"z", jn(z)}});
    if (fmt == "table") {
      text << row({std::to_string(i + 1), num(sc.x[i]), num(n, 10), num(rates[i].uncle_rate),
                   num(model), num(se, 3), num(z, 3)},
                  w);
    } else if (fmt == "csv") {
      text << i + 1 << ',' << num(sc.x[i], 17) << ',' << num(n, 17) << ',' << num(rates[i].uncle_rate, 17)
           << ',' << num(model, 17) << ',' << num(se, 17) << ',' << num(z, 17) << '\n';
    }
  }
  if (fmt == "json") {
    json body = to_json(rep);
    body["comparison"] = cmp;
    s.emit(fmt, with_config(body, config).dump(2) + "\n", config);
  } else {
    s.emit(fmt, text.str(), config);
  }
}

// ---- evolve -----------------------------------------------------------------

struct EvolveFlags {
  std::optional<double> step, tmax, eps;
};

void cmd_evolve(const Session& s, RunConfig c, const EvolveFlags& f) {
  if (f.step) c.integrator.step = *f.step;
  if (f.tmax) c.integrator.t_max = *f.tmax;
  if (f.eps) c.integrator.eps = *f.eps;
  const auto fmt = s.format("csv", {"json", "csv"});
  const PoolMarket& m = c.require_market();
  if (!c.initial) s.note("no population.initial given; starting from the uniform population");
  const Trajectory tr = integrate(c.initial_or_uniform(), m, c.network, c.population_mode, c.integrator);
  if (!tr.converged) s.note("t_max reached before the velocity settled below eps");
  const json config = resolved(c);
  if (fmt == "json") {
    s.emit(fmt, with_config(to_json(tr), config).dump(2) + "\n", config);
  } else {
    std::ostringstream text;
    write_trajectory_csv(text, tr);
    s.emit(fmt, text.str(), config);
  }
}

// ---- equilibrium ------------------------------------------------------------

void cmd_equilibrium(const Session& s, const RunConfig& c, bool invasion) {
  const auto fmt = s.format("json", {"json", "table"});
  const PoolMarket& m = c.require_market();
  const EquilibriumResult res = classify(m, c.network, c.initial, c.integrator);
  if (res.kind == EquilibriumKind::ode_estimate) s.note(res.witness.note);
  json body = to_json(res);

  if (res.ambiguous && m.size() == 2) {
    // Which stable point each start converges to.
    json basins = json::array();
    for (int k = 1; k <= 9; ++k) {
      const double r1 = 0.1 * k;
      const Trajectory tr = integrate(PopulationState({r1, 1.0 - r1}), m, c.network, FailMode::approx, c.integrator);
      std::size_t best = 0;
      double dist = INFINITY;
      for (std::size_t i = 0; i < res.points.size(); ++i) {
        const double d = std::abs(res.points[i].state[0] - tr.terminal[0]);
        if (d < dist) {
          dist = d;
          best = i;
        }
      }
      basins.push_back({{"start", r1}, {"terminal", tr.terminal[0]}, {"point", best}});
    }
    body["basins"] = basins;
  }
  if (invasion) {
    json checks = json::array();
    for (const auto& pt : res.points) {
      checks.push_back(to_json(invasion_test(pt.state, m, c.network, FailMode::approx, default_epsilons(),
                                             default_invaders(m.size()))));
    }
    body["invasion"] = checks;
  }
  const json config = resolved(c);
  if (fmt == "json") {
    s.emit(fmt, with_config(body, config).dump(2) + "\n", config);
    return;
  }
  std::ostringstream text;
  text << "kind: " << to_string(res.kind) << "\n";
  text << "stability: " << to_string(res.stability) << "\n";
  text << "theorem: " << res.witness.theorem << ", case: " << res.witness.case_no << "\n";
  if (res.manifold_level) text << "manifold: sum r_i omega_i = " << num(*res.manifold_level, 12) << "\n";
  for (const auto& pt : res.points) {
    text << "point:";
    for (double v : pt.state.values()) text << ' ' << num(v, 10);
    text << "\n";
  }
  if (res.ambiguous) text << "ambiguous: more than one stable point\n";
  s.emit(fmt, text.str(), config);
}

// ---- sweep ------------------------------------------------------------------

void cmd_sweep(const Session& s, RunConfig c, const std::string& tau, const std::string& theta,
               const std::string& method) {
  if (!tau.empty()) c.sweep_tau = parse_grid(tau);
  if (!theta.empty()) c.sweep_theta = parse_grid(theta);
  if (!method.empty()) c.sweep_method = parse_sweep_method(method);
  if (c.sweep_tau.empty()) c.sweep_tau = {c.network.tau()};
  if (c.sweep_theta.empty()) c.sweep_theta = {c.network.theta()};
  const auto fmt = s.format("csv", {"json", "csv"});

  SweepSpec spec;
  spec.tau_grid = c.sweep_tau;
  spec.theta_grid = c.sweep_theta;
  spec.market = c.require_market();
  spec.network = c.network;
  spec.method = c.sweep_method;
  spec.r0 = c.initial;
  spec.integrator = c.integrator;
  const auto rows = sweep(spec);
  for (const auto& r : rows) {
    if (r.status.rfind("error", 0) == 0) s.warn("tau=" + num(r.tau) + " theta=" + num(r.theta) + ": " + r.status);
  }
  const json config = resolved(c);
  if (fmt == "json") {
    s.emit(fmt, with_config(to_json(rows), config).dump(2) + "\n", config);
  } else {
    std::ostringstream text;
    write_sweep_csv(text, rows);
    s.emit(fmt, text.str(), config);
  }
}

// ---- chain data -------------------------------------------------------------

template <class R>
void report_row_errors(const Session& s, const std::string& path, const Loaded<R>& l) {
  for (const auto& e : l.errors) s.warn(path + ":" + std::to_string(e.line) + ": " + e.message);
}

void cmd_gini(const Session& s, const std::string& blocks, std::size_t top, bool strict) {
  const auto fmt = s.format("table", {"json", "table"});
  const auto b = load_blocks(std::filesystem::path(blocks), strict);
  report_row_errors(s, blocks, b);
  const TopKGini g = top_k_gini(b.records, top);
  for (const auto& w : g.warnings) s.warn(w);
  const json inputs = {{"blocks", blocks}, {"top", top}, {"strict", strict}};
  if (fmt == "json") {
    json body = to_json(g);
    body["inputs"] = inputs;
    s.emit(fmt, body.dump(2) + "\n", inputs);
  } else {
    s.emit(fmt, "gini: " + num(g.gini, 10) + " over " + std::to_string(g.miners.size()) + " miners\n", inputs);
  }
}

void cmd_stats(const Session& s, const std::string& blocks, const std::string& forks, bool strict) {
  const auto fmt = s.format("table", {"json", "table"});
  const auto b = load_blocks(std::filesystem::path(blocks), strict);
  report_row_errors(s, blocks, b);
  Loaded<ForkRecord> f;
  if (!forks.empty()) {
    f = load_forks(std::filesystem::path(forks), strict);
    report_row_errors(s, forks, f);
  }
  const BinnedStats st = miner_stats(b.records, f.records);
  for (const auto& w : st.warnings) s.warn(w);
  const json inputs = {{"blocks", blocks}, {"forks", forks}, {"strict", strict}};
  if (fmt == "json") {
    json body = to_json(st);
    body["inputs"] = inputs;
    s.emit(fmt, body.dump(2) + "\n", inputs);
  } else {
    s.emit(fmt, format_stats_table(st), inputs);
  }
}

void cmd_branches(const Session& s, const std::string& forks, bool strict) {
  const auto fmt = s.format("table", {"json", "csv", "table"});
  const auto f = load_forks(std::filesystem::path(forks), strict);
  report_row_errors(s, forks, f);
  const auto h = branch_histogram(f.records);
  const json inputs = {{"forks", forks}, {"strict", strict}};
  if (fmt == "json") {
    json body = to_json(h);
    body["inputs"] = inputs;
    s.emit(fmt, body.dump(2) + "\n", inputs);
    return;
  }
  std::ostringstream text;
  if (fmt == "csv") {
    text << "branches,count,fraction\n";
    for (const auto& [k, v] : h) text << k << ',' << v.count << ',' << num(v.fraction, 17) << '\n';
  } else {
    const std::vector<int> w{8, 10, 10};
    text << row({"branches", "count", "fraction"}, w);
    for (const auto& [k, v] : h) text << row({std::to_string(k), std::to_string(v.count), num(v.fraction)}, w);
  }
  s.emit(fmt, text.str(), inputs);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fork probabilities, mining simulation and pool equilibria"};
  app.require_subcommand(1);
  Globals g;
  auto* output_opt = app.add_option("--output", g.output, "json, csv or table")
                         ->check(CLI::IsMember({"json", "csv", "table"}));
  app.add_option("--out", g.out_path, "write the result here instead of stdout");
  app.add_flag("--quiet", g.quiet, "suppress notes, warnings and the config echo");
  (void)output_opt;

  std::string config_path, mode, tau, theta, method, blocks, forks;
  std::size_t top = 10;
  bool strict = false, invasion = false;
  SimFlags sim;
  EvolveFlags evo;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config")->required();
    sub->fallthrough();
  };
  auto* analytic = app.add_subcommand("analytic", "closed-form fork, fail and uncle probabilities per pool");
  add_config(analytic);
  analytic->add_option("--mode", mode, "exact or approx")->check(CLI::IsMember({"exact", "approx"}));

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo mining run compared with the model");
  add_config(simulate_cmd);
  simulate_cmd->add_option("--seed", sim.seed, "RNG seed");
  simulate_cmd->add_option("--blocks", sim.blocks, "canonical blocks to produce");
  simulate_cmd->add_option("--tie", sim.tie, "coin or race")->check(CLI::IsMember({"coin", "race"}));
  simulate_cmd->add_option("--split", sim.split, "half or random")->check(CLI::IsMember({"half", "random"}));
  simulate_cmd->add_option("--trace-dir", sim.trace_dir, "also write blocks.csv and forks.csv here");

  auto* evolve = app.add_subcommand("evolve", "integrate the replicator dynamics");
  add_config(evolve);
  evolve->add_option("--step", evo.step, "RK4 step");
  evolve->add_option("--tmax", evo.tmax, "time limit");
  evolve->add_option("--eps", evo.eps, "convergence threshold on max |dr/dt|");

  auto* equilibrium = app.add_subcommand("equilibrium", "classify the stable population states");
  add_config(equilibrium);
  equilibrium->add_flag("--invasion", invasion, "also run the invasion check on each point");

  auto* sweep_cmd = app.add_subcommand("sweep", "terminal population over a tau x theta grid");
  add_config(sweep_cmd);
  sweep_cmd->add_option("--tau", tau, "grid a:b:n");
  sweep_cmd->add_option("--theta", theta, "grid a:b:n");
  sweep_cmd->add_option("--method", method, "ode or analytic")->check(CLI::IsMember({"ode", "analytic"}));

  auto* gini_cmd = app.add_subcommand("gini", "Gini coefficient of the top miners by canonical blocks");
  gini_cmd->add_option("--blocks", blocks, "blocks.csv")->required();
  gini_cmd->add_option("--top", top, "number of miners")->check(CLI::PositiveNumber);
  gini_cmd->add_flag("--strict", strict, "fail on the first bad row");
  gini_cmd->fallthrough();

  auto* stats = app.add_subcommand("stats", "uncle, fork and fail rates by miner size");
  stats->add_option("--blocks", blocks, "blocks.csv")->required();
  stats->add_option("--forks", forks, "forks.csv");
  stats->add_flag("--strict", strict, "fail on the first bad row");
  stats->fallthrough();

  auto* branches = app.add_subcommand("branches", "histogram of branch counts per fork");
  branches->add_option("--forks", forks, "forks.csv")->required();
  branches->add_flag("--strict", strict, "fail on the first bad row");
  branches->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 1;
  }

  const Session s(g, out, err);
  try {
    if (*analytic) {
      cmd_analytic(s, load_config(config_path), mode);
    } else if (*simulate_cmd) {
      cmd_simulate(s, load_config(config_path), sim);
    } else if (*evolve) {
      cmd_evolve(s, load_config(config_path), evo);
    } else if (*equilibrium) {
      cmd_equilibrium(s, load_config(config_path), invasion);
    } else if (*sweep_cmd) {
      cmd_sweep(s, load_config(config_path), tau, theta, method);
    } else if (*gini_cmd) {
      cmd_gini(s, blocks, top, strict);
    } else if (*stats) {
      cmd_stats(s, blocks, forks, strict);
    } else if (*branches) {
      cmd_branches(s, forks, strict);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace forkgame::cli
