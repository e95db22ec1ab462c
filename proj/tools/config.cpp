#include "config.hpp"

#include <fstream>
#include <set>

#include "forkgame/errors.hpp"

namespace forkgame::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ParseError("config: " + key + ": " + what);
}

void only_keys(const json& obj, const std::string& section, std::set<std::string> allowed) {
  if (!obj.is_object()) fail(section, "must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) fail(section + "." + k, "unknown key");
  }
}

double get_number(const json& obj, const std::string& section, const char* key,
                  std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail(section + "." + key, "required");
  }
  const json& v = obj.at(key);
  if (!v.is_number()) fail(section + "." + key, "must be a number");
  return v.get<double>();
}

std::uint64_t get_count(const json& obj, const std::string& section, const char* key,
                        std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) fail(section + "." + key, "must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& section, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(section + "." + key, "must be a string");
  return v.get<std::string>();
}

std::vector<double> get_list(const json& v, const std::string& key) {
  if (!v.is_array()) fail(key, "must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(key, "must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<double> get_grid(const json& obj, const std::string& section, const char* key) {
  if (!obj.contains(key)) return {};
  const json& v = obj.at(key);
  try {
    if (v.is_string()) return parse_grid(v.get<std::string>());
  } catch (const std::domain_error& e) {
    fail(section + "." + key, e.what());
  }
  return get_list(v, section + "." + key);
}

template <class F>
auto rethrow_as(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const std::domain_error& e) {
    fail(key, e.what());
  } catch (const std::out_of_range& e) {
    fail(key, e.what());
  }
}

}  // namespace

const char* to_string(FailMode m) { return m == FailMode::exact ? "exact" : "approx"; }
const char* to_string(TieMode m) { return m == TieMode::coin_flip ? "coin_flip" : "recursive_race"; }
const char* to_string(SplitMode m) {
  return m == SplitMode::deterministic_half ? "deterministic_half" : "random_per_pool";
}
const char* to_string(SweepMethod m) { return m == SweepMethod::ode ? "ode" : "analytic"; }

FailMode parse_fail_mode(const std::string& s) {
  if (s == "exact") return FailMode::exact;
  if (s == "approx") return FailMode::approx;
  throw ParseError("fail mode must be exact or approx, got '" + s + "'");
}

TieMode parse_tie_mode(const std::string& s) {
  if (s == "coin" || s == "coin_flip") return TieMode::coin_flip;
  if (s == "race" || s == "recursive_race") return TieMode::recursive_race;
  throw ParseError("tie mode must be coin or race, got '" + s + "'");
}

SplitMode parse_split_mode(const std::string& s) {
  if (s == "half" || s == "deterministic_half") return SplitMode::deterministic_half;
  if (s == "random" || s == "random_per_pool") return SplitMode::random_per_pool;
  throw ParseError("split mode must be half or random, got '" + s + "'");
}

SweepMethod parse_sweep_method(const std::string& s) {
  if (s == "ode") return SweepMethod::ode;
  if (s == "analytic") return SweepMethod::analytic;
  throw ParseError("sweep method must be ode or analytic, got '" + s + "'");
}

HashDistribution RunConfig::hash_distribution() const {
  if (hash_fractions) return HashDistribution::from_hash_rates(*hash_fractions);
  if (market) return hash_fraction(initial_or_uniform(), *market);
  throw ParseError("config: market: needs hash_fractions, or omega with a population");
}

const PoolMarket& RunConfig::require_market() const {
  if (!market) throw ParseError("config: market: omega, miners and cost are required for this command");
  return *market;
}

PopulationState RunConfig::initial_or_uniform() const {
  if (initial) return *initial;
  return PopulationState::uniform(require_market().size());
}

RunConfig parse_config(const json& doc) {
  only_keys(doc, "config", {"network", "market", "population", "sim", "sweep"});
  RunConfig c;

  if (!doc.contains("network")) fail("network", "required");
  const json& net = doc.at("network");
  only_keys(net, "network", {"lambda", "tau", "reward", "theta", "block", "fail_mode"});
  const double lambda = get_number(net, "network", "lambda");
  const double reward = get_number(net, "network", "reward");
  const double theta = get_number(net, "network", "theta", 0.0);
  if (net.contains("block")) {
    if (net.contains("tau")) fail("network", "give either tau or block, not both");
    const json& b = net.at("block");
    only_keys(b, "network.block", {"size", "gamma", "bandwidth", "verify_beta"});
    BlockSizeModel m;
    m.size = get_number(b, "network.block", "size");
    m.gamma = get_number(b, "network.block", "gamma", 1.0);
    m.bandwidth = get_number(b, "network.block", "bandwidth");
    m.verify_beta = get_number(b, "network.block", "verify_beta", 0.0);
    c.network = rethrow_as("network", [&] { return NetworkParams::with_block_size(lambda, m, reward, theta); });
  } else {
    const double tau = get_number(net, "network", "tau", 0.0);
    c.network = rethrow_as("network", [&] { return NetworkParams::with_delay(lambda, tau, reward, theta); });
  }
  c.analytic_mode = rethrow_as("network.fail_mode",
                               [&] { return parse_fail_mode(get_string(net, "network", "fail_mode", "exact")); });

  if (doc.contains("market")) {
    const json& mk = doc.at("market");
    only_keys(mk, "market", {"omega", "miners", "cost", "hash_fractions"});
    if (mk.contains("hash_fractions")) {
      c.hash_fractions = get_list(mk.at("hash_fractions"), "market.hash_fractions");
      rethrow_as("market.hash_fractions", [&] { return HashDistribution::from_hash_rates(*c.hash_fractions); });
    }
    if (mk.contains("omega")) {
      PoolMarket m;
      m.omega = get_list(mk.at("omega"), "market.omega");
      m.miners = get_number(mk, "market", "miners");
      m.cost = get_number(mk, "market", "cost");
      rethrow_as("market", [&] {
        m.validate();
        return 0;
      });
      c.market = m;
    } else if (mk.contains("miners") || mk.contains("cost")) {
      fail("market.omega", "required when miners or cost are given");
    }
    if (c.market && c.hash_fractions && c.hash_fractions->size() != c.market->size()) {
      fail("market.hash_fractions", "length differs from market.omega");
    }
  }

  if (doc.contains("population")) {
    const json& pop = doc.at("population");
    only_keys(pop, "population", {"initial", "step", "t_max", "eps", "sample_every", "fail_mode"});
    if (pop.contains("initial")) {
      auto r = get_list(pop.at("initial"), "population.initial");
      if (c.market && r.size() != c.market->size()) fail("population.initial", "length differs from market.omega");
      c.initial = rethrow_as("population.initial", [&] { return PopulationState(r); });
    }
    c.integrator.step = get_number(pop, "population", "step", c.integrator.step);
    c.integrator.t_max = get_number(pop, "population", "t_max", c.integrator.t_max);
    c.integrator.eps = get_number(pop, "population", "eps", c.integrator.eps);
    c.integrator.sample_every = get_count(pop, "population", "sample_every", c.integrator.sample_every);
    c.population_mode = rethrow_as("population.fail_mode", [&] {
      return parse_fail_mode(get_string(pop, "population", "fail_mode", "approx"));
    });
  }

  if (doc.contains("sim")) {
    const json& sim = doc.at("sim");
    only_keys(sim, "sim", {"blocks", "seed", "tie", "split"});
    c.sim_blocks = get_count(sim, "sim", "blocks", c.sim_blocks);
    c.sim_seed = get_count(sim, "sim", "seed", c.sim_seed);
    c.tie = rethrow_as("sim.tie", [&] { return parse_tie_mode(get_string(sim, "sim", "tie", "coin_flip")); });
    c.split = rethrow_as("sim.split",
                         [&] { return parse_split_mode(get_string(sim, "sim", "split", "deterministic_half")); });
  }

  if (doc.contains("sweep")) {
    const json& sw = doc.at("sweep");
    only_keys(sw, "sweep", {"tau", "theta", "method"});
    c.sweep_tau = get_grid(sw, "sweep", "tau");
    c.sweep_theta = get_grid(sw, "sweep", "theta");
    c.sweep_method =
        rethrow_as("sweep.method", [&] { return parse_sweep_method(get_string(sw, "sweep", "method", "ode")); });
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config: not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc);
}

json resolved(const RunConfig& c) {
  const NetworkParams& p = c.network;
  json net = {{"lambda", p.lambda()}, {"reward", p.reward()}, {"theta", p.theta()},
              {"fail_mode", to_string(c.analytic_mode)}};
  if (p.block_size()) {
    const auto& b = *p.block_size();
    net["block"] = {{"size", b.size}, {"gamma", b.gamma}, {"bandwidth", b.bandwidth},
                    {"verify_beta", b.verify_beta}};
  } else {
    net["tau"] = p.tau();
  }
  json doc = {{"network", net}};

  json mk = json::object();
  if (c.market) {
    mk["omega"] = c.market->omega;
    mk["miners"] = c.market->miners;
    mk["cost"] = c.market->cost;
  }
  if (c.hash_fractions) mk["hash_fractions"] = *c.hash_fractions;
  if (!mk.empty()) doc["market"] = mk;

  json pop = {{"step", c.integrator.step},
              {"t_max", c.integrator.t_max},
              {"eps", c.integrator.eps},
              {"sample_every", c.integrator.sample_every},
              {"fail_mode", to_string(c.population_mode)}};
  if (c.initial) pop["initial"] = std::vector<double>(c.initial->values().begin(), c.initial->values().end());
  doc["population"] = pop;

  doc["sim"] = {{"blocks", c.sim_blocks}, {"seed", c.sim_seed}, {"tie", to_string(c.tie)},
                {"split", to_string(c.split)}};
  doc["sweep"] = {{"tau", c.sweep_tau}, {"theta", c.sweep_theta}, {"method", to_string(c.sweep_method)}};
  return doc;
}

}  // namespace forkgame::cli
