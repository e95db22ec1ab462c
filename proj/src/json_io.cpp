#include "forkgame/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

namespace forkgame {

using nlohmann::json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json state_json(const PopulationState& s) { return json(std::vector<double>(s.values().begin(), s.values().end())); }

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

json to_json(const SimReport& r) {
  json pools = json::array();
  for (const auto& t : r.pools) {
    pools.push_back({{"blocks_won", t.blocks_won},
                     {"uncles", t.uncles},
                     {"forks_involved", t.forks_involved},
                     {"forks_lost", t.forks_lost},
                     {"reward", t.reward}});
  }
  return {{"schema_version", kSchemaVersion},
          {"pools", pools},
          {"total_blocks", r.total_blocks},
          {"fork_events", r.fork_events},
          {"seed", r.seed}};
}

json to_json(const Trajectory& t) {
  json states = json::array();
  for (const auto& s : t.states) states.push_back(state_json(s));
  return {{"schema_version", kSchemaVersion},
          {"times", t.times},
          {"states", states},
          {"terminal", state_json(t.terminal)},
          {"converged", t.converged},
          {"residual", number(t.residual)},
          {"t_end", t.t_end}};
}

json to_json(const EquilibriumResult& r) {
  json points = json::array();
  for (const auto& p : r.points) {
    points.push_back({{"kind", to_string(p.kind)},
                      {"state", state_json(p.state)},
                      {"stability", to_string(p.stability)}});
  }
  json values = json::object();
  for (const auto& [k, v] : r.witness.values) values[k] = number(v);
  json roots = json::array();
  for (const auto& c : r.witness.roots) {
    roots.push_back({{"r", c.r}, {"residual", c.residual}, {"slope", c.slope}, {"stable", c.stable}});
  }
  json w = {{"theorem", r.witness.theorem}, {"case", r.witness.case_no}, {"values", values}, {"roots", roots}};
  if (!r.witness.note.empty()) w["note"] = r.witness.note;
  json out = {{"schema_version", kSchemaVersion},
              {"kind", to_string(r.kind)},
              {"stability", to_string(r.stability)},
              {"ambiguous", r.ambiguous},
              {"points", points},
              {"witness", w}};
  if (r.manifold_level) out["manifold_level"] = *r.manifold_level;
  if (r.points.size() == 1 && r.points.front().state.size() == 2) {
    out["r_star"] = r.points.front().state[0];
  }
  return out;
}

json to_json(const InvasionResult& r) {
  json out = {{"verdict", to_string(r.verdict)}, {"min_margin", number(r.min_margin)}, {"checked", r.checked}};
  if (r.epsilon) out["epsilon"] = *r.epsilon;
  if (r.invader) out["invader"] = state_json(*r.invader);
  return out;
}

json to_json(const JacobianMinors& j) {
  return {{"minors", j.minors}, {"negative_definite", j.negative_definite}};
}

json to_json(const BinnedStats& s) {
  json bins = json::array();
  for (const auto& b : s.bins) {
    bins.push_back({{"lo", b.lo},
                    {"hi", number(b.hi)},
                    {"miners", b.miners},
                    {"blocks", b.blocks},
                    {"uncles", b.uncles},
                    {"forks_involved", b.forks_involved},
                    {"forks_lost", b.forks_lost},
                    {"uncle_rate", b.uncle_rate},
                    {"fork_rate", b.fork_rate},
                    {"fail_rate", b.fail_rate}});
  }
  json miners = json::array();
  for (const auto& m : s.miners) {
    miners.push_back({{"miner", m.miner},
                      {"canonical", m.canonical},
                      {"uncles", m.uncles},
                      {"forks_involved", m.forks_involved},
                      {"forks_lost", m.forks_lost},
                      {"uncle_rate", m.uncle_rate ? json(*m.uncle_rate) : json(nullptr)},
                      {"fork_rate", m.fork_rate ? json(*m.fork_rate) : json(nullptr)},
                      {"fail_rate", m.fail_rate}});
  }
  return {{"schema_version", kSchemaVersion}, {"bins", bins}, {"miners", miners}, {"warnings", s.warnings}};
}

json to_json(const std::map<int, BranchCount>& h) {
  json rows = json::array();
  for (const auto& [b, c] : h) rows.push_back({{"branches", b}, {"count", c.count}, {"fraction", c.fraction}});
  return {{"schema_version", kSchemaVersion}, {"histogram", rows}};
}

json to_json(const TopKGini& g) {
  json miners = json::array();
  for (const auto& [name, n] : g.miners) miners.push_back({{"miner", name}, {"canonical", n}});
  return {{"schema_version", kSchemaVersion}, {"gini", g.gini}, {"miners", miners}, {"warnings", g.warnings}};
}

json to_json(const std::vector<SweepRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json rv = json::array();
    for (double v : r.r) rv.push_back(number(v));
    out.push_back({{"tau", r.tau},
                   {"theta", r.theta},
                   {"r", rv},
                   {"gini", number(r.gini)},
                   {"method", r.method},
                   {"status", r.status}});
  }
  return {{"schema_version", kSchemaVersion}, {"rows", out}};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  const std::size_t m = t.terminal.size();
  out << 't';
  for (std::size_t i = 1; i <= m; ++i) out << ",r_" << i;
  out << '\n';
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    out << fmt(t.times[k]);
    for (double v : t.states[k].values()) out << ',' << fmt(v);
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  const std::size_t m = rows.empty() ? 0 : rows.front().r.size();
  out << "tau,theta";
  for (std::size_t i = 1; i <= m; ++i) out << ",r_" << i;
  out << ",gini,method,status\n";
  for (const auto& r : rows) {
    out << fmt(r.tau) << ',' << fmt(r.theta);
    for (double v : r.r) out << ',' << fmt(v);
    out << ',' << fmt(r.gini) << ',' << csv_field(r.method) << ',' << csv_field(r.status) << '\n';
  }
}

}  // namespace forkgame
