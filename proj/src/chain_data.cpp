#include "forkgame/chain_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "forkgame/errors.hpp"
#include "forkgame/metrics.hpp"

namespace forkgame {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::uint64_t parse_height(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument("height must be a nonnegative integer, got '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("height out of range: '" + s + "'");
  }
}

std::string header_of(std::istream& in) {
  std::string line;
  if (!read_line(in, line)) throw ParseError("missing header line");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  return line;
}

template <class Record, class RowFn>
Loaded<Record> load_rows(std::istream& in, bool strict, std::size_t min_fields,
                         std::size_t max_fields, RowFn&& row) {
  Loaded<Record> out;
  std::string line;
  std::size_t lineno = 1;
  while (read_line(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto f = split_csv(line);
    try {
      if (f.size() < min_fields || f.size() > max_fields) {
        throw std::invalid_argument("expected " + std::to_string(min_fields) +
                                    (max_fields > min_fields ? "-" + std::to_string(max_fields) : "") +
                                    " fields, got " + std::to_string(f.size()));
      }
      out.records.push_back(row(f));
    } catch (const std::invalid_argument& e) {
      if (strict) throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
      out.errors.push_back({lineno, e.what()});
    }
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

Loaded<BlockRecord> load_blocks(std::istream& in, bool strict) {
  const std::string header = header_of(in);
  if (header != "height,miner,status") {
    throw ParseError("bad blocks header '" + header + "', expected 'height,miner,status'");
  }
  return load_rows<BlockRecord>(in, strict, 3, 3, [](const std::vector<std::string>& f) {
    BlockRecord r;
    r.height = parse_height(f[0]);
    if (f[1].empty()) throw std::invalid_argument("empty miner");
    r.miner = f[1];
    if (f[2] == "canonical") {
      r.status = BlockStatus::canonical;
    } else if (f[2] == "uncle") {
      r.status = BlockStatus::uncle;
    } else {
      throw std::invalid_argument("unknown status '" + f[2] + "'");
    }
    return r;
  });
}

Loaded<BlockRecord> load_blocks(const std::filesystem::path& path, bool strict) {
  auto in = open_in(path);
  return load_blocks(in, strict);
}

Loaded<ForkRecord> load_forks(std::istream& in, bool strict) {
  const std::string header = header_of(in);
  std::size_t fields = 0;
  if (header == "height,miner_a,miner_b,winner") {
    fields = 4;
  } else if (header == "height,miner_a,miner_b,winner,branches") {
    fields = 5;
  } else {
    throw ParseError("bad forks header '" + header +
                     "', expected 'height,miner_a,miner_b,winner[,branches]'");
  }
  return load_rows<ForkRecord>(in, strict, 4, fields, [](const std::vector<std::string>& f) {
    ForkRecord r;
    r.height = parse_height(f[0]);
    if (f[1].empty() || f[2].empty()) throw std::invalid_argument("empty miner");
    r.miner_a = f[1];
    r.miner_b = f[2];
    if (f[3] == "a") {
      r.a_won = true;
    } else if (f[3] == "b") {
      r.a_won = false;
    } else {
      throw std::invalid_argument("unknown winner '" + f[3] + "'");
    }
    if (f.size() == 5 && !f[4].empty()) {
      if (f[4].find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("branches must be an integer >= 2, got '" + f[4] + "'");
      }
      const long b = std::stol(f[4]);
      if (b < 2 || b > std::numeric_limits<int>::max()) {
        throw std::invalid_argument("branches must be an integer >= 2, got '" + f[4] + "'");
      }
      r.branches = static_cast<int>(b);
    }
    return r;
  });
}

Loaded<ForkRecord> load_forks(const std::filesystem::path& path, bool strict) {
  auto in = open_in(path);
  return load_forks(in, strict);
}

std::vector<double> default_bin_edges() {
  return {0.0, 10.0, 100.0, 1000.0, 10000.0, std::numeric_limits<double>::infinity()};
}

BinnedStats miner_stats(const std::vector<BlockRecord>& blocks, const std::vector<ForkRecord>& forks,
                        const std::vector<double>& edges) {
  if (edges.size() < 2 || edges.front() != 0.0 || !std::isinf(edges.back())) {
    throw std::domain_error("bin edges must start at 0 and end at infinity");
  }
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i] < edges[i + 1])) throw std::domain_error("bin edges must be increasing");
  }

  BinnedStats out;
  std::unordered_map<std::string, std::size_t> index;
  auto slot = [&](const std::string& name) -> MinerStats& {
    auto [it, fresh] = index.try_emplace(name, out.miners.size());
    if (fresh) {
      out.miners.emplace_back();
      out.miners.back().miner = name;
    }
    return out.miners[it->second];
  };
  for (const auto& b : blocks) {
    auto& s = slot(b.miner);
    (b.status == BlockStatus::canonical ? s.canonical : s.uncles)++;
  }
  for (const auto& f : forks) {
    if (f.miner_a == f.miner_b) {
      // Both branches came from the same miner; it is involved once and its
      // stale block is still a loss.
      out.warnings.push_back("fork at height " + std::to_string(f.height) + " has the same miner '" +
                             f.miner_a + "' on both sides");
      auto& s = slot(f.miner_a);
      s.forks_involved++;
      s.forks_lost++;
      continue;
    }
    auto& a = slot(f.miner_a);
    a.forks_involved++;
    if (!f.a_won) a.forks_lost++;
    auto& b = slot(f.miner_b);
    b.forks_involved++;
    if (f.a_won) b.forks_lost++;
  }
  std::sort(out.miners.begin(), out.miners.end(),
            [](const MinerStats& x, const MinerStats& y) { return x.miner < y.miner; });

  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    StatsBin bin;
    bin.lo = edges[i];
    bin.hi = edges[i + 1];
    out.bins.push_back(bin);
  }
  for (auto& s : out.miners) {
    const std::uint64_t total = s.total();
    if (s.forks_involved > 0) {
      s.fail_rate = static_cast<double>(s.forks_lost) / static_cast<double>(s.forks_involved);
    }
    if (total == 0) {
      out.warnings.push_back("miner '" + s.miner + "' appears in forks but has no blocks");
      continue;
    }
    s.uncle_rate = static_cast<double>(s.uncles) / static_cast<double>(total);
    s.fork_rate = static_cast<double>(s.forks_involved) / static_cast<double>(total);
    const double t = static_cast<double>(total);
    for (auto& bin : out.bins) {
      if (t > bin.lo && t <= bin.hi) {
        bin.miners++;
        bin.blocks += total;
        bin.uncles += s.uncles;
        bin.forks_involved += s.forks_involved;
        bin.forks_lost += s.forks_lost;
        break;
      }
    }
  }
  for (auto& bin : out.bins) {
    if (bin.blocks > 0) {
      bin.uncle_rate = static_cast<double>(bin.uncles) / static_cast<double>(bin.blocks);
      bin.fork_rate = static_cast<double>(bin.forks_involved) / static_cast<double>(bin.blocks);
    }
    if (bin.forks_involved > 0) {
      bin.fail_rate = static_cast<double>(bin.forks_lost) / static_cast<double>(bin.forks_involved);
    }
  }
  return out;
}

std::map<int, BranchCount> branch_histogram(const std::vector<ForkRecord>& forks) {
  std::map<int, BranchCount> out;
  for (const auto& f : forks) out[f.branches].count++;
  for (auto& [b, c] : out) {
    c.fraction = static_cast<double>(c.count) / static_cast<double>(forks.size());
  }
  return out;
}

TopKGini top_k_gini(const std::vector<BlockRecord>& blocks, std::size_t k) {
  if (k == 0) throw std::domain_error("top-k gini needs k >= 1");
  std::map<std::string, std::uint64_t> counts;
  for (const auto& b : blocks) {
    if (b.status == BlockStatus::canonical) counts[b.miner]++;
  }
  TopKGini out;
  out.miners.assign(counts.begin(), counts.end());
  if (out.miners.empty()) throw std::domain_error("no canonical blocks to rank miners by");
  std::stable_sort(out.miners.begin(), out.miners.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (out.miners.size() < k) {
    out.warnings.push_back("only " + std::to_string(out.miners.size()) + " miners, fewer than k = " +
                           std::to_string(k) + "; using all");
  } else {
    out.miners.resize(k);
  }
  std::vector<double> v;
  for (const auto& m : out.miners) v.push_back(static_cast<double>(m.second));
  out.gini = gini(v);
  return out;
}

std::string format_stats_table(const BinnedStats& s) {
  auto label = [](const StatsBin& b) {
    std::ostringstream os;
    os << '(' << b.lo << ", ";
    if (std::isinf(b.hi)) {
      os << "inf)";
    } else {
      os << b.hi << ']';
    }
    return os.str();
  };
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %8s %12s %10s %10s %10s\n", "Blocks mined", "Miners",
                "Blocks", "Uncle rate", "Fork rate", "Fail rate");
  os << buf;
  for (const auto& b : s.bins) {
    std::snprintf(buf, sizeof buf, "%-16s %8llu %12llu %10.6f %10.6f %10.6f\n", label(b).c_str(),
                  static_cast<unsigned long long>(b.miners), static_cast<unsigned long long>(b.blocks),
                  b.uncle_rate, b.fork_rate, b.fail_rate);
    os << buf;
  }
  return os.str();
}

std::vector<BlockRecord> trace_blocks(const SimTrace& t) {
  std::vector<BlockRecord> out;
  out.reserve(t.blocks.size());
  for (const auto& b : t.blocks) {
    out.push_back({b.height, "pool" + std::to_string(b.miner),
                   b.canonical ? BlockStatus::canonical : BlockStatus::uncle});
  }
  return out;
}

std::vector<ForkRecord> trace_forks(const SimTrace& t) {
  std::vector<ForkRecord> out;
  out.reserve(t.forks.size());
  for (const auto& f : t.forks) {
    out.push_back({f.height, "pool" + std::to_string(f.initiator), "pool" + std::to_string(f.rival),
                   f.initiator_won, 2});
  }
  return out;
}

void write_blocks_csv(std::ostream& out, const std::vector<BlockRecord>& blocks) {
  out << "height,miner,status\n";
  for (const auto& b : blocks) {
    out << b.height << ',' << b.miner << ',' << (b.status == BlockStatus::canonical ? "canonical" : "uncle")
        << '\n';
  }
}

void write_forks_csv(std::ostream& out, const std::vector<ForkRecord>& forks) {
  out << "height,miner_a,miner_b,winner,branches\n";
  for (const auto& f : forks) {
    out << f.height << ',' << f.miner_a << ',' << f.miner_b << ',' << (f.a_won ? 'a' : 'b') << ','
        << f.branches << '\n';
  }
}

}  // namespace forkgame
