#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "geocon/tool.hpp"

namespace geocon {

class DomainError : public Error {
 public:
  using Error::Error;
};

class SeedCoverageMismatch : public Error {
 public:
  using Error::Error;
};

/// Unbiased pass@k: 1 - C(n-c, k) / C(n, k), as a running product.
inline double pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
  if (c > n) throw DomainError("pass_at_k: c exceeds n");
  if (k < 1 || k > n) throw DomainError("pass_at_k: k must lie in [1, n]");
  if (c == 0) return 0.0;
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (std::size_t i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  return 1.0 - miss;
}

struct RunRecord {
  std::string problem;
  std::string pack;
  std::size_t n = 0;
  std::size_t c = 0;
  std::string config;
  std::uint64_t seed = 0;
  std::string transcripts;

  nlohmann::json to_json() const {
    return {{"problem", problem}, {"pack", pack}, {"n", n},      {"c", c},
            {"config", config},   {"seed", seed}, {"transcripts", transcripts}};
  }

  static RunRecord from_json(const nlohmann::json& j) {
    RunRecord r;
    r.problem = j.at("problem").get<std::string>();
    r.pack = j.at("pack").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.c = j.at("c").get<std::size_t>();
    r.config = j.value("config", "");
    r.seed = j.at("seed").get<std::uint64_t>();
    r.transcripts = j.value("transcripts", "");
    if (r.c > r.n) throw DomainError("run record for " + r.problem + " has c > n");
    return r;
  }
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over seeds

  friend bool operator==(const Stat&, const Stat&) = default;
};

inline Stat mean_std(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

/// One method row: overall and per-pack figures for each k.
struct MethodResult {
  std::string method;
  std::map<std::size_t, Stat> overall;                       // k -> stat
  std::map<std::string, std::map<std::size_t, Stat>> packs;  // pack -> k -> stat
};

struct BenchReport {
  std::vector<MethodResult> methods;
  std::map<std::string, double> baselines;  // method -> fully-correct rate
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json to_json() const;
  static BenchReport from_json(const nlohmann::json& j);
};

inline nlohmann::json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }
inline Stat stat_from(const nlohmann::json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

inline nlohmann::json BenchReport::to_json() const {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : methods) {
    nlohmann::json overall = nlohmann::json::object();
    for (const auto& [k, s] : m.overall) overall["pass@" + std::to_string(k)] = stat_json(s);
    nlohmann::json packs = nlohmann::json::object();
    for (const auto& [pack, ks] : m.packs) {
      nlohmann::json pj = nlohmann::json::object();
      for (const auto& [k, s] : ks) pj["pass@" + std::to_string(k)] = stat_json(s);
      packs[pack] = pj;
    }
    ms.push_back({{"method", m.method}, {"overall", overall}, {"packs", packs}});
  }
  return {{"methods", ms}, {"baselines", baselines}, {"metadata", metadata}};
}

inline std::size_t parse_k(const std::string& key) {
  if (key.rfind("pass@", 0) != 0) throw DomainError("unexpected metric '" + key + "'");
  return static_cast<std::size_t>(std::stoul(key.substr(5)));
}

inline BenchReport BenchReport::from_json(const nlohmann::json& j) {
  BenchReport r;
  for (const auto& mj : j.at("methods")) {
    MethodResult m;
    m.method = mj.at("method").get<std::string>();
    for (const auto& [key, v] : mj.at("overall").items()) m.overall[parse_k(key)] = stat_from(v);
    for (const auto& [pack, ks] : mj.at("packs").items()) {
      for (const auto& [key, v] : ks.items()) m.packs[pack][parse_k(key)] = stat_from(v);
    }
    r.methods.push_back(std::move(m));
  }
  r.baselines = j.value("baselines", std::map<std::string, double>{});
  r.metadata = j.value("metadata", nlohmann::json::object());
  return r;
}

/// Per seed: pass@k averaged over problems within each pack, then over
/// packs. Mean and sample std are then taken across seeds. Every seed must
/// cover the same problems.
inline MethodResult aggregate(const std::string& method, const std::vector<RunRecord>& records,
                              const std::vector<std::size_t>& ks) {
  std::map<std::uint64_t, std::vector<const RunRecord*>> by_seed;
  for (const auto& r : records) by_seed[r.seed].push_back(&r);
  if (by_seed.empty()) throw DomainError("aggregate: no records");

  std::optional<std::set<std::string>> coverage;
  for (const auto& [seed, rs] : by_seed) {
    std::set<std::string> ids;
    for (const auto* r : rs) {
      if (!ids.insert(r->problem).second) {
        throw DomainError("seed " + std::to_string(seed) + " lists problem " + r->problem + " twice");
      }
    }
    if (!coverage) {
      coverage = std::move(ids);
    } else if (ids != *coverage) {
      throw SeedCoverageMismatch("seed " + std::to_string(seed) + " covers a different problem set");
    }
  }

  MethodResult out;
  out.method = method;
  for (std::size_t k : ks) {
    std::vector<double> overall;
    std::map<std::string, std::vector<double>> pack_series;
    for (const auto& [seed, rs] : by_seed) {
      std::map<std::string, std::pair<double, std::size_t>> packs;
      for (const auto* r : rs) {
        auto& [sum, count] = packs[r->pack];
        sum += pass_at_k(r->n, r->c, k);
        ++count;
      }
      double total = 0.0;
      for (const auto& [pack, sc] : packs) {
        const double v = sc.first / static_cast<double>(sc.second);
        pack_series[pack].push_back(v);
        total += v;
      }
      overall.push_back(total / static_cast<double>(packs.size()));
    }
    out.overall[k] = mean_std(overall);
    for (const auto& [pack, series] : pack_series) out.packs[pack][k] = mean_std(series);
  }
  return out;
}

/// "x.x (± y.y)" with both values already in percent.
inline std::string format_cell(double percent, double std_percent) {
  const auto round1 = [](double v) {
    const double snapped = std::round(v * 1e9) / 1e9;  // absorb binary noise before halving
    return std::round(snapped * 10.0) / 10.0;
  };
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f (± %.1f)", round1(percent), round1(std_percent));
  return buf;
}

inline std::string emit_markdown(const BenchReport& r) {
  std::set<std::size_t> ks;
  for (const auto& m : r.methods) {
    for (const auto& [k, s] : m.overall) ks.insert(k);
  }
  std::string out = "| Method |";
  for (std::size_t k : ks) out += " pass@" + std::to_string(k) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < ks.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& m : r.methods) {
    out += "| " + m.method + " |";
    for (std::size_t k : ks) {
      auto it = m.overall.find(k);
      out += " " + (it == m.overall.end() ? std::string("-") : format_cell(100 * it->second.mean, 100 * it->second.std)) + " |";
    }
    out += "\n";
  }
  if (!r.baselines.empty()) {
    out += "\n| Baseline | fully correct |\n|---|---|\n";
    for (const auto& [name, rate] : r.baselines) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", rate);
      out += "| " + name + " | " + buf + " |\n";
    }
  }
  return out;
}

inline std::string emit_json(const BenchReport& r) { return r.to_json().dump(2) + "\n"; }

}  // namespace geocon
