#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "geocon/execute.hpp"
#include "geocon/problem.hpp"
#include "geocon/verifier.hpp"

namespace geocon {

class InsufficientCorpus : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Argument slots

/// What a tool argument position accepts.
enum class Slot { Point, Linear, Object };

inline std::vector<Slot> argument_slots(ToolKind t) {
  switch (t) {
    case ToolKind::Line:
    case ToolKind::Ray:
    case ToolKind::Segment:
    case ToolKind::Circle:
    case ToolKind::PerpBisector:
      return {Slot::Point, Slot::Point};
    case ToolKind::Compass:
    case ToolKind::AngleBisector:
      return {Slot::Point, Slot::Point, Slot::Point};
    case ToolKind::Perpendicular:
    case ToolKind::Parallel:
      return {Slot::Linear, Slot::Point};
    case ToolKind::Intersect:
      return {Slot::Object, Slot::Object};
    case ToolKind::PointOn:
      return {Slot::Object};
    case ToolKind::FreePoint:
      return {};
  }
  return {};
}

inline ObjectKind output_kind(ToolKind t) {
  switch (t) {
    case ToolKind::Line:
    case ToolKind::PerpBisector:
    case ToolKind::Perpendicular:
    case ToolKind::Parallel:
      return ObjectKind::Line;
    case ToolKind::Ray:
    case ToolKind::AngleBisector:
      return ObjectKind::Ray;
    case ToolKind::Segment:
      return ObjectKind::Segment;
    case ToolKind::Circle:
    case ToolKind::Compass:
      return ObjectKind::Circle;
    default:
      return ObjectKind::Point;
  }
}

inline bool fits(Slot s, ObjectKind k) {
  switch (s) {
    case Slot::Point: return k == ObjectKind::Point;
    case Slot::Linear: return k == ObjectKind::Line || k == ObjectKind::Ray || k == ObjectKind::Segment;
    case Slot::Object: return k != ObjectKind::Point;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Memory

struct MemoryVar {
  std::string name;
  ObjectKind kind;
  std::size_t age = 0;
};

/// Variables available to a rollout, weighted by gamma^age.
class MemoryState {
 public:
  explicit MemoryState(double gamma = 0.5) : gamma_(gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("decay must lie in (0, 1)");
  }

  static MemoryState from_scene(const Scene& scene, double gamma = 0.5) {
    MemoryState m(gamma);
    for (const auto& o : scene.objects()) m.add(o.label, kind_of(o.shape));
    return m;
  }

  void add(std::string name, ObjectKind kind) { vars_.push_back({std::move(name), kind, 0}); }
  void age() {
    for (auto& v : vars_) ++v.age;
  }

  double weight(const MemoryVar& v) const { return std::pow(gamma_, static_cast<double>(v.age)); }
  const std::vector<MemoryVar>& vars() const { return vars_; }

  bool contains(std::string_view name) const {
    return std::any_of(vars_.begin(), vars_.end(), [&](const MemoryVar& v) { return v.name == name; });
  }

  /// A name of the form <prefix><k> not yet in memory.
  std::string fresh(std::string_view prefix) {
    for (;;) {
      std::string n = std::string(prefix) + std::to_string(++counter_);
      if (!contains(n)) return n;
    }
  }

  /// Draws one variable per slot without replacement. A slot with no
  /// compatible variable left falls back to any remaining variable.
  /// `weighted` false gives uniform draws.
  std::vector<std::string> draw(const std::vector<Slot>& slots, Rng& rng, bool weighted = true) const {
    std::vector<bool> used(vars_.size(), false);
    std::vector<std::string> out;
    for (Slot s : slots) {
      std::vector<double> w(vars_.size(), 0.0);
      bool any = false;
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (!used[i] && fits(s, vars_[i].kind)) {
          w[i] = weighted ? weight(vars_[i]) : 1.0;
          any = true;
        }
      }
      if (!any) {
        for (std::size_t i = 0; i < vars_.size(); ++i) {
          if (!used[i]) w[i] = weighted ? weight(vars_[i]) : 1.0;
          any = any || !used[i];
        }
      }
      if (!any) {
        // Fewer variables than slots: repeat one.
        for (std::size_t i = 0; i < vars_.size(); ++i) w[i] = weighted ? weight(vars_[i]) : 1.0;
      }
      const std::size_t pick = rng.weighted(w);
      used[pick] = true;
      out.push_back(vars_[pick].name);
    }
    return out;
  }

 private:
  double gamma_;
  std::vector<MemoryVar> vars_;
  std::size_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// LCS replay

struct LcsEntry {
  std::vector<ToolKind> tools;
  Program templ;  // first occurrence in the corpus
  std::size_t count = 0;  // program pairs sharing it as their longest block
};

struct LcsBank {
  std::vector<LcsEntry> entries;
};

namespace detail {

inline Program slice(const Program& p, std::size_t from, std::size_t len) {
  Program out;
  out.steps.assign(p.steps.begin() + static_cast<std::ptrdiff_t>(from),
                   p.steps.begin() + static_cast<std::ptrdiff_t>(from + len));
  return out;
}

}  // namespace detail

inline LcsBank build_lcs_bank(const std::vector<Program>& corpus, std::size_t top = 5) {
  if (corpus.size() < 2) throw InsufficientCorpus("LCS bank needs at least two programs");
  struct Acc {
    Program templ;
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::map<std::vector<ToolKind>, Acc> acc;
  std::size_t order = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto a = tool_sequence(corpus[i]);
    for (std::size_t j = i + 1; j < corpus.size(); ++j) {
      const auto b = tool_sequence(corpus[j]);
      // Longest common substring table.
      std::vector<std::vector<std::size_t>> len(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
      std::size_t best = 0;
      for (std::size_t x = 1; x <= a.size(); ++x) {
        for (std::size_t y = 1; y <= b.size(); ++y) {
          if (a[x - 1] == b[y - 1]) {
            len[x][y] = len[x - 1][y - 1] + 1;
            best = std::max(best, len[x][y]);
          }
        }
      }
      if (best == 0) continue;
      std::set<std::vector<ToolKind>> seen;
      for (std::size_t x = best; x <= a.size(); ++x) {
        for (std::size_t y = best; y <= b.size(); ++y) {
          if (len[x][y] != best) continue;
          std::vector<ToolKind> seq(a.begin() + static_cast<std::ptrdiff_t>(x - best),
                                    a.begin() + static_cast<std::ptrdiff_t>(x));
          if (!seen.insert(seq).second) continue;
          auto [it, fresh] = acc.try_emplace(seq);
          if (fresh) {
            it->second.templ = detail::slice(corpus[i], x - best, best);
            it->second.first = order++;
          }
          ++it->second.count;
        }
      }
    }
  }
  std::vector<std::pair<std::vector<ToolKind>, Acc>> ranked(acc.begin(), acc.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) {
    if (l.first.size() != r.first.size()) return l.first.size() > r.first.size();
    if (l.second.count != r.second.count) return l.second.count > r.second.count;
    return l.second.first < r.second.first;
  });
  LcsBank bank;
  for (std::size_t i = 0; i < ranked.size() && i < top; ++i) {
    bank.entries.push_back({ranked[i].first, ranked[i].second.templ, ranked[i].second.count});
  }
  return bank;
}

/// Adapts a template block to the identifiers of `scene`: references to
/// outputs inside the block follow the renamed outputs, everything else is
/// drawn uniformly from compatible objects of the scene. Pick hints are
/// dropped since they name the template's own points.
inline Program adapt_template(const Program& templ, const Scene& scene, Rng& rng) {
  MemoryState mem = MemoryState::from_scene(scene);
  std::map<std::string, std::string> local;
  Program out;
  for (const auto& s : templ.steps) {
    Step step;
    step.tool = s.tool;
    const auto slots = argument_slots(s.tool);
    std::vector<Slot> open;
    for (std::size_t i = 0; i < s.args.size(); ++i) {
      if (!local.contains(s.args[i])) open.push_back(slots[i]);
    }
    const auto drawn = mem.draw(open, rng, false);
    std::size_t d = 0;
    for (const auto& a : s.args) {
      auto it = local.find(a);
      step.args.push_back(it != local.end() ? it->second : drawn[d++]);
    }
    for (const auto& o : s.outputs) {
      std::string n = mem.fresh("v");
      local[o] = n;
      mem.add(n, output_kind(s.tool));
      step.outputs.push_back(std::move(n));
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

/// Replays a uniformly chosen bank block on the instance of `seed`.
/// Returns nullopt (discarded) when 50 draws all hit a step error.
inline std::optional<Program> run_lcs(const LcsBank& bank, const ProblemSpec& spec, std::uint64_t seed,
                                      std::size_t attempts = 50) {
  if (bank.entries.empty()) throw std::invalid_argument("run_lcs: empty bank");
  const Scene scene = instantiate(spec, seed);
  Rng rng(mix_seed(seed, 0x1C5));
  for (std::size_t a = 0; a < attempts; ++a) {
    const auto& entry = bank.entries[rng.index(bank.entries.size())];
    Program p = adapt_template(entry.templ, scene, rng);
    if (execute(p, scene).ok()) return p;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// N-gram rollouts

struct NGramDb {
  std::map<std::vector<ToolKind>, std::size_t> grams[3];  // index n-1

  const std::map<std::vector<ToolKind>, std::size_t>& of(std::size_t n) const {
    if (n < 1 || n > 3) throw std::invalid_argument("n-gram order must be 1, 2 or 3");
    return grams[n - 1];
  }

  std::size_t total(std::size_t n) const {
    std::size_t t = 0;
    for (const auto& [g, c] : of(n)) t += c;
    return t;
  }
};

inline NGramDb build_ngram_db(const std::vector<Program>& corpus) {
  NGramDb db;
  for (const auto& p : corpus) {
    const auto seq = tool_sequence(p);
    for (std::size_t n = 1; n <= 3; ++n) {
      for (std::size_t i = 0; i + n <= seq.size(); ++i) {
        ++db.grams[n - 1][std::vector<ToolKind>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                                seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
      }
    }
  }
  return db;
}

struct NGramOptions {
  double gamma = 0.5;
  std::optional<std::size_t> max_steps;  // default: shortest reference
  bool whitelist_only = true;
};

inline std::size_t shortest_reference(const ProblemSpec& spec) {
  std::size_t m = spec.references.front().size();
  for (const auto& r : spec.references) m = std::min(m, r.size());
  return m;
}

/// Rolls out n-grams until the step budget is spent. Steps are emitted
/// whether or not they apply on an instance; the verifier scores them.
inline Program run_ngram(const NGramDb& db, std::size_t n, const ProblemSpec& spec, std::uint64_t seed,
                         const NGramOptions& opt = {}) {
  const auto& table = db.of(n);
  if (table.empty()) throw std::invalid_argument("run_ngram: no " + std::to_string(n) + "-grams");
  std::vector<const std::vector<ToolKind>*> grams;
  std::vector<double> weights;
  for (const auto& [g, c] : table) {
    if (opt.whitelist_only && !std::all_of(g.begin(), g.end(), [&](ToolKind t) { return spec.allows(t); })) continue;
    grams.push_back(&g);
    weights.push_back(static_cast<double>(c));
  }
  if (grams.empty()) {
    for (const auto& [g, c] : table) {
      grams.push_back(&g);
      weights.push_back(static_cast<double>(c));
    }
  }
  const std::size_t budget = opt.max_steps.value_or(shortest_reference(spec));
  const Scene scene = instantiate(spec, seed);
  MemoryState mem = MemoryState::from_scene(scene, opt.gamma);
  Rng rng(mix_seed(seed, 0x9A3));
  Program out;
  while (out.size() < budget) {
    const auto& gram = *grams[rng.weighted(weights)];
    for (ToolKind t : gram) {
      if (out.size() >= budget) break;
      Step step;
      step.tool = t;
      step.args = mem.draw(argument_slots(t), rng);
      mem.age();
      std::string o = mem.fresh("v");
      mem.add(o, output_kind(t));
      step.outputs.push_back(std::move(o));
      out.steps.push_back(std::move(step));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trials

enum class BaselineMethod { Lcs, OneGram, TwoGram, ThreeGram };

inline std::string_view method_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::Lcs: return "lcs";
    case BaselineMethod::OneGram: return "1gram";
    case BaselineMethod::TwoGram: return "2gram";
    case BaselineMethod::ThreeGram: return "3gram";
  }
  return "?";
}

inline BaselineMethod parse_method(std::string_view s) {
  for (auto m : {BaselineMethod::Lcs, BaselineMethod::OneGram, BaselineMethod::TwoGram, BaselineMethod::ThreeGram}) {
    if (s == method_name(m)) return m;
  }
  throw std::invalid_argument("unknown baseline method '" + std::string(s) + "'");
}

struct BaselineSummary {
  std::string method;
  std::size_t trials = 0;
  std::size_t fully_correct = 0;
  std::size_t tool_sequence = 0;
  std::size_t discarded = 0;
  std::uint64_t seed = 0;

  double fully_correct_rate() const { return trials ? static_cast<double>(fully_correct) / trials : 0.0; }
  double tool_sequence_rate() const { return trials ? static_cast<double>(tool_sequence) / trials : 0.0; }

  nlohmann::json to_json() const {
    return {{"method", method},
            {"trials", trials},
            {"fully_correct_rate", fully_correct_rate()},
            {"tool_sequence_rate", tool_sequence_rate()},
            {"discarded", discarded},
            {"seed", seed}};
  }
};

/// One ground-truth solution per problem: its primary reference. Alternates
/// exist so the verifier accepts other valid routes and are left out here.
inline std::vector<Program> reference_corpus(const Bank& bank) {
  std::vector<Program> out;
  for (const auto& p : bank.problems) out.push_back(p.references.front());
  return out;
}

/// Trial t runs on problem t mod |bank| with seed mix_seed(seed, t).
inline BaselineSummary run_baseline(const Bank& bank, BaselineMethod method, std::size_t trials, std::uint64_t seed,
                                    std::size_t instances = kDefaultInstances) {
  if (bank.problems.empty()) throw std::invalid_argument("run_baseline: empty bank");
  const auto corpus = reference_corpus(bank);
  std::optional<LcsBank> lcs;
  std::optional<NGramDb> db;
  if (method == BaselineMethod::Lcs) {
    lcs = build_lcs_bank(corpus);
  } else {
    db = build_ngram_db(corpus);
  }
  BaselineSummary s;
  s.method = std::string(method_name(method));
  s.trials = trials;
  s.seed = seed;
  for (std::size_t t = 0; t < trials; ++t) {
    const ProblemSpec& spec = bank.problems[t % bank.problems.size()];
    const std::uint64_t ts = mix_seed(seed, t);
    std::optional<Program> cand;
    if (lcs) {
      cand = run_lcs(*lcs, spec, ts);
    } else {
      cand = run_ngram(*db, static_cast<std::size_t>(method), spec, ts);
    }
    if (!cand) {
      ++s.discarded;
      continue;
    }
    const VerifyReport r = verify(spec, *cand, instances, ts);
    if (r.fully_correct) ++s.fully_correct;
    if (r.tool_sequence_correct) ++s.tool_sequence;
  }
  return s;
}

}  // namespace geocon
