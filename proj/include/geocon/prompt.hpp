#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geocon/chat.hpp"
#include "geocon/dsl.hpp"
#include "geocon/problem.hpp"

namespace geocon {

enum class AgentRole { SolverNL, SolverGT, ValidatorNL, ValidatorGT };

inline std::string_view role_name(AgentRole r) {
  switch (r) {
    case AgentRole::SolverNL: return "solver_nl";
    case AgentRole::SolverGT: return "solver_gt";
    case AgentRole::ValidatorNL: return "validator_nl";
    case AgentRole::ValidatorGT: return "validator_gt";
  }
  return "?";
}

inline bool is_validator(AgentRole r) { return r == AgentRole::ValidatorNL || r == AgentRole::ValidatorGT; }

// ---------------------------------------------------------------------------
// Similarity

class SimilarityBackend {
 public:
  virtual ~SimilarityBackend() = default;
  /// Score in [0, 1]; symmetric.
  virtual double score(std::string_view a, std::string_view b) const = 0;
};

/// Token TF-IDF cosine. Document frequencies come from an optional fitting
/// corpus; unseen tokens get the maximum idf.
class LexicalSimilarity : public SimilarityBackend {
 public:
  LexicalSimilarity() = default;

  explicit LexicalSimilarity(const std::vector<std::string>& corpus) {
    for (const auto& doc : corpus) {
      std::set<std::string> seen;
      for (auto& t : tokens(doc)) seen.insert(std::move(t));
      for (const auto& t : seen) ++df_[t];
    }
    docs_ = corpus.size();
  }

  double score(std::string_view a, std::string_view b) const override {
    const auto va = vectorize(a), vb = vectorize(b);
    double dotp = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [t, w] : va) {
      na += w * w;
      if (auto it = vb.find(t); it != vb.end()) dotp += w * it->second;
    }
    for (const auto& [t, w] : vb) nb += w * w;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dotp / std::sqrt(na * nb), 0.0, 1.0);
  }

  static std::vector<std::string> tokens(std::string_view text) {
    static const std::set<std::string, std::less<>> stop = {
        "a", "an", "and", "the", "of", "to", "in", "on", "is", "it", "its", "with", "at", "by", "that", "so",
        "be", "as", "for", "from", "this", "let", "given", "tool"};
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
      if (!cur.empty() && !stop.contains(cur)) out.push_back(cur);
      cur.clear();
    };
    for (char c : text) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      } else {
        flush();
      }
    }
    flush();
    return out;
  }

 private:
  std::map<std::string, double> vectorize(std::string_view text) const {
    std::map<std::string, double> tf;
    for (auto& t : tokens(text)) tf[t] += 1.0;
    for (auto& [t, w] : tf) {
      const auto it = df_.find(t);
      const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
      w *= std::log((1.0 + static_cast<double>(docs_)) / (1.0 + df)) + 1.0;
    }
    return tf;
  }

  std::map<std::string, std::size_t> df_;
  std::size_t docs_ = 0;
};

/// Adapts any callable to the similarity contract (used for stubs and
/// external embedding services).
class FunctionSimilarity : public SimilarityBackend {
 public:
  explicit FunctionSimilarity(std::function<double(std::string_view, std::string_view)> fn) : fn_(std::move(fn)) {}
  double score(std::string_view a, std::string_view b) const override { return fn_(a, b); }

 private:
  std::function<double(std::string_view, std::string_view)> fn_;
};

/// Text compared during example selection: statement plus tool names.
inline std::string similarity_text(const ProblemSpec& p) { return p.statement + " " + p.tool_list(); }

// ---------------------------------------------------------------------------
// Adaptive few-shot selection

struct AdaptiveConfig {
  enum class Mode { ST, Self };
  double threshold = 0.5;
  std::size_t cap = 15;
  std::size_t k = 5;
  Mode mode = Mode::ST;
};

struct ScoredEntry {
  KbEntry entry;
  double score = 0.0;
};

struct Selection {
  std::vector<KbEntry> examples;
  std::vector<ScoredEntry> stage1;
  bool seeds_only = false;     // knowledge base had nothing beyond the seeds
  bool self_fallback = false;  // Self reply unusable, ST order used
};

/// Stage 1: entries scoring above the threshold, best first, at most `cap`.
inline std::vector<ScoredEntry> prefilter(const std::vector<KbEntry>& pool, const ProblemSpec& problem,
                                          const AdaptiveConfig& cfg, const SimilarityBackend& sim) {
  const std::string query = similarity_text(problem);
  std::vector<ScoredEntry> scored;
  for (const auto& e : pool) {
    if (e.problem->id == problem.id) continue;
    const double s = sim.score(query, similarity_text(*e.problem));
    if (s > cfg.threshold) scored.push_back({e, s});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredEntry& a, const ScoredEntry& b) { return a.score > b.score; });
  if (scored.size() > cfg.cap) scored.resize(cfg.cap);
  return scored;
}

inline std::string self_selection_prompt(const ProblemSpec& problem, const std::vector<ScoredEntry>& stage1, std::size_t k) {
  std::ostringstream out;
  out << "Below is a geometric construction problem followed by numbered solved examples.\n"
      << "Choose the " << k << " examples that are most useful for solving the problem.\n"
      << "Reply with their numbers only, most useful first, separated by commas.\n\n"
      << "Problem: " << problem.statement << "\nTool List: " << problem.tool_list() << "\n\n";
  for (std::size_t i = 0; i < stage1.size(); ++i) {
    out << "[" << (i + 1) << "] " << stage1[i].entry.problem->statement << "\n";
  }
  return out.str();
}

/// Distinct 1-based ids in reply order, ignoring out-of-range numbers.
inline std::vector<std::size_t> parse_selection(std::string_view reply, std::size_t n) {
  std::vector<std::size_t> ids;
  std::size_t i = 0;
  while (i < reply.size()) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
      ++i;
      continue;
    }
    std::size_t v = 0, j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j])) && j - i < 6) v = v * 10 + static_cast<std::size_t>(reply[j++] - '0');
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    if (v >= 1 && v <= n && std::find(ids.begin(), ids.end(), v) == ids.end()) ids.push_back(v);
    i = j;
  }
  return ids;
}

inline Selection adaptive_select(const KnowledgeBase& kb, const ProblemSpec& problem, const AdaptiveConfig& cfg,
                                 const SimilarityBackend& sim, ChatBackend* llm = nullptr, double temperature = 0.0) {
  if (cfg.threshold < 0.0 || cfg.threshold > 1.0 || cfg.k > cfg.cap) {
    throw std::invalid_argument("adaptive_select: invalid configuration");
  }
  if (cfg.mode == AdaptiveConfig::Mode::Self && !llm) {
    throw std::invalid_argument("adaptive_select: Self mode needs a chat backend");
  }
  Selection sel;
  if (kb.entries.empty()) {
    for (const auto& s : kb.seeds) {
      if (s.problem->id != problem.id) sel.examples.push_back(s);
    }
    sel.seeds_only = true;
    return sel;
  }
  sel.stage1 = prefilter(kb.all(), problem, cfg, sim);
  const std::size_t want = std::min(cfg.k, sel.stage1.size());
  if (cfg.mode == AdaptiveConfig::Mode::Self && want > 0) {
    const std::string reply =
        llm->complete({{"user", self_selection_prompt(problem, sel.stage1, cfg.k)}}, temperature);
    const auto ids = parse_selection(reply, sel.stage1.size());
    if (ids.size() >= want) {
      for (std::size_t i = 0; i < want; ++i) sel.examples.push_back(sel.stage1[ids[i] - 1].entry);
      return sel;
    }
    sel.self_fallback = true;
  }
  for (std::size_t i = 0; i < want; ++i) sel.examples.push_back(sel.stage1[i].entry);
  return sel;
}

// ---------------------------------------------------------------------------
// Renaming policies

struct RenamePolicy {
  enum class Kind { Original, Shift, X };
  Kind kind = Kind::Original;
  int shift = 0;

  static RenamePolicy original() { return {Kind::Original, 0}; }
  static RenamePolicy shifted(int k) { return {Kind::Shift, k}; }
  static RenamePolicy x() { return {Kind::X, 0}; }

  /// "+0", "+1".."+3", "X".
  std::string label() const {
    switch (kind) {
      case Kind::Original: return "+0";
      case Kind::Shift: return "+" + std::to_string(shift);
      case Kind::X: return "X";
    }
    return "?";
  }

  static RenamePolicy parse(std::string_view s) {
    if (s == "x" || s == "X") return x();
    if (s == "+0" || s == "original") return original();
    if (s.size() == 2 && s[0] == '+' && s[1] >= '1' && s[1] <= '3') return shifted(s[1] - '0');
    throw std::invalid_argument("unknown rename policy '" + std::string(s) + "'");
  }
};

struct RenamedSpec {
  ProblemSpec spec;
  RenameMap forward;
  RenameMap inverse;
  std::optional<std::string> collision_note;  // set when the policy letter was taken
};

inline std::vector<std::string> spec_identifiers(const ProblemSpec& spec) {
  std::vector<std::string> ids = text_words(spec.statement);
  for (const auto& p : spec.init.params) ids.push_back(p.name);
  auto more = program_identifiers(spec.init.program);
  ids.insert(ids.end(), more.begin(), more.end());
  for (const auto& r : spec.references) {
    more = program_identifiers(r);
    ids.insert(ids.end(), more.begin(), more.end());
  }
  ids.insert(ids.end(), spec.goals.begin(), spec.goals.end());
  return ids;
}

inline ProblemSpec rename_spec(const ProblemSpec& spec, const RenameMap& map) {
  ProblemSpec out = spec;
  out.statement = apply_rename(spec.statement, map);
  const auto tok = [&](const std::string& s) { return apply_rename(std::string_view(s), map); };
  for (auto& p : out.init.params) {
    p.name = tok(p.name);
    p.from = p.from.empty() ? p.from : tok(p.from);
    p.ref = p.ref.empty() ? p.ref : tok(p.ref);
    for (auto& t : p.terms) t.second = tok(t.second);
  }
  out.init.program = apply_rename(spec.init.program, map);
  for (auto& h : out.init.hidden) h = tok(h);
  for (auto& s : out.init.shapes) s.vertices = tok(s.vertices);
  for (auto& c : out.init.constraints) {
    c.a = tok(c.a);
    c.b = tok(c.b);
  }
  for (auto& r : out.references) r = apply_rename(r, map);
  for (auto& g : out.goals) g = tok(g);
  out.target = spec.target.empty() ? spec.target : tok(spec.target);
  return out;
}

/// Renames the target variable. On a collision the next free capital
/// (wrapping around the alphabet) is used and the substitution is noted.
inline RenamedSpec apply_rename(const RenamePolicy& policy, const ProblemSpec& spec) {
  RenamedSpec out{spec, {}, {}, std::nullopt};
  if (policy.kind == RenamePolicy::Kind::Original || spec.target.empty()) return out;
  if (spec.target.size() != 1 || !std::isupper(static_cast<unsigned char>(spec.target[0]))) {
    throw CollisionError("rename: target '" + spec.target + "' is not a single capital");
  }
  const char from = spec.target[0];
  char want = policy.kind == RenamePolicy::Kind::X ? 'X' : static_cast<char>('A' + (from - 'A' + policy.shift) % 26);
  const auto ids = spec_identifiers(spec);
  char letter = want;
  for (int i = 0; i < 26; ++i) {
    const std::string cand(1, letter);
    if (letter != from && !detail::occurs(cand, ids)) break;
    letter = static_cast<char>('A' + (letter - 'A' + 1) % 26);
    if (i == 25) throw CollisionError("rename: no free capital letter");
  }
  if (letter != want) {
    out.collision_note = std::string(1, want) + " already in use; renamed to " + std::string(1, letter);
  }
  out.forward = {{std::string(1, from), std::string(1, letter)}};
  detail::check_map(out.forward, ids);
  out.spec = rename_spec(spec, out.forward);
  out.inverse = {{std::string(1, letter), std::string(1, from)}};
  return out;
}

// ---------------------------------------------------------------------------
// Visual relations prompt

namespace detail {

inline std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", std::abs(v) < 5e-4 ? 0.0 : v);
  return buf;
}

inline std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

inline double length_of(const Segment& s) { return distance(s.a, s.b); }

}  // namespace detail

/// Deterministic scene description: declared shapes, point coordinates,
/// lines and circles, and numerically checked relations between them.
inline std::string describe_scene(const Scene& scene, const ProblemSpec& spec, const Tolerances& tol = {}) {
  std::map<std::string, std::vector<std::string>> defining;  // object -> the labels it was built from
  for (const auto& s : spec.init.program.steps) {
    for (const auto& o : s.outputs) defining[o] = s.args;
  }
  std::ostringstream out;
  out << "Here is the full description of all the relations between geometric objects:\n";
  out << "Shapes:\n";
  for (const auto& sh : spec.init.shapes) out << detail::capitalized(sh.kind) << ": " << sh.vertices << "\n";

  std::vector<const GeoObject*> points, curves;
  for (const auto& o : scene.objects()) (std::holds_alternative<Point>(o.shape) ? points : curves).push_back(&o);

  out << "Points:\n";
  for (const auto* p : points) {
    const Point q = std::get<Point>(p->shape);
    out << p->label << ": (" << detail::fmt3(q.x) << ", " << detail::fmt3(q.y) << ")\n";
  }
  out << "Lines:\n";
  for (const auto* c : curves) {
    const auto& args = defining[c->label];
    std::string desc;
    if (const auto* circ = std::get_if<Circle>(&c->shape)) {
      desc = "circle with center (" + detail::fmt3(circ->center.x) + ", " + detail::fmt3(circ->center.y) +
             ") and radius " + detail::fmt3(circ->radius);
    } else {
      desc = std::string(kind_name(kind_of(c->shape)));
      if (args.size() == 2) desc += " through " + args[0] + " and " + args[1];
    }
    out << c->label << ": " << desc << ".\n";
  }

  out << "Relations:\n";
  // Parallel and perpendicular pairs of linear objects.
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto li = linear_view(curves[i]->shape);
    if (!li) continue;
    for (std::size_t k = i + 1; k < curves.size(); ++k) {
      const auto lk = linear_view(curves[k]->shape);
      if (!lk) continue;
      const double cr = std::abs(cross(li->dir, lk->dir));
      if (cr < tol.match && std::abs(cross(lk->origin - li->origin, li->dir)) >= tol.match) {
        out << curves[i]->label << " is parallel to " << curves[k]->label << ".\n";
      } else if (std::abs(dot(li->dir, lk->dir)) < tol.match) {
        out << curves[i]->label << " is perpendicular to " << curves[k]->label << ".\n";
      }
    }
  }
  // Equal segment lengths.
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto* si = std::get_if<Segment>(&curves[i]->shape);
    if (!si) continue;
    for (std::size_t k = i + 1; k < curves.size(); ++k) {
      const auto* sk = std::get_if<Segment>(&curves[k]->shape);
      if (sk && std::abs(detail::length_of(*si) - detail::length_of(*sk)) < tol.match) {
        out << "The length of " << curves[i]->label << " is equal to the length of " << curves[k]->label << ".\n";
      }
    }
  }
  // Incidence, centers and isolation.
  for (const auto* p : points) {
    const Point q = std::get<Point>(p->shape);
    bool connected = false;
    for (const auto* c : curves) {
      const auto& args = defining[c->label];
      const bool builds = std::find(args.begin(), args.end(), p->label) != args.end();
      if (const auto* circ = std::get_if<Circle>(&c->shape); circ && distance(q, circ->center) < tol.match) {
        out << p->label << " is the center of " << c->label << ".\n";
        connected = true;
        continue;
      }
      if (residual(q, c->shape) < tol.match) {
        connected = true;
        if (!builds) out << p->label << " lies on " << c->label << ".\n";
      } else if (builds) {
        connected = true;
      }
    }
    if (!connected) out << p->label << " is an isolated point, not connected to any other object.\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Resources and prompt assembly

/// Plain-text prompt resources keyed by name, with built-in defaults.
class Resources {
 public:
  Resources() = default;

  static Resources load(const std::filesystem::path& dir) {
    Resources r;
    if (!std::filesystem::is_directory(dir)) return r;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() != ".txt") continue;
      std::ifstream in(entry.path());
      std::stringstream ss;
      ss << in.rdbuf();
      std::string text = ss.str();
      while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
      r.texts_[entry.path().stem().string()] = std::move(text);
    }
    return r;
  }

  std::string get(const std::string& key) const {
    if (auto it = texts_.find(key); it != texts_.end()) return it->second;
    return fallback(key);
  }

  void set(const std::string& key, std::string text) { texts_[key] = std::move(text); }

 private:
  static std::string fallback(const std::string& key) {
    if (key == "solver_nl") {
      return "You are an expert in straightedge-and-compass constructions. Explain, step by step, how to solve "
             "the problem. Write each step on its own line as \"<STEP> k: ...\".";
    }
    if (key == "solver_gt") {
      return "You are an expert in straightedge-and-compass constructions. Solve the problem using only the "
             "available tools. Write each step on its own line as \"<Tool Name> k: ...\".";
    }
    if (key == "validator_nl" || key == "validator_gt") {
      return "You review construction steps proposed by a colleague. For every step you accept, write "
             "\"<STEP> k: Correct.\" on its own line. For the remaining steps, suggest corrections.";
    }
    return {};
  }

  std::map<std::string, std::string> texts_;
};

struct Example {
  std::string statement;
  std::string tools;
  std::string solution;
};

inline Example make_example(const KbEntry& e) {
  return {e.problem->statement, e.problem->tool_list(), render_paper(*e.solution)};
}

struct PromptBundle {
  AgentRole role = AgentRole::SolverGT;
  std::string preamble;
  std::string context;  // validator reference material
  std::vector<Example> examples;
  std::optional<std::string> vrp;
  std::string statement;  // renamed
  std::vector<std::string> tool_descriptions;
  RenameMap inverse;

  std::string text() const {
    std::ostringstream out;
    out << preamble << "\n\n";
    if (!context.empty()) out << context << "\n\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
      out << "Example " << (i + 1) << ":\n"
          << "Description: " << examples[i].statement << "\n"
          << "Tool List: " << examples[i].tools << "\n"
          << "Solution:\n"
          << examples[i].solution << "\n\n";
    }
    if (vrp) out << *vrp << "\n";
    out << "Problem: " << statement << "\n";
    out << "Available Tools:\n";
    for (const auto& d : tool_descriptions) out << "- " << d << "\n";
    return out.str();
  }
};

/// Assembles a role prompt: preamble, examples, scene description, renamed
/// statement and the whitelisted tool descriptions, in that order.
inline PromptBundle build_prompt(AgentRole role, const ProblemSpec& spec, const std::vector<Example>& examples,
                                 const std::optional<std::string>& vrp, const RenamePolicy& policy,
                                 const Resources& res = {}) {
  PromptBundle b;
  b.role = role;
  b.preamble = res.get(std::string(role_name(role)));
  if (is_validator(role)) {
    const std::string kind = role == AgentRole::ValidatorNL ? "incorrect_nl" : "incorrect_gt";
    std::string ctx = res.get("elements");
    const std::string wrong = res.get(kind);
    if (!wrong.empty()) ctx += (ctx.empty() ? "" : "\n\n") + wrong;
    b.context = std::move(ctx);
  }
  b.examples = examples;
  b.vrp = vrp;
  const RenamedSpec renamed = apply_rename(policy, spec);
  b.statement = renamed.spec.statement;
  b.inverse = renamed.inverse;
  for (ToolKind t : spec.tools) {
    const ToolInfo& info = tool_info(t);
    b.tool_descriptions.push_back(std::string(info.display) + ": " + std::string(info.description));
  }
  return b;
}

}  // namespace geocon
