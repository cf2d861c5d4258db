#pragma once

#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "geocon/chat.hpp"
#include "geocon/extract.hpp"
#include "geocon/prompt.hpp"
#include "geocon/verifier.hpp"

namespace geocon {

// ---------------------------------------------------------------------------
// Configuration and transcript

enum class ConfigKind { S_GT, SV_GT, S_NL_S_GT, SV_NL_SV_GT };

inline std::string_view config_name(ConfigKind k) {
  switch (k) {
    case ConfigKind::S_GT: return "S_GT";
    case ConfigKind::SV_GT: return "SV_GT";
    case ConfigKind::S_NL_S_GT: return "S_NL-S_GT";
    case ConfigKind::SV_NL_SV_GT: return "SV_NL-SV_GT";
  }
  return "?";
}

inline ConfigKind parse_config_kind(std::string_view s) {
  for (ConfigKind k : {ConfigKind::S_GT, ConfigKind::SV_GT, ConfigKind::S_NL_S_GT, ConfigKind::SV_NL_SV_GT}) {
    std::string plain(config_name(k));
    std::replace(plain.begin(), plain.end(), '-', '_');
    if (s == config_name(k) || s == plain) return k;
  }
  throw std::invalid_argument("unknown configuration '" + std::string(s) + "'");
}

struct Configuration {
  ConfigKind kind = ConfigKind::S_GT;
  bool feedback_mode = false;
  std::size_t max_rounds = 5;
  double temperature = 0.2;

  bool nl_phase() const { return kind == ConfigKind::S_NL_S_GT || kind == ConfigKind::SV_NL_SV_GT; }
  bool validators() const { return kind == ConfigKind::SV_GT || kind == ConfigKind::SV_NL_SV_GT; }
};

enum class DialogueStatus { Approved, RoundCapReached, BackendError };

inline std::string_view status_name(DialogueStatus s) {
  switch (s) {
    case DialogueStatus::Approved: return "Approved";
    case DialogueStatus::RoundCapReached: return "RoundCapReached";
    case DialogueStatus::BackendError: return "BackendError";
  }
  return "?";
}

struct Turn {
  AgentRole role;
  std::string prompt_digest;
  std::string reply;
  std::size_t round;
};

struct Transcript {
  std::string problem;
  std::string configuration;
  double temperature = 0.0;
  std::vector<Turn> turns;
  DialogueStatus status = DialogueStatus::Approved;
  std::optional<std::string> error;

  /// One JSON object per turn.
  std::string to_jsonl() const {
    std::string out;
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const auto& t = turns[i];
      nlohmann::json j{{"problem", problem},
                       {"configuration", configuration},
                       {"temperature", temperature},
                       {"turn", i + 1},
                       {"round", t.round},
                       {"role", std::string(role_name(t.role))},
                       {"prompt_digest", t.prompt_digest},
                       {"reply", t.reply},
                       {"status", std::string(status_name(status))}};
      out += j.dump() + "\n";
    }
    return out;
  }
};

/// FNV-1a 64-bit digest, hex encoded.
inline std::string digest(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Step lines and verdicts

/// Numbered step lines of a reply ("<STEP> 3: ...", "<Circle Tool> 3: ...").
/// Replies without numbering fall back to their "<Name> Tool:" lines,
/// numbered in order.
inline std::map<std::size_t, std::string> numbered_steps(std::string_view text) {
  static const std::regex numbered(R"(^\s*(?:<|\\textless\s*)\s*([^>\\]+?)\s*(?:>|\\textgreater)\s*(\d+)\s*:.*$)");
  static const std::regex tool_line(R"(^\s*[A-Za-z][A-Za-z ]*?Tool\s*:.*$)");
  std::map<std::size_t, std::string> out;
  std::vector<std::string> tool_lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, numbered)) {
      out[static_cast<std::size_t>(std::stoul(m[2].str()))] = detail::trim(line);
    } else if (std::regex_match(line, tool_line)) {
      tool_lines.push_back(detail::trim(line));
    }
  }
  if (out.empty()) {
    for (std::size_t i = 0; i < tool_lines.size(); ++i) out[i + 1] = tool_lines[i];
  }
  return out;
}

/// Revision merge: numbered lines of the revision replace or extend the
/// previous proposal. A revision without numbered lines replaces it whole.
inline std::map<std::size_t, std::string> merge_steps(const std::map<std::size_t, std::string>& previous,
                                                      const std::map<std::size_t, std::string>& revision) {
  if (revision.empty()) return previous;
  std::map<std::size_t, std::string> out = previous;
  for (const auto& [k, line] : revision) out[k] = line;
  return out;
}

inline std::string join_steps(const std::map<std::size_t, std::string>& steps) {
  std::string out;
  for (const auto& [k, line] : steps) out += line + "\n";
  return out;
}

struct Verdict {
  std::set<std::size_t> approved;
  bool global_revise = false;
  std::string text;

  bool approves_all(const std::map<std::size_t, std::string>& steps) const {
    if (global_revise || steps.empty()) return false;
    return std::all_of(steps.begin(), steps.end(), [&](const auto& kv) { return approved.contains(kv.first); });
  }
};

/// Lenient reading of "<STEP> k: Correct." style verdict lines. A reply with
/// no recognizable verdict line is a global revision request.
inline Verdict parse_verdict(std::string_view reply) {
  static const std::regex line_re(
      R"((?:<|\\textless\s*)?\s*(?:STEP|Step|step|[A-Za-z][A-Za-z ]*?Tool)\s*(?:>|\\textgreater)?\s*(\d+)\s*[:.-]\s*(Correct|Incorrect|Wrong|Revise)\b)",
      std::regex::icase);
  Verdict v;
  v.text = std::string(reply);
  bool any = false;
  const std::string s(reply);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), line_re); it != std::sregex_iterator(); ++it) {
    any = true;
    const std::string word = detail::lower((*it)[2].str());
    if (word == "correct") v.approved.insert(static_cast<std::size_t>(std::stoul((*it)[1].str())));
  }
  v.global_revise = !any;
  return v;
}

// ---------------------------------------------------------------------------
// Feedback mode

/// Step-wise agreement of a candidate prefix with some reference prefix:
/// same tool kinds and equivalent constructed objects at every step.
inline bool consistent_with_reference(const Program& prefix, const ProblemSpec& spec, const Scene& scene,
                                      const Tolerances& tol = {}) {
  const auto kinds = tool_sequence(prefix);
  for (const auto& ref : spec.references) {
    if (ref.size() < prefix.size()) continue;
    if (!std::equal(kinds.begin(), kinds.end(), ref.steps.begin(),
                    [](ToolKind k, const Step& s) { return k == s.tool; })) {
      continue;
    }
    const auto rtrace = execute(ref, scene, {}, tol);
    if (!rtrace.ok()) continue;
    bool agrees = false;
    for_each_branch(prefix, scene, tol, [&](const ExecutionTrace& t) {
      if (!t.ok()) return false;
      for (std::size_t j = 0; j < t.steps.size(); ++j) {
        const auto& mine = t.steps[j].bound;
        const auto& theirs = rtrace.steps[j].bound;
        for (const auto& o : mine) {
          const bool any = std::any_of(theirs.begin(), theirs.end(),
                                       [&](const GeoObject& r) { return equivalent(o.shape, r.shape, tol); });
          if (!any) return false;
        }
      }
      agrees = true;
      return true;
    });
    if (agrees) return true;
  }
  return false;
}

/// Mechanical verdict: step k is correct when the extracted steps up to and
/// including line k execute and agree with a reference prefix. The text
/// carries nothing beyond Correct/Incorrect per step.
/// `inverse` maps renamed identifiers in the solver's text back to the
/// scene's labels.
inline Verdict feedback_verdict(const std::map<std::size_t, std::string>& steps, const ProblemSpec& spec,
                                const Scene& scene, const RenameMap& inverse = {}, const Tolerances& tol = {}) {
  Verdict v;
  std::string prefix_text;
  auto known = scene_names(scene);
  for (const auto& [renamed, original] : inverse) {
    if (auto it = known.find(original); it != known.end()) known[renamed] = it->second;
  }
  for (const auto& [k, line] : steps) {
    prefix_text += line + "\n";
    bool ok = false;
    try {
      Extraction ex = extract(prefix_text, known);
      if (!inverse.empty()) ex.program = rename_identifiers(ex.program, inverse).value;
      ok = ex.skipped.empty() && consistent_with_reference(ex.program, spec, scene, tol);
    } catch (const Error&) {
      ok = false;
    }
    if (ok) v.approved.insert(k);
    v.text += "<STEP> " + std::to_string(k) + (ok ? ": Correct.\n" : ": Incorrect.\n");
  }
  v.global_revise = steps.empty();
  return v;
}

// ---------------------------------------------------------------------------
// Dialogue

struct RoleBackends {
  ChatBackend* solver_nl = nullptr;
  ChatBackend* solver_gt = nullptr;
  ChatBackend* validator_nl = nullptr;
  ChatBackend* validator_gt = nullptr;
};

using BundleFactory = std::function<PromptBundle(AgentRole)>;

struct DialogueResult {
  std::optional<Program> candidate;
  std::string final_text;
  Transcript transcript;
  std::vector<SkippedLine> skipped;
};

namespace detail {

class Dialogue {
 public:
  Dialogue(const Configuration& cfg, const ProblemSpec& spec, const BundleFactory& bundles, const RoleBackends& be,
           std::uint64_t base_seed)
      : cfg_(cfg), spec_(spec), bundles_(bundles), be_(be), base_seed_(base_seed) {}

  DialogueResult run() {
    DialogueResult res;
    auto& tr = res.transcript;
    tr.problem = spec_.id;
    tr.configuration = std::string(config_name(cfg_.kind));
    tr.temperature = cfg_.temperature;
    try {
      std::string rationale;
      if (cfg_.nl_phase()) {
        rationale = phase(tr, AgentRole::SolverNL, AgentRole::ValidatorNL, be_.solver_nl, be_.validator_nl, {});
      }
      res.final_text = phase(tr, AgentRole::SolverGT, AgentRole::ValidatorGT, be_.solver_gt, be_.validator_gt, rationale);
    } catch (const BackendError& e) {
      tr.status = DialogueStatus::BackendError;
      tr.error = e.what();
      return res;
    }
    const Scene scene = instance();
    try {
      Extraction ex = extract(res.final_text, scene_names(scene));
      res.skipped = std::move(ex.skipped);
      Program p = std::move(ex.program);
      if (!inverse_.empty()) {
        try {
          p = rename_identifiers(p, inverse_).value;
        } catch (const CollisionError&) {
        }
      }
      res.candidate = std::move(p);
    } catch (const EmptyExtraction& e) {
      tr.error = e.what();
    }
    return res;
  }

 private:
  const Scene& instance() {
    if (!scene_) scene_ = instantiate(spec_, base_seed_);
    return *scene_;
  }

  std::string ask(Transcript& tr, AgentRole role, ChatBackend* backend, const std::string& prompt, std::size_t round) {
    const std::string reply = backend->complete({{"user", prompt}}, cfg_.temperature);
    tr.turns.push_back({role, digest(prompt), reply, round});
    return reply;
  }

  std::string solver_prompt(AgentRole role, const std::string& rationale) {
    PromptBundle b = bundles_(role);
    if (role == AgentRole::SolverGT) inverse_ = b.inverse;
    std::string text = b.text();
    if (!rationale.empty()) text += "\nSuggested rationale:\n" + rationale;
    return text;
  }

  std::string validator_prompt(AgentRole role, const std::string& proposal, const std::string& rationale) {
    std::string text = bundles_(role).text();
    if (!rationale.empty()) text += "\nSuggested rationale:\n" + rationale;
    return text + "\nProposed steps:\n" + proposal;
  }

  static std::string revision_prompt(const std::string& proposal, const Verdict& verdict) {
    return "Your proposed steps:\n" + proposal + "\nReview:\n" + verdict.text +
           "\nRevise the steps that were not confirmed as correct. Keep the step numbering.";
  }

  /// One solver (+ validator) phase; returns the final step text.
  std::string phase(Transcript& tr, AgentRole srole, AgentRole vrole, ChatBackend* solver, ChatBackend* validator,
                    const std::string& rationale) {
    if (!solver) throw std::invalid_argument("missing backend for " + std::string(role_name(srole)));
    const std::string first = ask(tr, srole, solver, solver_prompt(srole, rationale), 1);
    const bool validated = cfg_.validators();
    if (!validated) return first;

    const bool mechanical = cfg_.feedback_mode && vrole == AgentRole::ValidatorGT;
    if (!validator && !mechanical) throw std::invalid_argument("missing backend for " + std::string(role_name(vrole)));

    auto steps = numbered_steps(first);
    std::string current = steps.empty() ? first : join_steps(steps);
    for (std::size_t round = 1;; ++round) {
      Verdict verdict;
      if (mechanical) {
        verdict = feedback_verdict(steps, spec_, instance(), inverse_);
        tr.turns.push_back({vrole, digest(current), verdict.text, round});
      } else {
        verdict = parse_verdict(ask(tr, vrole, validator, validator_prompt(vrole, current, rationale), round));
      }
      if (verdict.approves_all(steps)) {
        tr.status = DialogueStatus::Approved;
        return current;
      }
      if (round >= cfg_.max_rounds) {
        tr.status = DialogueStatus::RoundCapReached;
        return current;
      }
      const std::string revision = ask(tr, srole, solver, revision_prompt(current, verdict), round + 1);
      const auto revised = numbered_steps(revision);
      steps = merge_steps(steps, revised);
      current = steps.empty() ? revision : join_steps(steps);
      if (!verdict.approved.empty()) {
        // Partial approval: the revision addresses the remaining steps.
        tr.status = DialogueStatus::Approved;
        return current;
      }
    }
  }

  const Configuration& cfg_;
  const ProblemSpec& spec_;
  const BundleFactory& bundles_;
  const RoleBackends& be_;
  std::uint64_t base_seed_;
  std::optional<Scene> scene_;
  RenameMap inverse_;
};

}  // namespace detail

/// Runs the configured solver/validator dialogue and extracts the final
/// tool steps. `base_seed` selects the instance used by feedback mode and
/// for resolving the scene's names during extraction.
inline DialogueResult run_dialogue(const Configuration& cfg, const ProblemSpec& spec, const BundleFactory& bundles,
                                   const RoleBackends& backends, std::uint64_t base_seed = 0) {
  if (cfg.max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
  return detail::Dialogue(cfg, spec, bundles, backends, base_seed).run();
}

// ---------------------------------------------------------------------------
// Sampling

struct OwnedBackends {
  std::unique_ptr<ChatBackend> solver_nl, solver_gt, validator_nl, validator_gt;

  RoleBackends view() const { return {solver_nl.get(), solver_gt.get(), validator_nl.get(), validator_gt.get()}; }
};

/// Creates fresh backends for the dialogue with the given seed.
using BackendFactory = std::function<OwnedBackends(std::uint64_t seed)>;

struct SampleSet {
  std::vector<std::optional<Program>> candidates;  // absent = counted incorrect
  std::vector<Transcript> transcripts;
  std::size_t backend_errors = 0;
};

inline SampleSet sample_candidates(const Configuration& cfg, const ProblemSpec& spec, std::size_t n,
                                   std::uint64_t base_seed, const BundleFactory& bundles,
                                   const BackendFactory& backends) {
  if (n < 1) throw std::invalid_argument("sample_candidates: n must be at least 1");
  SampleSet out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = base_seed + i;
    OwnedBackends owned = backends(seed);
    DialogueResult r = run_dialogue(cfg, spec, bundles, owned.view(), seed);
    if (r.transcript.status == DialogueStatus::BackendError) ++out.backend_errors;
    out.candidates.push_back(std::move(r.candidate));
    out.transcripts.push_back(std::move(r.transcript));
  }
  return out;
}

}  // namespace geocon
