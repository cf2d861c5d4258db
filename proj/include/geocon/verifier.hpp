#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geocon/execute.hpp"
#include "geocon/problem.hpp"

namespace geocon {

inline constexpr std::size_t kDefaultInstances = 5;
inline constexpr std::size_t kMaxAmbiguousSteps = 8;

struct InstanceOutcome {
  std::uint64_t seed = 0;
  bool verified = false;
  std::vector<std::string> matched_goals;  // best reference, best branch
  std::optional<StepError> first_failure;  // default branch
  std::size_t branches = 0;
  std::size_t ambiguous = 0;
  bool budget_exceeded = false;
};

struct VerifyReport {
  std::string problem;
  bool fully_correct = false;
  bool tool_sequence_correct = false;
  bool whitelist_conformant = false;
  std::vector<InstanceOutcome> instances;
  std::size_t branches = 0;
  bool budget_exceeded = false;
};

/// Goal objects of one reference solution on an instance.
using GoalSet = std::vector<GeoObject>;

inline std::vector<GoalSet> reference_goals(const ProblemSpec& spec, const Scene& scene, const Tolerances& tol = {}) {
  std::vector<GoalSet> out;
  for (const auto& ref : spec.references) {
    const auto trace = execute(ref, scene, {}, tol);
    if (!trace.ok()) continue;
    GoalSet goals;
    for (const auto& g : spec.goals) {
      if (const GeoObject* o = trace.scene.find(g)) goals.push_back(*o);
    }
    if (goals.size() == spec.goals.size()) out.push_back(std::move(goals));
  }
  return out;
}

/// Goals of `goals` reproduced by objects the candidate itself constructed.
inline std::vector<std::string> matched(const GoalSet& goals, const ExecutionTrace& trace, const Tolerances& tol = {}) {
  std::vector<std::string> hits;
  for (const auto& g : goals) {
    bool found = false;
    for (const auto& step : trace.steps) {
      for (const auto& o : step.bound) {
        if (equivalent(g.shape, o.shape, tol)) {
          found = true;
          break;
        }
      }
      if (found) break;
    }
    if (found) hits.push_back(g.label);
  }
  return hits;
}

inline bool tool_sequence_match(const Program& candidate, const std::vector<Program>& references) {
  const auto seq = tool_sequence(candidate);
  return std::any_of(references.begin(), references.end(),
                     [&](const Program& r) { return tool_sequence(r) == seq; });
}

struct BranchStats {
  std::size_t branches = 0;
  std::size_t ambiguous = 0;                  // default branch
  std::optional<StepError> first_failure;     // default branch
  bool budget_exceeded = false;
};

/// Executes `candidate` under every assignment of its unhinted intersection
/// choices (depth first, default branch first) until `visit` returns true.
/// Stops early when a run meets more than kMaxAmbiguousSteps such choices.
template <typename Visit>
BranchStats for_each_branch(const Program& candidate, const Scene& scene, const Tolerances& tol, Visit&& visit) {
  BranchStats stats;
  bool done = false;
  std::function<void(std::vector<std::size_t>)> walk = [&](std::vector<std::size_t> decisions) {
    const auto trace = execute(candidate, scene, decisions, tol);
    ++stats.branches;
    if (decisions.empty()) {
      stats.first_failure = trace.error;
      stats.ambiguous = trace.ambiguous;
    }
    if (trace.ambiguous > kMaxAmbiguousSteps) {
      stats.budget_exceeded = true;
      return;
    }
    if (visit(trace)) {
      done = true;
      return;
    }
    for (std::size_t j = decisions.size(); j < trace.ambiguous && !done && !stats.budget_exceeded; ++j) {
      std::vector<std::size_t> next = decisions;
      next.resize(j, 0);
      next.push_back(1);
      walk(std::move(next));
    }
  };
  walk({});
  return stats;
}

/// Checks a candidate on one instance: some assignment of its unhinted
/// intersection choices must reproduce every goal of some reference.
inline InstanceOutcome verify_instance(const ProblemSpec& spec, const Program& candidate, const Scene& scene,
                                       const Tolerances& tol = {}) {
  InstanceOutcome out;
  const auto goals = reference_goals(spec, scene, tol);
  const BranchStats stats = for_each_branch(candidate, scene, tol, [&](const ExecutionTrace& trace) {
    if (!trace.ok()) return false;
    for (const auto& gs : goals) {
      auto hits = matched(gs, trace, tol);
      const bool complete = hits.size() == gs.size();
      if (complete || hits.size() > out.matched_goals.size()) out.matched_goals = std::move(hits);
      if (complete) {
        out.verified = true;
        return true;
      }
    }
    return false;
  });
  out.branches = stats.branches;
  out.ambiguous = stats.ambiguous;
  out.first_failure = stats.first_failure;
  out.budget_exceeded = stats.budget_exceeded;
  return out;
}

inline std::uint64_t instance_seed(std::uint64_t base_seed, std::size_t i) { return mix_seed(base_seed, i); }

inline VerifyReport verify(const ProblemSpec& spec, const Program& candidate, std::size_t instances = kDefaultInstances,
                           std::uint64_t base_seed = 0, const Tolerances& tol = {}) {
  VerifyReport report;
  report.problem = spec.id;
  report.whitelist_conformant = spec.conforms(candidate);
  report.tool_sequence_correct = tool_sequence_match(candidate, spec.references);
  bool all = instances > 0;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t seed = instance_seed(base_seed, i);
    const Scene scene = instantiate(spec, seed);
    InstanceOutcome o = verify_instance(spec, candidate, scene, tol);
    o.seed = seed;
    report.branches += o.branches;
    report.budget_exceeded = report.budget_exceeded || o.budget_exceeded;
    all = all && o.verified;
    report.instances.push_back(std::move(o));
  }
  report.fully_correct = all && report.whitelist_conformant;
  return report;
}

inline nlohmann::json to_json(const StepError& e) {
  return {{"step", e.step}, {"kind", std::string(step_error_name(e.kind))}, {"message", e.message}};
}

inline nlohmann::json to_json(const VerifyReport& r) {
  nlohmann::json inst = nlohmann::json::array();
  for (const auto& o : r.instances) {
    inst.push_back({{"seed", o.seed},
                    {"verified", o.verified},
                    {"matched_goals", o.matched_goals},
                    {"first_failure", o.first_failure ? to_json(*o.first_failure) : nlohmann::json(nullptr)},
                    {"branches", o.branches},
                    {"ambiguous_steps", o.ambiguous},
                    {"branch_budget_exceeded", o.budget_exceeded}});
  }
  return {{"problem", r.problem},
          {"fully_correct", r.fully_correct},
          {"tool_sequence_correct", r.tool_sequence_correct},
          {"whitelist_conformant", r.whitelist_conformant},
          {"instances", inst},
          {"branches", r.branches},
          {"branch_budget_exceeded", r.budget_exceeded}};
}

}  // namespace geocon
