#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geocon/geocon.hpp"

namespace support {

using namespace geocon;

inline const Bank& bank() {
  static const Bank b = load_bank(std::string(GEOCON_DATA_DIR) + "/bank.json");
  return b;
}

// ---------------------------------------------------------------------------
// pass@k oracle: count the k-subsets of n samples that contain a correct one.

inline double brute_pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
  std::size_t hit = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != k) continue;
    ++total;
    // samples 0..c-1 are the correct ones
    if (mask & ((1u << c) - 1)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Mutants of reference programs

struct Mutant {
  std::string cls;  // "tool", "arg" or "del"
  Program program;
};

inline int family(ToolKind t) {
  switch (t) {
    case ToolKind::Line:
    case ToolKind::Ray:
    case ToolKind::Segment: return 0;
    case ToolKind::Circle: return 1;
    case ToolKind::PerpBisector: return 2;
    case ToolKind::Perpendicular: return 3;
    case ToolKind::Parallel: return 4;
    case ToolKind::Compass: return 5;
    case ToolKind::AngleBisector: return 6;
    default: return -1;
  }
}

/// Replacement tools with the same argument signature but a different family.
inline std::vector<ToolKind> swap_targets(ToolKind t) {
  std::vector<ToolKind> pool;
  switch (family(t)) {
    case 0:
    case 1:
    case 2: pool = {ToolKind::Line, ToolKind::Circle, ToolKind::PerpBisector}; break;
    case 3:
    case 4: pool = {ToolKind::Perpendicular, ToolKind::Parallel}; break;
    case 5:
    case 6: pool = {ToolKind::Compass, ToolKind::AngleBisector}; break;
    default: break;
  }
  std::vector<ToolKind> out;
  for (auto k : pool) {
    if (family(k) != family(t)) out.push_back(k);
  }
  return out;
}

/// Steps the goals depend on, in program order.
inline std::vector<std::size_t> goal_ancestors(const Program& p, const std::vector<std::string>& goals) {
  std::set<std::string> need(goals.begin(), goals.end());
  std::vector<std::size_t> out;
  for (std::size_t i = p.size(); i-- > 0;) {
    const auto& s = p.steps[i];
    if (std::none_of(s.outputs.begin(), s.outputs.end(), [&](const auto& o) { return need.count(o) > 0; })) continue;
    out.push_back(i);
    need.insert(s.args.begin(), s.args.end());
    if (s.pick) {
      need.insert(s.pick->a);
      if (!s.pick->b.empty()) need.insert(s.pick->b);
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

inline std::vector<Mutant> mutants_of(const ProblemSpec& spec, const Program& ref) {
  const Scene inst = instantiate(spec, 0);
  const auto trace = execute(ref, inst);
  std::map<std::string, bool> is_point;
  for (const auto& o : trace.scene.objects()) is_point[o.label] = std::holds_alternative<Point>(o.shape);

  std::vector<Mutant> out;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const Step& st = ref.steps[i];
    for (ToolKind k : swap_targets(st.tool)) {
      Program m = ref;
      m.steps[i].tool = k;
      out.push_back({"tool", m});
      auto& a = m.steps[i].args;
      if (k == ToolKind::Circle && a.size() == 2) {
        std::swap(a[0], a[1]);
        out.push_back({"tool", m});
      }
      if (k == ToolKind::Compass && a.size() == 3) {
        for (int r = 0; r < 2; ++r) {
          std::rotate(a.begin(), a.begin() + 1, a.end());
          out.push_back({"tool", m});
        }
      }
    }

    const auto initial = spec.initial_labels();
    std::set<std::string> scope(initial.begin(), initial.end());
    for (std::size_t j = 0; j < i; ++j) scope.insert(ref.steps[j].outputs.begin(), ref.steps[j].outputs.end());
    for (std::size_t a = 0; a < st.args.size(); ++a) {
      for (const auto& id : scope) {
        if (std::find(st.args.begin(), st.args.end(), id) != st.args.end()) continue;
        if (is_point[id] != is_point[st.args[a]]) continue;
        Program m = ref;
        m.steps[i].args[a] = id;
        out.push_back({"arg", m});
      }
    }
    if (st.tool == ToolKind::Circle || st.tool == ToolKind::Ray || st.tool == ToolKind::Compass ||
        st.tool == ToolKind::AngleBisector) {
      Program m = ref;
      std::swap(m.steps[i].args[0], m.steps[i].args[1]);
      out.push_back({"arg", m});
    }
  }

  const auto anc = goal_ancestors(ref, spec.goals);
  for (std::size_t x = 0; x < anc.size(); ++x) {
    Program m = ref;
    m.steps.erase(m.steps.begin() + static_cast<long>(anc[x]));
    out.push_back({"del", m});
    for (std::size_t y = x + 1; y < anc.size(); ++y) {
      Program m2 = ref;
      m2.steps.erase(m2.steps.begin() + static_cast<long>(anc[y]));
      m2.steps.erase(m2.steps.begin() + static_cast<long>(anc[x]));
      out.push_back({"del", m2});
    }
  }
  return out;
}

/// Sample points that pin down an object: the point itself, two points of
/// a carrier line, three points of a circle.
inline std::vector<Point> witnesses(const Shape& s) {
  if (const auto* p = std::get_if<Point>(&s)) return {*p};
  if (const auto* c = std::get_if<Circle>(&s)) {
    std::vector<Point> out;
    for (double a : {0.3, 2.1, 4.4}) out.push_back(c->center + c->radius * Vec2{std::cos(a), std::sin(a)});
    return out;
  }
  const LinearView v = *linear_view(s);
  return {v.origin, v.origin + 0.37 * v.dir};
}

inline double carrier_residual(Point p, const Shape& s) {
  if (const auto v = linear_view(s)) return std::abs(cross(p - v->origin, v->dir));
  return residual(p, s);
}

inline bool same_class(const Shape& a, const Shape& b) {
  const bool pa = std::holds_alternative<Point>(a), pb = std::holds_alternative<Point>(b);
  const bool ca = std::holds_alternative<Circle>(a), cb = std::holds_alternative<Circle>(b);
  return pa == pb && ca == cb;
}

/// Goal check that avoids `equivalent` and the verifier's branch search: on
/// each instance some intersection choice of the candidate must build, for
/// every goal of some reference, an object of the same class passing
/// through the goal's witness points (and vice versa).
inline bool numerically_correct(const ProblemSpec& spec, const Program& candidate, std::size_t instances = 5) {
  if (!spec.conforms(candidate)) return false;
  for (std::size_t i = 0; i < instances; ++i) {
    const Scene scene = instantiate(spec, instance_seed(0, i));
    std::vector<ExecutionTrace> refs;
    for (const auto& r : spec.references) {
      auto tr = execute(r, scene);
      if (tr.ok()) refs.push_back(std::move(tr));
    }
    const std::size_t ambiguous = execute(candidate, scene).ambiguous;
    if (ambiguous > 10) return false;
    bool found = false;
    for (std::size_t mask = 0; mask < (std::size_t{1} << ambiguous) && !found; ++mask) {
      std::vector<std::size_t> decisions;
      for (std::size_t b = 0; b < ambiguous; ++b) decisions.push_back((mask >> b) & 1);
      const auto tr = execute(candidate, scene, decisions);
      if (!tr.ok()) continue;
      for (const auto& ref : refs) {
        bool all = true;
        for (const auto& g : spec.goals) {
          const Shape& goal = ref.scene.find(g)->shape;
          bool hit = false;
          for (const auto& st : tr.steps) {
            for (const auto& o : st.bound) {
              if (!same_class(goal, o.shape)) continue;
              const auto gw = witnesses(goal), ow = witnesses(o.shape);
              const bool fwd = std::all_of(gw.begin(), gw.end(), [&](Point p) { return carrier_residual(p, o.shape) < 1e-7; });
              const bool back = std::all_of(ow.begin(), ow.end(), [&](Point p) { return carrier_residual(p, goal) < 1e-7; });
              if (fwd && back) hit = true;
            }
          }
          all = all && hit;
        }
        if (all) found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

struct MutationTally {
  std::map<std::string, std::size_t> total, killed;
  std::vector<std::string> survivors_unexplained;
  std::vector<std::string> too_few;  // fixture/class pairs with < 5 mutants
  std::size_t survivors = 0;

  std::size_t all() const {
    std::size_t n = 0;
    for (const auto& [k, v] : total) n += v;
    return n;
  }
  std::size_t all_killed() const {
    std::size_t n = 0;
    for (const auto& [k, v] : killed) n += v;
    return n;
  }
};

inline MutationTally run_mutations(const Bank& b) {
  MutationTally t;
  for (const auto& spec : b.problems) {
    std::map<std::string, std::size_t> per;
    for (const auto& ref : spec.references) {
      for (const auto& m : mutants_of(spec, ref)) {
        ++per[m.cls];
        ++t.total[m.cls];
        if (!verify(spec, m.program, 5, 0).fully_correct) {
          ++t.killed[m.cls];
          continue;
        }
        ++t.survivors;
        if (!numerically_correct(spec, m.program)) {
          t.survivors_unexplained.push_back(spec.id + " " + m.cls + ":\n" + render_canonical(m.program));
        }
      }
    }
    for (const char* c : {"tool", "arg", "del"}) {
      if (per[c] < 5) t.too_few.push_back(spec.id + "/" + c);
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Scripted solver/validator replies for the inscribe-circle dialogue

inline const char* kNlProposal =
    "Plan for the inscribed circle:\n"
    "<STEP> 1: Start from the square ABCD.\n"
    "<STEP> 2: Join A and C; the center lies on this diagonal.\n"
    "<STEP> 3: Bisect AB perpendicularly; where it crosses AC is the center.\n"
    "<STEP> 4: Join the center to vertex A to get the radius.\n"
    "<STEP> 5: Take that length with the compass.\n"
    "<STEP> 6: Draw the circle about the center with that length.\n";

inline const char* kNlVerdict =
    "Checked against the propositions:\n"
    "<STEP> 1: Correct.\n"
    "<STEP> 2: Correct.\n"
    "<STEP> 3: Correct.\n"
    "Steps 4 to 6 need another look.\n";

inline const char* kNlRevision =
    "[...]\n"
    "<STEP> 4: Join the center to the point where the bisector meets AB; that is the radius.\n";

inline const char* kGtProposal =
    "Using the rationale:\n"
    "<Line Tool> 1: Construct line AB through A and B.\n"
    "<Line Tool> 2: Construct line AC through A and C.\n"
    "<Perpendicular Bisector Tool> 3: Construct the perpendicular bisector bis of A and B.\n"
    "<Intersect Tool> 4: Construct the intersection point E of bis and AB.\n"
    "<Intersect Tool> 5: Construct the intersection point O of bis and AC.\n"
    "<Circle Tool> 6: Construct circle c with center O passing through A.\n";

inline const char* kGtVerdict =
    "Checked tool by tool:\n"
    "<Line Tool> 1: Correct.\n"
    "<Line Tool> 2: Correct.\n"
    "<Perpendicular Bisector Tool> 3: Correct.\n"
    "<Intersect Tool> 4: Correct.\n"
    "<Intersect Tool> 5: Correct.\n"
    "Step 6 draws the circumcircle; fix the radius.\n";

inline const char* kGtRevision =
    "[...]\n"
    "<Circle Tool> 6: Construct circle c with center O passing through E.\n";

inline BundleFactory plain_bundles(const ProblemSpec& spec, RenamePolicy policy = RenamePolicy::original()) {
  return [&spec, policy](AgentRole role) { return build_prompt(role, spec, {}, std::nullopt, policy); };
}

// ---------------------------------------------------------------------------
// Scene-description relations, re-checked from coordinates

/// Returns the relation lines of a description that do not hold on `scene`.
inline std::vector<std::string> unsound_relations(const std::string& text, const Scene& scene, double eps = 1e-6) {
  static const std::regex parallel(R"(^(\w+) is parallel to (\w+)\.$)");
  static const std::regex perpendicular(R"(^(\w+) is perpendicular to (\w+)\.$)");
  static const std::regex equal(R"(^The length of (\w+) is equal to the length of (\w+)\.$)");
  static const std::regex lies(R"(^(\w+) lies on (\w+)\.$)");
  static const std::regex center(R"(^(\w+) is the center of (\w+)\.$)");
  static const std::regex isolated(R"(^(\w+) is an isolated point, not connected to any other object\.$)");

  const auto shape = [&](const std::string& id) -> const Shape& { return scene.find(id)->shape; };
  const auto dir = [&](const std::string& id) { return linear_view(shape(id))->dir; };
  const auto seg_len = [&](const std::string& id) {
    const auto& s = std::get<Segment>(shape(id));
    return std::hypot(s.b.x - s.a.x, s.b.y - s.a.y);
  };

  std::vector<std::string> bad;
  std::istringstream in(text);
  bool rel = false;
  for (std::string line; std::getline(in, line);) {
    if (line == "Relations:") {
      rel = true;
      continue;
    }
    if (!rel) continue;
    std::smatch m;
    bool ok = false;
    if (std::regex_match(line, m, parallel)) {
      const Vec2 a = dir(m[1]), b = dir(m[2]);
      ok = std::abs(a.x * b.y - a.y * b.x) < eps;
    } else if (std::regex_match(line, m, perpendicular)) {
      const Vec2 a = dir(m[1]), b = dir(m[2]);
      ok = std::abs(a.x * b.x + a.y * b.y) < eps;
    } else if (std::regex_match(line, m, equal)) {
      ok = std::abs(seg_len(m[1]) - seg_len(m[2])) < eps;
    } else if (std::regex_match(line, m, lies)) {
      ok = residual(std::get<Point>(shape(m[1])), shape(m[2])) < eps;
    } else if (std::regex_match(line, m, center)) {
      const auto& c = std::get<Circle>(shape(m[2]));
      const Point p = std::get<Point>(shape(m[1]));
      ok = std::hypot(p.x - c.center.x, p.y - c.center.y) < eps;
    } else if (std::regex_match(line, m, isolated)) {
      const Point p = std::get<Point>(shape(m[1]));
      ok = true;
      for (const auto& o : scene.objects()) {
        if (o.label == m[1] || std::holds_alternative<Point>(o.shape)) continue;
        if (residual(p, o.shape) < eps) ok = false;
      }
    }
    if (!ok) bad.push_back(line);
  }
  return bad;
}

}  // namespace support
