#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "geocon/dsl.hpp"
#include "geocon/execute.hpp"
#include "geocon/geometry.hpp"

namespace geocon {

class SchemaError : public Error {
 public:
  SchemaError(std::string location, std::string field, const std::string& what)
      : Error(location + (field.empty() ? "" : "." + field) + ": " + what),
        location_(std::move(location)),
        field_(std::move(field)) {}

  const std::string& location() const { return location_; }
  const std::string& field() const { return field_; }

 private:
  std::string location_;
  std::string field_;
};

class DuplicateId : public Error {
 public:
  using Error::Error;
};

class ConstraintUnsatisfiable : public Error {
 public:
  using Error::Error;
};

struct ParamSpec {
  enum class Kind { PointInBox, PointPolar, PointLerp, PointAffine };
  std::string name;
  Kind kind = Kind::PointInBox;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;          // box
  std::string from, ref;                                  // polar, lerp (from/ref = a/b)
  double lo = 0.0, hi = 0.0;                              // polar angle (deg) or lerp t
  double ratio_lo = 1.0, ratio_hi = 1.0;                  // polar length ratio
  std::vector<std::pair<double, std::string>> terms;      // affine
};

struct ShapeDecl {
  std::string kind;  // "triangle", "rectangle", "square", "rhombus", ...
  std::string vertices;
};

struct ConstraintSpec {
  std::string kind;  // "longer"
  std::string a, b;  // two-letter segment names
};

struct InitSpec {
  std::vector<ParamSpec> params;
  Program program;
  std::vector<std::string> hidden;
  std::vector<ShapeDecl> shapes;
  std::vector<ConstraintSpec> constraints;
};

struct ProblemSpec {
  std::string id;
  std::string pack;
  std::string title;
  std::string statement;
  std::vector<ToolKind> tools;  // declared whitelist, in declaration order
  InitSpec init;
  std::vector<Program> references;
  std::vector<std::string> goals;
  std::string target;

  /// Labels present after instantiation.
  std::set<std::string, std::less<>> initial_labels() const {
    std::set<std::string, std::less<>> out;
    for (const auto& p : init.params) out.insert(p.name);
    for (const auto& s : init.program.steps) out.insert(s.outputs.begin(), s.outputs.end());
    for (const auto& h : init.hidden) out.erase(h);
    return out;
  }

  /// Whitelist check. Point marking is always available and a line tool
  /// also grants rays and segments.
  bool allows(ToolKind t) const {
    if (t == ToolKind::PointOn || t == ToolKind::FreePoint) return true;
    const auto has = [&](ToolKind k) { return std::find(tools.begin(), tools.end(), k) != tools.end(); };
    if ((t == ToolKind::Ray || t == ToolKind::Segment) && has(ToolKind::Line)) return true;
    return has(t);
  }

  bool conforms(const Program& p) const {
    return std::all_of(p.steps.begin(), p.steps.end(), [&](const Step& s) { return allows(s.tool); });
  }

  /// "[Line Tool, Circle Tool]" as listed to agents.
  std::string tool_list() const {
    std::string out = "[";
    for (std::size_t i = 0; i < tools.size(); ++i) {
      if (i) out += ", ";
      out += tool_info(tools[i]).display;
    }
    return out + "]";
  }
};

struct Bank {
  int format_version = 1;
  std::vector<std::string> pack_order;
  std::string seed_pack;
  std::vector<ProblemSpec> problems;

  const ProblemSpec* find(std::string_view id) const {
    for (const auto& p : problems) {
      if (p.id == id) return &p;
    }
    return nullptr;
  }

  const ProblemSpec& at(std::string_view id) const {
    if (const auto* p = find(id)) return *p;
    throw std::out_of_range("unknown problem '" + std::string(id) + "'");
  }

  std::size_t pack_index(std::string_view pack) const {
    auto it = std::find(pack_order.begin(), pack_order.end(), pack);
    if (it == pack_order.end()) throw std::out_of_range("unknown pack '" + std::string(pack) + "'");
    return static_cast<std::size_t>(it - pack_order.begin());
  }

  bool is_seed(const ProblemSpec& p) const { return p.pack == seed_pack; }
};

// ---------------------------------------------------------------------------
// Loading

namespace detail {

inline const nlohmann::json& need(const nlohmann::json& j, const char* field, const std::string& loc) {
  if (!j.is_object() || !j.contains(field)) throw SchemaError(loc, field, "missing field");
  return j.at(field);
}

inline std::string need_string(const nlohmann::json& j, const char* field, const std::string& loc) {
  const auto& v = need(j, field, loc);
  if (!v.is_string()) throw SchemaError(loc, field, "expected a string");
  return v.get<std::string>();
}

inline std::pair<double, double> need_range(const nlohmann::json& v, const std::string& loc, const char* field) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw SchemaError(loc, field, "expected [lo, hi]");
  }
  const double lo = v[0].get<double>(), hi = v[1].get<double>();
  if (lo > hi) throw SchemaError(loc, field, "empty range");
  return {lo, hi};
}

inline Program need_program(const nlohmann::json& v, const std::string& loc, const char* field) {
  if (!v.is_string()) throw SchemaError(loc, field, "expected canonical program text");
  try {
    return parse(v.get<std::string>());
  } catch (const Error& e) {
    throw SchemaError(loc, field, e.what());
  }
}

inline ParamSpec parse_param(const nlohmann::json& j, const std::string& loc) {
  ParamSpec p;
  p.name = need_string(j, "name", loc);
  if (!is_identifier(p.name)) throw SchemaError(loc, "name", "invalid identifier");
  const std::string kind = need_string(j, "kind", loc);
  if (kind == "point_in_box") {
    p.kind = ParamSpec::Kind::PointInBox;
    if (j.contains("range")) {
      const auto& r = j.at("range");
      if (r.is_array() && r.size() == 2 && r[0].is_array()) {
        std::tie(p.x0, p.x1) = need_range(r[0], loc, "range");
        std::tie(p.y0, p.y1) = need_range(r[1], loc, "range");
      } else {
        std::tie(p.x0, p.x1) = need_range(r, loc, "range");
        std::tie(p.y0, p.y1) = std::make_pair(p.x0, p.x1);
      }
    }
  } else if (kind == "point_polar") {
    p.kind = ParamSpec::Kind::PointPolar;
    p.from = need_string(j, "from", loc);
    p.ref = need_string(j, "ref", loc);
    std::tie(p.lo, p.hi) = need_range(need(j, "angle", loc), loc, "angle");
    if (j.contains("ratio")) std::tie(p.ratio_lo, p.ratio_hi) = need_range(j.at("ratio"), loc, "ratio");
  } else if (kind == "point_lerp") {
    p.kind = ParamSpec::Kind::PointLerp;
    p.from = need_string(j, "a", loc);
    p.ref = need_string(j, "b", loc);
    std::tie(p.lo, p.hi) = need_range(need(j, "t", loc), loc, "t");
  } else if (kind == "point_affine") {
    p.kind = ParamSpec::Kind::PointAffine;
    const auto& terms = need(j, "terms", loc);
    if (!terms.is_array() || terms.empty()) throw SchemaError(loc, "terms", "expected [[coef, id], ...]");
    for (const auto& t : terms) {
      if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_string()) {
        throw SchemaError(loc, "terms", "expected [coef, id]");
      }
      p.terms.emplace_back(t[0].get<double>(), t[1].get<std::string>());
    }
  } else {
    throw SchemaError(loc, "kind", "unsupported parameter kind '" + kind + "'");
  }
  return p;
}

inline bool statement_mentions(std::string_view statement, std::string_view name) {
  for (const auto& w : text_words(statement)) {
    if (w == name) return true;
    if (name.size() == 1 && all_upper(w) && w.find(name[0]) != std::string::npos) return true;
  }
  return false;
}

inline ProblemSpec parse_problem(const nlohmann::json& j, const std::string& loc) {
  ProblemSpec p;
  p.id = need_string(j, "id", loc);
  p.pack = need_string(j, "pack", loc);
  p.title = need_string(j, "title", loc);
  p.statement = need_string(j, "statement", loc);
  const auto& tools = need(j, "tools", loc);
  if (!tools.is_array() || tools.empty()) throw SchemaError(loc, "tools", "expected a non-empty list");
  for (const auto& t : tools) {
    if (!t.is_string()) throw SchemaError(loc, "tools", "expected tool names");
    const auto kind = tool_from_name(t.get<std::string>());
    if (!kind) throw SchemaError(loc, "tools", "unknown tool '" + t.get<std::string>() + "'");
    p.tools.push_back(*kind);
  }

  const auto& init = need(j, "init", loc);
  const std::string iloc = loc + ".init";
  if (init.contains("params")) {
    std::size_t k = 0;
    for (const auto& pj : init.at("params")) {
      p.init.params.push_back(parse_param(pj, iloc + ".params[" + std::to_string(k++) + "]"));
    }
  }
  if (init.contains("program")) p.init.program = need_program(init.at("program"), iloc, "program");
  if (init.contains("hidden")) p.init.hidden = init.at("hidden").get<std::vector<std::string>>();
  if (init.contains("shapes")) {
    for (const auto& s : init.at("shapes")) {
      p.init.shapes.push_back({need_string(s, "kind", iloc + ".shapes"), need_string(s, "vertices", iloc + ".shapes")});
    }
  }
  if (init.contains("constraints")) {
    for (const auto& c : init.at("constraints")) {
      ConstraintSpec cs{need_string(c, "kind", iloc + ".constraints"), need_string(c, "a", iloc + ".constraints"),
                        need_string(c, "b", iloc + ".constraints")};
      if (cs.kind != "longer" || cs.a.size() != 2 || cs.b.size() != 2) {
        throw SchemaError(iloc + ".constraints", "kind", "unsupported constraint");
      }
      p.init.constraints.push_back(cs);
    }
  }

  // Init program may only use parameters and its own outputs.
  std::set<std::string, std::less<>> params;
  for (const auto& prm : p.init.params) {
    if (!params.insert(prm.name).second) throw SchemaError(iloc, "params", "duplicate parameter '" + prm.name + "'");
  }
  if (auto d = static_validate(p.init.program, params); !d.empty()) {
    throw SchemaError(iloc, "program", std::string(diagnostic_name(d[0].kind)) + " '" + d[0].identifier +
                                           "' at step " + std::to_string(d[0].step));
  }

  const auto& refs = need(j, "references", loc);
  if (!refs.is_array() || refs.empty()) throw SchemaError(loc, "references", "expected at least one program");
  for (std::size_t k = 0; k < refs.size(); ++k) {
    p.references.push_back(need_program(refs[k], loc, ("references[" + std::to_string(k) + "]").c_str()));
  }
  p.goals = need(j, "goals", loc).get<std::vector<std::string>>();
  if (p.goals.empty()) throw SchemaError(loc, "goals", "expected at least one goal");
  if (j.contains("target") && !j.at("target").is_null()) p.target = j.at("target").get<std::string>();

  const auto labels = p.initial_labels();
  for (std::size_t k = 0; k < p.references.size(); ++k) {
    const std::string field = "references[" + std::to_string(k) + "]";
    const Program& ref = p.references[k];
    if (auto d = static_validate(ref, labels); !d.empty()) {
      throw SchemaError(loc, field, std::string(diagnostic_name(d[0].kind)) + " '" + d[0].identifier +
                                        "' at step " + std::to_string(d[0].step));
    }
    for (const auto& s : ref.steps) {
      if (!p.allows(s.tool)) {
        throw SchemaError(loc, field, "tool '" + std::string(tool_name(s.tool)) + "' is not whitelisted");
      }
      for (const auto& o : s.outputs) {
        if (is_reserved(o)) throw SchemaError(loc, field, "identifier '" + o + "' uses the reserved prefix");
      }
    }
    for (const auto& g : p.goals) {
      const bool bound = std::any_of(ref.steps.begin(), ref.steps.end(), [&](const Step& s) {
        return std::find(s.outputs.begin(), s.outputs.end(), g) != s.outputs.end();
      });
      if (!bound) throw SchemaError(loc, "goals", "goal '" + g + "' is not an output of " + field);
    }
  }
  if (!p.target.empty() && !statement_mentions(p.statement, p.target)) {
    throw SchemaError(loc, "target", "target '" + p.target + "' does not occur in the statement");
  }
  return p;
}

}  // namespace detail

inline Bank parse_bank(const std::string& text, const std::string& source = "bank") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(source, "", e.what());
  }
  Bank bank;
  bank.format_version = detail::need(j, "format_version", source).get<int>();
  bank.pack_order = detail::need(j, "pack_order", source).get<std::vector<std::string>>();
  bank.seed_pack = j.value("seed_pack", bank.pack_order.empty() ? std::string() : bank.pack_order.front());
  const auto& problems = detail::need(j, "problems", source);
  std::set<std::string, std::less<>> ids;
  for (std::size_t k = 0; k < problems.size(); ++k) {
    const std::string loc = source + ":problems[" + std::to_string(k) + "]";
    ProblemSpec p = detail::parse_problem(problems[k], loc);
    if (std::find(bank.pack_order.begin(), bank.pack_order.end(), p.pack) == bank.pack_order.end()) {
      throw SchemaError(loc, "pack", "pack '" + p.pack + "' is not in pack_order");
    }
    if (!ids.insert(p.id).second) throw DuplicateId("duplicate problem id '" + p.id + "'");
    bank.problems.push_back(std::move(p));
  }
  return bank;
}

inline Bank load_bank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "", "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bank(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Instantiation

inline constexpr int kMaxInstantiationAttempts = 100;
inline constexpr double kMinInitialSeparation = 0.05;  // after normalization

namespace detail {

inline Point param_point(const Scene& sc, const std::string& id) {
  const GeoObject* o = sc.find(id);
  if (!o || !std::holds_alternative<Point>(o->shape)) {
    throw std::invalid_argument("parameter reference '" + id + "' is not a point");
  }
  return std::get<Point>(o->shape);
}

inline Point sample_param(const ParamSpec& p, const Scene& sc, Rng& rng) {
  switch (p.kind) {
    case ParamSpec::Kind::PointInBox:
      return {rng.uniform(p.x0, p.x1), rng.uniform(p.y0, p.y1)};
    case ParamSpec::Kind::PointPolar: {
      const Point o = param_point(sc, p.from);
      const Point r = param_point(sc, p.ref);
      const double angle = rng.uniform(p.lo, p.hi) * std::numbers::pi / 180.0;
      const double ratio = rng.uniform(p.ratio_lo, p.ratio_hi);
      return o + ratio * rotate(r - o, angle);
    }
    case ParamSpec::Kind::PointLerp: {
      const Point a = param_point(sc, p.from);
      const Point b = param_point(sc, p.ref);
      return a + rng.uniform(p.lo, p.hi) * (b - a);
    }
    case ParamSpec::Kind::PointAffine: {
      Point out{0.0, 0.0};
      for (const auto& [coef, id] : p.terms) out = out + coef * param_point(sc, id);
      return out;
    }
  }
  return {};
}

/// Uniform rescale of the scene into [0.05, 0.95]^2, circles included.
inline Scene normalize(const Scene& sc) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  auto grow = [&](Point p, double r) {
    x0 = std::min(x0, p.x - r);
    y0 = std::min(y0, p.y - r);
    x1 = std::max(x1, p.x + r);
    y1 = std::max(y1, p.y + r);
  };
  for (const auto& o : sc.objects()) {
    if (const auto* c = std::get_if<Circle>(&o.shape)) grow(c->center, c->radius);
  }
  for (Point p : sc.defining_points()) grow(p, 0.0);
  Scene out(sc.rng_seed());
  if (!(x1 >= x0)) return out;
  const double extent = std::max({x1 - x0, y1 - y0, 1e-12});
  const double scale = 0.9 / extent;
  const Vec2 offset{0.05 + (0.9 - scale * (x1 - x0)) / 2 - scale * x0, 0.05 + (0.9 - scale * (y1 - y0)) / 2 - scale * y0};
  for (const auto& o : sc.objects()) out.add(o.label, transform(o.shape, scale, offset));
  return out;
}

inline double seg_length(const Scene& sc, const std::string& two) {
  return distance(param_point(sc, two.substr(0, 1)), param_point(sc, two.substr(1, 1)));
}

}  // namespace detail

/// Builds a randomized instance: samples parameters, runs the init program,
/// drops hidden helpers and rescales into the unit box. Attempts whose
/// constraints fail, whose points crowd together, or on which a reference
/// solution cannot run are resampled.
inline Scene instantiate(const ProblemSpec& spec, std::uint64_t seed) {
  std::string last_reason = "no attempt";
  for (int attempt = 0; attempt < kMaxInstantiationAttempts; ++attempt) {
    const std::uint64_t attempt_seed = mix_seed(seed, static_cast<std::uint64_t>(attempt));
    Rng rng(attempt_seed);
    Scene raw(mix_seed(attempt_seed, 0x5EED));
    for (const auto& prm : spec.init.params) raw.add(prm.name, detail::sample_param(prm, raw, rng));

    const auto init = execute(spec.init.program, raw);
    if (!init.ok()) {
      last_reason = "init program: " + init.error->message;
      continue;
    }
    Scene visible(init.scene.rng_seed());
    for (const auto& o : init.scene.objects()) {
      if (std::find(spec.init.hidden.begin(), spec.init.hidden.end(), o.label) == spec.init.hidden.end()) {
        visible.add(o);
      }
    }
    Scene sc = detail::normalize(visible);

    const auto pts = sc.points();
    bool crowded = false;
    for (std::size_t i = 0; i < pts.size() && !crowded; ++i) {
      for (std::size_t k = i + 1; k < pts.size() && !crowded; ++k) {
        crowded = distance(pts[i], pts[k]) < kMinInitialSeparation;
      }
    }
    if (crowded) {
      last_reason = "points closer than the minimum separation";
      continue;
    }
    bool satisfied = true;
    for (const auto& c : spec.init.constraints) {
      satisfied = satisfied && detail::seg_length(sc, c.a) > detail::seg_length(sc, c.b) + kMinInitialSeparation;
    }
    if (!satisfied) {
      last_reason = "constraint violated";
      continue;
    }
    const bool well_posed = std::all_of(spec.references.begin(), spec.references.end(),
                                        [&](const Program& ref) { return execute(ref, sc).ok(); });
    if (!well_posed) {
      last_reason = "a reference solution does not execute";
      continue;
    }
    return sc;
  }
  throw ConstraintUnsatisfiable("instantiate '" + spec.id + "': " + last_reason + " after " +
                                std::to_string(kMaxInstantiationAttempts) + " attempts");
}

// ---------------------------------------------------------------------------
// Knowledge base

struct KbEntry {
  const ProblemSpec* problem = nullptr;
  const Program* solution = nullptr;  // chosen reference
};

struct KnowledgeBase {
  std::vector<KbEntry> seeds;
  std::vector<KbEntry> entries;  // problems from strictly earlier packs

  std::size_t size() const { return seeds.size() + entries.size(); }

  std::vector<KbEntry> all() const {
    std::vector<KbEntry> out = seeds;
    out.insert(out.end(), entries.begin(), entries.end());
    return out;
  }
};

/// Seed tutorials plus every problem from packs strictly before the current
/// one, in bank order.
inline KnowledgeBase knowledge_for(const ProblemSpec& current, const Bank& bank) {
  KnowledgeBase kb;
  const std::size_t level = bank.pack_index(current.pack);
  for (const auto& p : bank.problems) {
    if (p.id == current.id) continue;
    KbEntry e{&p, &p.references.front()};
    if (bank.is_seed(p)) {
      kb.seeds.push_back(e);
    } else if (bank.pack_index(p.pack) < level) {
      kb.entries.push_back(e);
    }
  }
  return kb;
}

/// Labels of an instantiated scene, flagged as points or not.
inline std::map<std::string, bool, std::less<>> scene_names(const Scene& sc) {
  std::map<std::string, bool, std::less<>> out;
  for (const auto& o : sc.objects()) out[o.label] = std::holds_alternative<Point>(o.shape);
  return out;
}

}  // namespace geocon
