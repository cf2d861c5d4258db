#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geocon/dsl.hpp"
#include "geocon/geometry.hpp"

namespace geocon {

struct StepError {
  enum class Kind { NoIntersection, DegenerateInput, UnboundIdentifier, TangencyShortfall, Rebinding };
  std::size_t step = 0;  // 1-based
  Kind kind = Kind::DegenerateInput;
  std::string message;
};

inline std::string_view step_error_name(StepError::Kind k) {
  switch (k) {
    case StepError::Kind::NoIntersection: return "NoIntersection";
    case StepError::Kind::DegenerateInput: return "DegenerateInput";
    case StepError::Kind::UnboundIdentifier: return "UnboundIdentifier";
    case StepError::Kind::TangencyShortfall: return "TangencyShortfall";
    case StepError::Kind::Rebinding: return "Rebinding";
  }
  return "?";
}

struct TraceStep {
  std::vector<GeoObject> bound;
  std::optional<std::size_t> branch;  // set for unhinted two-point intersections
  double residual = 0.0;              // worst on-object residual of bound points
};

struct ExecutionTrace {
  std::vector<TraceStep> steps;
  Scene scene;
  std::optional<StepError> error;
  std::size_t ambiguous = 0;  // unhinted two-point intersections encountered

  bool ok() const { return !error.has_value(); }
};

namespace detail {

inline std::size_t choose(const Pick& pick, const std::vector<Point>& pts, const Scene& scene) {
  auto shape_of = [&](const std::string& id) -> const Shape& {
    const GeoObject* o = scene.find(id);
    if (!o) throw std::out_of_range(id);
    return o->shape;
  };
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double score = 0.0;
    switch (pick.kind) {
      case Pick::Kind::Near: score = -residual(pts[i], shape_of(pick.a)); break;
      case Pick::Kind::Far: score = residual(pts[i], shape_of(pick.a)); break;
      case Pick::Kind::Left:
      case Pick::Kind::Right: {
        const auto* a = std::get_if<Point>(&shape_of(pick.a));
        const auto* b = std::get_if<Point>(&shape_of(pick.b));
        if (!a || !b) throw DegenerateInput("left/right picks need two points");
        score = cross(*b - *a, pts[i] - *a);
        if (pick.kind == Pick::Kind::Right) score = -score;
        break;
      }
    }
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace detail

/// Runs a program on a copy of `scene`. `decisions[k]` selects the point for
/// the k-th unhinted two-point intersection (0 = first in canonical order);
/// missing entries default to 0. Point tools draw from a generator seeded by
/// the scene, so repeated executions are identical.
inline ExecutionTrace execute(const Program& program, const Scene& scene,
                              std::span<const std::size_t> decisions = {}, const Tolerances& tol = {}) {
  ExecutionTrace trace;
  trace.scene = scene;
  Scene& sc = trace.scene;
  Rng rng(sc.rng_seed());

  for (std::size_t i = 0; i < program.steps.size(); ++i) {
    const Step& step = program.steps[i];
    const std::size_t n = i + 1;
    auto fail = [&](StepError::Kind kind, std::string msg) {
      trace.error = StepError{n, kind, std::move(msg)};
    };

    std::vector<Shape> args;
    std::string missing;
    for (const auto& id : step.args) {
      const GeoObject* o = sc.find(id);
      if (!o) {
        missing = id;
        break;
      }
      args.push_back(o->shape);
    }
    if (!missing.empty()) {
      fail(StepError::Kind::UnboundIdentifier, "unbound identifier '" + missing + "'");
      break;
    }
    if (step.pick) {
      for (const auto* id : {&step.pick->a, &step.pick->b}) {
        if (!id->empty() && !sc.contains(*id)) missing = *id;
      }
      if (!missing.empty()) {
        fail(StepError::Kind::UnboundIdentifier, "unbound identifier '" + missing + "'");
        break;
      }
    }
    for (const auto& out : step.outputs) {
      if (sc.contains(out)) missing = out;
    }
    if (!missing.empty()) {
      fail(StepError::Kind::Rebinding, "identifier '" + missing + "' is already bound");
      break;
    }
    const ToolInfo& info = tool_info(step.tool);
    if (args.size() != info.arity || step.outputs.size() < info.min_outputs ||
        step.outputs.size() > info.max_outputs) {
      fail(StepError::Kind::DegenerateInput, "arity mismatch for " + std::string(info.name));
      break;
    }

    TraceStep ts;
    try {
      switch (step.tool) {
        case ToolKind::Intersect: {
          if (std::holds_alternative<Point>(args[0]) || std::holds_alternative<Point>(args[1])) {
            throw DegenerateInput("intersect: point arguments");
          }
          const auto pts = intersect(args[0], args[1], tol);
          if (pts.empty()) {
            fail(StepError::Kind::NoIntersection, "objects do not intersect");
            break;
          }
          if (step.outputs.size() == 2) {
            if (pts.size() < 2) {
              fail(StepError::Kind::TangencyShortfall, "two points requested, one exists");
              break;
            }
            ts.bound = {{step.outputs[0], pts[0]}, {step.outputs[1], pts[1]}};
          } else {
            std::size_t idx = 0;
            if (pts.size() == 2) {
              if (step.pick) {
                idx = detail::choose(*step.pick, pts, sc);
              } else {
                const std::size_t k = trace.ambiguous++;
                idx = k < decisions.size() ? decisions[k] % 2 : 0;
                ts.branch = idx;
              }
            }
            ts.bound = {{step.outputs[0], pts[idx]}};
          }
          for (const auto& b : ts.bound) {
            const Point p = std::get<Point>(b.shape);
            ts.residual = std::max({ts.residual, residual(p, args[0]), residual(p, args[1])});
          }
          break;
        }
        case ToolKind::PointOn:
        case ToolKind::FreePoint: {
          const auto avoid = sc.points();
          const Shape* target = step.tool == ToolKind::PointOn ? &args[0] : nullptr;
          const Point p = sample_point(target, rng, avoid, tol);
          if (target) ts.residual = residual(p, *target);
          ts.bound = {{step.outputs[0], p}};
          break;
        }
        default:
          ts.bound = {{step.outputs[0], construct(step.tool, args, tol)}};
          break;
      }
    } catch (const Error& e) {
      fail(StepError::Kind::DegenerateInput, e.what());
    }
    if (trace.error) break;
    for (const auto& b : ts.bound) sc.add(b);
    trace.steps.push_back(std::move(ts));
  }
  return trace;
}

}  // namespace geocon
