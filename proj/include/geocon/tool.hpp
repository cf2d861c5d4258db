#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace geocon {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArityMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownTool : public Error {
 public:
  using Error::Error;
};

enum class ToolKind {
  Line,
  Ray,
  Segment,
  Circle,
  Compass,
  PerpBisector,
  Perpendicular,
  Parallel,
  AngleBisector,
  Intersect,
  PointOn,
  FreePoint,
};

inline constexpr std::array<ToolKind, 12> kAllTools = {
    ToolKind::Line,          ToolKind::Ray,           ToolKind::Segment,
    ToolKind::Circle,        ToolKind::Compass,       ToolKind::PerpBisector,
    ToolKind::Perpendicular, ToolKind::Parallel,      ToolKind::AngleBisector,
    ToolKind::Intersect,     ToolKind::PointOn,       ToolKind::FreePoint,
};

struct ToolInfo {
  ToolKind kind;
  std::string_view name;     // canonical DSL keyword
  std::string_view display;  // "<Name> Tool" surface form
  std::size_t arity;
  std::size_t min_outputs;
  std::size_t max_outputs;
  std::string_view description;
};

inline constexpr std::array<ToolInfo, 12> kToolTable = {{
    {ToolKind::Line, "line", "Line Tool", 2, 1, 1,
     "Draws the straight line through two points."},
    {ToolKind::Ray, "ray", "Ray Tool", 2, 1, 1,
     "Draws a ray starting at the first point and passing through the second."},
    {ToolKind::Segment, "segment", "Segment Tool", 2, 1, 1,
     "Draws the segment between two points."},
    {ToolKind::Circle, "circle", "Circle Tool", 2, 1, 1,
     "Constructs a circle with the first point as center, passing through the second point."},
    {ToolKind::Compass, "compass", "Compass Tool", 3, 1, 1,
     "Constructs a circle centered at the first point with radius equal to the segment between the other two."},
    {ToolKind::PerpBisector, "perp_bisector", "Perpendicular Bisector Tool", 2, 1, 1,
     "Creates the perpendicular bisector of the segment between two points."},
    {ToolKind::Perpendicular, "perpendicular", "Perpendicular Tool", 2, 1, 1,
     "Draws the line perpendicular to a given line, ray or segment through a given point."},
    {ToolKind::Parallel, "parallel", "Parallel Tool", 2, 1, 1,
     "Draws the line parallel to a given line, ray or segment through a given point."},
    {ToolKind::AngleBisector, "angle_bisector", "Angle Bisector Tool", 3, 1, 1,
     "Creates the ray bisecting the angle formed by three points; the ray starts at the middle point (the vertex)."},
    {ToolKind::Intersect, "intersect", "Intersect Tool", 2, 1, 2,
     "Marks the intersection points of two geometric objects."},
    {ToolKind::PointOn, "point_on", "Point Tool", 1, 1, 1,
     "Marks an arbitrary point on a given object and labels it."},
    {ToolKind::FreePoint, "free_point", "Point Tool", 0, 1, 1,
     "Marks an arbitrary point in the plane and labels it."},
}};

inline const ToolInfo& tool_info(ToolKind kind) {
  return kToolTable[static_cast<std::size_t>(kind)];
}

inline std::string_view tool_name(ToolKind kind) { return tool_info(kind).name; }

inline std::optional<ToolKind> tool_from_name(std::string_view name) {
  for (const auto& info : kToolTable) {
    if (info.name == name) return info.kind;
  }
  return std::nullopt;
}

inline ToolKind parse_tool(std::string_view name) {
  if (auto kind = tool_from_name(name)) return *kind;
  throw UnknownTool("unknown tool '" + std::string(name) + "'");
}

/// Tools that yield a linear object (line, ray or segment).
inline bool produces_linear(ToolKind kind) {
  switch (kind) {
    case ToolKind::Line:
    case ToolKind::Ray:
    case ToolKind::Segment:
    case ToolKind::PerpBisector:
    case ToolKind::Perpendicular:
    case ToolKind::Parallel:
    case ToolKind::AngleBisector:
      return true;
    default:
      return false;
  }
}

inline bool produces_circle(ToolKind kind) {
  return kind == ToolKind::Circle || kind == ToolKind::Compass;
}

inline bool produces_point(ToolKind kind) {
  return kind == ToolKind::Intersect || kind == ToolKind::PointOn ||
         kind == ToolKind::FreePoint;
}

}  // namespace geocon
