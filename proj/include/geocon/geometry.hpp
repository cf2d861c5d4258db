#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "geocon/rng.hpp"
#include "geocon/tool.hpp"

namespace geocon {

// ---------------------------------------------------------------------------
// Vectors

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
  friend Vec2 operator-(Vec2 v) { return {-v.x, -v.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

using Point = Vec2;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 rotate(Vec2 v, double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}
inline Vec2 unit(Vec2 v) {
  const double n = norm(v);
  return {v.x / n, v.y / n};
}

// ---------------------------------------------------------------------------
// Objects

struct Tolerances {
  double match = 1e-6;        // goal / object equivalence
  double degenerate = 1e-9;   // coincidence and tangency detection
  double separation = 1e-3;   // minimum distance between sampled points

  bool valid() const {
    return degenerate > 0.0 && degenerate < match && match < separation;
  }
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class SamplingExhausted : public Error {
 public:
  using Error::Error;
};

struct Line {
  Point anchor;
  Vec2 dir;  // unit length

  friend bool operator==(const Line&, const Line&) = default;
};

struct Ray {
  Point origin;
  Vec2 dir;  // unit length

  friend bool operator==(const Ray&, const Ray&) = default;
};

struct Segment {
  Point a;
  Point b;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Circle {
  Point center;
  double radius = 0.0;

  friend bool operator==(const Circle&, const Circle&) = default;
};

using Shape = std::variant<Point, Line, Ray, Segment, Circle>;

enum class ObjectKind { Point, Line, Ray, Segment, Circle };

inline ObjectKind kind_of(const Shape& s) { return static_cast<ObjectKind>(s.index()); }

inline std::string_view kind_name(ObjectKind k) {
  switch (k) {
    case ObjectKind::Point: return "point";
    case ObjectKind::Line: return "line";
    case ObjectKind::Ray: return "ray";
    case ObjectKind::Segment: return "segment";
    case ObjectKind::Circle: return "circle";
  }
  return "?";
}

inline bool is_linear(const Shape& s) {
  return std::holds_alternative<Line>(s) || std::holds_alternative<Ray>(s) ||
         std::holds_alternative<Segment>(s);
}

struct GeoObject {
  std::string label;
  Shape shape;
};

/// Parametric view of a line, ray or segment: origin + t * dir, t in [tmin, tmax].
struct LinearView {
  Point origin;
  Vec2 dir;
  double tmin;
  double tmax;
};

inline std::optional<LinearView> linear_view(const Shape& s) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (const auto* l = std::get_if<Line>(&s)) return LinearView{l->anchor, l->dir, -inf, inf};
  if (const auto* r = std::get_if<Ray>(&s)) return LinearView{r->origin, r->dir, 0.0, inf};
  if (const auto* g = std::get_if<Segment>(&s)) {
    const double len = distance(g->a, g->b);
    return LinearView{g->a, unit(g->b - g->a), 0.0, len};
  }
  return std::nullopt;
}

/// Distance from p to the object (0 when p lies on it).
inline double residual(Point p, const Shape& s) {
  if (const auto* q = std::get_if<Point>(&s)) return distance(p, *q);
  if (const auto* c = std::get_if<Circle>(&s)) return std::abs(distance(p, c->center) - c->radius);
  const LinearView v = *linear_view(s);
  const double t = std::clamp(dot(p - v.origin, v.dir), v.tmin, v.tmax);
  return distance(p, v.origin + t * v.dir);
}

// ---------------------------------------------------------------------------
// Construction

namespace detail {

inline const Point& need_point(const Shape& s, std::string_view tool) {
  if (const auto* p = std::get_if<Point>(&s)) return *p;
  throw DegenerateInput(std::string(tool) + ": expected a point argument");
}

inline LinearView need_linear(const Shape& s, std::string_view tool) {
  if (auto v = linear_view(s)) return *v;
  throw DegenerateInput(std::string(tool) + ": expected a line, ray or segment argument");
}

inline Vec2 direction(Point from, Point to, double eps, std::string_view tool) {
  const Vec2 d = to - from;
  if (norm(d) <= eps) throw DegenerateInput(std::string(tool) + ": coincident defining points");
  return unit(d);
}

}  // namespace detail

/// Applies a construction tool to its arguments. Intersections and point
/// sampling are handled by intersect() and sample_point().
inline Shape construct(ToolKind tool, std::span<const Shape> args, const Tolerances& tol = {}) {
  const ToolInfo& info = tool_info(tool);
  if (produces_point(tool)) {
    throw std::invalid_argument("construct: " + std::string(info.name) +
                                " is not a construction tool");
  }
  if (args.size() != info.arity) {
    throw ArityMismatch(std::string(info.name) + " expects " + std::to_string(info.arity) +
                        " arguments, got " + std::to_string(args.size()));
  }
  const double eps = tol.degenerate;
  const std::string_view name = info.name;
  using detail::need_linear;
  using detail::need_point;

  switch (tool) {
    case ToolKind::Line: {
      const Point& a = need_point(args[0], name);
      return Line{a, detail::direction(a, need_point(args[1], name), eps, name)};
    }
    case ToolKind::Ray: {
      const Point& a = need_point(args[0], name);
      return Ray{a, detail::direction(a, need_point(args[1], name), eps, name)};
    }
    case ToolKind::Segment: {
      const Point& a = need_point(args[0], name);
      const Point& b = need_point(args[1], name);
      detail::direction(a, b, eps, name);
      return Segment{a, b};
    }
    case ToolKind::Circle: {
      const Point& c = need_point(args[0], name);
      const double r = distance(c, need_point(args[1], name));
      if (r <= eps) throw DegenerateInput("circle: zero radius");
      return Circle{c, r};
    }
    case ToolKind::Compass: {
      const Point& c = need_point(args[0], name);
      const double r = distance(need_point(args[1], name), need_point(args[2], name));
      if (r <= eps) throw DegenerateInput("compass: zero radius");
      return Circle{c, r};
    }
    case ToolKind::PerpBisector: {
      const Point& a = need_point(args[0], name);
      const Point& b = need_point(args[1], name);
      const Vec2 d = detail::direction(a, b, eps, name);
      return Line{0.5 * (a + b), perp(d)};
    }
    case ToolKind::Perpendicular: {
      const LinearView base = need_linear(args[0], name);
      return Line{need_point(args[1], name), perp(base.dir)};
    }
    case ToolKind::Parallel: {
      const LinearView base = need_linear(args[0], name);
      return Line{need_point(args[1], name), base.dir};
    }
    case ToolKind::AngleBisector: {
      const Point& a = need_point(args[0], name);
      const Point& v = need_point(args[1], name);
      const Point& b = need_point(args[2], name);
      const Vec2 ua = detail::direction(v, a, eps, name);
      const Vec2 ub = detail::direction(v, b, eps, name);
      const Vec2 sum = ua + ub;
      if (std::abs(cross(ua, ub)) <= eps) {
        throw DegenerateInput("angle_bisector: zero or straight angle");
      }
      return Ray{v, unit(sum)};
    }
    default:
      break;
  }
  throw std::logic_error("construct: unhandled tool");
}

// ---------------------------------------------------------------------------
// Intersection

namespace detail {

inline bool within(const LinearView& v, double t, double eps) {
  return t >= v.tmin - eps && t <= v.tmax + eps;
}

/// Lexicographic (x, y) order with x-ties resolved inside eps.
inline bool canonical_less(Point a, Point b, double eps) {
  if (std::abs(a.x - b.x) > eps) return a.x < b.x;
  return a.y < b.y;
}

inline std::vector<Point> canonicalize(std::vector<Point> pts, double eps) {
  std::sort(pts.begin(), pts.end(),
            [eps](Point a, Point b) { return canonical_less(a, b, eps); });
  std::vector<Point> out;
  for (Point p : pts) {
    if (!out.empty() && distance(out.back(), p) <= eps) {
      out.back() = 0.5 * (out.back() + p);
    } else {
      out.push_back(p);
    }
  }
  return out;
}

inline std::vector<Point> linear_linear(const LinearView& a, const LinearView& b, double eps) {
  const double denom = cross(a.dir, b.dir);
  if (std::abs(denom) <= eps) return {};
  const double ta = cross(b.origin - a.origin, b.dir) / denom;
  const Point p = a.origin + ta * a.dir;
  const double tb = dot(p - b.origin, b.dir);
  if (!within(a, ta, eps) || !within(b, tb, eps)) return {};
  return {p};
}

inline std::vector<Point> linear_circle(const LinearView& l, const Circle& c, double eps) {
  const double t0 = dot(c.center - l.origin, l.dir);
  const Point foot = l.origin + t0 * l.dir;
  const double d = distance(foot, c.center);
  std::vector<Point> pts;
  if (d > c.radius + eps) return {};
  if (std::abs(d - c.radius) <= eps) {
    if (within(l, t0, eps)) pts.push_back(foot);
    return pts;
  }
  const double h = std::sqrt(c.radius * c.radius - d * d);
  for (double t : {t0 - h, t0 + h}) {
    if (within(l, t, eps)) pts.push_back(l.origin + t * l.dir);
  }
  return pts;
}

inline std::vector<Point> circle_circle(const Circle& a, const Circle& b, double eps) {
  const Vec2 delta = b.center - a.center;
  const double d = norm(delta);
  if (d <= eps) return {};
  const double sum = a.radius + b.radius;
  const double diff = std::abs(a.radius - b.radius);
  if (d > sum + eps || d < diff - eps) return {};
  const Vec2 u = (1.0 / d) * delta;
  const double along = (a.radius * a.radius - b.radius * b.radius + d * d) / (2.0 * d);
  const Point mid = a.center + along * u;
  const double h2 = a.radius * a.radius - along * along;
  if (std::abs(d - sum) <= eps || std::abs(d - diff) <= eps || h2 <= 0.0) return {mid};
  const double h = std::sqrt(h2);
  return {mid + h * perp(u), mid - h * perp(u)};
}

}  // namespace detail

/// Intersection points of two non-point objects in canonical (x, y) order.
/// Tangent configurations yield a single point; coincident objects yield none.
inline std::vector<Point> intersect(const Shape& o1, const Shape& o2, const Tolerances& tol = {}) {
  if (std::holds_alternative<Point>(o1) || std::holds_alternative<Point>(o2)) {
    throw std::invalid_argument("intersect: point arguments are not intersectable");
  }
  const double eps = tol.degenerate;
  std::vector<Point> pts;
  const auto l1 = linear_view(o1);
  const auto l2 = linear_view(o2);
  if (l1 && l2) {
    pts = detail::linear_linear(*l1, *l2, eps);
  } else if (l1) {
    pts = detail::linear_circle(*l1, std::get<Circle>(o2), eps);
  } else if (l2) {
    pts = detail::linear_circle(*l2, std::get<Circle>(o1), eps);
  } else {
    pts = detail::circle_circle(std::get<Circle>(o1), std::get<Circle>(o2), eps);
  }
  return detail::canonicalize(std::move(pts), eps);
}

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

/// Parameter interval of origin + t*dir inside the square [lo, hi]^2.
inline std::optional<std::pair<double, double>> clip_to_box(Point origin, Vec2 dir, double lo,
                                                            double hi) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  const double o[2] = {origin.x, origin.y};
  const double d[2] = {dir.x, dir.y};
  for (int i = 0; i < 2; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (o[i] < lo || o[i] > hi) return std::nullopt;
      continue;
    }
    double a = (lo - o[i]) / d[i];
    double b = (hi - o[i]) / d[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

inline Point draw_on(const Shape* target, Rng& rng) {
  if (target == nullptr) return {rng.uniform(), rng.uniform()};
  if (const auto* c = std::get_if<Circle>(target)) {
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return c->center + c->radius * Vec2{std::cos(a), std::sin(a)};
  }
  if (const auto* s = std::get_if<Segment>(target)) {
    return s->a + rng.uniform() * (s->b - s->a);
  }
  const LinearView v = *linear_view(*target);
  // Viewport [-0.5, 1.5]^2 around the unit-normalized scene.
  double lo = -1.0, hi = 1.0;
  if (auto span = clip_to_box(v.origin, v.dir, -0.5, 1.5)) {
    lo = span->first;
    hi = span->second;
  }
  lo = std::max(lo, v.tmin);
  hi = std::min(hi, v.tmax);
  if (lo >= hi) {
    lo = std::max(v.tmin, -1.0);
    hi = lo + 1.0;
  }
  return v.origin + rng.uniform(lo, hi) * v.dir;
}

}  // namespace detail

inline constexpr int kMaxSamplingAttempts = 100;

/// Draws a point on `target` (or anywhere in the unit box when target is null)
/// that keeps eps_separation from every point in `avoid`.
inline Point sample_point(const Shape* target, Rng& rng, std::span<const Point> avoid,
                          const Tolerances& tol = {}) {
  if (target != nullptr && std::holds_alternative<Point>(*target)) {
    throw DegenerateInput("point_on: cannot sample on a point");
  }
  for (int attempt = 0; attempt < kMaxSamplingAttempts; ++attempt) {
    const Point p = detail::draw_on(target, rng);
    const bool clear = std::all_of(avoid.begin(), avoid.end(), [&](Point q) {
      return distance(p, q) > tol.separation;
    });
    if (clear) return p;
  }
  throw SamplingExhausted("sample_point: no admissible point after " +
                          std::to_string(kMaxSamplingAttempts) + " draws");
}

// ---------------------------------------------------------------------------
// Equivalence

namespace detail {

inline double line_distance(Point p, Point anchor, Vec2 dir) {
  return std::abs(cross(p - anchor, dir));
}

inline bool same_carrier(const LinearView& a, const LinearView& b, double eps) {
  return std::abs(cross(a.dir, b.dir)) < eps && line_distance(b.origin, a.origin, a.dir) < eps &&
         line_distance(a.origin, b.origin, b.dir) < eps;
}

}  // namespace detail

/// Tolerance-based geometric equality. Lines, rays and segments compare as
/// their carrier lines against a Line; rays and segments compare strictly
/// against their own kind.
inline bool equivalent(const Shape& a, const Shape& b, const Tolerances& tol = {}) {
  const double eps = tol.match;
  const ObjectKind ka = kind_of(a), kb = kind_of(b);
  if (ka == ObjectKind::Point && kb == ObjectKind::Point) {
    return distance(std::get<Point>(a), std::get<Point>(b)) < eps;
  }
  if (ka == ObjectKind::Circle && kb == ObjectKind::Circle) {
    const auto& ca = std::get<Circle>(a);
    const auto& cb = std::get<Circle>(b);
    return distance(ca.center, cb.center) < eps && std::abs(ca.radius - cb.radius) < eps;
  }
  const auto la = linear_view(a);
  const auto lb = linear_view(b);
  if (!la || !lb) return false;
  if (ka == ObjectKind::Line || kb == ObjectKind::Line) {
    return detail::same_carrier(*la, *lb, eps);
  }
  if (ka != kb) return false;
  if (ka == ObjectKind::Ray) {
    return distance(la->origin, lb->origin) < eps && dot(la->dir, lb->dir) > 0.0 &&
           std::abs(cross(la->dir, lb->dir)) < eps;
  }
  const auto& sa = std::get<Segment>(a);
  const auto& sb = std::get<Segment>(b);
  return (distance(sa.a, sb.a) < eps && distance(sa.b, sb.b) < eps) ||
         (distance(sa.a, sb.b) < eps && distance(sa.b, sb.a) < eps);
}

// ---------------------------------------------------------------------------
// Scene

/// Append-only, label-addressed collection of objects.
class Scene {
 public:
  Scene() = default;
  explicit Scene(std::uint64_t rng_seed) : rng_seed_(rng_seed) {}

  std::uint64_t rng_seed() const { return rng_seed_; }
  void set_rng_seed(std::uint64_t seed) { rng_seed_ = seed; }

  const std::vector<GeoObject>& objects() const { return objects_; }
  std::size_t size() const { return objects_.size(); }
  bool empty() const { return objects_.empty(); }

  bool contains(std::string_view label) const { return index_.find(label) != index_.end(); }

  const GeoObject* find(std::string_view label) const {
    auto it = index_.find(label);
    return it == index_.end() ? nullptr : &objects_[it->second];
  }

  void add(GeoObject obj) {
    if (contains(obj.label)) {
      throw std::invalid_argument("scene: duplicate label '" + obj.label + "'");
    }
    index_.emplace(obj.label, objects_.size());
    objects_.push_back(std::move(obj));
  }

  void add(std::string label, Shape shape) { add(GeoObject{std::move(label), std::move(shape)}); }

  std::vector<Point> points() const {
    std::vector<Point> pts;
    for (const auto& o : objects_) {
      if (const auto* p = std::get_if<Point>(&o.shape)) pts.push_back(*p);
    }
    return pts;
  }

  /// Diagonal of the bounding box of all defining coordinates.
  double bounding_diameter() const {
    const auto pts = defining_points();
    if (pts.empty()) return 0.0;
    double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
    for (Point p : pts) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    return std::hypot(x1 - x0, y1 - y0);
  }

  /// Point coordinates that define the objects: points, segment endpoints,
  /// ray origins, line anchors and circle centers.
  std::vector<Point> defining_points() const {
    std::vector<Point> pts;
    for (const auto& o : objects_) {
      std::visit(
          [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Point>) pts.push_back(s);
            else if constexpr (std::is_same_v<T, Line>) pts.push_back(s.anchor);
            else if constexpr (std::is_same_v<T, Ray>) pts.push_back(s.origin);
            else if constexpr (std::is_same_v<T, Segment>) { pts.push_back(s.a); pts.push_back(s.b); }
            else pts.push_back(s.center);
          },
          o.shape);
    }
    return pts;
  }

 private:
  std::vector<GeoObject> objects_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::uint64_t rng_seed_ = 0;
};

/// Applies p -> scale * p + offset to every coordinate of a shape.
inline Shape transform(const Shape& s, double scale, Vec2 offset) {
  auto map = [&](Point p) { return scale * p + offset; };
  return std::visit(
      [&](const auto& v) -> Shape {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Point>) return map(v);
        else if constexpr (std::is_same_v<T, Line>) return Line{map(v.anchor), v.dir};
        else if constexpr (std::is_same_v<T, Ray>) return Ray{map(v.origin), v.dir};
        else if constexpr (std::is_same_v<T, Segment>) return Segment{map(v.a), map(v.b)};
        else return Circle{map(v.center), scale * v.radius};
      },
      s);
}

}  // namespace geocon
