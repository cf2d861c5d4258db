#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geocon/tool.hpp"

namespace geocon {

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class CollisionError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::string_view kReservedPrefix = "auto";

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

inline bool is_reserved(std::string_view s) { return s.substr(0, kReservedPrefix.size()) == kReservedPrefix; }

// ---------------------------------------------------------------------------
// Program model

struct Pick {
  enum class Kind { Near, Far, Left, Right };
  Kind kind = Kind::Near;
  std::string a;
  std::string b;  // Left / Right only

  friend bool operator==(const Pick&, const Pick&) = default;
};

struct Step {
  ToolKind tool = ToolKind::Line;
  std::vector<std::string> args;
  std::vector<std::string> outputs;
  std::optional<Pick> pick;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Program {
  std::vector<Step> steps;

  bool empty() const { return steps.empty(); }
  std::size_t size() const { return steps.size(); }
  friend bool operator==(const Program&, const Program&) = default;
};

inline std::vector<ToolKind> tool_sequence(const Program& p) {
  std::vector<ToolKind> out;
  out.reserve(p.steps.size());
  for (const auto& s : p.steps) out.push_back(s.tool);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class StepLexer {
 public:
  StepLexer(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
    }
    if (start == pos_) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::vector<std::string> ident_list(char close) {
    std::vector<std::string> out;
    if (peek(close)) return out;
    out.push_back(ident());
    while (accept(",")) out.push_back(ident());
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(line_, pos_ + 1, what); }

  std::size_t column() const { return pos_ + 1; }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

inline Step parse_step(std::string_view text, std::size_t line_no) {
  StepLexer lx(text, line_no);
  const std::size_t tool_col = (lx.skip_ws(), lx.column());
  const std::string name = lx.ident();
  const auto tool = tool_from_name(name);
  if (!tool) throw UnknownTool("line " + std::to_string(line_no) + ", column " + std::to_string(tool_col) +
                               ": unknown tool '" + name + "'");
  Step step;
  step.tool = *tool;
  lx.expect("(");
  step.args = lx.ident_list(')');
  lx.expect(")");
  if (lx.accept("[")) {
    Pick pick;
    const std::string kw = lx.ident();
    if (kw == "near" || kw == "far") {
      pick.kind = kw == "near" ? Pick::Kind::Near : Pick::Kind::Far;
      pick.a = lx.ident();
    } else if (kw == "left" || kw == "right") {
      pick.kind = kw == "left" ? Pick::Kind::Left : Pick::Kind::Right;
      pick.a = lx.ident();
      pick.b = lx.ident();
    } else {
      lx.fail("unknown pick '" + kw + "'");
    }
    lx.expect("]");
    if (step.tool != ToolKind::Intersect) lx.fail("pick hints apply to intersect only");
    step.pick = std::move(pick);
  }
  lx.expect("->");
  step.outputs = lx.ident_list('\n');
  if (step.outputs.empty()) lx.fail("expected output identifier");
  if (!lx.at_end()) lx.fail("unexpected trailing input");

  const ToolInfo& info = tool_info(step.tool);
  if (step.args.size() != info.arity) {
    throw ArityMismatch("line " + std::to_string(line_no) + ": " + std::string(info.name) +
                        " expects " + std::to_string(info.arity) + " arguments, got " +
                        std::to_string(step.args.size()));
  }
  if (step.outputs.size() < info.min_outputs || step.outputs.size() > info.max_outputs) {
    throw ArityMismatch("line " + std::to_string(line_no) + ": " + std::string(info.name) +
                        " cannot bind " + std::to_string(step.outputs.size()) + " outputs");
  }
  if (step.pick && step.outputs.size() != 1) {
    throw SyntaxError(line_no, 1, "pick hint requires exactly one output");
  }
  return step;
}

}  // namespace detail

/// Parses canonical DSL text. Blank lines and `#` comments are ignored.
inline Program parse(std::string_view text) {
  Program program;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      program.steps.push_back(detail::parse_step(line, line_no));
    }
    start = end + 1;
  }
  return program;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string render_pick(const Pick& p) {
  switch (p.kind) {
    case Pick::Kind::Near: return "[near " + p.a + "]";
    case Pick::Kind::Far: return "[far " + p.a + "]";
    case Pick::Kind::Left: return "[left " + p.a + " " + p.b + "]";
    case Pick::Kind::Right: return "[right " + p.a + " " + p.b + "]";
  }
  return {};
}

namespace detail {

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline bool single_point_name(const std::string& s) {
  return s.size() == 1 && std::isupper(static_cast<unsigned char>(s[0]));
}

}  // namespace detail

inline std::string render_step(const Step& s) {
  std::string out(tool_name(s.tool));
  out += "(" + detail::join(s.args, ", ") + ")";
  if (s.pick) out += " " + render_pick(*s.pick);
  out += " -> " + detail::join(s.outputs, ", ");
  return out;
}

inline std::string render_canonical(const Program& p) {
  std::vector<std::string> lines;
  for (const auto& s : p.steps) lines.push_back(render_step(s));
  return detail::join(lines, "\n");
}

namespace detail {

/// "AB" for two single-letter points, otherwise "A and B".
inline std::string point_pair(const std::string& a, const std::string& b) {
  if (single_point_name(a) && single_point_name(b)) return a + b;
  return a + " and " + b;
}

inline std::string pick_phrase(const Pick& p) {
  switch (p.kind) {
    case Pick::Kind::Near: return " nearest to " + p.a;
    case Pick::Kind::Far: return " farthest from " + p.a;
    case Pick::Kind::Left: return " on the left of the direction from " + p.a + " to " + p.b;
    case Pick::Kind::Right: return " on the right of the direction from " + p.a + " to " + p.b;
  }
  return {};
}

inline std::string paper_sentence(const Step& s) {
  const auto& a = s.args;
  switch (s.tool) {
    case ToolKind::Line: return "Construct line " + point_pair(a[0], a[1]);
    case ToolKind::Ray: return "Construct the ray from " + a[0] + " through " + a[1];
    case ToolKind::Segment: return "Construct segment " + point_pair(a[0], a[1]);
    case ToolKind::Circle: return "Construct the circle with center " + a[0] + " and radius " + point_pair(a[0], a[1]);
    case ToolKind::Compass:
      return "Construct the circle with center " + a[0] + " and radius equal to " + point_pair(a[1], a[2]);
    case ToolKind::PerpBisector: return "Construct the perpendicular bisector of " + point_pair(a[0], a[1]);
    case ToolKind::Perpendicular: return "Construct the line perpendicular to " + a[0] + " through " + a[1];
    case ToolKind::Parallel: return "Construct the line parallel to " + a[0] + " through " + a[1];
    case ToolKind::AngleBisector:
      if (single_point_name(a[0]) && single_point_name(a[1]) && single_point_name(a[2])) {
        return "Construct the bisector of angle " + a[0] + a[1] + a[2];
      }
      return "Construct the bisector of the angle formed by " + a[0] + ", " + a[1] + " and " + a[2];
    case ToolKind::Intersect: {
      std::string out = s.outputs.size() == 2 ? "Mark the intersections of " : "Mark the intersection of ";
      out += a[0] + " and " + a[1];
      if (s.pick) out += pick_phrase(*s.pick);
      return out + " as " + join(s.outputs, " and ");
    }
    case ToolKind::PointOn: return "Mark an arbitrary point " + s.outputs[0] + " on " + a[0];
    case ToolKind::FreePoint: return "Mark an arbitrary point " + s.outputs[0];
  }
  return {};
}

}  // namespace detail

/// One "<Tool> Tool: ..." sentence per step. Non-point outputs are named in
/// the sentence when a later step refers to them.
inline std::string render_paper(const Program& p) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const Step& s = p.steps[i];
    std::string line = std::string(tool_info(s.tool).display) + ": " + detail::paper_sentence(s);
    if (!produces_point(s.tool)) {
      const std::string& out = s.outputs[0];
      bool referenced = false;
      for (std::size_t j = i + 1; j < p.steps.size() && !referenced; ++j) {
        const auto& later = p.steps[j];
        referenced = std::find(later.args.begin(), later.args.end(), out) != later.args.end();
      }
      if (referenced) line += " (named " + out + ")";
    }
    lines.push_back(line + ".");
  }
  return detail::join(lines, "\n");
}

// ---------------------------------------------------------------------------
// Static validation

struct Diagnostic {
  enum class Kind { UnboundIdentifier, Rebinding, ArityMismatch, BadPick };
  Kind kind;
  std::string identifier;
  std::size_t step;  // 1-based

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline std::string_view diagnostic_name(Diagnostic::Kind k) {
  switch (k) {
    case Diagnostic::Kind::UnboundIdentifier: return "UnboundIdentifier";
    case Diagnostic::Kind::Rebinding: return "Rebinding";
    case Diagnostic::Kind::ArityMismatch: return "ArityMismatch";
    case Diagnostic::Kind::BadPick: return "BadPick";
  }
  return "?";
}

inline std::vector<Diagnostic> static_validate(const Program& p, const std::set<std::string, std::less<>>& initial) {
  std::vector<Diagnostic> diags;
  std::set<std::string, std::less<>> bound = initial;
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const Step& s = p.steps[i];
    const ToolInfo& info = tool_info(s.tool);
    const std::size_t n = i + 1;
    if (s.args.size() != info.arity || s.outputs.size() < info.min_outputs ||
        s.outputs.size() > info.max_outputs) {
      diags.push_back({Diagnostic::Kind::ArityMismatch, std::string(info.name), n});
    }
    for (const auto& a : s.args) {
      if (!bound.contains(a)) diags.push_back({Diagnostic::Kind::UnboundIdentifier, a, n});
    }
    if (s.pick) {
      if (s.tool != ToolKind::Intersect || s.outputs.size() != 1) {
        diags.push_back({Diagnostic::Kind::BadPick, s.pick->a, n});
      }
      for (const auto* id : {&s.pick->a, &s.pick->b}) {
        if (!id->empty() && !bound.contains(*id)) {
          diags.push_back({Diagnostic::Kind::UnboundIdentifier, *id, n});
        }
      }
    }
    for (const auto& o : s.outputs) {
      if (!bound.insert(o).second) diags.push_back({Diagnostic::Kind::Rebinding, o, n});
    }
  }
  return diags;
}

// ---------------------------------------------------------------------------
// Renaming

using RenameMap = std::map<std::string, std::string, std::less<>>;

template <typename T>
struct Renamed {
  T value;
  RenameMap inverse;
};

namespace detail {

inline bool all_upper(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

inline std::string rename_token(std::string_view tok, const RenameMap& map) {
  if (auto it = map.find(tok); it != map.end()) return it->second;
  if (all_upper(tok) && tok.size() > 1) {
    std::string out;
    for (char c : tok) {
      auto it = map.find(std::string_view(&c, 1));
      out += it != map.end() ? it->second : std::string(1, c);
    }
    return out;
  }
  return std::string(tok);
}

inline void for_each_word(std::string_view text, auto&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto word_char = [&](std::size_t k) {
      const unsigned char c = static_cast<unsigned char>(text[k]);
      return std::isalnum(c) || c == '_';
    };
    if (!word_char(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && word_char(j)) ++j;
    fn(i, j);
    i = j;
  }
}

/// True when `name` already occurs among the given tokens, either as a whole
/// token or, for single capitals, as a letter of a point sequence.
inline bool occurs(std::string_view name, const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) {
    if (t == name) return true;
    if (name.size() == 1 && all_upper(name) && all_upper(t) && t.find(name[0]) != std::string::npos) return true;
  }
  return false;
}

inline RenameMap check_map(const RenameMap& map, const std::vector<std::string>& tokens) {
  RenameMap inverse;
  for (const auto& [from, to] : map) {
    if (!is_identifier(from) || !is_identifier(to)) {
      throw std::invalid_argument("rename: invalid identifier in map");
    }
    if (from == to) continue;
    if (all_upper(to) && to.size() > 1 && all_upper(from) && from.size() == 1) {
      throw CollisionError("rename: '" + from + "' -> '" + to + "' would merge into point sequences");
    }
    if (!inverse.emplace(to, from).second) {
      throw CollisionError("rename: map is not injective on '" + to + "'");
    }
    if (occurs(to, tokens)) throw CollisionError("rename: target name '" + to + "' already exists");
  }
  return inverse;
}

inline RenameMap effective(const RenameMap& map) {
  RenameMap out;
  for (const auto& [k, v] : map) {
    if (k != v) out.emplace(k, v);
  }
  return out;
}

}  // namespace detail

inline std::vector<std::string> program_identifiers(const Program& p) {
  std::vector<std::string> ids;
  for (const auto& s : p.steps) {
    ids.insert(ids.end(), s.args.begin(), s.args.end());
    ids.insert(ids.end(), s.outputs.begin(), s.outputs.end());
    if (s.pick) {
      ids.push_back(s.pick->a);
      if (!s.pick->b.empty()) ids.push_back(s.pick->b);
    }
  }
  return ids;
}

inline std::vector<std::string> text_words(std::string_view text) {
  std::vector<std::string> out;
  detail::for_each_word(text, [&](std::size_t i, std::size_t j) { out.emplace_back(text.substr(i, j - i)); });
  return out;
}

/// Renames identifiers. All-capital tokens are treated as point sequences and
/// renamed letter by letter ("AC" with C->X becomes "AX").
inline Program apply_rename(const Program& p, const RenameMap& map) {
  Program out = p;
  for (auto& s : out.steps) {
    for (auto& a : s.args) a = detail::rename_token(a, map);
    for (auto& o : s.outputs) o = detail::rename_token(o, map);
    if (s.pick) {
      s.pick->a = detail::rename_token(s.pick->a, map);
      if (!s.pick->b.empty()) s.pick->b = detail::rename_token(s.pick->b, map);
    }
  }
  return out;
}

inline std::string apply_rename(std::string_view text, const RenameMap& map) {
  std::string out;
  std::size_t last = 0;
  detail::for_each_word(text, [&](std::size_t i, std::size_t j) {
    out.append(text.substr(last, i - last));
    out += detail::rename_token(text.substr(i, j - i), map);
    last = j;
  });
  out.append(text.substr(last));
  return out;
}

inline Renamed<Program> rename_identifiers(const Program& p, const RenameMap& map) {
  const RenameMap m = detail::effective(map);
  RenameMap inverse = detail::check_map(m, program_identifiers(p));
  return {apply_rename(p, m), std::move(inverse)};
}

inline Renamed<std::string> rename_identifiers(std::string_view text, const RenameMap& map) {
  const RenameMap m = detail::effective(map);
  RenameMap inverse = detail::check_map(m, text_words(text));
  return {apply_rename(text, m), std::move(inverse)};
}

}  // namespace geocon
