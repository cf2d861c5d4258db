#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "geocon/dsl.hpp"

namespace geocon {

class EmptyExtraction : public Error {
 public:
  using Error::Error;
};

/// Names already present before the extracted steps run, flagged as points or not.
using KnownNames = std::map<std::string, bool, std::less<>>;

struct SkippedLine {
  std::size_t line;  // 1-based
  std::string text;
  std::string reason;
};

struct Extraction {
  Program program;
  std::vector<SkippedLine> skipped;
};

namespace detail {

struct ToolPrefix {
  std::string name;  // lower-cased tool words
  std::string body;
};

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Recognizes "Circle Tool: ...", "<Circle Tool> 3: ...", "Circle Tool 3: ...", "Circle: ...".
inline std::optional<ToolPrefix> split_prefix(const std::string& line) {
  static const std::regex re(
      R"(^\s*(?:[-*]\s*)?(?:\d+[.)]\s*)?(?:\\textless\s*|<)?\s*([A-Za-z][A-Za-z ]*?)\s*(?:\\textgreater|>)?\s*(\d+)?\s*:\s*(.*)$)");
  std::smatch m;
  if (!std::regex_match(line, m, re)) return std::nullopt;
  std::string name = lower(m[1].str());
  if (name.size() > 5 && name.ends_with(" tool")) name.resize(name.size() - 5);
  return ToolPrefix{name, m[3].str()};
}

enum class ToolFamily { Known, Point, Move, Unknown };

inline ToolFamily classify_tool(const std::string& name, ToolKind& out) {
  static const std::map<std::string, ToolKind, std::less<>> table = {
      {"line", ToolKind::Line},
      {"ray", ToolKind::Ray},
      {"segment", ToolKind::Segment},
      {"line segment", ToolKind::Segment},
      {"circle", ToolKind::Circle},
      {"compass", ToolKind::Compass},
      {"perpendicular bisector", ToolKind::PerpBisector},
      {"perpendicular", ToolKind::Perpendicular},
      {"parallel", ToolKind::Parallel},
      {"angle bisector", ToolKind::AngleBisector},
      {"intersect", ToolKind::Intersect},
      {"intersection", ToolKind::Intersect},
  };
  if (auto it = table.find(name); it != table.end()) {
    out = it->second;
    return ToolFamily::Known;
  }
  if (name == "point") return ToolFamily::Point;
  if (name == "move") return ToolFamily::Move;
  return ToolFamily::Unknown;
}

inline bool is_point_word(std::string_view w) {
  // "P", "P1", "A_2": one capital followed by digits/underscores.
  if (w.empty() || !std::isupper(static_cast<unsigned char>(w[0]))) return false;
  return std::all_of(w.begin() + 1, w.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '_';
  });
}

struct BoundInfo {
  bool is_point = false;
  bool is_circle = false;
  bool is_linear = false;
  std::optional<ToolKind> producer;
  std::string center;
  std::set<std::string> incident;  // points known to lie on a linear object
  std::size_t order = 0;
};

struct Ref {
  enum class Kind { Point, Object, Sequence };
  Kind kind;
  std::string name;
  std::size_t pos;
};

class Extractor {
 public:
  Extractor(std::string_view text, const KnownNames& known) {
    for (const auto& w : text_words(text)) taken_.insert(w);
    for (const auto& [name, is_point] : known) {
      taken_.insert(name);
      BoundInfo info;
      info.is_point = is_point;
      info.is_linear = !is_point && name.size() == 2 && all_upper(name);
      if (info.is_linear) info.incident = {name.substr(0, 1), name.substr(1, 1)};
      info.order = 0;
      bound_[name] = info;
    }
  }

  Extraction run(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      ++line_no;
      handle_line(trim(text.substr(start, end - start)), line_no);
      start = end + 1;
    }
    if (result_.program.empty()) throw EmptyExtraction("no construction step found");
    return std::move(result_);
  }

 private:
  void skip(std::size_t line_no, const std::string& line, std::string reason) {
    result_.skipped.push_back({line_no, line, std::move(reason)});
  }

  void handle_line(const std::string& line, std::size_t line_no) {
    if (line.empty()) return;
    const auto prefix = split_prefix(line);
    if (!prefix) return skip(line_no, line, "no tool prefix");
    ToolKind tool{};
    const ToolFamily family = classify_tool(prefix->name, tool);
    if (family == ToolFamily::Unknown) return skip(line_no, line, "unknown tool '" + prefix->name + "'");
    if (family == ToolFamily::Move) return skip(line_no, line, "move tool has no construction effect");

    std::string body = prefix->body;
    while (!body.empty() && (body.back() == '.' || body.back() == ' ')) body.pop_back();

    std::vector<Step> steps;
    std::string error;
    if (family == ToolFamily::Point) {
      error = point_step(body, steps);
    } else if (tool == ToolKind::Intersect) {
      error = intersect_step(body, steps);
    } else {
      error = construction_step(tool, body, steps);
    }
    if (!error.empty()) return skip(line_no, line, error);
    for (auto& s : steps) commit(std::move(s));
  }

  // --- naming -------------------------------------------------------------

  std::string fresh() {
    for (;;) {
      std::string name = std::string(kReservedPrefix) + std::to_string(++auto_counter_);
      if (!taken_.contains(name) && !bound_.contains(name)) {
        taken_.insert(name);
        return name;
      }
    }
  }

  void commit(Step s) {
    ++order_;
    for (const auto& out : s.outputs) {
      BoundInfo info;
      info.is_point = produces_point(s.tool);
      info.is_circle = produces_circle(s.tool);
      info.is_linear = produces_linear(s.tool);
      info.producer = s.tool;
      info.order = order_;
      if (info.is_circle) info.center = s.args[0];
      if (s.tool == ToolKind::Line || s.tool == ToolKind::Ray || s.tool == ToolKind::Segment) {
        info.incident = {s.args[0], s.args[1]};
      } else if (s.tool == ToolKind::Perpendicular || s.tool == ToolKind::Parallel) {
        info.incident = {s.args[1]};
      } else if (s.tool == ToolKind::AngleBisector) {
        info.incident = {s.args[1]};
      }
      bound_[out] = std::move(info);
      if (s.tool == ToolKind::Line || s.tool == ToolKind::Ray || s.tool == ToolKind::Segment) {
        for (const auto& alias : {s.args[0] + s.args[1], s.args[1] + s.args[0]}) {
          if (!bound_.contains(alias) && single_point_name(s.args[0]) && single_point_name(s.args[1])) {
            aliases_[alias] = out;
          }
        }
      }
    }
    if (s.tool == ToolKind::Intersect || s.tool == ToolKind::PointOn) {
      for (const auto& arg : s.args) {
        auto it = bound_.find(arg);
        if (it != bound_.end() && it->second.is_linear) {
          for (const auto& o : s.outputs) it->second.incident.insert(o);
        }
      }
    }
    result_.program.steps.push_back(std::move(s));
  }

  // --- reference resolution ---------------------------------------------------

  std::optional<std::string> latest(auto&& pred) const {
    std::optional<std::string> best;
    std::size_t best_order = 0;
    for (const auto& [name, info] : bound_) {
      if (info.order > 0 && pred(info) && info.order >= best_order) {
        best = name;
        best_order = info.order;
      }
    }
    return best;
  }

  std::vector<std::string> latest_n(auto&& pred, std::size_t n) const {
    std::vector<std::pair<std::size_t, std::string>> hits;
    for (const auto& [name, info] : bound_) {
      if (info.order > 0 && pred(info)) hits.emplace_back(info.order, name);
    }
    std::sort(hits.begin(), hits.end());
    std::vector<std::string> out;
    for (std::size_t i = hits.size() > n ? hits.size() - n : 0; i < hits.size(); ++i) out.push_back(hits[i].second);
    return out;
  }

  /// Object named by a two-capital token such as "AB": alias, known side, or
  /// the most recent linear object through both points.
  std::string resolve_pair(const std::string& tok) const {
    if (auto it = aliases_.find(tok); it != aliases_.end()) return it->second;
    if (auto it = bound_.find(tok); it != bound_.end() && !it->second.is_point) return tok;
    const std::string a = tok.substr(0, 1), b = tok.substr(1, 1);
    if (auto hit = latest([&](const BoundInfo& i) { return i.is_linear && i.incident.contains(a) && i.incident.contains(b); })) {
      return *hit;
    }
    return tok;
  }

  /// Object references expressed as phrases ("the bisector", "the two circles").
  void phrase_refs(const std::string& body, std::vector<Ref>& refs, std::vector<std::pair<std::size_t, std::size_t>>& spans) const {
    struct Rule {
      std::regex re;
      int kind;
    };
    static const std::vector<Rule> rules = [] {
      const auto f = std::regex::icase | std::regex::ECMAScript;
      return std::vector<Rule>{
          {std::regex(R"(\bthe two circles\b)", f), 0},
          {std::regex(R"(\b(?:the )?circle (?:centered at|centred at|with center|with centre|around) ([A-Z][0-9_]*)\b)", f), 1},
          {std::regex(R"(\bcircle ([A-Z][0-9_]*)\b(?! and radius))", f), 1},
          {std::regex(R"(\b(?:the|that) perpendicular bisector\b)", f), 2},
          {std::regex(R"(\b(?:the|that) angle bisector\b)", f), 3},
          {std::regex(R"(\b(?:the|that) bisector\b)", f), 4},
          {std::regex(R"(\b(?:the|that) (?:line )?perpendicular\b(?! to| bisector))", f), 5},
          {std::regex(R"(\b(?:the|that) (?:line )?parallel\b(?! to))", f), 6},
          {std::regex(R"(\b(?:the|that) circle\b)", f), 7},
      };
    }();
    for (const auto& rule : rules) {
      for (auto it = std::sregex_iterator(body.begin(), body.end(), rule.re); it != std::sregex_iterator(); ++it) {
        const std::size_t b = static_cast<std::size_t>(it->position(0));
        const std::size_t e = b + static_cast<std::size_t>(it->length(0));
        const bool overlaps = std::any_of(spans.begin(), spans.end(), [&](auto sp) { return b < sp.second && sp.first < e; });
        if (overlaps) continue;
        std::vector<std::string> hits;
        switch (rule.kind) {
          case 0: hits = latest_n([](const BoundInfo& i) { return i.is_circle; }, 2); if (hits.size() < 2) hits.clear(); break;
          case 1: {
            const std::string c = (*it)[1].str();
            if (auto h = latest([&](const BoundInfo& i) { return i.is_circle && i.center == c; })) hits = {*h};
            break;
          }
          case 2: if (auto h = latest([](const BoundInfo& i) { return i.producer == ToolKind::PerpBisector; })) hits = {*h}; break;
          case 3: if (auto h = latest([](const BoundInfo& i) { return i.producer == ToolKind::AngleBisector; })) hits = {*h}; break;
          case 4:
            if (auto h = latest([](const BoundInfo& i) {
                  return i.producer == ToolKind::PerpBisector || i.producer == ToolKind::AngleBisector;
                })) hits = {*h};
            break;
          case 5: if (auto h = latest([](const BoundInfo& i) { return i.producer == ToolKind::Perpendicular; })) hits = {*h}; break;
          case 6: if (auto h = latest([](const BoundInfo& i) { return i.producer == ToolKind::Parallel; })) hits = {*h}; break;
          case 7: if (auto h = latest([](const BoundInfo& i) { return i.is_circle; })) hits = {*h}; break;
        }
        if (hits.empty()) continue;
        spans.emplace_back(b, e);
        for (auto& h : hits) refs.push_back({Ref::Kind::Object, h, b});
      }
    }
  }

  /// Identifier-like references in textual order; phrase references win over
  /// the words they cover.
  std::vector<Ref> references(const std::string& body, bool with_phrases) const {
    std::vector<Ref> refs;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    if (with_phrases) phrase_refs(body, refs, spans);
    for_each_word(body, [&](std::size_t i, std::size_t j) {
      for (auto sp : spans) {
        if (i >= sp.first && j <= sp.second) return;
      }
      const std::string w = body.substr(i, j - i);
      if (w == "A" && is_article(body, i, j)) return;
      if (auto it = bound_.find(w); it != bound_.end()) {
        if (it->second.is_point) {
          refs.push_back({Ref::Kind::Point, w, i});
        } else {
          refs.push_back({all_upper(w) ? Ref::Kind::Sequence : Ref::Kind::Object, w, i});
        }
        return;
      }
      if (aliases_.contains(w)) {
        refs.push_back({Ref::Kind::Sequence, w, i});
        return;
      }
      if (is_point_word(w)) {
        refs.push_back({Ref::Kind::Point, w, i});
      } else if (all_upper(w)) {
        refs.push_back({Ref::Kind::Sequence, w, i});
      }
    });
    std::stable_sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) { return a.pos < b.pos; });
    return refs;
  }

  static bool is_article(const std::string& body, std::size_t i, std::size_t j) {
    std::size_t k = j;
    while (k < body.size() && body[k] == ' ') ++k;
    if (k == j || k >= body.size() || !std::islower(static_cast<unsigned char>(body[k]))) return false;
    std::size_t p = i;
    while (p > 0 && body[p - 1] == ' ') --p;
    return p == 0 || body[p - 1] == '.' || body[p - 1] == ':' || body[p - 1] == ',';
  }

  static std::vector<std::string> point_args(const std::vector<Ref>& refs) {
    std::vector<std::string> pts;
    for (const auto& r : refs) {
      if (r.kind == Ref::Kind::Point) {
        pts.push_back(r.name);
      } else if (r.kind == Ref::Kind::Sequence) {
        for (char c : r.name) pts.emplace_back(1, c);
      }
    }
    return pts;
  }

  static std::vector<std::string> dedupe(const std::vector<std::string>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) {
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    return out;
  }

  std::string object_name(const Ref& r) const {
    if (r.kind == Ref::Kind::Sequence && r.name.size() == 2) return resolve_pair(r.name);
    return r.name;
  }

  std::vector<std::string> object_args(const std::vector<Ref>& refs) const {
    std::vector<std::string> out;
    for (const auto& r : refs) {
      if (r.kind == Ref::Kind::Object || (r.kind == Ref::Kind::Sequence && r.name.size() == 2)) {
        out.push_back(object_name(r));
      }
    }
    return out;
  }

  // --- per-family step builders -----------------------------------------------

  static std::optional<std::string> take(std::string& body, const std::regex& re, std::smatch* out = nullptr) {
    std::smatch m;
    if (!std::regex_search(body, m, re)) return std::nullopt;
    std::string first = m.size() > 1 ? m[1].str() : m[0].str();
    if (out) *out = m;
    body = m.prefix().str() + " " + m.suffix().str();
    return first;
  }

  /// Lower-case label written right after the object noun, as in "circle c
  /// with center O" or "perpendicular bisector m of AB". Removed from `body`.
  std::string inline_name(std::string& body) const {
    static const std::regex noun(R"(\b(?:circle|line|ray|segment|bisector|perpendicular|parallel)(?:\s+bisector)?\s+([a-z][A-Za-z0-9_]*)\b)",
                                 std::regex::icase);
    static const std::set<std::string, std::less<>> words = {
        "with", "of", "through", "at", "from", "to", "passing", "that", "which", "and", "on", "centered",
        "between", "tool", "bisector", "perpendicular", "parallel", "is", "in", "by", "using", "whose", "joining",
        "connecting", "for", "as", "the", "a", "an", "segment", "line", "ray", "circle", "about", "around"};
    for (auto it = std::sregex_iterator(body.begin(), body.end(), noun); it != std::sregex_iterator(); ++it) {
      const std::string n = (*it)[1].str();
        if (!std::islower(static_cast<unsigned char>(n[0]))) continue;
      if (words.contains(lower(n)) || bound_.contains(n) || is_reserved(n)) continue;
      const auto at = static_cast<std::size_t>(it->position(1));
      body = body.substr(0, at) + body.substr(at + n.size());
      return n;
    }
    return {};
  }

  std::string construction_step(ToolKind tool, std::string body, std::vector<Step>& steps) {
    static const std::regex named(R"(\((?:named|called)\s+([A-Za-z][A-Za-z0-9_]*)\))");
    static const std::regex clause(R"(,?\s*\bintersect(?:ing|s)\b)", std::regex::icase);
    static const std::regex hit(R"(([A-Za-z][A-Za-z0-9_]*)\s+at\s+(?:point\s+)?([A-Z][A-Za-z0-9_]*))");

    std::string name;
    if (auto n = take(body, named)) name = *n;
    if (name.empty()) name = inline_name(body);

    std::string clauses;
    std::smatch cm;
    if (std::regex_search(body, cm, clause)) {
      clauses = cm.suffix().str();
      body = cm.prefix().str();
    }

    const bool mixed = tool == ToolKind::Perpendicular || tool == ToolKind::Parallel;
    const auto refs = references(body, mixed);
    Step step;
    step.tool = tool;
    if (mixed) {
      std::optional<std::string> base, through;
      for (const auto& r : refs) {
        if (!base && (r.kind == Ref::Kind::Object || (r.kind == Ref::Kind::Sequence && r.name.size() == 2))) {
          base = object_name(r);
        } else if (!through && r.kind == Ref::Kind::Point) {
          through = r.name;
        }
      }
      if (!base || !through) return "could not identify base object and point";
      step.args = {*base, *through};
    } else {
      const auto raw = point_args(refs);
      if (tool == ToolKind::Line && name.empty() && clauses.empty()) {
        std::vector<std::string> pairs;
        for (const auto& r : refs) {
          if (r.kind == Ref::Kind::Sequence && r.name.size() == 2) pairs.push_back(r.name);
        }
        if (pairs.size() >= 2 && pairs.size() == refs.size()) {
          for (const auto& p : pairs) {
            steps.push_back({ToolKind::Line, {p.substr(0, 1), p.substr(1, 1)}, {fresh()}, std::nullopt});
          }
          return {};
        }
      }
      std::vector<std::string> args = tool == ToolKind::Compass ? raw : dedupe(raw);
      if (tool == ToolKind::Circle && args.size() == 3) step.tool = ToolKind::Compass;
      if (args.size() != tool_info(step.tool).arity) return "could not determine the arguments";
      step.args = std::move(args);
    }
    step.outputs = {name.empty() ? fresh() : name};
    const std::string out = step.outputs[0];
    steps.push_back(std::move(step));

    for (auto it = std::sregex_iterator(clauses.begin(), clauses.end(), hit); it != std::sregex_iterator(); ++it) {
      const std::string target = (*it)[1].str();
      const std::string point = (*it)[2].str();
      const std::string obj = target.size() == 2 && all_upper(target) ? resolve_pair(target) : target;
      steps.push_back({ToolKind::Intersect, {out, obj}, {point}, std::nullopt});
    }
    return {};
  }

  std::optional<Pick> take_pick(std::string& body) const {
    static const std::regex near_re(R"(\b(?:nearest|closest|nearer|closer)\s+to\s+(?:point\s+)?([A-Za-z][A-Za-z0-9_]*))", std::regex::icase);
    static const std::regex far_re(R"(\b(?:farthest|furthest)\s+from\s+(?:point\s+)?([A-Za-z][A-Za-z0-9_]*))", std::regex::icase);
    static const std::regex opp_re(R"(\bon the (?:side|other side) of \S+ opposite (?:from|to)\s+([A-Za-z][A-Za-z0-9_]*))", std::regex::icase);
    static const std::regex side_re(R"(\bon the (left|right) of the direction from ([A-Za-z][A-Za-z0-9_]*) to ([A-Za-z][A-Za-z0-9_]*))", std::regex::icase);
    std::smatch m;
    if (auto a = take(body, near_re)) return Pick{Pick::Kind::Near, *a, {}};
    if (auto a = take(body, far_re)) return Pick{Pick::Kind::Far, *a, {}};
    if (auto a = take(body, opp_re)) return Pick{Pick::Kind::Far, *a, {}};
    if (auto a = take(body, side_re, &m)) {
      return Pick{lower(*a) == "left" ? Pick::Kind::Left : Pick::Kind::Right, m[2].str(), m[3].str()};
    }
    return std::nullopt;
  }

  std::string intersect_step(std::string body, std::vector<Step>& steps) {
    static const std::regex as_re(R"(\b(?:as|call(?:ed)?(?: (?:it|them))?|label(?:led)?(?: (?:it|them))?)\s+(?:points?\s+)?([A-Z][A-Za-z0-9_]*)(?:\s*(?:,|and)\s*(?:point\s+)?([A-Z][A-Za-z0-9_]*))?)");
    static const std::regex at_re(R"(\bat\s+(?:points?\s+)?([A-Z][A-Za-z0-9_]*)(?:\s*(?:,|and)\s*(?:point\s+)?([A-Z][A-Za-z0-9_]*))?\s*$)");
    static const std::regex of_re(R"(\bpoints?\s+([A-Z][A-Za-z0-9_]*)(?:\s*(?:,|and)\s*([A-Z][A-Za-z0-9_]*))?\s+(?:of|between)\b)");
    Step step;
    step.tool = ToolKind::Intersect;
    step.pick = take_pick(body);
    std::smatch m;
    if (take(body, as_re, &m) || take(body, at_re, &m) || take(body, of_re, &m)) {
      step.outputs.push_back(m[1].str());
      if (m[2].matched) step.outputs.push_back(m[2].str());
    }
    const auto refs = references(body, true);
    auto objs = object_args(refs);
    if (objs.size() < 2) return "could not identify two objects to intersect";
    objs.resize(2);
    step.args = std::move(objs);
    if (step.outputs.empty()) step.outputs.push_back(fresh());
    if (step.outputs.size() == 2) step.pick.reset();
    steps.push_back(std::move(step));
    return {};
  }

  std::string point_step(std::string body, std::vector<Step>& steps) {
    const auto refs = references(body, true);
    std::optional<std::string> out, on;
    for (const auto& r : refs) {
      if (!out && r.kind == Ref::Kind::Point && !bound_.contains(r.name)) {
        out = r.name;
      } else if (!on && (r.kind == Ref::Kind::Object || (r.kind == Ref::Kind::Sequence && r.name.size() == 2))) {
        on = object_name(r);
      }
    }
    Step step;
    step.outputs = {out ? *out : fresh()};
    if (on) {
      step.tool = ToolKind::PointOn;
      step.args = {*on};
    } else {
      step.tool = ToolKind::FreePoint;
    }
    steps.push_back(std::move(step));
    return {};
  }

  std::map<std::string, BoundInfo, std::less<>> bound_;
  std::map<std::string, std::string, std::less<>> aliases_;
  std::set<std::string, std::less<>> taken_;
  std::size_t auto_counter_ = 0;
  std::size_t order_ = 0;
  Extraction result_;
};

}  // namespace detail

/// Best-effort conversion of "<Tool> Tool: ..." step text into a program.
/// Lines that do not describe a step are skipped and reported.
inline Extraction extract(std::string_view text, const KnownNames& known = {}) {
  return detail::Extractor(text, known).run(text);
}

}  // namespace geocon
