#include <gtest/gtest.h>

#include "support.hpp"

using namespace geocon;

TEST(Parse, SingleStep) {
  const Program p = parse("perp_bisector(A, C) -> l1");
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.steps[0].tool, ToolKind::PerpBisector);
  EXPECT_EQ(p.steps[0].args, (std::vector<std::string>{"A", "C"}));
  EXPECT_EQ(p.steps[0].outputs, (std::vector<std::string>{"l1"}));
  EXPECT_FALSE(p.steps[0].pick);
}

TEST(Parse, PickHints) {
  const Program p = parse(
      "intersect(c1, c2) [near A] -> D\n"
      "intersect(c1, c2) [far A] -> E\n"
      "intersect(c1, c2) [left A B] -> F\n"
      "intersect(c1, c2) [right A B] -> G\n");
  ASSERT_EQ(p.size(), 4u);
  EXPECT_EQ(*p.steps[0].pick, (Pick{Pick::Kind::Near, "A", ""}));
  EXPECT_EQ(*p.steps[1].pick, (Pick{Pick::Kind::Far, "A", ""}));
  EXPECT_EQ(*p.steps[2].pick, (Pick{Pick::Kind::Left, "A", "B"}));
  EXPECT_EQ(*p.steps[3].pick, (Pick{Pick::Kind::Right, "A", "B"}));
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse("circle(A) -> c"), ArityMismatch);
  EXPECT_THROW(parse("spiral(A, B) -> s"), UnknownTool);
  EXPECT_THROW(parse("line(A, B) l"), SyntaxError);
  EXPECT_THROW(parse("circle(A, B) [near A] -> c"), SyntaxError);
  EXPECT_THROW(parse("intersect(a, b) -> P, Q, R"), ArityMismatch);
}

TEST(Parse, ReportsLocation) {
  try {
    parse("line(A, B) -> l\nline(A B) -> m");
    FAIL() << "expected a syntax error";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_GT(e.column(), 0u);
  }
}

TEST(Parse, CommentsAndBlankLines) {
  const Program p = parse("# setup\n\nline(A, B) -> l  # base\n");
  EXPECT_EQ(p.size(), 1u);
}

TEST(Render, CanonicalAndPaperStyle) {
  const Program p = parse("circle(A, B) -> c1");
  EXPECT_EQ(render_canonical(p), "circle(A, B) -> c1");
  EXPECT_EQ(render_paper(p), "Circle Tool: Construct the circle with center A and radius AB.");
  EXPECT_EQ(render_canonical(Program{}), "");
  EXPECT_EQ(render_paper(Program{}), "");
}

TEST(Render, RoundTripsEveryReference) {
  for (const auto& spec : support::bank().problems) {
    for (const auto& ref : spec.references) EXPECT_EQ(parse(render_canonical(ref)), ref) << spec.id;
  }
}

TEST(Render, RoundTripsRandomPrograms) {
  Rng rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    Program p;
    std::vector<std::string> names{"A", "B", "C"};
    const std::size_t len = 1 + rng.index(8);
    for (std::size_t i = 0; i < len; ++i) {
      Step s;
      s.tool = kAllTools[rng.index(kAllTools.size())];
      const auto& info = tool_info(s.tool);
      for (std::size_t a = 0; a < info.arity; ++a) s.args.push_back(names[rng.index(names.size())]);
      const std::size_t outs = info.min_outputs + rng.index(info.max_outputs - info.min_outputs + 1);
      for (std::size_t o = 0; o < outs; ++o) {
        s.outputs.push_back("v" + std::to_string(i) + "_" + std::to_string(o));
        names.push_back(s.outputs.back());
      }
      if (s.tool == ToolKind::Intersect && outs == 1 && rng.index(2) == 0) s.pick = Pick{Pick::Kind::Far, "A", ""};
      p.steps.push_back(s);
    }
    EXPECT_EQ(parse(render_canonical(p)), p);
  }
}

TEST(StaticValidate, Diagnostics) {
  const std::set<std::string, std::less<>> ab{"A", "B"};
  EXPECT_TRUE(static_validate(parse("line(A, B) -> l"), ab).empty());
  EXPECT_EQ(static_validate(parse("line(A, Z) -> l"), ab),
            (std::vector<Diagnostic>{{Diagnostic::Kind::UnboundIdentifier, "Z", 1}}));
  EXPECT_EQ(static_validate(parse("circle(A, B) -> A"), ab),
            (std::vector<Diagnostic>{{Diagnostic::Kind::Rebinding, "A", 1}}));
}

TEST(Extract, IntersectingClauseExpands) {
  const KnownNames known{{"A", true}, {"B", true}, {"C", true}, {"D", true}, {"AB", false}, {"CD", false}};
  const auto ex = extract(
      "Perpendicular Bisector Tool: Construct the perpendicular bisector of AC, intersecting AB at E and CD at F.",
      known);
  EXPECT_EQ(render_canonical(ex.program),
            "perp_bisector(A, C) -> auto1\n"
            "intersect(auto1, AB) -> E\n"
            "intersect(auto1, CD) -> F");
}

TEST(Extract, CircleWithCenterAndRadius) {
  const KnownNames known{{"O", true}, {"E", true}};
  const auto ex = extract("Circle Tool: Create a circle with center O and radius OE.", known);
  EXPECT_EQ(render_canonical(ex.program), "circle(O, E) -> auto1");
}

TEST(Extract, NothingToExtract) {
  EXPECT_THROW(extract("Thank you for your help!"), EmptyExtraction);
}

TEST(Extract, SkipsCommentaryLines) {
  const KnownNames known{{"A", true}, {"B", true}};
  const auto ex = extract("Let me think.\nLine Tool: Construct line AB.\nMove Tool: Move A.\n", known);
  EXPECT_EQ(ex.program.size(), 1u);
  EXPECT_FALSE(ex.skipped.empty());
}

TEST(Extract, NumberedToolPrefix) {
  const KnownNames known{{"A", true}, {"B", true}};
  const auto ex = extract("<Circle Tool> 1: Construct circle c with center A passing through B.", known);
  EXPECT_EQ(render_canonical(ex.program), "circle(A, B) -> c");
}

TEST(Extract, RecoversToolSequenceOfPaperRendering) {
  for (const auto& spec : support::bank().problems) {
    const auto names = scene_names(instantiate(spec, 0));
    for (const auto& ref : spec.references) {
      const auto ex = extract(render_paper(ref), names);
      EXPECT_EQ(tool_sequence(ex.program), tool_sequence(ref)) << spec.id << "\n" << render_paper(ref);
    }
  }
}

TEST(Rename, PointSequencesInStatements) {
  const std::string text = "Construct a point C on the line AB such that the length of AC is equal to 2.";
  const auto r = rename_identifiers(text, {{"C", "X"}});
  EXPECT_EQ(r.value, "Construct a point X on the line AB such that the length of AX is equal to 2.");
  EXPECT_EQ(rename_identifiers(r.value, r.inverse).value, text);
}

TEST(Rename, CollisionIsRejected) {
  EXPECT_THROW(rename_identifiers("Given C and D, construct E.", {{"C", "D"}}), CollisionError);
  EXPECT_THROW(rename_identifiers(parse("line(C, D) -> l"), {{"C", "D"}}), CollisionError);
}

TEST(Rename, ProgramsRoundTrip) {
  for (const auto& spec : support::bank().problems) {
    for (const auto& ref : spec.references) {
      const auto ids = program_identifiers(ref);
      const auto uses = [&](char c) {
        return std::any_of(ids.begin(), ids.end(), [&](const std::string& id) { return id.find(c) != std::string::npos; });
      };
      char free = 'Z';
      while (uses(free)) --free;
      const auto r = rename_identifiers(ref, {{"A", std::string(1, free)}});
      EXPECT_EQ(rename_identifiers(r.value, r.inverse).value, ref) << spec.id;
    }
  }
}
