#include <gtest/gtest.h>

#include "support.hpp"

using namespace geocon;

namespace {

std::string bank_json(const std::string& problems) {
  return R"({"format_version": 1, "pack_order": ["Seed", "Alpha"], "problems": [)" + problems + "]}";
}

const char* kProblem = R"({
  "id": "p1", "pack": "Alpha", "title": "Midpoint",
  "statement": "Construct the midpoint M of AB.",
  "tools": ["line", "circle", "perp_bisector", "intersect"],
  "init": {"params": [{"name": "A", "kind": "point_in_box", "range": [0.1, 0.9]},
                      {"name": "B", "kind": "point_in_box", "range": [0.1, 0.9]}],
           "program": "segment(A, B) -> AB"},
  "references": ["perp_bisector(A, B) -> m\nintersect(m, AB) -> M"],
  "goals": ["M"], "target": "M"})";

double seg(const Scene& s, const char* a, const char* b) {
  return distance(std::get<Point>(s.find(a)->shape), std::get<Point>(s.find(b)->shape));
}

}  // namespace

TEST(Bank, LoadsBundledCorpus) {
  const Bank& b = support::bank();
  EXPECT_GE(b.problems.size(), 20u);
  EXPECT_EQ(b.seed_pack, "Seed");
  EXPECT_EQ(std::count_if(b.problems.begin(), b.problems.end(), [&](const ProblemSpec& p) { return b.is_seed(p); }), 5);
  for (const char* id : {"alpha-inscribe-circle", "beta-cut-rectangle", "delta-sqrt2", "gamma-lozenge"}) {
    EXPECT_NE(b.find(id), nullptr) << id;
  }
}

TEST(Bank, ParsesMinimalProblem) {
  const Bank b = parse_bank(bank_json(kProblem));
  ASSERT_EQ(b.problems.size(), 1u);
  EXPECT_EQ(b.problems[0].target, "M");
  EXPECT_EQ(b.problems[0].initial_labels(), (std::set<std::string, std::less<>>{"A", "B", "AB"}));
}

TEST(Bank, DuplicateIdRejected) {
  EXPECT_THROW(parse_bank(bank_json(std::string(kProblem) + "," + kProblem)), DuplicateId);
}

TEST(Bank, SchemaErrors) {
  std::string p = kProblem;
  const auto with = [&](const std::string& from, const std::string& to) {
    std::string q = p;
    q.replace(q.find(from), from.size(), to);
    return bank_json(q);
  };
  EXPECT_THROW(parse_bank(with(R"("tools": ["line", )", R"("tools": ["lasso", )")), SchemaError);
  EXPECT_THROW(parse_bank(with("intersect(m, AB) -> M", "intersect(m, XY) -> M")), SchemaError);
  EXPECT_THROW(parse_bank(with(R"("goals": ["M"])", R"("goals": ["N"])")), SchemaError);
  EXPECT_THROW(parse_bank(with(R"("target": "M")", R"("target": "Q")")), SchemaError);
  EXPECT_THROW(parse_bank(with(R"("pack": "Alpha")", R"("pack": "Omega")")), SchemaError);
  EXPECT_THROW(parse_bank(with(R"("tools": ["line", "circle", "perp_bisector", "intersect"])", R"("tools": ["line", "circle", "intersect"])")),
               SchemaError);
  EXPECT_THROW(parse_bank(with("intersect(m, AB) -> M", "intersect(m, AB) -> auto1")), SchemaError);
  EXPECT_THROW(parse_bank("{not json"), SchemaError);
}

TEST(Instantiate, DeterministicPerSeed) {
  for (const auto& spec : support::bank().problems) {
    const Scene a = instantiate(spec, 17), b = instantiate(spec, 17);
    ASSERT_EQ(a.size(), b.size()) << spec.id;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a.objects()[i].label, b.objects()[i].label);
      EXPECT_TRUE(a.objects()[i].shape == b.objects()[i].shape) << spec.id;
    }
  }
}

TEST(Instantiate, SeedsDiffer) {
  const auto& spec = *support::bank().find("alpha-midpoint");
  const auto a = std::get<Point>(instantiate(spec, 1).find("A")->shape);
  const auto b = std::get<Point>(instantiate(spec, 2).find("A")->shape);
  EXPECT_GT(distance(a, b), 1e-9);
}

TEST(Instantiate, FitsUnitBox) {
  for (const auto& spec : support::bank().problems) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      for (const Point& p : instantiate(spec, seed).points()) {
        EXPECT_GE(p.x, -1e-9) << spec.id;
        EXPECT_LE(p.x, 1 + 1e-9) << spec.id;
        EXPECT_GE(p.y, -1e-9) << spec.id;
        EXPECT_LE(p.y, 1 + 1e-9) << spec.id;
      }
    }
  }
}

TEST(Instantiate, HiddenHelpersDropped) {
  const Scene s = instantiate(*support::bank().find("beta-cut-rectangle"), 3);
  EXPECT_EQ(s.find("E1"), nullptr);
  EXPECT_NE(s.find("E"), nullptr);
}

TEST(Instantiate, RectangleKeepsLongerSide) {
  const auto& spec = *support::bank().find("alpha-rhombus-in-rectangle");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = instantiate(spec, seed);
    EXPECT_GT(seg(s, "A", "B"), seg(s, "A", "D"));
    EXPECT_NEAR(dot(std::get<Point>(s.find("B")->shape) - std::get<Point>(s.find("A")->shape),
                    std::get<Point>(s.find("D")->shape) - std::get<Point>(s.find("A")->shape)),
                0.0, 1e-9);
  }
}

TEST(Instantiate, SquareHasEqualSides) {
  const auto& spec = *support::bank().find("alpha-inscribe-circle");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = instantiate(spec, seed);
    const double ab = seg(s, "A", "B");
    EXPECT_NEAR(seg(s, "B", "C"), ab, 1e-9);
    EXPECT_NEAR(seg(s, "C", "D"), ab, 1e-9);
    EXPECT_NEAR(seg(s, "D", "A"), ab, 1e-9);
    EXPECT_NEAR(seg(s, "A", "C"), ab * std::sqrt(2.0), 1e-9);
  }
}

TEST(Instantiate, UnsatisfiableConstraint) {
  std::string p = kProblem;
  p.replace(p.find(R"("program")"), 9, R"("constraints": [{"kind": "longer", "a": "AB", "b": "AB"}], "program")");
  const Bank b = parse_bank(bank_json(p));
  EXPECT_THROW(instantiate(b.problems[0], 0), ConstraintUnsatisfiable);
}

TEST(KnowledgeBase, SeedsPlusEarlierPacks) {
  const Bank& b = support::bank();
  const auto count_pack = [&](const std::string& pack) {
    return static_cast<std::size_t>(
        std::count_if(b.problems.begin(), b.problems.end(), [&](const ProblemSpec& p) { return p.pack == pack; }));
  };
  const auto kb_alpha = knowledge_for(*b.find("alpha-midpoint"), b);
  EXPECT_EQ(kb_alpha.seeds.size(), 5u);
  EXPECT_EQ(kb_alpha.entries.size(), count_pack("Tutorial"));

  const auto kb_beta = knowledge_for(*b.find("beta-cut-rectangle"), b);
  EXPECT_EQ(kb_beta.entries.size(), count_pack("Tutorial") + count_pack("Alpha"));
  for (const auto& e : kb_beta.entries) EXPECT_NE(e.problem->pack, "Beta");

  const auto kb_seed = knowledge_for(*b.find("seed-bisect"), b);
  EXPECT_EQ(kb_seed.seeds.size(), 4u);
  EXPECT_TRUE(kb_seed.entries.empty());
}
