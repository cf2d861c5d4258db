#include <gtest/gtest.h>

#include "support.hpp"

using namespace geocon;

namespace {

const char* kCcl = "circle(A, B) -> c1\ncircle(B, A) -> c2\nline(A, B) -> l";
const char* kCcil = "circle(A, B) -> c1\ncircle(B, A) -> c2\nintersect(c1, c2) -> P, Q\nline(P, Q) -> l";

}  // namespace

TEST(Lcs, LongestSharedBlock) {
  const auto bank = build_lcs_bank({parse(kCcl), parse(kCcil)});
  ASSERT_FALSE(bank.entries.empty());
  EXPECT_EQ(bank.entries[0].tools, (std::vector<ToolKind>{ToolKind::Circle, ToolKind::Circle}));
}

TEST(Lcs, IdenticalProgramsGiveOneEntry) {
  const auto bank = build_lcs_bank({parse(kCcl), parse(kCcl), parse(kCcl)});
  ASSERT_EQ(bank.entries.size(), 1u);
  EXPECT_EQ(bank.entries[0].tools.size(), 3u);
}

TEST(Lcs, NeedsTwoPrograms) {
  EXPECT_THROW(build_lcs_bank({parse(kCcl)}), InsufficientCorpus);
}

TEST(Lcs, SingletonBankAdaptsTheSequence) {
  const auto& spec = *support::bank().find("alpha-midpoint");
  const auto bank = build_lcs_bank({parse(kCcil), parse(kCcil)});
  const auto p = run_lcs(bank, spec, 3);
  ASSERT_TRUE(p);
  EXPECT_EQ(tool_sequence(*p), tool_sequence(parse(kCcil)));
  EXPECT_TRUE(execute(*p, instantiate(spec, 3)).ok());
}

TEST(Lcs, ImpossibleIntersectionDiscarded) {
  // A line never meets its own parallel, whichever points are drawn.
  const auto& spec = *support::bank().find("alpha-midpoint");
  const auto tmpl = parse("line(A, B) -> l\nparallel(l, C) -> q\nintersect(l, q) -> X");
  const auto bank = build_lcs_bank({tmpl, tmpl});
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_FALSE(run_lcs(bank, spec, seed)) << seed;
}

TEST(Lcs, Deterministic) {
  const auto corpus = reference_corpus(support::bank());
  const auto bank = build_lcs_bank(corpus);
  const auto& spec = *support::bank().find("beta-cut-rectangle");
  const auto a = run_lcs(bank, spec, 11), b = run_lcs(bank, spec, 11);
  ASSERT_EQ(a.has_value(), b.has_value());
  if (a) EXPECT_EQ(*a, *b);
}

TEST(NGram, CountsUnigrams) {
  const auto db = build_ngram_db({parse(kCcl)});
  EXPECT_EQ(db.of(1).at({ToolKind::Circle}), 2u);
  EXPECT_EQ(db.of(1).at({ToolKind::Line}), 1u);
  EXPECT_EQ(db.total(2), 2u);
  EXPECT_EQ(db.total(3), 1u);
  EXPECT_THROW(db.of(4), std::invalid_argument);
}

TEST(NGram, DrawsProportionalToCounts) {
  const auto db = build_ngram_db({parse(kCcl)});
  const auto& spec = *support::bank().find("alpha-midpoint");
  NGramOptions opt;
  opt.max_steps = 3;
  std::size_t circles = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 3000; ++seed) {
    const auto p = run_ngram(db, 1, spec, seed, opt);
    ASSERT_EQ(p.size(), 3u);
    for (const auto& s : p.steps) {
      circles += s.tool == ToolKind::Circle;
      ++total;
    }
  }
  EXPECT_NEAR(static_cast<double>(circles) / static_cast<double>(total), 2.0 / 3.0, 0.02);
  EXPECT_EQ(run_ngram(db, 1, spec, 5, opt), run_ngram(db, 1, spec, 5, opt));
}

TEST(NGram, TrigramTruncatedToBudget) {
  const auto db = build_ngram_db({parse(kCcil)});
  NGramOptions opt;
  opt.max_steps = 2;
  const auto p = run_ngram(db, 3, *support::bank().find("alpha-midpoint"), 0, opt);
  EXPECT_EQ(p.size(), 2u);
}

TEST(Memory, DecayWeights) {
  MemoryState m(0.5);
  m.add("A", ObjectKind::Point);
  m.age();
  m.add("B", ObjectKind::Point);
  m.age();
  m.add("C", ObjectKind::Point);
  ASSERT_EQ(m.vars().size(), 3u);
  EXPECT_DOUBLE_EQ(m.weight(m.vars()[0]), 0.25);
  EXPECT_DOUBLE_EQ(m.weight(m.vars()[1]), 0.5);
  EXPECT_DOUBLE_EQ(m.weight(m.vars()[2]), 1.0);
  EXPECT_THROW(MemoryState(1.0), std::invalid_argument);
}

TEST(Memory, DrawsFollowWeights) {
  MemoryState m(0.5);
  m.add("A", ObjectKind::Point);
  m.age();
  m.add("B", ObjectKind::Point);
  m.age();
  m.add("C", ObjectKind::Point);
  Rng rng(9);
  std::map<std::string, int> hits;
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++hits[m.draw({Slot::Point}, rng)[0]];
  EXPECT_NEAR(hits["A"] / double(n), 0.25 / 1.75, 0.01);
  EXPECT_NEAR(hits["B"] / double(n), 0.5 / 1.75, 0.01);
  EXPECT_NEAR(hits["C"] / double(n), 1.0 / 1.75, 0.01);
}

TEST(Memory, DrawsWithoutReplacement) {
  MemoryState m;
  m.add("A", ObjectKind::Point);
  m.add("B", ObjectKind::Point);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto d = m.draw({Slot::Point, Slot::Point}, rng);
    EXPECT_NE(d[0], d[1]);
  }
}

TEST(Baseline, SeededRerunsIdentical) {
  for (const char* m : {"lcs", "1gram", "2gram", "3gram"}) {
    const auto a = run_baseline(support::bank(), parse_method(m), 100, 42).to_json().dump();
    const auto b = run_baseline(support::bank(), parse_method(m), 100, 42).to_json().dump();
    EXPECT_EQ(a, b) << m;
  }
  EXPECT_THROW(parse_method("4gram"), std::invalid_argument);
}

TEST(Baseline, RatesOnBundledCorpus) {
  const double lcs = run_baseline(support::bank(), BaselineMethod::Lcs, 1000, 0).fully_correct_rate();
  const double one = run_baseline(support::bank(), BaselineMethod::OneGram, 1000, 0).fully_correct_rate();
  EXPECT_LE(lcs, 0.05);
  EXPECT_GE(one, 0.02);
  EXPECT_LE(one, 0.20);
}
