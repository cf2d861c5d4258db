#include <gtest/gtest.h>

#include "support.hpp"

using namespace geocon;

namespace {

const ProblemSpec& inscribe() { return *support::bank().find("alpha-inscribe-circle"); }

std::vector<AgentRole> roles(const Transcript& t) {
  std::vector<AgentRole> out;
  for (const auto& turn : t.turns) out.push_back(turn.role);
  return out;
}

std::size_t count_role(const Transcript& t, AgentRole r) {
  return static_cast<std::size_t>(
      std::count_if(t.turns.begin(), t.turns.end(), [&](const Turn& turn) { return turn.role == r; }));
}

}  // namespace

TEST(ParseVerdict, PartialApproval) {
  const Verdict v = parse_verdict(support::kGtVerdict);
  EXPECT_EQ(v.approved, (std::set<std::size_t>{1, 2, 3, 4, 5}));
  EXPECT_FALSE(v.global_revise);
  EXPECT_FALSE(v.approves_all(numbered_steps(support::kGtProposal)));
}

TEST(ParseVerdict, LenientForms) {
  EXPECT_EQ(parse_verdict("Step 1 - correct\n\\textless STEP\\textgreater 2: Correct.").approved,
            (std::set<std::size_t>{1, 2}));
  EXPECT_EQ(parse_verdict("<STEP> 3: Incorrect, use E.").approved, (std::set<std::size_t>{}));
}

TEST(ParseVerdict, EmptyReplyRevisesEverything) {
  const Verdict v = parse_verdict("");
  EXPECT_TRUE(v.global_revise);
  EXPECT_TRUE(v.approved.empty());
}

TEST(NumberedSteps, ToolPrefixedLines) {
  const auto steps = numbered_steps(support::kGtProposal);
  ASSERT_EQ(steps.size(), 6u);
  EXPECT_EQ(steps.at(6), "<Circle Tool> 6: Construct circle c with center O passing through A.");
}

TEST(FeedbackVerdict, WrongRadiusFlagsOnlyLastStep) {
  const Scene scene = instantiate(inscribe(), 0);
  const Verdict v = feedback_verdict(numbered_steps(support::kGtProposal), inscribe(), scene);
  EXPECT_EQ(v.approved, (std::set<std::size_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(v.text,
            "<STEP> 1: Correct.\n<STEP> 2: Correct.\n<STEP> 3: Correct.\n<STEP> 4: Correct.\n"
            "<STEP> 5: Correct.\n<STEP> 6: Incorrect.\n");
}

TEST(FeedbackVerdict, CorrectProgramApproved) {
  const Scene scene = instantiate(inscribe(), 0);
  const auto steps = merge_steps(numbered_steps(support::kGtProposal), numbered_steps(support::kGtRevision));
  EXPECT_TRUE(feedback_verdict(steps, inscribe(), scene).approves_all(steps));
}

TEST(Dialogue, TwoPhaseFlow) {
  ScriptedBackend snl({support::kNlProposal, support::kNlRevision}, "snl");
  ScriptedBackend vnl({support::kNlVerdict}, "vnl");
  ScriptedBackend sgt({support::kGtProposal, support::kGtRevision}, "sgt");
  ScriptedBackend vgt({support::kGtVerdict}, "vgt");
  const auto r = run_dialogue({ConfigKind::SV_NL_SV_GT, false, 5, 0.2}, inscribe(), support::plain_bundles(inscribe()),
                              {&snl, &sgt, &vnl, &vgt});
  EXPECT_EQ(roles(r.transcript), (std::vector<AgentRole>{AgentRole::SolverNL, AgentRole::ValidatorNL, AgentRole::SolverNL,
                                                         AgentRole::SolverGT, AgentRole::ValidatorGT, AgentRole::SolverGT}));
  EXPECT_EQ(r.transcript.status, DialogueStatus::Approved);
  EXPECT_LT(r.transcript.turns.back().round, 5u);
  ASSERT_TRUE(r.candidate);
  EXPECT_TRUE(verify(inscribe(), *r.candidate, 5, 0).fully_correct) << render_canonical(*r.candidate);
  EXPECT_EQ(snl.remaining() + vnl.remaining() + sgt.remaining() + vgt.remaining(), 0u);
  // The GT solver sees the NL rationale.
  EXPECT_NE(sgt.calls()[0].messages[0].content.find("Bisect AB perpendicularly"), std::string::npos);
}

TEST(Dialogue, RoundCap) {
  std::vector<std::string> proposals(5, support::kGtProposal);
  std::vector<std::string> verdicts(5, "<STEP> 1: Incorrect.\n");
  ScriptedBackend sgt(proposals, "sgt");
  ScriptedBackend vgt(verdicts, "vgt");
  const auto r = run_dialogue({ConfigKind::SV_GT, false, 5, 0.2}, inscribe(), support::plain_bundles(inscribe()),
                              {nullptr, &sgt, nullptr, &vgt});
  EXPECT_EQ(r.transcript.status, DialogueStatus::RoundCapReached);
  EXPECT_EQ(count_role(r.transcript, AgentRole::ValidatorGT), 5u);
  EXPECT_EQ(count_role(r.transcript, AgentRole::SolverGT), 5u);
  ASSERT_TRUE(r.candidate);
  EXPECT_FALSE(verify(inscribe(), *r.candidate, 5, 0).fully_correct);
}

TEST(Dialogue, SolverOnly) {
  ScriptedBackend sgt({support::kGtProposal}, "sgt");
  const auto r = run_dialogue({ConfigKind::S_GT, false, 5, 0.2}, inscribe(), support::plain_bundles(inscribe()),
                              {nullptr, &sgt, nullptr, nullptr});
  EXPECT_EQ(roles(r.transcript), (std::vector<AgentRole>{AgentRole::SolverGT}));
  ASSERT_TRUE(r.candidate);
}

TEST(Dialogue, FeedbackModeValidatesMechanically) {
  ScriptedBackend sgt({support::kGtProposal, support::kGtRevision}, "sgt");
  const auto r = run_dialogue({ConfigKind::SV_GT, true, 5, 0.2}, inscribe(), support::plain_bundles(inscribe()),
                              {nullptr, &sgt, nullptr, nullptr});
  ASSERT_GE(r.transcript.turns.size(), 2u);
  const auto& verdict = r.transcript.turns[1];
  EXPECT_EQ(verdict.role, AgentRole::ValidatorGT);
  EXPECT_EQ(verdict.reply.find("circumcircle"), std::string::npos);
  EXPECT_NE(verdict.reply.find("<STEP> 6: Incorrect."), std::string::npos);
  // Only correctness flags flow back to the solver.
  const std::string& revision_prompt = sgt.calls()[1].messages[0].content;
  EXPECT_EQ(revision_prompt.find("passing through E"), std::string::npos);
  ASSERT_TRUE(r.candidate);
  EXPECT_TRUE(verify(inscribe(), *r.candidate, 5, 0).fully_correct);
}

TEST(Dialogue, EmptyValidatorReplyAsksForFullRevision) {
  ScriptedBackend sgt({support::kGtProposal, support::kGtProposal}, "sgt");
  ScriptedBackend vgt({"", "<STEP> 1: Correct."}, "vgt");
  const auto r = run_dialogue({ConfigKind::SV_GT, false, 5, 0.2}, inscribe(), support::plain_bundles(inscribe()),
                              {nullptr, &sgt, nullptr, &vgt});
  EXPECT_EQ(count_role(r.transcript, AgentRole::ValidatorGT), 2u);
}

TEST(Dialogue, RenamedTargetMapsBack) {
  const auto& spec = *support::bank().find("alpha-midpoint");
  ScriptedBackend sgt({"Perpendicular Bisector Tool: Construct the perpendicular bisector of AB, intersecting AB at X."});
  const auto r = run_dialogue({ConfigKind::S_GT, false, 5, 0.2}, spec, support::plain_bundles(spec, RenamePolicy::x()),
                              {nullptr, &sgt, nullptr, nullptr});
  ASSERT_TRUE(r.candidate);
  EXPECT_NE(sgt.calls()[0].messages[0].content.find("midpoint X"), std::string::npos);
  EXPECT_TRUE(verify(spec, *r.candidate, 5, 0).fully_correct) << render_canonical(*r.candidate);
}

TEST(Dialogue, NothingExtractableLeavesNoCandidate) {
  ScriptedBackend sgt({"I am not sure how to do this."});
  const auto r = run_dialogue({ConfigKind::S_GT, false, 5, 0.2}, inscribe(), support::plain_bundles(inscribe()),
                              {nullptr, &sgt, nullptr, nullptr});
  EXPECT_FALSE(r.candidate);
  EXPECT_TRUE(r.transcript.error);
}

TEST(Sample, FiftyDeterministicTranscripts) {
  const auto factory = [](std::uint64_t) {
    OwnedBackends o;
    o.solver_gt = std::make_unique<ScriptedBackend>(std::vector<std::string>{support::kGtProposal, support::kGtRevision});
    o.validator_gt = std::make_unique<ScriptedBackend>(std::vector<std::string>{support::kGtVerdict});
    return o;
  };
  const Configuration cfg{ConfigKind::SV_GT, false, 5, 0.6};
  const auto a = sample_candidates(cfg, inscribe(), 50, 100, support::plain_bundles(inscribe()), factory);
  const auto b = sample_candidates(cfg, inscribe(), 50, 100, support::plain_bundles(inscribe()), factory);
  ASSERT_EQ(a.transcripts.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(a.transcripts[i].to_jsonl(), b.transcripts[i].to_jsonl());
  EXPECT_EQ(a.backend_errors, 0u);
}

TEST(Sample, TemperatureRecorded) {
  const auto factory = [](std::uint64_t) {
    OwnedBackends o;
    o.solver_gt = std::make_unique<ScriptedBackend>(std::vector<std::string>{support::kGtProposal});
    return o;
  };
  const auto s = sample_candidates({ConfigKind::S_GT, false, 5, 0.2}, inscribe(), 1, 0, support::plain_bundles(inscribe()),
                                   factory);
  ASSERT_EQ(s.candidates.size(), 1u);
  EXPECT_DOUBLE_EQ(s.transcripts[0].temperature, 0.2);
  EXPECT_NE(s.transcripts[0].to_jsonl().find("\"temperature\":0.2"), std::string::npos);
}

TEST(Sample, FailedCallKeepsSlot) {
  std::size_t calls = 0;
  const auto factory = [&calls](std::uint64_t) {
    OwnedBackends o;
    auto b = std::make_unique<ScriptedBackend>(std::vector<std::string>{support::kGtProposal});
    if (++calls == 2) b->fail_on_call(1);
    o.solver_gt = std::move(b);
    return o;
  };
  const auto s = sample_candidates({ConfigKind::S_GT, false, 5, 0.2}, inscribe(), 3, 0, support::plain_bundles(inscribe()),
                                   factory);
  ASSERT_EQ(s.candidates.size(), 3u);
  EXPECT_TRUE(s.candidates[0]);
  EXPECT_FALSE(s.candidates[1]);
  EXPECT_TRUE(s.candidates[2]);
  EXPECT_EQ(s.backend_errors, 1u);
  EXPECT_EQ(s.transcripts[1].status, DialogueStatus::BackendError);
}
