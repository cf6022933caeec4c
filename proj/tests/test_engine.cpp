#include <gtest/gtest.h>

#include "bottomup/engine.hpp"
#include "bottomup/envs/bandit.hpp"
#include "bottomup/envs/registry.hpp"
#include "bottomup/scripted_oracle.hpp"

using namespace bottomup;

namespace {

/// Reasoner with fixed answers, for isolating engine rules.
class FixedReasoner : public Reasoner {
 public:
  std::vector<SkillId> selected;
  double semantics = 0.0;
  std::vector<std::vector<SkillId>> groups;

  std::vector<SkillId> select(const ObservationDigest&, const std::vector<SkillSummary>& lib) override {
    std::vector<SkillId> out;
    for (const auto& id : selected) {
      if (std::any_of(lib.begin(), lib.end(), [&](const auto& s) { return s.id == id; })) out.push_back(id);
    }
    return out;
  }
  std::string describe(const Observation&, const Skill& s, const Trajectory&, const Legend&) override {
    return "routine " + s.id;
  }
  double differ(const Skill&, const Observation&, const Observation&, ProgressDelta) override { return semantics; }
  std::optional<Skill> refine(const Observation&, const Skill&, const Trajectory&, const IdSource&) override {
    return std::nullopt;
  }
  std::vector<std::vector<SkillId>> cluster(const std::vector<SkillSummary>&) override { return groups; }
  ReasonerUsage usage() const override { return {}; }
};

constexpr Point kEndTurn{22, 13};

Skill described(const std::string& id, std::vector<AtomicAction> actions, const std::string& text) {
  Skill s = make_skill(id, std::move(actions));
  s.descriptor = text;
  s.embedding = embed(text);
  return s;
}

void record_n(LibraryStore& lib, const SkillId& id, std::initializer_list<double> values) {
  for (double v : values) lib.record_execution(id, true, v);
}

}  // namespace

TEST(Rates, PruningRate) {
  EXPECT_DOUBLE_EQ(pruning_rate(5, 16), 31.25);
  EXPECT_DOUBLE_EQ(pruning_rate(1, 60), 1.67);
  EXPECT_DOUBLE_EQ(pruning_rate(1, 16), 6.25);
  EXPECT_DOUBLE_EQ(pruning_rate(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(pruning_rate(2, 0), 200.0);
}

TEST(Rates, ResponsiveRate) {
  auto log = [](int yes, int no) {
    std::vector<StepOutcome> out(static_cast<std::size_t>(yes + no));
    for (int i = 0; i < yes; ++i) out[static_cast<std::size_t>(i)].responsive = true;
    return out;
  };
  EXPECT_EQ(responsive_rate(log(5, 0)), std::optional<double>(100.0));
  EXPECT_EQ(responsive_rate(log(2, 1)), std::optional<double>(66.67));
  EXPECT_EQ(responsive_rate(log(0, 4)), std::optional<double>(0.0));
  EXPECT_EQ(responsive_rate({}), std::nullopt);
}

TEST(Config, Validation) {
  EngineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.k_max = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.change_epsilon = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.steps_per_round = -1;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(PrunePass, Rules) {
  LibraryStore lib("microspire");
  const auto low = lib.insert(make_skill("", {Wait{1}}), 0);
  const auto young = lib.insert(make_skill("", {Wait{2}}), 0);
  const auto good = lib.insert(make_skill("", {Wait{3}}), 0);
  record_n(lib, low, {0.05, 0.05, 0.05});
  record_n(lib, young, {0.0, 0.0});
  record_n(lib, good, {0.9, 0.9, 0.9, 0.9, 0.9});
  EXPECT_EQ(prune_pass(lib, EngineConfig{}), std::vector<SkillId>{low});
  EXPECT_TRUE(lib.is_live(young));
  EXPECT_TRUE(lib.is_live(good));
  EXPECT_TRUE(prune_pass(lib, EngineConfig{}).empty());
}

TEST(MergePass, KeepsHighestMean) {
  LibraryStore lib("microspire");
  const auto a = lib.insert(described("", {Wait{1}}, "opens menu"), 0);
  const auto b = lib.insert(described("", {Wait{2}}, "opens menu too"), 0);
  record_n(lib, a, {0.8});
  record_n(lib, b, {0.3, 0.3});
  FixedReasoner r;
  r.groups = {{a, b}};
  EXPECT_EQ(merge_pass(lib, r), 1u);
  EXPECT_TRUE(lib.is_live(a));
  EXPECT_FALSE(lib.is_live(b));
  EXPECT_EQ(lib.get(b)->tombstone->merged_into, std::optional<SkillId>(a));
  EXPECT_EQ(lib.get(a)->skill.stats.executions, 3u);
}

TEST(MergePass, TieKeepsShortest) {
  LibraryStore lib("microspire");
  const auto k2 = lib.insert(described("", {Wait{1}, Wait{1}}, "x"), 0);
  const auto k1 = lib.insert(described("", {Wait{2}}, "y"), 0);
  const auto k3 = lib.insert(described("", {Wait{1}, Wait{2}, Wait{3}}, "z"), 0);
  FixedReasoner r;
  r.groups = {{k2, k1, k3}};
  EXPECT_EQ(merge_pass(lib, r), 2u);
  EXPECT_TRUE(lib.is_live(k1));
  EXPECT_EQ(lib.live_count(), 1u);
}

TEST(MergePass, NoGroups) {
  LibraryStore lib("microspire");
  lib.insert(described("", {Wait{1}}, "x"), 0);
  lib.insert(described("", {Wait{2}}, "y"), 0);
  const auto before = lib.snapshot();
  FixedReasoner r;
  EXPECT_EQ(merge_pass(lib, r), 0u);
  EXPECT_EQ(lib.snapshot(), before);
}

TEST(Evaluate, ComponentMaxima) {
  MicroSpire env;
  env.reset(0);
  LibraryStore lib("microspire");
  const auto id = lib.insert(described("", {Click{kEndTurn}}, "ends the turn"), 0);
  FixedReasoner r;
  r.semantics = 1.0;
  Agent agent(env, lib, r, EngineConfig{}, 1);
  Trajectory t;
  t.before = env.observe();
  t.after_states.push_back(env.apply(Click{kEndTurn}));
  t.per_step_diffs.push_back(observation_diff(t.before, t.after_states.back()));
  const auto rb = agent.evaluate_and_update(lib.get(id)->skill, t.before, t);
  EXPECT_DOUBLE_EQ(rb.diversity, 1.0);
  EXPECT_DOUBLE_EQ(rb.efficiency, 1.0);
  EXPECT_DOUBLE_EQ(rb.semantics, 1.0);
  EXPECT_DOUBLE_EQ(rb.total, 3.0);
  EXPECT_EQ(lib.get(id)->skill.stats.executions, 1u);
  EXPECT_EQ(lib.get(id)->skill.stats.responsive_executions, 1u);
}

TEST(Evaluate, NoEffectDuplicate) {
  BanditEnv env;
  LibraryStore lib("bandit");
  lib.insert(described("", {Wait{9}}, "same words"), 0);
  const auto id = lib.insert(described("", {Wait{1}, Wait{1}, Wait{1}, Wait{1}}, "same words"), 0);
  FixedReasoner r;
  Agent agent(env, lib, r, EngineConfig{}, 1);
  Trajectory t;
  t.before = env.observe();
  for (int i = 0; i < 4; ++i) {
    t.after_states.push_back(env.apply(Wait{1}));
    t.per_step_diffs.push_back(0.0);
  }
  const auto rb = agent.evaluate_and_update(lib.get(id)->skill, t.before, t);
  EXPECT_NEAR(rb.diversity, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(rb.efficiency, 0.25);
  EXPECT_DOUBLE_EQ(rb.semantics, 0.0);
  EXPECT_NEAR(rb.total, 0.25, 1e-12);
  EXPECT_EQ(lib.get(id)->skill.stats.executions, 1u);
  EXPECT_EQ(lib.get(id)->skill.stats.responsive_executions, 0u);
}

TEST(Evaluate, UnknownSkill) {
  BanditEnv env;
  LibraryStore lib("bandit");
  FixedReasoner r;
  Agent agent(env, lib, r, EngineConfig{}, 1);
  Trajectory t;
  EXPECT_THROW(agent.evaluate_and_update(make_skill("ghost", {Wait{1}}), t.before, t), UnknownSkill);
}

TEST(Step, EmptyLibraryAugments) {
  MicroSpire env;
  env.reset(0);
  LibraryStore lib("microspire");
  ScriptedOracle r;
  Agent agent(env, lib, r, EngineConfig{}, 1);
  const auto out = agent.run_step();
  ASSERT_TRUE(out);
  EXPECT_EQ(out->branch, Branch::Augmented);
  EXPECT_TRUE(out->new_skill);
  EXPECT_TRUE(out->responsive);
  EXPECT_EQ(lib.live_count(), 1u);
  EXPECT_EQ(lib.get(*out->skill_id)->skill.length(), 1u);
}

TEST(Step, FilterRejectsStaticProbes) {
  BanditEnv env;  // the screen never changes
  LibraryStore lib("bandit");
  ScriptedOracle r;
  Agent agent(env, lib, r, EngineConfig{}, 1);
  const auto out = agent.run_step();
  ASSERT_TRUE(out);
  EXPECT_EQ(out->branch, Branch::Idle);
  EXPECT_GT(out->probes, 0u);
  EXPECT_EQ(lib.live_count(), 0u);
}

TEST(Step, FilterOffStoresFirstProbe) {
  BanditEnv env;
  LibraryStore lib("bandit");
  ScriptedOracle r;
  EngineConfig cfg;
  cfg.visual_filter_on = false;
  cfg.description_on = false;
  Agent agent(env, lib, r, cfg, 1);
  const auto out = agent.run_step();
  ASSERT_TRUE(out);
  EXPECT_EQ(out->branch, Branch::Augmented);
  EXPECT_EQ(out->probes, 1u);
  EXPECT_FALSE(out->responsive);
  const auto skill = lib.get(*out->skill_id)->skill;
  EXPECT_EQ(skill.descriptor, to_string(std::span<const AtomicAction>(skill.actions)));
}

TEST(Step, SingleCandidateInvoked) {
  MicroSpire env;
  env.reset(0);
  LibraryStore lib("microspire");
  const auto id = lib.insert(described("", {Click{kEndTurn}}, "ends the turn"), 0);
  FixedReasoner r;
  r.selected = {id};
  r.semantics = 0.5;
  Agent agent(env, lib, r, EngineConfig{}, 1);
  const auto out = agent.run_step();
  ASSERT_TRUE(out);
  EXPECT_EQ(out->branch, Branch::Invoked);
  EXPECT_EQ(out->skill_id, std::optional<SkillId>(id));
  EXPECT_TRUE(out->responsive);
  EXPECT_TRUE(out->reward.has_value());
  EXPECT_FALSE(out->greedy_fallback);
}

TEST(Step, UnchangedGridIsUnresponsive) {
  BanditEnv env;
  LibraryStore lib("bandit");
  const auto id = lib.insert(described("", {Click{BanditEnv::arm_center(0)}}, "pull"), 0);
  FixedReasoner r;
  r.selected = {id};
  Agent agent(env, lib, r, EngineConfig{}, 1);
  const auto out = agent.run_step();
  ASSERT_TRUE(out);
  EXPECT_EQ(out->branch, Branch::Invoked);
  EXPECT_FALSE(out->responsive);
}

TEST(Step, GreedyWithoutSearch) {
  MicroSpire env;
  env.reset(0);
  LibraryStore lib("microspire");
  const auto weak = lib.insert(described("", {Key{KeyCode::Escape}}, "weak"), 0);
  const auto strong = lib.insert(described("", {Click{kEndTurn}}, "strong"), 0);
  record_n(lib, weak, {0.1});
  record_n(lib, strong, {0.9});
  FixedReasoner r;
  r.selected = {weak, strong};
  EngineConfig cfg;
  cfg.mcts_on = false;
  Agent agent(env, lib, r, cfg, 1);
  const auto out = agent.run_step();
  ASSERT_TRUE(out);
  EXPECT_TRUE(out->greedy_fallback);
  EXPECT_EQ(out->skill_id, std::optional<SkillId>(strong));
}

TEST(Step, TerminalEndsEpisode) {
  BanditEnv env;
  env.set_step_limit(1);
  env.apply(Wait{1});
  LibraryStore lib("bandit");
  ScriptedOracle r;
  Agent agent(env, lib, r, EngineConfig{}, 1);
  EXPECT_FALSE(agent.run_step().has_value());
}

TEST(Round, FreshLibraryStartsAtZero) {
  MicroSpire env;
  LibraryStore lib("microspire");
  ScriptedOracle r;
  EngineConfig cfg;
  cfg.steps_per_round = 20;
  const auto res = run_round(env, 0, lib, r, cfg);
  EXPECT_EQ(res.report.library_size_start, 0u);
  EXPECT_GT(res.report.skills_augmented, 0u);
  EXPECT_LE(res.steps.size(), 20u);
  if (res.steps.size() < 20u) {
    EXPECT_TRUE(env.terminal());
  }
}

TEST(Round, ZeroSteps) {
  MicroSpire env;
  LibraryStore lib("microspire");
  lib.insert(described("", {Click{kEndTurn}}, "ends the turn"), 0);
  const auto before = lib.snapshot();
  ScriptedOracle r;
  EngineConfig cfg;
  cfg.steps_per_round = 0;
  const auto res = run_round(env, 0, lib, r, cfg);
  EXPECT_EQ(res.report.skills_augmented, 0u);
  EXPECT_EQ(res.report.skills_pruned, 0u);
  EXPECT_EQ(res.report.responsive_rate, std::nullopt);
  EXPECT_EQ(lib.snapshot(), before);
}

TEST(Round, ReportJsonRoundTrip) {
  MicroSpire env;
  LibraryStore lib("microspire");
  ScriptedOracle r;
  EngineConfig cfg;
  cfg.steps_per_round = 30;
  const auto rep = run_round(env, 2, lib, r, cfg).report;
  const auto j = to_json(rep);
  for (const char* key : {"round", "library_size_start", "skills_augmented", "skills_pruned", "pruning_rate",
                          "progression", "score", "responsive_rate", "estimated_cost"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(to_json(round_report_from_json(j)), j);
}

struct RunCase {
  const char* env;
  std::uint64_t seed;
  bool filter;
  bool mcts;
};

class RoundProperties : public ::testing::TestWithParam<RunCase> {};

TEST_P(RoundProperties, Hold) {
  const RunCase c = GetParam();
  auto run = [&](std::vector<RoundResult>& results) {
    auto env = make_environment(c.env);
    LibraryStore lib(c.env);
    ScriptedOracle r;
    EngineConfig cfg;
    cfg.seed = c.seed;
    cfg.steps_per_round = 40;
    cfg.visual_filter_on = c.filter;
    cfg.mcts_on = c.mcts;
    cfg.search.budget = 16;
    for (int round = 0; round < 3; ++round) results.push_back(run_round(*env, round, lib, r, cfg));
    return lib.snapshot();
  };
  std::vector<RoundResult> first, second;
  const auto lib1 = run(first);
  const auto lib2 = run(second);
  EXPECT_EQ(serialize(lib1), serialize(lib2));
  ASSERT_EQ(first.size(), second.size());

  std::size_t live = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const auto& rep = first[i].report;
    const auto& d = first[i].details;
    EXPECT_EQ(to_json(rep), to_json(second[i].report));
    EXPECT_EQ(rep.library_size_start, live);
    EXPECT_EQ(d.library_size_end, rep.library_size_start + rep.skills_augmented - rep.skills_pruned - d.merged_away)
        << "round " << i;
    EXPECT_DOUBLE_EQ(rep.pruning_rate, percent_2dp(rep.skills_pruned, std::max<std::size_t>(1, rep.skills_augmented)));
    std::uint64_t responsive = 0;
    for (const auto& s : first[i].steps) {
      responsive += s.responsive;
      if (s.branch == Branch::Invoked) {
        EXPECT_TRUE(s.reward.has_value());
      }
      EXPECT_EQ(s.responsive, s.trajectory.responsive(0.0));
      EXPECT_EQ(s.greedy_fallback, !c.mcts && s.branch == Branch::Invoked);
    }
    if (!first[i].steps.empty()) {
      EXPECT_EQ(rep.responsive_rate, std::optional<double>(percent_2dp(responsive, first[i].steps.size())));
    }
    live = d.library_size_end;
  }
  for (const auto& [id, rec] : lib1.records) {
    EXPECT_LE(rec.skill.length(), 5u);
    if (rec.live() && c.filter) {
      EXPECT_GE(rec.skill.stats.responsive_executions, 1u) << id;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Engine, RoundProperties,
                         ::testing::Values(RunCase{"microspire", 0, true, true}, RunCase{"microspire", 1, true, false},
                                           RunCase{"microspire", 2, false, true}, RunCase{"buttonworld", 3, true, true},
                                           RunCase{"buttonworld", 4, false, false},
                                           RunCase{"microspire", 5, true, true}));
