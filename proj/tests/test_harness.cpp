#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <unistd.h>

#include "bottomup/harness.hpp"

using namespace bottomup;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("bottomup-harness-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentSpec small_spec(std::vector<std::uint64_t> seeds = {7}) {
  ExperimentSpec s;
  s.seeds = std::move(seeds);
  s.engine.rounds = 4;
  s.engine.steps_per_round = 30;
  s.engine.search.budget = 16;
  return s;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Experiment, ByteIdenticalOutputs) {
  const auto a = scratch("a"), b = scratch("b");
  auto spec = small_spec({7, 8, 9});
  write_outputs(run_experiment(spec), a);
  spec.parallel_seeds = 1;
  write_outputs(run_experiment(spec), b);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file() || entry.path().filename() == "run.json") continue;
    const auto rel = fs::relative(entry.path(), a);
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
  }
  EXPECT_TRUE(fs::exists(a / "run.json"));
  EXPECT_TRUE(fs::exists(a / "library-seed8.jsonl"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, NoMctsEcho) {
  auto spec = small_spec();
  spec.engine.mcts_on = false;
  const auto report = run_experiment(spec);
  EXPECT_EQ(report.config.at("engine").at("mcts_on"), false);
  std::size_t greedy = 0;
  for (const auto& r : report.runs[0].rounds) greedy += r.details.greedy_fallbacks;
  EXPECT_GT(greedy, 0u);
  for (const auto& r : report.runs[0].rounds) {
    for (const auto& s : r.steps) EXPECT_EQ(s.greedy_fallback, s.branch == Branch::Invoked);
  }
}

TEST(Experiment, ResumeFromSize59) {
  LibraryStore lib("microspire");
  for (int i = 0; i < 59; ++i) lib.insert(make_skill("", {Click{{i % 24, i / 24}}}), 0);
  const auto path = scratch("lib59.jsonl");
  save(lib.snapshot(), path);
  auto spec = small_spec();
  spec.engine.rounds = 1;
  spec.engine.steps_per_round = 5;
  spec.library = path;
  const auto report = run_experiment(spec);
  EXPECT_EQ(report.runs[0].rounds[0].report.library_size_start, 59u);
  EXPECT_EQ(report.runs[0].agent_recorded, report.runs[0].store_recorded);
  fs::remove(path);
}

TEST(Experiment, ResumeErrors) {
  auto spec = small_spec();
  spec.library = scratch("missing.jsonl");
  EXPECT_THROW(run_experiment(spec), Error);
  LibraryStore other("buttonworld");
  other.insert(make_skill("", {Wait{1}}), 0);
  const auto path = scratch("bw.jsonl");
  save(other.snapshot(), path);
  spec.library = path;
  EXPECT_THROW(run_experiment(spec), InvalidArgument);
  fs::remove(path);
}

TEST(Experiment, InvalidSpec) {
  auto spec = small_spec({});
  EXPECT_THROW(run_experiment(spec), InvalidArgument);
  spec = small_spec();
  spec.env_id = "chess";
  EXPECT_ANY_THROW(run_experiment(spec));
}

TEST(Experiment, UnwritableOutput) {
  const auto report = run_experiment(small_spec());
  const auto file = scratch("plain-file");
  std::ofstream(file) << "x";
  EXPECT_THROW(write_outputs(report, file / "sub"), Error);
  fs::remove(file);
}

TEST(Experiment, SharedLibrarySumCheck) {
  auto spec = small_spec({3});
  spec.shared_library = true;
  spec.shared_agents = 4;
  const auto report = run_experiment(spec);
  const auto& run = report.runs[0];
  EXPECT_GT(run.agent_recorded, 0u);
  EXPECT_EQ(run.agent_recorded, run.store_recorded);
  EXPECT_EQ(report.config.at("shared_agents"), 4);
  EXPECT_EQ(run.rounds.size(), 4u);
}

TEST(Report, AggregatesRecompute) {
  const auto dir = scratch("agg");
  write_outputs(run_experiment(small_spec({1, 2, 3})), dir);
  const auto [stored, recomputed] = recompute_aggregates(dir);
  EXPECT_EQ(stored, recomputed);
  fs::remove_all(dir);
}

TEST(Report, AggregateMeansExact) {
  nlohmann::json seeds = nlohmann::json::array();
  for (double v : {1.0, 2.0, 4.0}) {
    nlohmann::json row;
    for (auto m : kReportMetrics) row[std::string(m)] = v;
    row["responsive_rate"] = v == 2.0 ? nlohmann::json(nullptr) : nlohmann::json(v * 10);
    seeds.push_back({{"rounds", nlohmann::json::array({row})}});
  }
  const auto agg = aggregate(seeds);
  ASSERT_EQ(agg.size(), 1u);
  EXPECT_DOUBLE_EQ(agg[0].at("score").at("mean").get<double>(), 7.0 / 3.0);
  EXPECT_EQ(agg[0].at("score").at("min"), 1.0);
  EXPECT_EQ(agg[0].at("score").at("max"), 4.0);
  EXPECT_EQ(agg[0].at("responsive_rate").at("n"), 2);
  EXPECT_DOUBLE_EQ(agg[0].at("responsive_rate").at("mean").get<double>(), 25.0);
}

TEST(Report, TamperedAggregatesDetected) {
  const auto dir = scratch("tamper");
  write_outputs(run_experiment(small_spec({1, 2})), dir);
  auto doc = nlohmann::json::parse(slurp(dir / "report.json"));
  doc["aggregates"][0]["score"]["mean"] = 12345.0;
  write_text(dir / "report.json", doc.dump(2));
  const auto [stored, recomputed] = recompute_aggregates(dir);
  EXPECT_NE(stored, recomputed);
  fs::remove_all(dir);
}

TEST(Plots, RowCounts) {
  const auto report = run_experiment(small_spec());
  const auto doc = report_json(report);
  const auto p = plot_data(doc, {report.runs[0].library});
  EXPECT_EQ(count_lines(p.library_size), 1u + 4u);
  EXPECT_EQ(count_lines(p.responsive_rate), 1u + 4u);
}

TEST(Plots, TopNClamped) {
  LibraryStore lib("microspire");
  for (int i = 0; i < 6; ++i) lib.insert(make_skill("", {Click{{i, 0}}}), 0);
  nlohmann::json doc = {{"seeds", nlohmann::json::array({{{"seed", 0},
                                                          {"rounds", nlohmann::json::array()},
                                                          {"details", nlohmann::json::array()}}})}};
  const auto p = plot_data(doc, {lib.snapshot()}, 10);
  EXPECT_EQ(count_lines(p.top_skills), 1u + 6u);
}

TEST(Plots, EmptyReportHeadersOnly) {
  const auto p = plot_data(nlohmann::json{{"seeds", nlohmann::json::array()}}, {});
  EXPECT_EQ(count_lines(p.library_size), 1u);
  EXPECT_EQ(count_lines(p.responsive_rate), 1u);
  EXPECT_EQ(count_lines(p.top_skills), 1u);
}

TEST(Plots, CsvQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Replay, ReproducesRecordedDiffs) {
  auto spec = small_spec();
  const auto report = run_experiment(spec);
  const auto& lib = report.runs[0].library;
  std::size_t checked = 0;
  for (const auto& [id, rec] : lib.records) {
    if (!rec.live()) continue;
    auto env = make_environment("microspire");
    env->reset(0);
    const auto t = replay(*env, rec.skill);
    EXPECT_LE(t.per_step_diffs.size(), rec.skill.length());
    for (double d : t.per_step_diffs) {
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 1.0);
    }
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}
