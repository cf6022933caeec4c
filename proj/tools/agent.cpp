/// agent: experiment runner, skill replayer and report checker.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "bottomup/harness.hpp"
#include "bottomup/render_png.hpp"

namespace bu = bottomup;

namespace {

struct RunArgs {
  std::string env = "microspire";
  int rounds = 4;
  int steps = 100;
  std::vector<std::uint64_t> seeds{0};
  std::string reasoner = "scripted";
  std::string library;
  std::string out;
  bool no_visual_filter = false;
  bool no_mcts = false;
  bool no_description = false;
  bool shared_library = false;
  int agents = 4;
  int mcts_budget = 64;
  unsigned jobs = 0;
  std::string remote_url;
  int remote_timeout_ms = 30000;
  double price_in = 2.5;
  double price_out = 10.0;
};

int cmd_run(const RunArgs& a) {
  bu::ExperimentSpec spec;
  spec.env_id = a.env;
  spec.seeds = a.seeds;
  spec.engine.rounds = a.rounds;
  spec.engine.steps_per_round = a.steps;
  spec.engine.visual_filter_on = !a.no_visual_filter;
  spec.engine.mcts_on = !a.no_mcts;
  spec.engine.description_on = !a.no_description;
  spec.engine.search.budget = a.mcts_budget;
  spec.reasoner = a.reasoner == "remote" ? bu::ReasonerKind::Remote : bu::ReasonerKind::Scripted;
  spec.remote.url = a.remote_url;
  spec.remote.timeout_ms = a.remote_timeout_ms;
  spec.remote.prices = {a.price_in, a.price_out};
  if (spec.reasoner == bu::ReasonerKind::Remote && spec.remote.url.empty()) {
    throw bu::InvalidArgument("remote reasoner needs --remote-url or AGENT_REMOTE_URL");
  }
  if (!a.library.empty()) spec.library = a.library;
  spec.out_dir = a.out;
  spec.shared_library = a.shared_library;
  spec.shared_agents = a.agents;
  spec.parallel_seeds = a.jobs;

  const bu::ExperimentReport report = bu::run_experiment(spec);
  bu::write_outputs(report, spec.out_dir);

  const auto doc = bu::report_json(report);
  for (const auto& row : doc.at("aggregates")) {
    const auto& rate = row.at("responsive_rate");
    std::printf("round %d  responsive %s  progression %.2f  library_start %.2f  augmented %.2f  pruned %.2f\n",
                row.at("round").get<int>(),
                rate.is_null() ? "n/a" : bu::fixed2(rate.at("mean").get<double>()).c_str(),
                row.at("progression").at("mean").get<double>(), row.at("library_size_start").at("mean").get<double>(),
                row.at("skills_augmented").at("mean").get<double>(), row.at("skills_pruned").at("mean").get<double>());
  }
  std::printf("wrote %s (%.2fs)\n", spec.out_dir.string().c_str(), report.wall_clock_seconds);
  return 0;
}

int cmd_replay(const std::string& library, const std::string& skill_id, const std::string& env_id,
               std::uint64_t seed, const std::string& png_dir) {
  const bu::LibrarySnapshot snap = bu::load(library);
  auto it = snap.records.find(skill_id);
  if (it == snap.records.end()) throw bu::UnknownSkill("replay: no skill '" + skill_id + "' in " + library);
  auto env = bu::make_environment(env_id);
  env->reset(seed);
  const bu::Trajectory t = bu::replay(*env, it->second.skill);

  const auto& skill = it->second.skill;
  std::printf("skill %s%s\n  actions: %s\n  descriptor: %s\n", skill.id.c_str(),
              it->second.live() ? "" : " (tombstoned)", bu::to_string(std::span(skill.actions)).c_str(),
              skill.descriptor.c_str());
  for (std::size_t i = 0; i < t.per_step_diffs.size(); ++i) {
    std::printf("  step %zu  %-24s diff %.6f\n", i, bu::to_string(skill.actions[i]).c_str(), t.per_step_diffs[i]);
  }
  if (t.per_step_diffs.size() < skill.actions.size()) std::printf("  episode ended early\n");
  const auto delta = t.progress_after - t.progress_before;
  std::printf("  responsive %s  progression %+ld  score %+ld\n", t.responsive(0.0) ? "yes" : "no", delta.progression,
              delta.score);
  if (!png_dir.empty()) {
    std::filesystem::create_directories(png_dir);
    bu::write_png(t.before, std::filesystem::path(png_dir) / "step-0.png");
    for (std::size_t i = 0; i < t.after_states.size(); ++i) {
      bu::write_png(t.after_states[i], std::filesystem::path(png_dir) / ("step-" + std::to_string(i + 1) + ".png"));
    }
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  const auto [stored, recomputed] = bu::recompute_aggregates(dir);
  for (const auto& row : recomputed) {
    std::printf("round %d", row.at("round").get<int>());
    for (auto metric : bu::kReportMetrics) {
      const auto& m = row.at(std::string(metric));
      std::printf("  %s %s", std::string(metric).c_str(),
                  m.is_null() ? "n/a" : bu::fixed2(m.at("mean").get<double>()).c_str());
    }
    std::printf("\n");
  }
  if (stored != recomputed) {
    std::fprintf(stderr, "agent report: stored aggregates differ from recomputed ones\n");
    return 1;
  }
  std::printf("aggregates match\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bottom-up skill-evolving agent"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run a seeded multi-round experiment");
  app.set_config("--config", "", "key=value config file ([run] section or run.KEY); flags override it");
  run->add_option("--env", ra.env)->check(CLI::IsMember({"microspire", "buttonworld"}));
  run->add_option("--rounds", ra.rounds)->check(CLI::PositiveNumber);
  run->add_option("--steps", ra.steps)->check(CLI::NonNegativeNumber);
  run->add_option("--seeds", ra.seeds)->delimiter(',');
  run->add_option("--reasoner", ra.reasoner)->check(CLI::IsMember({"scripted", "remote"}));
  run->add_option("--library", ra.library, "Library file to resume from");
  run->add_option("--out", ra.out)->required();
  run->add_flag("--no-visual-filter", ra.no_visual_filter);
  run->add_flag("--no-mcts", ra.no_mcts);
  run->add_flag("--no-description", ra.no_description);
  run->add_flag("--shared-library", ra.shared_library);
  run->add_option("--agents", ra.agents, "Agents per round with --shared-library")->check(CLI::PositiveNumber);
  run->add_option("--mcts-budget", ra.mcts_budget)->check(CLI::PositiveNumber);
  run->add_option("--jobs", ra.jobs, "Seeds run in parallel (0 = all cores)");
  run->add_option("--remote-url", ra.remote_url)->envname("AGENT_REMOTE_URL");
  run->add_option("--remote-timeout-ms", ra.remote_timeout_ms);
  run->add_option("--price-in", ra.price_in, "USD per million input tokens");
  run->add_option("--price-out", ra.price_out, "USD per million output tokens");

  std::string rp_library, rp_skill, rp_env = "microspire", rp_png;
  std::uint64_t rp_seed = 0;
  auto* replay = app.add_subcommand("replay", "Re-execute a stored skill and print its trajectory diffs");
  replay->add_option("--library", rp_library)->required()->check(CLI::ExistingFile);
  replay->add_option("--skill", rp_skill)->required();
  replay->add_option("--env", rp_env)->check(CLI::IsMember({"microspire", "buttonworld", "bandit"}));
  replay->add_option("--seed", rp_seed);
  replay->add_option("--png", rp_png, "Directory for per-step PNG frames");

  std::string rep_in;
  auto* report = app.add_subcommand("report", "Recompute aggregates from a run directory");
  report->add_option("--in", rep_in)->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(ra);
    if (*replay) return cmd_replay(rp_library, rp_skill, rp_env, rp_seed, rp_png);
    if (*report) return cmd_report(rep_in);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "agent: %s\n", e.what());
    return 1;
  }
  return 1;
}
