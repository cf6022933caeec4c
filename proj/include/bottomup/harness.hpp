#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bottomup/engine.hpp"
#include "bottomup/envs/registry.hpp"
#include "bottomup/remote_model.hpp"

namespace bottomup {

inline constexpr std::string_view kEngineVersion = "0.3.0";

enum class ReasonerKind { Scripted, Remote };

inline const char* to_string(ReasonerKind k) { return k == ReasonerKind::Scripted ? "scripted" : "remote"; }

struct ExperimentSpec {
  std::string env_id = "microspire";
  std::vector<std::uint64_t> seeds{0};
  EngineConfig engine;  // rounds, steps and ablation flags live here
  ReasonerKind reasoner = ReasonerKind::Scripted;
  RemoteConfig remote;
  std::optional<std::filesystem::path> library;  // resume point
  std::filesystem::path out_dir;
  bool shared_library = false;
  int shared_agents = 4;
  unsigned parallel_seeds = 0;  // 0 = hardware concurrency

  void validate() const {
    if (seeds.empty()) throw InvalidArgument("experiment: seeds must be non-empty");
    if (shared_library && shared_agents < 1) throw InvalidArgument("experiment: shared_agents must be >= 1");
    engine.validate();
    make_environment(env_id);
  }
};

/// Everything one seed produced.
struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<RoundResult> rounds;
  LibrarySnapshot library;
  ReasonerUsage usage;
  std::uint64_t agent_recorded = 0;  // executions the agents say they recorded
  std::uint64_t store_recorded = 0;  // executions the store holds
};

struct ExperimentReport {
  nlohmann::json config;
  std::string engine_version{kEngineVersion};
  std::vector<SeedRun> runs;
  double wall_clock_seconds = 0.0;
};

inline nlohmann::json to_json(const EngineConfig& c) {
  return {{"k_max", c.k_max},
          {"change_epsilon", c.change_epsilon},
          {"prune_min_evals", c.prune_min_evals},
          {"prune_semantics_threshold", c.prune_semantics_threshold},
          {"refine_candidate_threshold", c.refine_candidate_threshold},
          {"candidate_cap", c.candidate_cap},
          {"visual_filter_on", c.visual_filter_on},
          {"mcts_on", c.mcts_on},
          {"description_on", c.description_on},
          {"steps_per_round", c.steps_per_round},
          {"rounds", c.rounds},
          {"grounding_budget", c.grounding_budget},
          {"grounding_seed_offset", c.grounding_seed_offset},
          {"episode_step_limit", c.episode_step_limit},
          {"mcts_budget", c.search.budget},
          {"mcts_max_depth", c.search.max_depth},
          {"mcts_exploration_c", c.search.exploration_c},
          {"mcts_discount", c.search.discount}};
}

inline nlohmann::json config_echo(const ExperimentSpec& spec) {
  return {{"env", spec.env_id},
          {"seeds", spec.seeds},
          {"reasoner", to_string(spec.reasoner)},
          {"library", spec.library ? nlohmann::json(spec.library->filename().string()) : nlohmann::json(nullptr)},
          {"shared_library", spec.shared_library},
          {"shared_agents", spec.shared_library ? spec.shared_agents : 1},
          {"engine", to_json(spec.engine)}};
}

inline nlohmann::json to_json(const ReasonerUsage& u) {
  return {{"calls", u.calls},
          {"failed_calls", u.failed_calls},
          {"tokens_in", u.tokens_in},
          {"tokens_out", u.tokens_out},
          {"estimated_cost", u.estimated_cost}};
}

inline std::unique_ptr<Reasoner> make_reasoner(const ExperimentSpec& spec) {
  if (spec.reasoner == ReasonerKind::Remote) return std::make_unique<RemoteModel>(spec.remote);
  return std::make_unique<ScriptedOracle>();
}

/// Executions held by the store, counted once per agent contribution.
inline std::uint64_t stored_executions(const LibrarySnapshot& snap) {
  std::uint64_t n = 0;
  for (const auto& [id, r] : snap.records) {
    for (const auto& [key, c] : r.counters) {
      if (!key.starts_with("absorbed:")) n += c.executions;
    }
  }
  return n;
}

/// Several agents share one store for a round; prune and merge run once
/// after all of them stop.
inline RoundResult run_shared_round(const std::string& env_id, int round, LibraryStore& library, Reasoner& reasoner,
                                    const EngineConfig& config, int agents, std::uint64_t& recorded) {
  config.validate();
  RoundResult result;
  result.report.round = round;
  result.report.library_size_start = library.live_count();
  const double cost_start = reasoner.usage().estimated_cost;
  const std::uint64_t base = round_seed(config.seed, round);

  std::vector<std::vector<StepOutcome>> logs(agents);
  std::vector<ProgressReport> progress(agents);
  std::vector<std::uint64_t> counts(agents, 0);
  std::vector<std::exception_ptr> errors(agents);
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < agents; ++i) {
      threads.emplace_back([&, i] {
        try {
          auto env = make_environment(env_id);
          env->set_step_limit(config.episode_step_limit);
          const std::uint64_t s = i == 0 ? base : splitmix64(base ^ static_cast<std::uint64_t>(i));
          env->reset(s);
          Agent agent(*env, library, reasoner, config, splitmix64(s ^ 0xa0761d6478bd642fULL),
                      "agent-" + std::to_string(i));
          for (int step = 0; step < config.steps_per_round; ++step) {
            auto outcome = agent.run_step();
            if (!outcome) break;
            logs[i].push_back(std::move(*outcome));
          }
          progress[i] = env->progress();
          counts[i] = agent.recorded_executions();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::size_t augmented = 0;
  for (auto& log : logs) {
    for (auto& s : log) {
      tally(result.details, augmented, s);
      result.steps.push_back(std::move(s));
    }
  }
  for (auto c : counts) result.details.recorded_executions += c;
  recorded += result.details.recorded_executions;

  const auto pruned = prune_pass(library, config);
  const std::size_t merges = merge_pass(library, reasoner);
  result.details.merges = merges;
  result.details.merged_away += merges;
  result.details.pruned_ids = pruned;
  result.details.library_size_end = library.live_count();

  // The best agent stands for the round.
  const auto best = std::max_element(progress.begin(), progress.end(), [](const auto& a, const auto& b) {
    return std::tie(a.progression, a.score) < std::tie(b.progression, b.score);
  });
  result.details.terminal_reason = to_string(best->reason);
  result.report.skills_augmented = augmented;
  result.report.skills_pruned = pruned.size();
  result.report.pruning_rate = pruning_rate(pruned.size(), augmented);
  result.report.progression = best->progression;
  result.report.score = best->score;
  result.report.responsive_rate = responsive_rate(result.steps);
  result.report.estimated_cost = reasoner.usage().estimated_cost - cost_start;
  return result;
}

inline SeedRun run_seed(const ExperimentSpec& spec, std::uint64_t seed, const std::optional<LibrarySnapshot>& resume) {
  EngineConfig config = spec.engine;
  config.seed = seed;
  LibraryStore library = resume ? LibraryStore(*resume) : LibraryStore(spec.env_id);
  auto reasoner = make_reasoner(spec);
  SeedRun run;
  run.seed = seed;
  if (spec.shared_library) {
    for (int r = 0; r < config.rounds; ++r) {
      run.rounds.push_back(run_shared_round(spec.env_id, r, library, *reasoner, config, spec.shared_agents,
                                            run.agent_recorded));
    }
  } else {
    auto env = make_environment(spec.env_id);
    for (int r = 0; r < config.rounds; ++r) {
      run.rounds.push_back(run_round(*env, r, library, *reasoner, config));
      run.agent_recorded += run.rounds.back().details.recorded_executions;
    }
  }
  run.library = library.snapshot();
  run.store_recorded = stored_executions(run.library);
  if (resume) run.store_recorded -= stored_executions(*resume);
  run.usage = reasoner->usage();
  return run;
}

inline std::optional<LibrarySnapshot> load_resume(const ExperimentSpec& spec) {
  if (!spec.library) return std::nullopt;
  if (!std::filesystem::exists(*spec.library)) {
    throw Error("experiment: resume library " + spec.library->string() + " does not exist");
  }
  LibrarySnapshot snap = load(*spec.library);
  if (!snap.env_id.empty() && snap.env_id != spec.env_id) {
    throw InvalidArgument("experiment: library env '" + snap.env_id + "' does not match '" + spec.env_id + "'");
  }
  return snap;
}

/// Runs every seed; seeds proceed in parallel when there is more than one.
inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto resume = load_resume(spec);
  ExperimentReport report;
  report.config = config_echo(spec);
  report.runs.resize(spec.seeds.size());

  unsigned workers = spec.parallel_seeds ? spec.parallel_seeds : std::max(1u, std::thread::hardware_concurrency());
  if (spec.shared_library) workers = 1;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(spec.seeds.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(spec.seeds.size());
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < spec.seeds.size(); i = next++) {
          try {
            report.runs[i] = run_seed(spec, spec.seeds[i], resume);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// ---- aggregates ------------------------------------------------------------

inline constexpr std::array<std::string_view, 8> kReportMetrics = {
    "library_size_start", "skills_augmented", "skills_pruned", "pruning_rate",
    "progression",        "score",            "responsive_rate", "estimated_cost"};

/// Per-round mean/min/max of each metric over seeds. Null values (rounds
/// without executions) are left out; a metric with no values is null.
inline nlohmann::json aggregate(const nlohmann::json& seeds) {
  nlohmann::json out = nlohmann::json::array();
  std::size_t rounds = 0;
  for (const auto& s : seeds) rounds = std::max(rounds, s.at("rounds").size());
  for (std::size_t r = 0; r < rounds; ++r) {
    nlohmann::json row;
    row["round"] = r;
    for (auto metric : kReportMetrics) {
      std::vector<double> vals;
      for (const auto& s : seeds) {
        if (r >= s.at("rounds").size()) continue;
        const auto& v = s.at("rounds")[r].at(std::string(metric));
        if (!v.is_null()) vals.push_back(v.get<double>());
      }
      if (vals.empty()) {
        row[std::string(metric)] = nullptr;
        continue;
      }
      double sum = 0.0;
      for (double v : vals) sum += v;
      row[std::string(metric)] = {{"mean", sum / static_cast<double>(vals.size())},
                                  {"min", *std::min_element(vals.begin(), vals.end())},
                                  {"max", *std::max_element(vals.begin(), vals.end())},
                                  {"n", vals.size()}};
    }
    out.push_back(row);
  }
  return out;
}

inline std::string library_file_name(std::uint64_t seed) { return "library-seed" + std::to_string(seed) + ".jsonl"; }

/// Deterministic report document. Wall-clock is kept out of it.
inline nlohmann::json report_json(const ExperimentReport& report) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& run : report.runs) {
    nlohmann::json rounds = nlohmann::json::array();
    nlohmann::json details = nlohmann::json::array();
    for (const auto& r : run.rounds) {
      rounds.push_back(to_json(r.report));
      details.push_back(to_json(r.details));
    }
    seeds.push_back({{"seed", run.seed},
                     {"rounds", rounds},
                     {"details", details},
                     {"usage", to_json(run.usage)},
                     {"library_file", library_file_name(run.seed)},
                     {"live_skills", run.library.live_count()},
                     {"agent_recorded_executions", run.agent_recorded},
                     {"store_recorded_executions", run.store_recorded}});
  }
  return {{"engine_version", report.engine_version},
          {"config", report.config},
          {"seeds", seeds},
          {"aggregates", aggregate(seeds)}};
}

// ---- plot series -----------------------------------------------------------

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fixed2(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

struct PlotData {
  std::string library_size;
  std::string responsive_rate;
  std::string top_skills;
};

/// CSV series from a report document. `top_n` skills per seed, ranked by
/// executions, then id.
inline PlotData plot_data(const nlohmann::json& report, const std::vector<LibrarySnapshot>& libraries,
                          std::size_t top_n = 10) {
  PlotData p;
  p.library_size = "seed,round,library_size_start,library_size_end,skills_augmented,skills_pruned\n";
  p.responsive_rate = "seed,round,responsive_rate\n";
  p.top_skills = "seed,rank,skill_id,invocations,descriptor\n";
  const auto& seeds = report.at("seeds");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& s = seeds[i];
    const std::string seed = std::to_string(s.at("seed").get<std::uint64_t>());
    for (std::size_t r = 0; r < s.at("rounds").size(); ++r) {
      const auto& rr = s.at("rounds")[r];
      const auto& dd = s.at("details")[r];
      p.library_size += seed + "," + std::to_string(r) + "," + rr.at("library_size_start").dump() + "," +
                        dd.at("library_size_end").dump() + "," + rr.at("skills_augmented").dump() + "," +
                        rr.at("skills_pruned").dump() + "\n";
      const auto& rate = rr.at("responsive_rate");
      p.responsive_rate += seed + "," + std::to_string(r) + "," + (rate.is_null() ? "" : fixed2(rate)) + "\n";
    }
    if (i >= libraries.size()) continue;
    std::vector<const SkillRecord*> live;
    for (const auto& [id, rec] : libraries[i].records) {
      if (rec.live()) live.push_back(&rec);
    }
    std::sort(live.begin(), live.end(), [](const SkillRecord* a, const SkillRecord* b) {
      if (a->skill.stats.executions != b->skill.stats.executions) {
        return a->skill.stats.executions > b->skill.stats.executions;
      }
      return a->skill.id < b->skill.id;
    });
    for (std::size_t k = 0; k < std::min(top_n, live.size()); ++k) {
      p.top_skills += seed + "," + std::to_string(k + 1) + "," + live[k]->skill.id + "," +
                      std::to_string(live[k]->skill.stats.executions) + "," + csv_field(live[k]->skill.descriptor) +
                      "\n";
    }
  }
  return p;
}

// ---- output ----------------------------------------------------------------

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

/// Writes report.json, steps.jsonl, one library file per seed, plots/*.csv
/// and run.json (wall-clock only).
inline void write_outputs(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "plots", ec);
  if (ec) throw Error("cannot create output dir " + dir.string() + ": " + ec.message());

  const nlohmann::json doc = report_json(report);
  write_text(dir / "report.json", doc.dump(2) + "\n");

  std::string steps;
  std::vector<LibrarySnapshot> libraries;
  for (const auto& run : report.runs) {
    for (const auto& round : run.rounds) {
      for (std::size_t i = 0; i < round.steps.size(); ++i) {
        nlohmann::json j = step_json(round.report.round, static_cast<int>(i), round.steps[i]);
        j["seed"] = run.seed;
        steps += j.dump() + "\n";
      }
    }
    save(run.library, dir / library_file_name(run.seed));
    libraries.push_back(run.library);
  }
  write_text(dir / "steps.jsonl", steps);

  const PlotData p = plot_data(doc, libraries);
  write_text(dir / "plots" / "library_size.csv", p.library_size);
  write_text(dir / "plots" / "responsive_rate.csv", p.responsive_rate);
  write_text(dir / "plots" / "top_skills.csv", p.top_skills);

  write_text(dir / "run.json", nlohmann::json{{"wall_clock_seconds", report.wall_clock_seconds},
                                              {"engine_version", report.engine_version}}
                                       .dump(2) +
                                   "\n");
}

/// Reads report.json from `dir` and recomputes its aggregates from the
/// per-seed rows. Returns {stored, recomputed}.
inline std::pair<nlohmann::json, nlohmann::json> recompute_aggregates(const std::filesystem::path& dir) {
  std::ifstream in(dir / "report.json", std::ios::binary);
  if (!in) throw ParseError("report: cannot open " + (dir / "report.json").string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  return {doc.at("aggregates"), aggregate(doc.at("seeds"))};
}

// ---- replay ----------------------------------------------------------------

/// Re-executes a stored routine verbatim from the environment's current
/// state.
inline Trajectory replay(Environment& env, const Skill& skill) {
  Trajectory t;
  t.before = env.observe();
  t.progress_before = env.progress();
  Observation prev = t.before;
  for (const auto& a : skill.actions) {
    if (env.terminal()) break;
    Observation next = env.apply(a);
    t.per_step_diffs.push_back(observation_diff(prev, next));
    t.after_states.push_back(next);
    prev = std::move(next);
  }
  t.progress_after = env.progress();
  return t;
}

}  // namespace bottomup
