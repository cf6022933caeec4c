#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bottomup/environment.hpp"
#include "bottomup/grounding.hpp"
#include "bottomup/library_store.hpp"
#include "bottomup/mcts.hpp"
#include "bottomup/reasoner.hpp"
#include "bottomup/scripted_oracle.hpp"

namespace bottomup {

struct EngineConfig {
  int k_max = 5;
  double change_epsilon = 0.0;
  std::uint64_t prune_min_evals = 3;
  double prune_semantics_threshold = 0.2;
  std::size_t refine_candidate_threshold = 2;
  std::size_t candidate_cap = kSelectCap;
  bool visual_filter_on = true;
  bool mcts_on = true;
  bool description_on = true;
  int steps_per_round = 100;
  int rounds = 4;
  std::uint64_t seed = 0;
  std::size_t grounding_budget = 32;
  std::uint64_t grounding_seed_offset = 0;
  long episode_step_limit = 1000;
  SearchConfig search;

  void validate() const {
    if (k_max < 1) throw InvalidArgument("engine: k_max must be >= 1");
    if (change_epsilon < 0.0 || change_epsilon >= 1.0) throw InvalidArgument("engine: change_epsilon must be in [0,1)");
    if (prune_semantics_threshold < 0.0 || prune_semantics_threshold > 1.0) {
      throw InvalidArgument("engine: prune_semantics_threshold must be in [0,1]");
    }
    if (candidate_cap < 1) throw InvalidArgument("engine: candidate_cap must be >= 1");
    if (steps_per_round < 0) throw InvalidArgument("engine: steps_per_round must be >= 0");
    if (rounds < 1) throw InvalidArgument("engine: rounds must be >= 1");
    if (grounding_budget < 1) throw InvalidArgument("engine: grounding budget must be >= 1");
    search.validate();
  }
};

enum class Branch { Invoked, Augmented, Idle };

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::Invoked: return "invoked";
    case Branch::Augmented: return "augmented";
    case Branch::Idle: return "idle";
  }
  return "idle";
}

struct StepOutcome {
  Branch branch = Branch::Idle;
  std::optional<SkillId> skill_id;
  Trajectory trajectory;
  std::optional<RewardBreakdown> reward;
  bool responsive = false;
  std::uint64_t reasoner_calls = 0;
  std::size_t candidate_count = 0;
  std::size_t probes = 0;
  bool new_skill = false;
  bool greedy_fallback = false;
  std::optional<SkillId> refined_into;
  bool refine_collapsed = false;
};

/// Skills whose descriptor came from the describe role (and not the
/// canonical-action fallback used when description is disabled).
inline bool is_described(const Skill& s) {
  return !s.descriptor.empty() && s.descriptor != to_string(std::span<const AtomicAction>(s.actions));
}

inline SkillSummary summarize(const SkillRecord& r) {
  SkillSummary s;
  s.id = r.skill.id;
  s.descriptor = r.skill.descriptor;
  s.fingerprint = r.skill.fingerprint;
  s.origin_hash = r.origin_observation_hash;
  s.embedding = r.skill.embedding;
  s.kind_signature = kind_signature(r.skill.actions);
  s.actions = to_string(std::span<const AtomicAction>(r.skill.actions));
  s.mean_semantics = r.skill.stats.mean_semantics();
  return s;
}

/// Value of one executed skill during search: the scripted semantic rubric.
inline double rubric_value(const Observation& before, const Observation& after, ProgressDelta delta) {
  return semantic_rubric(observation_diff(before, after), delta);
}

/// Tombstones every live skill with enough evaluations and a low mean
/// semantic score.
inline std::vector<SkillId> prune_pass(LibraryStore& library, const EngineConfig& config) {
  std::vector<SkillId> pruned;
  for (const auto& r : library.live_records()) {
    const auto& st = r.skill.stats;
    if (st.semantics_count >= config.prune_min_evals && st.mean_semantics() < config.prune_semantics_threshold) {
      library.prune(r.skill.id, TombstoneReason::Pruned);
      pruned.push_back(r.skill.id);
    }
  }
  return pruned;
}

/// Clusters described live skills; each group keeps its best member (mean
/// semantics, then shortest, then lowest id), which absorbs the others'
/// counters. Returns the number of skills merged away.
inline std::size_t merge_pass(LibraryStore& library, Reasoner& reasoner) {
  std::vector<SkillSummary> summaries;
  std::map<SkillId, SkillRecord> by_id;
  for (auto& r : library.live_records()) {
    if (!is_described(r.skill)) continue;
    summaries.push_back(summarize(r));
    by_id.emplace(r.skill.id, std::move(r));
  }
  if (summaries.size() < 2) return 0;
  std::size_t merges = 0;
  for (const auto& group : reasoner.cluster(summaries)) {
    std::vector<const SkillRecord*> members;
    for (const auto& id : group) {
      if (auto it = by_id.find(id); it != by_id.end()) members.push_back(&it->second);
    }
    if (members.size() < 2) continue;
    const SkillRecord* keep = members.front();
    for (const auto* m : members) {
      double mm = m->skill.stats.mean_semantics();
      double km = keep->skill.stats.mean_semantics();
      if (mm > km || (mm == km && m->skill.length() < keep->skill.length()) ||
          (mm == km && m->skill.length() == keep->skill.length() && m->skill.id < keep->skill.id)) {
        keep = m;
      }
    }
    for (const auto* m : members) {
      if (m == keep) continue;
      library.absorb(keep->skill.id, m->skill.id);
      library.prune(m->skill.id, TombstoneReason::Merged, keep->skill.id);
      ++merges;
    }
  }
  return merges;
}

/// One agent's trial-and-reasoning loop over one episode.
class Agent {
 public:
  Agent(Environment& env, LibraryStore& library, Reasoner& reasoner, EngineConfig config, std::uint64_t stream,
        std::string agent_id = {})
      : env_(env),
        library_(library),
        reasoner_(reasoner),
        config_(std::move(config)),
        stream_(stream),
        agent_id_(std::move(agent_id)) {
    config_.validate();
  }

  /// One step of the loop. Returns nullopt once the episode has ended.
  std::optional<StepOutcome> run_step() {
    if (env_.terminal()) return std::nullopt;
    const std::uint64_t step_seed = splitmix64(stream_ + step_++);
    calls_ = 0;
    StepOutcome out;

    const Observation x_t = env_.observe();
    const ObservationDigest digest = make_digest(x_t, env_.legend());
    std::vector<SkillSummary> summaries;
    for (const auto& r : library_.live_records()) {
      summaries.push_back(summarize(r));
    }
    ++calls_;
    std::vector<SkillId> ids = reasoner_.select(digest, summaries);
    std::vector<Skill> candidates;
    for (const auto& id : ids) {
      if (candidates.size() >= config_.candidate_cap) break;
      // A skill that already did nothing on this exact screen is not retried.
      if (inert_.count({id, x_t.state_hash()})) continue;
      if (auto rec = library_.get(id); rec && rec->live()) candidates.push_back(rec->skill);
    }
    out.candidate_count = candidates.size();

    std::optional<SearchResult> searched;
    if (!candidates.empty() && config_.mcts_on) {
      SearchConfig sc = config_.search;
      sc.seed = splitmix64(step_seed ^ 0x5bd1e995ULL);
      searched = search(env_.snapshot(), candidates, sc, rubric_value);
    }

    if (candidates.empty()) {
      auto found = augmentation_phase(step_seed, out);
      if (!found) {
        out.branch = Branch::Idle;
        last_.reset();
        out.reasoner_calls = calls_;
        return out;
      }
      out.branch = Branch::Augmented;
      out.skill_id = found->skill.id;
      out.trajectory = std::move(found->trajectory);
      out.responsive = out.trajectory.responsive(config_.change_epsilon);
      out.reward = evaluate_and_update(found->skill, out.trajectory.before, out.trajectory);
      after_execution(found->skill, out);
      out.reasoner_calls = calls_;
      return out;
    }

    const Skill* chosen = &candidates.front();
    if (searched) {
      for (const auto& c : candidates) {
        if (c.id == searched->best_skill_id) chosen = &c;
      }
    } else {
      out.greedy_fallback = true;
      for (const auto& c : candidates) {
        double cm = c.stats.mean_semantics();
        double bm = chosen->stats.mean_semantics();
        if (cm > bm || (cm == bm && c.id < chosen->id)) chosen = &c;
      }
    }

    out.branch = Branch::Invoked;
    out.skill_id = chosen->id;
    out.trajectory = execute(*chosen);
    out.responsive = out.trajectory.responsive(config_.change_epsilon);
    out.reward = evaluate_and_update(*chosen, x_t, out.trajectory);
    if (!out.responsive) inert_.insert({chosen->id, x_t.state_hash()});
    after_execution(*chosen, out);
    out.reasoner_calls = calls_;
    return out;
  }

  struct Discovery {
    Skill skill;
    Trajectory trajectory;
    bool inserted = false;
  };

  /// Probes grounded actions one at a time, appended to the last validated
  /// skill when there is one, and keeps the first probe that passes the
  /// visual filter. Probes are never rolled back.
  std::optional<Discovery> augmentation_phase(std::uint64_t step_seed, StepOutcome& out) {
    const Observation x_t = env_.observe();

    std::optional<Skill> prefix;
    Trajectory base;
    if (last_ && static_cast<int>(last_->trajectory.after_states.size()) < config_.k_max) {
      if (auto rec = library_.get(last_->id); rec && rec->live() && rec->skill.length() == last_->trajectory.after_states.size()) {
        prefix = rec->skill;
        base = last_->trajectory;
      }
    }
    if (!prefix) {
      base = Trajectory{};
      base.before = x_t;
      base.progress_before = env_.progress();
    }

    auto proposals = propose_actions(segment(x_t), config_.grounding_budget,
                                     splitmix64(step_seed ^ config_.grounding_seed_offset));
    std::mt19937_64 rng(step_seed);
    for (std::size_t i = proposals.size(); i > 1; --i) {
      std::swap(proposals[i - 1], proposals[rng() % i]);
    }
    // Untried routines first; routines already pruned for poor results last.
    {
      std::vector<AtomicAction> base_actions = prefix ? prefix->actions : std::vector<AtomicAction>{};
      auto rank = [&](const AtomicAction& a) {
        auto seq = base_actions;
        seq.push_back(a);
        const std::string fp = fingerprint(seq);
        if (library_.was_pruned(fp)) return 2;
        if (library_.has_live_fingerprint(fp)) return 1;
        return 0;
      };
      std::vector<std::pair<int, AtomicAction>> ranked;
      for (auto& a : proposals) ranked.emplace_back(rank(a), std::move(a));
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      proposals.clear();
      for (auto& [r, a] : ranked) proposals.push_back(std::move(a));
    }

    return try_probes(prefix, base, proposals, out);
  }

  /// Applies `proposals` in order after `prefix` (whose execution is
  /// `base`) and keeps the first one that passes the visual filter.
  std::optional<Discovery> try_probes(const std::optional<Skill>& prefix, const Trajectory& base,
                                      const std::vector<AtomicAction>& proposals, StepOutcome& out) {
    for (const auto& action : proposals) {
      if (env_.terminal()) break;
      const Observation before = env_.observe();
      const Observation after = env_.apply(action);
      const double diff = observation_diff(before, after);
      ++out.probes;
      if (config_.visual_filter_on && !(diff > config_.change_epsilon)) continue;

      Skill skill = augment(prefix ? &*prefix : nullptr, action, env_.grid(), library_.next_id());
      Trajectory traj = base;
      traj.after_states.push_back(after);
      traj.per_step_diffs.push_back(diff);
      traj.progress_after = env_.progress();
      describe_into(skill, traj.before, traj);
      const SkillId requested = skill.id;
      const SkillId id = library_.insert(skill, traj.before.state_hash());
      Discovery d;
      d.inserted = id == requested;
      out.new_skill = d.inserted;
      if (d.inserted) {
        d.skill = std::move(skill);
      } else {
        d.skill = library_.get(id)->skill;
      }
      d.trajectory = std::move(traj);
      return d;
    }
    return std::nullopt;
  }

  /// Scores an execution and records it in the library.
  RewardBreakdown evaluate_and_update(const Skill& skill, const Observation& x_t, const Trajectory& trajectory) {
    auto rec = library_.get(skill.id);
    if (!rec) throw UnknownSkill("evaluate: unknown id '" + skill.id + "'");
    ++calls_;
    const double semantics =
        reasoner_.differ(rec->skill, x_t, trajectory.last(), trajectory.progress_after - trajectory.progress_before);
    std::vector<Embedding> others;
    for (const auto& r : library_.live_records()) {
      if (r.skill.id != skill.id) others.push_back(r.skill.embedding);
    }
    const double diversity = diversity_reward(rec->skill, others);
    const RewardBreakdown rb = combine_rewards(diversity, efficiency_reward(rec->skill), semantics);
    const bool responsive = trajectory.responsive(config_.change_epsilon);
    // A concurrent refinement may have replaced the skill; credit the
    // replacement instead of dropping the execution.
    for (int attempt = 0; attempt < 8; ++attempt) {
      auto target = library_.resolve(skill.id);
      if (!target) throw UnknownSkill("evaluate: id '" + skill.id + "' is no longer live");
      try {
        library_.record_execution(*target, responsive, semantics, rb.total, agent_id_);
        ++recorded_;
        return rb;
      } catch (const UnknownSkill&) {
      }
    }
    throw UnknownSkill("evaluate: id '" + skill.id + "' kept changing");
  }

  std::uint64_t recorded_executions() const noexcept { return recorded_; }

 private:
  struct LastExecution {
    SkillId id;
    Trajectory trajectory;
  };

  Trajectory execute(const Skill& skill) {
    Trajectory t;
    t.before = env_.observe();
    t.progress_before = env_.progress();
    Observation prev = t.before;
    for (const auto& a : skill.actions) {
      if (env_.terminal()) break;
      Observation next = env_.apply(a);
      t.per_step_diffs.push_back(observation_diff(prev, next));
      t.after_states.push_back(next);
      prev = std::move(next);
    }
    t.progress_after = env_.progress();
    return t;
  }

  void describe_into(Skill& skill, const Observation& before, const Trajectory& traj) {
    if (config_.description_on) {
      ++calls_;
      skill.descriptor = reasoner_.describe(before, skill, traj, env_.legend());
    } else {
      skill.descriptor = to_string(std::span<const AtomicAction>(skill.actions));
    }
    skill.embedding = embed(skill.descriptor);
  }

  /// Refinement when few candidates were available, then remember the
  /// execution as the prefix for the next augmentation.
  void after_execution(const Skill& executed, StepOutcome& out) {
    SkillId current = executed.id;
    Skill current_skill = executed;
    if (out.candidate_count < config_.refine_candidate_threshold) {
      if (auto replaced = try_refine(executed, out.trajectory, out)) {
        current = replaced->first;
        current_skill = replaced->second;
      }
    }
    if (out.responsive && !out.trajectory.after_states.empty()) {
      std::size_t k = current_skill.length();
      if (k <= out.trajectory.after_states.size()) {
        Trajectory t = out.trajectory;
        t.after_states.resize(k);
        t.per_step_diffs.resize(k);
        last_ = LastExecution{current, std::move(t)};
        return;
      }
    }
    last_.reset();
  }

  std::optional<std::pair<SkillId, Skill>> try_refine(const Skill& skill, const Trajectory& trajectory,
                                                      StepOutcome& out) {
    if (!library_.is_live(skill.id)) return std::nullopt;
    ++calls_;
    auto refined = reasoner_.refine(trajectory.before, skill, trajectory, [this] { return library_.next_id(); });
    if (!refined) return std::nullopt;
    // Only prefix rewrites can be scored from the recorded trajectory.
    const std::size_t k = refined->length();
    if (k > trajectory.after_states.size() ||
        !std::equal(refined->actions.begin(), refined->actions.end(), skill.actions.begin())) {
      return std::nullopt;
    }
    Trajectory t = trajectory;
    t.after_states.resize(k);
    t.per_step_diffs.resize(k);
    if (!t.responsive(config_.change_epsilon) && config_.visual_filter_on) return std::nullopt;
    // Progress is only observed at the end of the whole execution; keep
    // the prefix's delta when the dropped suffix changed nothing.
    describe_into(*refined, t.before, t);
    const SkillId requested = refined->id;
    const SkillId id = library_.insert(*refined, t.before.state_hash());
    if (id == requested) {
      evaluate_and_update(*refined, t.before, t);
    } else {
      out.refine_collapsed = true;
    }
    library_.prune(skill.id, TombstoneReason::Merged, id);
    out.refined_into = id;
    auto rec = library_.get(id);
    return std::make_pair(id, rec->skill);
  }

  Environment& env_;
  LibraryStore& library_;
  Reasoner& reasoner_;
  EngineConfig config_;
  std::uint64_t stream_;
  std::string agent_id_;
  std::uint64_t step_ = 0;
  std::uint64_t calls_ = 0;
  std::uint64_t recorded_ = 0;
  std::optional<LastExecution> last_;
  std::set<std::pair<SkillId, std::uint64_t>> inert_;
};

/// Table-3-shaped summary of one round.
struct RoundReport {
  int round = 0;
  std::size_t library_size_start = 0;
  std::size_t skills_augmented = 0;
  std::size_t skills_pruned = 0;
  double pruning_rate = 0.0;  // percent, 2 decimals
  long progression = 0;
  long score = 0;
  std::optional<double> responsive_rate;  // percent, 2 decimals; none without executions
  double estimated_cost = 0.0;

  bool operator==(const RoundReport&) const = default;
};

/// Bookkeeping beyond the Table-3 columns.
struct RoundDetails {
  std::size_t library_size_end = 0;
  std::size_t merged_away = 0;
  std::size_t merges = 0;
  std::size_t refinements = 0;
  std::size_t executions = 0;
  std::size_t responsive_executions = 0;
  std::size_t steps = 0;
  std::size_t invoked = 0;
  std::size_t augmented_steps = 0;
  std::size_t idle = 0;
  std::size_t greedy_fallbacks = 0;
  std::uint64_t recorded_executions = 0;  // as counted by the agents
  std::string terminal_reason = "none";
  std::vector<std::string> pruned_ids;
};

/// 100 * num / den rounded half-up to two decimals, computed in integers.
inline double percent_2dp(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return 0.0;
  const unsigned __int128 scaled = static_cast<unsigned __int128>(num) * 20000 + den;
  const auto hundredths = static_cast<std::uint64_t>(scaled / (2 * static_cast<unsigned __int128>(den)));
  return static_cast<double>(hundredths) / 100.0;
}

/// 100 * responsive / executed; nullopt when nothing was executed.
inline std::optional<double> responsive_rate(const std::vector<StepOutcome>& log) {
  std::uint64_t executed = 0;
  std::uint64_t responsive = 0;
  for (const auto& s : log) {
    ++executed;
    responsive += s.responsive ? 1 : 0;
  }
  if (executed == 0) return std::nullopt;
  return percent_2dp(responsive, executed);
}

inline double pruning_rate(std::size_t pruned, std::size_t augmented) {
  return percent_2dp(pruned, std::max<std::size_t>(1, augmented));
}

inline std::uint64_t round_seed(std::uint64_t seed, int round) {
  return splitmix64(splitmix64(seed) + static_cast<std::uint64_t>(round));
}

inline nlohmann::json to_json(const RewardBreakdown& r) {
  return {{"diversity", r.diversity}, {"efficiency", r.efficiency}, {"semantics", r.semantics}, {"total", r.total}};
}

inline nlohmann::json step_json(int round, int step, const StepOutcome& s) {
  nlohmann::json j;
  j["round"] = round;
  j["step"] = step;
  j["branch"] = to_string(s.branch);
  j["skill_id"] = s.skill_id ? nlohmann::json(*s.skill_id) : nlohmann::json(nullptr);
  j["responsive"] = s.responsive;
  j["per_step_diffs"] = s.trajectory.per_step_diffs;
  j["before_hash"] = to_hex(s.trajectory.before.state_hash());
  j["after_hash"] = s.trajectory.after_states.empty() ? nlohmann::json(nullptr)
                                                      : nlohmann::json(to_hex(s.trajectory.last().state_hash()));
  j["reward"] = s.reward ? to_json(*s.reward) : nlohmann::json(nullptr);
  j["reasoner_calls"] = s.reasoner_calls;
  j["candidates"] = s.candidate_count;
  j["probes"] = s.probes;
  j["new_skill"] = s.new_skill;
  j["greedy_fallback"] = s.greedy_fallback;
  j["refined_into"] = s.refined_into ? nlohmann::json(*s.refined_into) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const RoundReport& r) {
  return {{"round", r.round},
          {"library_size_start", r.library_size_start},
          {"skills_augmented", r.skills_augmented},
          {"skills_pruned", r.skills_pruned},
          {"pruning_rate", r.pruning_rate},
          {"progression", r.progression},
          {"score", r.score},
          {"responsive_rate", r.responsive_rate ? nlohmann::json(*r.responsive_rate) : nlohmann::json(nullptr)},
          {"estimated_cost", r.estimated_cost}};
}

inline RoundReport round_report_from_json(const nlohmann::json& j) {
  RoundReport r;
  r.round = j.at("round");
  r.library_size_start = j.at("library_size_start");
  r.skills_augmented = j.at("skills_augmented");
  r.skills_pruned = j.at("skills_pruned");
  r.pruning_rate = j.at("pruning_rate");
  r.progression = j.at("progression");
  r.score = j.at("score");
  if (!j.at("responsive_rate").is_null()) r.responsive_rate = j.at("responsive_rate").get<double>();
  r.estimated_cost = j.at("estimated_cost");
  return r;
}

inline nlohmann::json to_json(const RoundDetails& d) {
  return {{"library_size_end", d.library_size_end},
          {"merged_away", d.merged_away},
          {"merges", d.merges},
          {"refinements", d.refinements},
          {"executions", d.executions},
          {"responsive_executions", d.responsive_executions},
          {"steps", d.steps},
          {"invoked", d.invoked},
          {"augmented_steps", d.augmented_steps},
          {"idle", d.idle},
          {"greedy_fallbacks", d.greedy_fallbacks},
          {"recorded_executions", d.recorded_executions},
          {"terminal_reason", d.terminal_reason},
          {"pruned_ids", d.pruned_ids}};
}

struct RoundResult {
  RoundReport report;
  RoundDetails details;
  std::vector<StepOutcome> steps;
};

/// Folds one step into the round tallies.
inline void tally(RoundDetails& d, std::size_t& augmented, const StepOutcome& s) {
  ++d.steps;
  ++d.executions;
  d.responsive_executions += s.responsive ? 1 : 0;
  if (s.branch == Branch::Invoked) ++d.invoked;
  if (s.branch == Branch::Augmented) ++d.augmented_steps;
  if (s.branch == Branch::Idle) ++d.idle;
  if (s.greedy_fallback) ++d.greedy_fallbacks;
  if (s.new_skill) ++augmented;
  if (s.refined_into) ++d.refinements;
  if (s.refine_collapsed) ++d.merged_away;
}

/// One round: reset with a round-specific seed, run up to steps_per_round
/// steps, then prune and merge.
inline RoundResult run_round(Environment& env, int round, LibraryStore& library, Reasoner& reasoner,
                             const EngineConfig& config) {
  config.validate();
  RoundResult result;
  RoundReport& report = result.report;
  RoundDetails& details = result.details;
  report.round = round;
  report.library_size_start = library.live_count();
  const double cost_start = reasoner.usage().estimated_cost;

  env.set_step_limit(config.episode_step_limit);
  env.reset(round_seed(config.seed, round));
  Agent agent(env, library, reasoner, config, splitmix64(round_seed(config.seed, round) ^ 0xa0761d6478bd642fULL));
  std::size_t augmented = 0;
  for (int step = 0; step < config.steps_per_round; ++step) {
    auto outcome = agent.run_step();
    if (!outcome) break;
    tally(details, augmented, *outcome);
    result.steps.push_back(std::move(*outcome));
  }
  details.recorded_executions = agent.recorded_executions();

  const auto pruned = prune_pass(library, config);
  const std::size_t merges = merge_pass(library, reasoner);
  details.merges = merges;
  details.merged_away += merges;
  details.pruned_ids = pruned;
  details.library_size_end = library.live_count();

  const ProgressReport p = env.progress();
  details.terminal_reason = to_string(p.reason);
  report.skills_augmented = augmented;
  report.skills_pruned = pruned.size();
  report.pruning_rate = pruning_rate(pruned.size(), augmented);
  report.progression = p.progression;
  report.score = p.score;
  report.responsive_rate = responsive_rate(result.steps);
  report.estimated_cost = reasoner.usage().estimated_cost - cost_start;
  return result;
}

}  // namespace bottomup
