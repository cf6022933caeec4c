#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "bottomup/envs/registry.hpp"
#include "bottomup/skill.hpp"

namespace bottomup {

struct SearchConfig {
  int budget = 64;
  int max_depth = 3;
  double exploration_c = 1.414;
  double discount = 0.9;
  std::uint64_t seed = 0;

  void validate() const {
    if (budget < 1) throw InvalidArgument("search: budget must be >= 1");
    if (max_depth < 1) throw InvalidArgument("search: max_depth must be >= 1");
    if (exploration_c < 0.0) throw InvalidArgument("search: exploration_c must be >= 0");
  }
};

struct CandidateStats {
  SkillId id;
  long visits = 0;
  double mean_value = 0.0;
  double immediate_value = 0.0;  // mean value of this skill's own execution
  bool operator==(const CandidateStats&) const = default;
};

struct SearchResult {
  SkillId best_skill_id;
  std::vector<CandidateStats> candidates;  // input order
  long simulations = 0;
  bool operator==(const SearchResult&) const = default;
};

/// Maps one executed skill (screen before, screen after, progress change)
/// to a value in [0,1]. Must be safe to call concurrently.
using ValueFn = std::function<double(const Observation&, const Observation&, ProgressDelta)>;

/// UCT priority; unvisited children sort first.
inline double uct_score(double child_mean, long child_visits, long parent_visits, double c) {
  if (child_visits == 0) return std::numeric_limits<double>::infinity();
  return child_mean + c * std::sqrt(std::log(static_cast<double>(parent_visits)) / static_cast<double>(child_visits));
}

/// Runs every action of `skill` until the episode ends. Returns the value of
/// the whole execution.
inline double simulate_skill(Environment& env, const Skill& skill, const ValueFn& value_fn) {
  if (env.terminal()) return 0.0;
  Observation before = env.observe();
  ProgressReport p0 = env.progress();
  for (const auto& a : skill.actions) {
    if (env.terminal()) break;
    env.apply(a);
  }
  return value_fn(before, env.observe(), env.progress() - p0);
}

/// UCT over candidate skills. Every simulation restores a private copy of
/// the snapshot, so the caller's environment is never touched.
inline SearchResult search(const EnvSnapshot& snapshot, const std::vector<Skill>& candidates,
                           const SearchConfig& config, const ValueFn& value_fn) {
  config.validate();
  if (candidates.empty()) throw InvalidArgument("search: no candidates (augment first)");

  struct Node {
    int skill = -1;
    long visits = 0;
    double value_sum = 0.0;
    double immediate_sum = 0.0;
    std::vector<std::unique_ptr<Node>> children;  // indexed by candidate, null until expanded
    double mean() const { return visits ? value_sum / static_cast<double>(visits) : 0.0; }
  };

  const int n = static_cast<int>(candidates.size());
  Node root;
  root.children.resize(static_cast<std::size_t>(n));
  std::mt19937_64 rng(config.seed);
  auto base = environment_from(snapshot);

  for (int sim = 0; sim < config.budget; ++sim) {
    auto env = base->clone();
    env->reseed(rng());
    std::vector<Node*> path;
    std::vector<double> values;
    Node* node = &root;
    bool expanded = false;

    while (static_cast<int>(values.size()) < config.max_depth && !expanded) {
      int pick = -1;
      for (int i = 0; i < n; ++i) {
        if (!node->children[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
      if (pick >= 0) {
        auto child = std::make_unique<Node>();
        child->skill = pick;
        child->children.resize(static_cast<std::size_t>(n));
        node->children[static_cast<std::size_t>(pick)] = std::move(child);
        expanded = true;
      } else {
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
          const Node& ch = *node->children[static_cast<std::size_t>(i)];
          double s = uct_score(ch.mean(), ch.visits, std::max<long>(1, node->visits), config.exploration_c);
          if (s > best) {
            best = s;
            pick = i;
          }
        }
      }
      node = node->children[static_cast<std::size_t>(pick)].get();
      path.push_back(node);
      values.push_back(simulate_skill(*env, candidates[static_cast<std::size_t>(pick)], value_fn));
      if (env->terminal()) break;
    }

    while (static_cast<int>(values.size()) < config.max_depth && !env->terminal()) {
      const auto& skill = candidates[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n))];
      values.push_back(simulate_skill(*env, skill, value_fn));
    }

    // Nothing changes once the episode is over.
    values.resize(static_cast<std::size_t>(config.max_depth), 0.0);

    // Each node on the path receives the discounted mean of the values from
    // its own depth onwards.
    for (std::size_t j = 0; j < path.size(); ++j) {
      double num = 0.0;
      double den = 0.0;
      double w = 1.0;
      for (std::size_t d = j; d < values.size(); ++d) {
        num += w * values[d];
        den += w;
        w *= config.discount;
      }
      path[j]->visits += 1;
      path[j]->value_sum += den > 0.0 ? num / den : 0.0;
      path[j]->immediate_sum += values[j];
    }
    root.visits += 1;
  }

  SearchResult result;
  result.simulations = config.budget;
  int best = -1;
  for (int i = 0; i < n; ++i) {
    const auto& child = root.children[static_cast<std::size_t>(i)];
    CandidateStats st{candidates[static_cast<std::size_t>(i)].id, child ? child->visits : 0,
                      child ? child->mean() : 0.0,
                      child && child->visits ? child->immediate_sum / static_cast<double>(child->visits) : 0.0};
    result.candidates.push_back(st);
    if (best < 0) {
      best = i;
      continue;
    }
    const auto& b = result.candidates[static_cast<std::size_t>(best)];
    if (st.visits > b.visits || (st.visits == b.visits && st.mean_value > b.mean_value) ||
        (st.visits == b.visits && st.mean_value == b.mean_value && st.id < b.id)) {
      best = i;
    }
  }
  result.best_skill_id = result.candidates[static_cast<std::size_t>(best)].id;
  return result;
}

}  // namespace bottomup
