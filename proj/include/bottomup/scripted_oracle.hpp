#pragma once

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "bottomup/reasoner.hpp"

namespace bottomup {

inline constexpr std::size_t kSelectCap = 8;
inline constexpr double kClusterCosine = 0.9;
inline constexpr std::string_view kNoEffect = "no observable effect";

/// min(1, 4 * clamp(dprog + dscore / 20, 0, 1) + changed_fraction)
inline double semantic_rubric(double cell_diff_fraction, ProgressDelta delta) {
  double progress = std::clamp(static_cast<double>(delta.progression) + static_cast<double>(delta.score) / 20.0, 0.0, 1.0);
  return std::min(1.0, 4.0 * progress + cell_diff_fraction);
}

/// Whitespace-delimited descriptor tokens that start with '@'.
inline std::vector<std::string> salient_tokens(std::string_view descriptor) {
  std::vector<std::string> out;
  std::istringstream in{std::string(descriptor)};
  std::string tok;
  while (in >> tok) {
    if (!tok.empty() && tok.front() == '@') out.push_back(tok);
  }
  return out;
}

/// Handle of the element the skill's first input lands on, if any.
inline std::optional<std::string> anchor_handle(const Observation& obs, const Skill& skill, const Legend& legend) {
  if (skill.actions.empty()) return std::nullopt;
  const AtomicAction& first = skill.actions.front();
  if (std::holds_alternative<Key>(first)) return std::string(kKeysHandle);
  std::optional<Point> p;
  if (const auto* c = std::get_if<Click>(&first)) p = c->at;
  if (const auto* d = std::get_if<Drag>(&first)) p = d->from;
  if (!p) return std::nullopt;
  for (const auto& e : segment(obs)) {
    if (e.bbox.contains(*p) && !obs.at(p->col, p->row).background()) return element_handle(label_for(legend, e.color), e);
  }
  return std::nullopt;
}

namespace detail {

/// Numeric reading of the digit glyphs inside a group of elements (read in
/// row-major order); none when the group shows no digits.
inline std::optional<long> read_number(const Observation& obs, const std::vector<UIElement>& elems) {
  long total = 0;
  bool any = false;
  for (const auto& e : elems) {
    long v = 0;
    for (int r = e.bbox.row_min; r <= e.bbox.row_max; ++r) {
      for (int c = e.bbox.col_min; c <= e.bbox.col_max; ++c) {
        const Cell& cell = obs.at(c, r);
        if (cell.color != e.color || !is_digit_glyph(cell.glyph)) continue;
        v = v * 10 + (cell.glyph - Canvas::kDigitGlyph);
        any = true;
      }
    }
    total += v;
  }
  if (!any) return std::nullopt;
  return total;
}

inline bool region_changed(const Observation& a, const Observation& b, const std::vector<UIElement>& elems) {
  for (const auto& e : elems) {
    for (int r = e.bbox.row_min; r <= e.bbox.row_max; ++r) {
      for (int c = e.bbox.col_min; c <= e.bbox.col_max; ++c) {
        if (!(a.at(c, r) == b.at(c, r))) return true;
      }
    }
  }
  return false;
}

}  // namespace detail

/// Effect clauses between two observations, one per affected label.
inline std::vector<std::string> effect_clauses(const Observation& before, const Observation& after,
                                               const Legend& legend) {
  std::map<int, std::vector<UIElement>> b_by_color;
  std::map<int, std::vector<UIElement>> a_by_color;
  for (auto& e : segment(before)) b_by_color[e.color].push_back(e);
  for (auto& e : segment(after)) a_by_color[e.color].push_back(e);
  std::set<int> colors;
  for (const auto& [c, _] : b_by_color) colors.insert(c);
  for (const auto& [c, _] : a_by_color) colors.insert(c);

  std::vector<std::string> out;
  for (int color : colors) {
    const auto& bs = b_by_color[color];
    const auto& as = a_by_color[color];
    const std::string label = label_for(legend, color);
    if (as.size() < bs.size()) {
      out.push_back("removes " + label);
      continue;
    }
    if (as.size() > bs.size()) {
      out.push_back("adds " + label);
      continue;
    }
    auto bv = detail::read_number(before, bs);
    auto av = detail::read_number(after, as);
    if (bv && av && *av != *bv) {
      out.push_back((*av < *bv ? "reduces " : "increases ") + label + " value");
      continue;
    }
    if (detail::region_changed(before, after, bs) || detail::region_changed(before, after, as)) {
      out.push_back("changes " + label);
    }
  }
  return out;
}

/// Deterministic stand-in for the model: every role follows a fixed rule.
class ScriptedOracle : public Reasoner {
 public:
  std::vector<SkillId> select(const ObservationDigest& digest, const std::vector<SkillSummary>& library) override {
    meter_.record(Role::Select, 0, 0);
    return select_rule(digest, library);
  }

  /// Candidates: skills recorded on this exact screen, then skills whose
  /// descriptor shares a salient token with the screen; id order, capped.
  static std::vector<SkillId> select_rule(const ObservationDigest& digest, const std::vector<SkillSummary>& library) {
    std::set<std::string> salient{std::string(kKeysHandle)};
    for (const auto& e : digest.elements) salient.insert(e.handle);

    std::vector<const SkillSummary*> sorted;
    for (const auto& s : library) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::vector<SkillId> exact;
    std::vector<SkillId> token;
    for (const auto* s : sorted) {
      if (s->origin_hash == digest.state_hash) {
        exact.push_back(s->id);
        continue;
      }
      for (const auto& t : salient_tokens(s->descriptor)) {
        if (salient.count(t)) {
          token.push_back(s->id);
          break;
        }
      }
    }
    exact.insert(exact.end(), token.begin(), token.end());
    if (exact.size() > kSelectCap) exact.resize(kSelectCap);
    return exact;
  }

  std::string describe(const Observation& before, const Skill& skill, const Trajectory& trajectory,
                       const Legend& legend) override {
    meter_.record(Role::Describe, 0, 0);
    return describe_rule(before, skill, trajectory, legend);
  }

  static std::string describe_rule(const Observation& before, const Skill& skill, const Trajectory& trajectory,
                                   const Legend& legend) {
    if (trajectory.after_states.empty()) throw InvalidArgument("describe: empty trajectory");
    if (!trajectory.responsive(0.0)) return std::string(kNoEffect);
    auto clauses = effect_clauses(before, trajectory.last(), legend);
    std::string text;
    for (const auto& c : clauses) {
      if (!text.empty()) text += ", ";
      text += c;
    }
    if (text.empty()) text = "transient change";
    if (auto anchor = anchor_handle(before, skill, legend)) text += " " + *anchor;
    return text;
  }

  double differ(const Skill&, const Observation& before, const Observation& after, ProgressDelta progress) override {
    meter_.record(Role::Differ, 0, 0);
    return semantic_rubric(observation_diff(before, after), progress);
  }

  std::optional<Skill> refine(const Observation&, const Skill& skill, const Trajectory& trajectory,
                              const IdSource& fresh_id) override {
    meter_.record(Role::Refine, 0, 0);
    return refine_rule(skill, trajectory, fresh_id);
  }

  /// Drops trailing inputs that changed nothing; never returns an empty skill.
  static std::optional<Skill> refine_rule(const Skill& skill, const Trajectory& trajectory, const IdSource& fresh_id) {
    if (skill.actions.empty()) throw InvalidArgument("refine: empty skill");
    std::size_t keep = std::min(skill.actions.size(), trajectory.per_step_diffs.size());
    while (keep > 0 && trajectory.per_step_diffs[keep - 1] <= 0.0) --keep;
    if (keep == 0 || keep == skill.actions.size()) return std::nullopt;
    std::vector<AtomicAction> actions(skill.actions.begin(), skill.actions.begin() + static_cast<long>(keep));
    return make_skill(fresh_id(), std::move(actions), skill.parent_id);
  }

  std::vector<std::vector<SkillId>> cluster(const std::vector<SkillSummary>& skills) override {
    meter_.record(Role::Cluster, 0, 0);
    return cluster_rule(skills);
  }

  /// Same kind signature and cosine >= 0.9, closed transitively. Members
  /// and groups are ordered by id; singletons are omitted.
  static std::vector<std::vector<SkillId>> cluster_rule(const std::vector<SkillSummary>& skills) {
    std::vector<const SkillSummary*> sorted;
    for (const auto& s : skills) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
    std::vector<std::size_t> parent(sorted.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      for (std::size_t j = i + 1; j < sorted.size(); ++j) {
        if (sorted[i]->kind_signature != sorted[j]->kind_signature) continue;
        if (cosine(sorted[i]->embedding, sorted[j]->embedding) < kClusterCosine) continue;
        parent[find(j)] = find(i);
      }
    }
    std::map<std::size_t, std::vector<SkillId>> groups;
    for (std::size_t i = 0; i < sorted.size(); ++i) groups[find(i)].push_back(sorted[i]->id);
    std::vector<std::vector<SkillId>> out;
    for (auto& [root, members] : groups) {
      if (members.size() > 1) out.push_back(std::move(members));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  ReasonerUsage usage() const override { return meter_.snapshot(); }

 private:
  UsageMeter meter_;
};

}  // namespace bottomup
