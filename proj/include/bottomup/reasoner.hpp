#pragma once

#include <array>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bottomup/embedding.hpp"
#include "bottomup/environment.hpp"
#include "bottomup/grounding.hpp"
#include "bottomup/skill.hpp"

namespace bottomup {

enum class Role { Select, Describe, Differ, Refine, Cluster };

inline constexpr std::array<Role, 5> kAllRoles = {Role::Select, Role::Describe, Role::Differ, Role::Refine,
                                                  Role::Cluster};

inline const char* to_string(Role r) {
  switch (r) {
    case Role::Select: return "select";
    case Role::Describe: return "describe";
    case Role::Differ: return "differ";
    case Role::Refine: return "refine";
    case Role::Cluster: return "cluster";
  }
  return "select";
}

/// Prompt template for one role. Slots: {observation_digest},
/// {skill_summaries}, {trajectory_digest}. Texts must stay free of any
/// game-specific vocabulary.
struct RoleTemplate {
  Role role;
  std::string_view template_id;
  std::string_view template_text;
};

inline constexpr std::array<RoleTemplate, 5> kRoleTemplates{{
    {Role::Select, "select.v1",
     "You see a screen as a grid of cells and a list of segmented regions.\n{observation_digest}\n"
     "Known routines:\n{skill_summaries}\n"
     "Return a JSON array with the ids of routines that are applicable to this screen. "
     "Return [] if none applies."},
    {Role::Describe, "describe.v1",
     "Screen before acting:\n{observation_digest}\nRoutine that was executed:\n{skill_summaries}\n"
     "What changed after each input:\n{trajectory_digest}\n"
     "Summarise in one short sentence the intent and visible effect of the routine."},
    {Role::Differ, "differ.v1",
     "Screen before and after a routine:\n{observation_digest}\nRoutine:\n{skill_summaries}\n"
     "Change summary:\n{trajectory_digest}\n"
     "Rate from 0 to 1 how much the routine advanced the task. Reply with a single number."},
    {Role::Refine, "refine.v1",
     "Screen before acting:\n{observation_digest}\nRoutine:\n{skill_summaries}\n"
     "Per-input changes:\n{trajectory_digest}\n"
     "Rewrite the routine as a shorter input sequence with the same effect, using the same token format "
     "joined by ';'. Reply with an empty string if it cannot be improved."},
    {Role::Cluster, "cluster.v1",
     "Routines with their descriptions:\n{skill_summaries}\n"
     "Group routines that are functionally equivalent. Reply with a JSON array of arrays of ids; "
     "omit routines that stand alone."},
}};

inline const RoleTemplate& role_template(Role r) { return kRoleTemplates[static_cast<std::size_t>(r)]; }

struct DigestElement {
  UIElement element;
  std::string label;
  std::string handle;  // salient token, e.g. "@strike-card.9.11"
};

/// What the reasoner sees of an observation: the text grid plus the
/// labelled segmented elements.
struct ObservationDigest {
  std::uint64_t state_hash = 0;
  std::string grid_text;
  std::vector<DigestElement> elements;

  std::string to_text() const {
    std::string out = grid_text;
    for (const auto& e : elements) {
      out += e.handle + " " + e.label + " bbox=" + std::to_string(e.element.bbox.col_min) + "," +
             std::to_string(e.element.bbox.row_min) + "," + std::to_string(e.element.bbox.col_max) + "," +
             std::to_string(e.element.bbox.row_max) + " sig=" + e.element.signature + "\n";
    }
    return out;
  }
};

inline std::string label_for(const Legend& legend, int color) {
  auto it = legend.find(color);
  return it != legend.end() ? it->second : "region " + std::to_string(color);
}

inline std::string slug(std::string_view label) {
  std::string out;
  for (char c : label) out.push_back(c == ' ' ? '-' : c);
  return out;
}

inline std::string element_handle(const std::string& label, const UIElement& e) {
  return "@" + slug(label) + "." + std::to_string(e.bbox.col_min) + "." + std::to_string(e.bbox.row_min);
}

inline constexpr std::string_view kKeysHandle = "@keys";

inline ObservationDigest make_digest(const Observation& obs, const Legend& legend) {
  ObservationDigest d;
  d.state_hash = obs.state_hash();
  d.grid_text = obs.to_text();
  for (auto& e : segment(obs)) {
    DigestElement de;
    de.label = label_for(legend, e.color);
    de.handle = element_handle(de.label, e);
    de.element = std::move(e);
    d.elements.push_back(std::move(de));
  }
  return d;
}

/// What the reasoner knows about one library skill.
struct SkillSummary {
  SkillId id;
  std::string descriptor;
  std::string fingerprint;
  std::uint64_t origin_hash = 0;
  Embedding embedding{};
  std::string kind_signature;
  std::string actions;  // canonical action string
  double mean_semantics = 0.0;
};

inline std::string summaries_text(const std::vector<SkillSummary>& summaries) {
  std::string out;
  for (const auto& s : summaries) {
    out += s.id + " | " + s.actions + " | " + (s.descriptor.empty() ? "(undescribed)" : s.descriptor) + "\n";
  }
  return out;
}

inline std::string trajectory_text(const Trajectory& t) {
  std::string out;
  for (std::size_t i = 0; i < t.per_step_diffs.size(); ++i) {
    out += "step " + std::to_string(i + 1) + ": changed fraction " + std::to_string(t.per_step_diffs[i]) + "\n";
  }
  out += "progress delta: " + std::to_string(t.progress_after.progression - t.progress_before.progression) +
         " levels, " + std::to_string(t.progress_after.score - t.progress_before.score) + " points\n";
  return out;
}

struct ReasonerUsage {
  std::map<std::string, std::uint64_t> calls;
  std::uint64_t failed_calls = 0;
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;
  double estimated_cost = 0.0;

  std::uint64_t total_calls() const {
    std::uint64_t n = 0;
    for (const auto& [role, c] : calls) n += c;
    return n;
  }
};

/// USD per million tokens.
struct PriceTable {
  double price_in = 2.5;
  double price_out = 10.0;
};

inline double token_cost(std::uint64_t tokens_in, std::uint64_t tokens_out, const PriceTable& p) {
  return static_cast<double>(tokens_in) * (p.price_in / 1e6) + static_cast<double>(tokens_out) * (p.price_out / 1e6);
}

/// Thread-safe running usage totals.
class UsageMeter {
 public:
  explicit UsageMeter(PriceTable prices = {}) : prices_(prices) {}

  void record(Role role, std::uint64_t tokens_in, std::uint64_t tokens_out, bool failed = false) {
    std::lock_guard lock(mu_);
    ++usage_.calls[to_string(role)];
    if (failed) ++usage_.failed_calls;
    usage_.tokens_in += tokens_in;
    usage_.tokens_out += tokens_out;
    usage_.estimated_cost = token_cost(usage_.tokens_in, usage_.tokens_out, prices_);
  }

  ReasonerUsage snapshot() const {
    std::lock_guard lock(mu_);
    ReasonerUsage u = usage_;
    for (Role r : kAllRoles) u.calls.try_emplace(to_string(r), 0);
    return u;
  }

  const PriceTable& prices() const noexcept { return prices_; }

 private:
  mutable std::mutex mu_;
  PriceTable prices_;
  ReasonerUsage usage_;
};

/// Source of fresh skill ids for refinement.
using IdSource = std::function<SkillId()>;

/// The model surface: five roles plus embedding and usage accounting.
class Reasoner {
 public:
  virtual ~Reasoner() = default;

  virtual std::vector<SkillId> select(const ObservationDigest& digest, const std::vector<SkillSummary>& library) = 0;
  virtual std::string describe(const Observation& before, const Skill& skill, const Trajectory& trajectory,
                               const Legend& legend) = 0;
  virtual double differ(const Skill& skill, const Observation& before, const Observation& after,
                        ProgressDelta progress) = 0;
  /// Returns a shortened variant, or nullopt for "no improvement".
  virtual std::optional<Skill> refine(const Observation& before, const Skill& skill, const Trajectory& trajectory,
                                      const IdSource& fresh_id) = 0;
  virtual std::vector<std::vector<SkillId>> cluster(const std::vector<SkillSummary>& skills) = 0;

  Embedding embed_text(std::string_view text) const { return embed(text); }
  virtual ReasonerUsage usage() const = 0;
};

}  // namespace bottomup
