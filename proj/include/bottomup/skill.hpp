#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bottomup/error.hpp"
#include "bottomup/hash.hpp"
#include "bottomup/observation.hpp"

namespace bottomup {

struct Point {
  int col = 0;
  int row = 0;
  bool operator==(const Point&) const = default;
  auto operator<=>(const Point&) const = default;
};

enum class KeyCode { Enter, Escape, Space, Up, Down, Left, Right };

inline constexpr std::array<KeyCode, 7> kAllKeys = {KeyCode::Enter, KeyCode::Escape, KeyCode::Space, KeyCode::Up,
                                                    KeyCode::Down,  KeyCode::Left,   KeyCode::Right};

inline std::string_view key_name(KeyCode k) {
  switch (k) {
    case KeyCode::Enter: return "enter";
    case KeyCode::Escape: return "escape";
    case KeyCode::Space: return "space";
    case KeyCode::Up: return "up";
    case KeyCode::Down: return "down";
    case KeyCode::Left: return "left";
    case KeyCode::Right: return "right";
  }
  return "enter";
}

inline std::optional<KeyCode> parse_key(std::string_view name) {
  for (KeyCode k : kAllKeys) {
    if (key_name(k) == name) return k;
  }
  return std::nullopt;
}

struct Click {
  Point at;
  bool operator==(const Click&) const = default;
};
struct Drag {
  Point from;
  Point to;
  bool operator==(const Drag&) const = default;
};
struct Key {
  KeyCode code = KeyCode::Enter;
  bool operator==(const Key&) const = default;
};
struct Wait {
  int ticks = 1;
  bool operator==(const Wait&) const = default;
};

/// One low-level input event.
using AtomicAction = std::variant<Click, Drag, Key, Wait>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline std::string_view action_kind(const AtomicAction& a) {
  return std::visit(overloaded{[](const Click&) { return std::string_view("click"); },
                               [](const Drag&) { return std::string_view("drag"); },
                               [](const Key&) { return std::string_view("key"); },
                               [](const Wait&) { return std::string_view("wait"); }},
                    a);
}

/// Canonical token: click:c,r | drag:c1,r1->c2,r2 | key:name | wait:n
inline std::string to_string(const AtomicAction& a) {
  return std::visit(
      overloaded{[](const Click& c) { return "click:" + std::to_string(c.at.col) + "," + std::to_string(c.at.row); },
                 [](const Drag& d) {
                   return "drag:" + std::to_string(d.from.col) + "," + std::to_string(d.from.row) + "->" +
                          std::to_string(d.to.col) + "," + std::to_string(d.to.row);
                 },
                 [](const Key& k) { return "key:" + std::string(key_name(k.code)); },
                 [](const Wait& w) { return "wait:" + std::to_string(w.ticks); }},
      a);
}

namespace detail {

inline int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("bad integer in action '" + std::string(whole) + "'");
  }
  return v;
}

inline Point parse_point(std::string_view s, std::string_view whole) {
  auto comma = s.find(',');
  if (comma == std::string_view::npos) throw ParseError("bad point in action '" + std::string(whole) + "'");
  return {parse_int(s.substr(0, comma), whole), parse_int(s.substr(comma + 1), whole)};
}

}  // namespace detail

inline AtomicAction parse_action(std::string_view token) {
  auto colon = token.find(':');
  if (colon == std::string_view::npos) throw ParseError("missing ':' in action '" + std::string(token) + "'");
  std::string_view kind = token.substr(0, colon);
  std::string_view body = token.substr(colon + 1);
  if (kind == "click") return Click{detail::parse_point(body, token)};
  if (kind == "drag") {
    auto arrow = body.find("->");
    if (arrow == std::string_view::npos) throw ParseError("missing '->' in action '" + std::string(token) + "'");
    return Drag{detail::parse_point(body.substr(0, arrow), token), detail::parse_point(body.substr(arrow + 2), token)};
  }
  if (kind == "key") {
    auto k = parse_key(body);
    if (!k) throw ParseError("unknown key in action '" + std::string(token) + "'");
    return Key{*k};
  }
  if (kind == "wait") {
    int ticks = detail::parse_int(body, token);
    if (ticks < 1) throw ParseError("wait ticks must be positive in '" + std::string(token) + "'");
    return Wait{ticks};
  }
  throw ParseError("unknown action kind in '" + std::string(token) + "'");
}

inline std::string to_string(std::span<const AtomicAction> actions) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out.push_back(';');
    out += to_string(actions[i]);
  }
  return out;
}

inline std::vector<AtomicAction> parse_actions(std::string_view text) {
  std::vector<AtomicAction> out;
  while (!text.empty()) {
    auto semi = text.find(';');
    out.push_back(parse_action(text.substr(0, semi)));
    if (semi == std::string_view::npos) break;
    text.remove_prefix(semi + 1);
  }
  return out;
}

/// Throws InvalidArgument naming the first coordinate outside `grid`.
inline void check_in_bounds(const AtomicAction& a, GridSize grid) {
  auto check = [&](Point p) {
    if (!grid.contains(p.col, p.row)) {
      throw InvalidArgument("action " + to_string(a) + ": coordinate (" + std::to_string(p.col) + "," +
                            std::to_string(p.row) + ") outside " + std::to_string(grid.width) + "x" +
                            std::to_string(grid.height) + " grid");
    }
  };
  std::visit(overloaded{[&](const Click& c) { check(c.at); },
                        [&](const Drag& d) {
                          check(d.from);
                          check(d.to);
                        },
                        [](const Key&) {},
                        [&](const Wait& w) {
                          if (w.ticks < 1) throw InvalidArgument("wait ticks must be >= 1");
                        }},
             a);
}

inline constexpr std::size_t kEmbeddingDim = 64;
using Embedding = std::array<double, kEmbeddingDim>;
using SkillId = std::string;

struct ExecStats {
  std::uint64_t executions = 0;
  std::uint64_t responsive_executions = 0;
  double semantics_sum = 0.0;
  std::uint64_t semantics_count = 0;
  double last_total_reward = 0.0;

  double mean_semantics() const noexcept {
    return semantics_count == 0 ? 0.0 : semantics_sum / static_cast<double>(semantics_count);
  }
  bool operator==(const ExecStats&) const = default;
};

struct Skill {
  SkillId id;
  std::vector<AtomicAction> actions;
  std::string descriptor;
  Embedding embedding{};
  std::optional<SkillId> parent_id;
  std::string fingerprint;
  ExecStats stats;

  std::size_t length() const noexcept { return actions.size(); }
  bool operator==(const Skill&) const = default;
};

/// Canonical hash over the action list only (128-bit FNV-1a, hex).
inline std::string fingerprint(std::span<const AtomicAction> actions) {
  auto h = fnv1a128(to_string(actions));
  return to_hex(h[0]) + to_hex(h[1]);
}

inline std::string fingerprint(const Skill& s) { return fingerprint(s.actions); }

/// "click;drag" style sequence of action kinds.
inline std::string kind_signature(std::span<const AtomicAction> actions) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out.push_back(';');
    out += action_kind(actions[i]);
  }
  return out;
}

/// Builds a skill from an action list with a fresh id.
inline Skill make_skill(SkillId id, std::vector<AtomicAction> actions, std::optional<SkillId> parent = std::nullopt) {
  if (actions.empty()) throw InvalidArgument("skill must contain at least one action");
  Skill s;
  s.id = std::move(id);
  s.actions = std::move(actions);
  s.parent_id = std::move(parent);
  s.fingerprint = fingerprint(s.actions);
  return s;
}

/// Appends `action` to `parent` (or starts a new length-1 skill).
inline Skill augment(const Skill* parent, const AtomicAction& action, GridSize grid, SkillId fresh_id) {
  check_in_bounds(action, grid);
  std::vector<AtomicAction> actions;
  std::optional<SkillId> parent_id;
  if (parent) {
    actions = parent->actions;
    parent_id = parent->id;
  }
  actions.push_back(action);
  return make_skill(std::move(fresh_id), std::move(actions), std::move(parent_id));
}

struct Trajectory {
  Observation before;
  std::vector<Observation> after_states;
  std::vector<double> per_step_diffs;
  ProgressReport progress_before;
  ProgressReport progress_after;

  const Observation& last() const { return after_states.empty() ? before : after_states.back(); }
  bool responsive(double epsilon) const {
    return std::any_of(per_step_diffs.begin(), per_step_diffs.end(), [&](double d) { return d > epsilon; });
  }
};

struct RewardBreakdown {
  double diversity = 0.0;
  double efficiency = 0.0;
  double semantics = 0.0;
  double total = 0.0;
};

inline double efficiency_reward(const Skill& skill) {
  if (skill.actions.empty()) throw InvalidArgument("efficiency_reward: empty skill");
  return 1.0 / static_cast<double>(skill.actions.size());
}

inline double norm(const Embedding& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Cosine similarity; an all-zero operand yields 0.
inline double cosine(const Embedding& a, const Embedding& b) {
  double na = norm(a);
  double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) dot += a[i] * b[i];
  return dot / (na * nb);
}

/// 1 - max cosine against the library, clamped to [0,1]; 1 for an empty library.
inline double diversity_reward(const Embedding& skill_embedding, std::span<const std::vector<double>> library) {
  double best = 0.0;
  bool any = false;
  for (const auto& e : library) {
    if (e.size() != kEmbeddingDim) throw InvalidArgument("diversity_reward: embedding dimension mismatch");
    Embedding other{};
    std::copy(e.begin(), e.end(), other.begin());
    double c = cosine(skill_embedding, other);
    best = any ? std::max(best, c) : c;
    any = true;
  }
  if (!any) return 1.0;
  return std::clamp(1.0 - best, 0.0, 1.0);
}

inline double diversity_reward(const Skill& skill, std::span<const Embedding> library) {
  double best = 0.0;
  bool any = false;
  for (const auto& e : library) {
    double c = cosine(skill.embedding, e);
    best = any ? std::max(best, c) : c;
    any = true;
  }
  if (!any) return 1.0;
  return std::clamp(1.0 - best, 0.0, 1.0);
}

inline RewardBreakdown combine_rewards(double diversity, double efficiency, double semantics) {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument(std::string("combine_rewards: term '") + name + "' out of [0,1]: " + std::to_string(v));
    }
  };
  check(diversity, "diversity");
  check(efficiency, "efficiency");
  check(semantics, "semantics");
  return {diversity, efficiency, semantics, diversity + efficiency + semantics};
}

}  // namespace bottomup
