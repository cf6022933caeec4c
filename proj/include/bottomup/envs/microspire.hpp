#pragma once

#include <array>
#include <memory>
#include <nlohmann/json.hpp>

#include "bottomup/environment.hpp"

namespace bottomup {

/// Normative layout table for MicroSpire. All boxes are inclusive
/// (col_min, row_min, col_max, row_max).
namespace microspire {

struct Box {
  int col0, row0, col1, row1;
  Point center() const { return {(col0 + col1) / 2, (row0 + row1) / 2}; }
  bool contains(Point p) const { return inside(p, col0, row0, col1, row1); }
};

inline constexpr GridSize kGrid{24, 16};

inline constexpr Box kEnemy{15, 1, 21, 6};
inline constexpr Point kEnemyHpAt{17, 5};  // two digits inside the enemy panel
inline constexpr Box kPlayer{1, 5, 5, 10};
inline constexpr Point kPlayerHpAt{2, 8};  // two digits inside the player panel
inline constexpr Point kBlockAt{2, 9};     // two digits inside the player panel
inline constexpr Box kEnergy{6, 12, 7, 13};
inline constexpr std::array<Box, 3> kHandSlots{{{9, 11, 11, 15}, {13, 11, 15, 15}, {17, 11, 19, 15}}};
inline constexpr Box kEndTurn{21, 12, 23, 14};

// Color codes.
inline constexpr int kColorPlayer = 1;
inline constexpr int kColorEnemy = 2;
inline constexpr int kColorEnergy = 3;
inline constexpr int kColorStrike = 4;
inline constexpr int kColorDefend = 5;
inline constexpr int kColorEndTurn = 6;

// Glyph codes (digits use 10..19).
inline constexpr int kGlyphEnemy = 30;
inline constexpr int kGlyphPlayer = 31;
inline constexpr int kGlyphStrike = 40;
inline constexpr int kGlyphDefend = 41;
inline constexpr int kGlyphEndTurn = 50;

// Rules.
inline constexpr int kPlayerMaxHp = 20;
inline constexpr int kEnemyBaseHp = 12;
inline constexpr int kEnemyHpPerFloor = 4;
inline constexpr int kEnemyAttack = 4;
inline constexpr int kStrikeDamage = 6;
inline constexpr int kDefendBlock = 5;
inline constexpr int kCardCost = 1;
inline constexpr int kMaxEnergy = 3;
inline constexpr int kVictoryFloor = 10;
inline constexpr int kScorePerFloor = 5;

enum class Card : int { None = 0, Strike = 1, Defend = 2 };

struct State {
  int player_hp = kPlayerMaxHp;
  int enemy_hp = kEnemyBaseHp;
  int block = 0;
  int energy = kMaxEnergy;
  int floors = 0;
  long damage_dealt = 0;
  std::array<Card, 3> hand{Card::Strike, Card::Strike, Card::Defend};
  long steps = 0;
  long ticks = 0;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_counter = 0;
  TerminalReason terminal = TerminalReason::None;

  bool operator==(const State&) const = default;
};

}  // namespace microspire

/// Card-battler micro-game: play Strike by dragging it onto the enemy, play
/// Defend by clicking it, and click End-Turn to let the enemy attack.
class MicroSpire final : public Environment {
 public:
  MicroSpire() { reset(0); }

  std::string_view id() const override { return "microspire"; }
  GridSize grid() const override { return microspire::kGrid; }

  Legend legend() const override {
    using namespace microspire;
    return {{kColorPlayer, "player"},      {kColorEnemy, "enemy"},         {kColorEnergy, "energy"},
            {kColorStrike, "strike card"}, {kColorDefend, "defend card"}, {kColorEndTurn, "end turn"}};
  }

  Observation reset(std::uint64_t seed) override {
    state_ = microspire::State{};
    state_.rng_seed = seed;
    return observe();
  }

  Observation apply(const AtomicAction& action) override {
    using namespace microspire;
    if (state_.terminal != TerminalReason::None) {
      throw TerminalError("microspire: action after terminal state");
    }
    check_in_bounds(action, kGrid);
    ++state_.steps;
    state_.ticks += std::holds_alternative<Wait>(action) ? std::get<Wait>(action).ticks : 1;

    if (const auto* drag = std::get_if<Drag>(&action)) {
      int slot = slot_at(drag->from);
      if (slot >= 0 && state_.hand[slot] == Card::Strike && kEnemy.contains(drag->to) &&
          state_.energy >= kCardCost) {
        play_strike(slot);
      }
    } else if (const auto* click = std::get_if<Click>(&action)) {
      int slot = slot_at(click->at);
      if (slot >= 0 && state_.hand[slot] == Card::Defend && state_.energy >= kCardCost) {
        state_.block += kDefendBlock;
        state_.energy -= kCardCost;
        state_.hand[slot] = Card::None;
      } else if (kEndTurn.contains(click->at)) {
        end_turn();
      }
    }
    if (state_.terminal == TerminalReason::None && state_.steps >= step_limit_) {
      state_.terminal = TerminalReason::StepLimit;
    }
    return observe();
  }

  Observation observe() const override {
    using namespace microspire;
    Canvas canvas(kGrid);
    canvas.fill(kEnemy.col0, kEnemy.row0, kEnemy.col1, kEnemy.row1, kGlyphEnemy, kColorEnemy);
    canvas.number(kEnemyHpAt.col, kEnemyHpAt.row, std::max(0, state_.enemy_hp), 2, kColorEnemy);
    canvas.fill(kPlayer.col0, kPlayer.row0, kPlayer.col1, kPlayer.row1, kGlyphPlayer, kColorPlayer);
    canvas.number(kPlayerHpAt.col, kPlayerHpAt.row, std::max(0, state_.player_hp), 2, kColorPlayer);
    canvas.number(kBlockAt.col, kBlockAt.row, state_.block, 2, kColorPlayer);
    canvas.fill(kEnergy.col0, kEnergy.row0, kEnergy.col1, kEnergy.row1, Canvas::kDigitGlyph + state_.energy,
                kColorEnergy);
    for (std::size_t i = 0; i < kHandSlots.size(); ++i) {
      const Box& b = kHandSlots[i];
      if (state_.hand[i] == Card::Strike) canvas.fill(b.col0, b.row0, b.col1, b.row1, kGlyphStrike, kColorStrike);
      if (state_.hand[i] == Card::Defend) canvas.fill(b.col0, b.row0, b.col1, b.row1, kGlyphDefend, kColorDefend);
    }
    canvas.fill(kEndTurn.col0, kEndTurn.row0, kEndTurn.col1, kEndTurn.row1, kGlyphEndTurn, kColorEndTurn);
    return std::move(canvas).finish();
  }

  ProgressReport progress() const override {
    ProgressReport r;
    r.env_id = "microspire";
    r.progression = state_.floors;
    r.score = microspire::kScorePerFloor * state_.floors + state_.damage_dealt;
    r.steps_taken = state_.steps;
    r.terminal = state_.terminal != TerminalReason::None;
    r.reason = state_.terminal;
    return r;
  }

  EnvSnapshot snapshot() const override {
    nlohmann::json j = {{"player_hp", state_.player_hp}, {"enemy_hp", state_.enemy_hp},
                        {"block", state_.block},         {"energy", state_.energy},
                        {"floors", state_.floors},       {"damage_dealt", state_.damage_dealt},
                        {"steps", state_.steps},         {"ticks", state_.ticks},
                        {"rng_seed", state_.rng_seed},   {"rng_counter", state_.rng_counter},
                        {"terminal", static_cast<int>(state_.terminal)}, {"step_limit", step_limit_}};
    j["hand"] = {static_cast<int>(state_.hand[0]), static_cast<int>(state_.hand[1]),
                 static_cast<int>(state_.hand[2])};
    return {"microspire", j.dump()};
  }

  Observation restore(const EnvSnapshot& snap) override {
    check_snapshot(snap);
    auto j = nlohmann::json::parse(snap.state);
    microspire::State s;
    s.player_hp = j.at("player_hp");
    s.enemy_hp = j.at("enemy_hp");
    s.block = j.at("block");
    s.energy = j.at("energy");
    s.floors = j.at("floors");
    s.damage_dealt = j.at("damage_dealt");
    s.steps = j.at("steps");
    s.ticks = j.at("ticks");
    s.rng_seed = j.at("rng_seed");
    s.rng_counter = j.at("rng_counter");
    s.terminal = static_cast<TerminalReason>(j.at("terminal").get<int>());
    for (std::size_t i = 0; i < 3; ++i) s.hand[i] = static_cast<microspire::Card>(j.at("hand").at(i).get<int>());
    step_limit_ = j.at("step_limit");
    state_ = s;
    return observe();
  }

  void reseed(std::uint64_t seed) override {
    state_.rng_seed = seed;
    state_.rng_counter = 0;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<MicroSpire>(*this); }

  const microspire::State& state() const noexcept { return state_; }

 private:
  static int slot_at(Point p) {
    for (std::size_t i = 0; i < microspire::kHandSlots.size(); ++i) {
      if (microspire::kHandSlots[i].contains(p)) return static_cast<int>(i);
    }
    return -1;
  }

  std::uint64_t draw() { return splitmix64(state_.rng_seed ^ splitmix64(state_.rng_counter++)); }

  void play_strike(int slot) {
    using namespace microspire;
    int dealt = std::min(kStrikeDamage, state_.enemy_hp);
    state_.enemy_hp -= kStrikeDamage;
    state_.damage_dealt += dealt;
    state_.energy -= kCardCost;
    state_.hand[static_cast<std::size_t>(slot)] = Card::None;
    if (state_.enemy_hp <= 0) {
      ++state_.floors;
      state_.enemy_hp = kEnemyBaseHp + kEnemyHpPerFloor * state_.floors;
      if (state_.floors >= kVictoryFloor) state_.terminal = TerminalReason::VictoryLimit;
    }
  }

  void end_turn() {
    using namespace microspire;
    state_.player_hp -= std::max(0, kEnemyAttack - state_.block);
    state_.block = 0;
    state_.energy = kMaxEnergy;
    for (auto& card : state_.hand) card = (draw() % 3 == 0) ? Card::Defend : Card::Strike;
    if (state_.player_hp <= 0) {
      state_.player_hp = 0;
      state_.terminal = TerminalReason::Defeat;
    }
  }

  microspire::State state_;
};

}  // namespace bottomup
