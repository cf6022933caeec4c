#pragma once

#include <array>
#include <bit>
#include <memory>
#include <nlohmann/json.hpp>

#include "bottomup/environment.hpp"

namespace bottomup {

namespace buttonworld {

inline constexpr GridSize kGrid{24, 16};
inline constexpr int kLevels = 5;
inline constexpr int kButtons = 3;

struct ButtonBox {
  int col0, row0, col1, row1;
};
inline constexpr std::array<ButtonBox, kButtons> kButtonBoxes{{{2, 7, 6, 9}, {10, 7, 14, 9}, {18, 7, 22, 9}}};

inline constexpr int kColorDepth = 10;
inline constexpr int kColorTitle = 11;
inline constexpr int kColorButton = 12;
inline constexpr int kGlyphTitle = 60;
inline constexpr int kGlyphButton = 70;

/// Index of the button that advances from `depth` to `depth + 1`.
inline int correct_button(std::uint64_t seed, int depth) {
  return static_cast<int>(splitmix64(seed * kLevels + static_cast<std::uint64_t>(depth)) % kButtons);
}

}  // namespace buttonworld

/// Menu-navigation game: each screen shows three buttons, exactly one of
/// which goes one level deeper; a wrong button returns to the root screen.
class ButtonWorld final : public Environment {
 public:
  ButtonWorld() { reset(0); }

  std::string_view id() const override { return "buttonworld"; }
  GridSize grid() const override { return buttonworld::kGrid; }
  Legend legend() const override {
    return {{buttonworld::kColorDepth, "depth"}, {buttonworld::kColorTitle, "title"}, {buttonworld::kColorButton, "button"}};
  }

  Observation reset(std::uint64_t seed) override {
    seed_ = seed;
    depth_ = 0;
    max_depth_ = 0;
    visited_ = 0;
    steps_ = 0;
    ticks_ = 0;
    terminal_ = TerminalReason::None;
    return observe();
  }

  Observation apply(const AtomicAction& action) override {
    if (terminal_ != TerminalReason::None) throw TerminalError("buttonworld: action after terminal state");
    check_in_bounds(action, buttonworld::kGrid);
    ++steps_;
    ticks_ += std::holds_alternative<Wait>(action) ? std::get<Wait>(action).ticks : 1;
    if (const auto* click = std::get_if<Click>(&action)) {
      for (int i = 0; i < buttonworld::kButtons; ++i) {
        const auto& b = buttonworld::kButtonBoxes[static_cast<std::size_t>(i)];
        if (!inside(click->at, b.col0, b.row0, b.col1, b.row1)) continue;
        if (i == buttonworld::correct_button(seed_, depth_)) {
          ++depth_;
          visited_ |= 1u << depth_;
          max_depth_ = std::max(max_depth_, depth_);
          if (depth_ >= buttonworld::kLevels) terminal_ = TerminalReason::VictoryLimit;
        } else {
          depth_ = 0;
        }
      }
    }
    if (terminal_ == TerminalReason::None && steps_ >= step_limit_) terminal_ = TerminalReason::StepLimit;
    return observe();
  }

  Observation observe() const override {
    using namespace buttonworld;
    Canvas canvas(kGrid);
    canvas.number(0, 0, depth_, 2, kColorDepth);
    canvas.fill(6, 2, 17, 3, kGlyphTitle + depth_, kColorTitle);
    if (depth_ < kLevels) {
      for (int i = 0; i < kButtons; ++i) {
        const auto& b = kButtonBoxes[static_cast<std::size_t>(i)];
        canvas.fill(b.col0, b.row0, b.col1, b.row1, kGlyphButton + depth_ * kButtons + i, kColorButton);
      }
    }
    return std::move(canvas).finish();
  }

  ProgressReport progress() const override {
    ProgressReport r;
    r.env_id = "buttonworld";
    r.progression = max_depth_;
    r.score = std::popcount(visited_);
    r.steps_taken = steps_;
    r.terminal = terminal_ != TerminalReason::None;
    r.reason = terminal_;
    return r;
  }

  EnvSnapshot snapshot() const override {
    nlohmann::json j = {{"seed", seed_},   {"depth", depth_}, {"max_depth", max_depth_},
                        {"visited", visited_}, {"steps", steps_}, {"ticks", ticks_},
                        {"terminal", static_cast<int>(terminal_)}, {"step_limit", step_limit_}};
    return {"buttonworld", j.dump()};
  }

  Observation restore(const EnvSnapshot& snap) override {
    check_snapshot(snap);
    auto j = nlohmann::json::parse(snap.state);
    seed_ = j.at("seed");
    depth_ = j.at("depth");
    max_depth_ = j.at("max_depth");
    visited_ = j.at("visited");
    steps_ = j.at("steps");
    ticks_ = j.at("ticks");
    terminal_ = static_cast<TerminalReason>(j.at("terminal").get<int>());
    step_limit_ = j.at("step_limit");
    return observe();
  }

  // Button placement is fixed by the reset seed; there is no hidden randomness.
  void reseed(std::uint64_t) override {}

  std::unique_ptr<Environment> clone() const override { return std::make_unique<ButtonWorld>(*this); }

  int depth() const noexcept { return depth_; }

 private:
  std::uint64_t seed_ = 0;
  int depth_ = 0;
  int max_depth_ = 0;
  unsigned visited_ = 0;
  long steps_ = 0;
  long ticks_ = 0;
  TerminalReason terminal_ = TerminalReason::None;
};

}  // namespace bottomup
