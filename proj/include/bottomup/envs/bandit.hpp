#pragma once

#include <array>
#include <memory>
#include <nlohmann/json.hpp>

#include "bottomup/environment.hpp"

namespace bottomup {

/// Stateless three-arm Bernoulli bandit rendered as three buttons. Pulling
/// arm i adds 1 to the score with probability payoff[i]; the screen never
/// changes. Used to validate tree search in isolation.
class BanditEnv final : public Environment {
 public:
  static constexpr GridSize kGrid{24, 16};
  static constexpr int kArms = 3;
  struct ArmBox {
    int col0, row0, col1, row1;
  };
  static constexpr std::array<ArmBox, kArms> kArmBoxes{{{2, 6, 6, 9}, {10, 6, 14, 9}, {18, 6, 22, 9}}};

  explicit BanditEnv(std::array<double, kArms> payoff = {0.2, 0.5, 0.8}) : payoff_(payoff) { reset(0); }

  static Point arm_center(int arm) {
    const auto& b = kArmBoxes[static_cast<std::size_t>(arm)];
    return {(b.col0 + b.col1) / 2, (b.row0 + b.row1) / 2};
  }

  std::string_view id() const override { return "bandit"; }
  GridSize grid() const override { return kGrid; }
  Legend legend() const override { return {{13, "arm"}}; }

  Observation reset(std::uint64_t seed) override {
    rng_seed_ = seed;
    rng_counter_ = 0;
    score_ = 0;
    steps_ = 0;
    terminal_ = false;
    return observe();
  }

  Observation apply(const AtomicAction& action) override {
    if (terminal_) throw TerminalError("bandit: action after terminal state");
    check_in_bounds(action, kGrid);
    ++steps_;
    if (const auto* click = std::get_if<Click>(&action)) {
      for (int i = 0; i < kArms; ++i) {
        const auto& b = kArmBoxes[static_cast<std::size_t>(i)];
        if (!inside(click->at, b.col0, b.row0, b.col1, b.row1)) continue;
        std::uint64_t r = splitmix64(rng_seed_ ^ splitmix64(rng_counter_++));
        double u = static_cast<double>(r >> 11) * 0x1.0p-53;
        if (u < payoff_[static_cast<std::size_t>(i)]) ++score_;
      }
    }
    if (steps_ >= step_limit_) terminal_ = true;
    return observe();
  }

  Observation observe() const override {
    Canvas canvas(kGrid);
    for (int i = 0; i < kArms; ++i) {
      const auto& b = kArmBoxes[static_cast<std::size_t>(i)];
      canvas.fill(b.col0, b.row0, b.col1, b.row1, 80 + i, 13);
    }
    return std::move(canvas).finish();
  }

  ProgressReport progress() const override {
    ProgressReport r;
    r.env_id = "bandit";
    r.score = score_;
    r.steps_taken = steps_;
    r.terminal = terminal_;
    r.reason = terminal_ ? TerminalReason::StepLimit : TerminalReason::None;
    return r;
  }

  EnvSnapshot snapshot() const override {
    nlohmann::json j = {{"rng_seed", rng_seed_}, {"rng_counter", rng_counter_}, {"score", score_},
                        {"steps", steps_},       {"terminal", terminal_},       {"step_limit", step_limit_}};
    return {"bandit", j.dump()};
  }

  Observation restore(const EnvSnapshot& snap) override {
    check_snapshot(snap);
    auto j = nlohmann::json::parse(snap.state);
    rng_seed_ = j.at("rng_seed");
    rng_counter_ = j.at("rng_counter");
    score_ = j.at("score");
    steps_ = j.at("steps");
    terminal_ = j.at("terminal");
    step_limit_ = j.at("step_limit");
    return observe();
  }

  void reseed(std::uint64_t seed) override {
    rng_seed_ = seed;
    rng_counter_ = 0;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<BanditEnv>(*this); }

 private:
  std::array<double, kArms> payoff_;
  std::uint64_t rng_seed_ = 0;
  std::uint64_t rng_counter_ = 0;
  long score_ = 0;
  long steps_ = 0;
  bool terminal_ = false;
};

}  // namespace bottomup
