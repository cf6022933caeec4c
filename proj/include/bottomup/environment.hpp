#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "bottomup/error.hpp"
#include "bottomup/observation.hpp"
#include "bottomup/skill.hpp"

namespace bottomup {

/// Opaque, immutable environment state (including RNG state).
struct EnvSnapshot {
  std::string env_id;
  std::string state;
  bool operator==(const EnvSnapshot&) const = default;
};

/// Maps color codes to the names a vision front-end would assign them.
/// Only the reasoner's digest uses it; the engine itself never does.
using Legend = std::map<int, std::string>;

/// A deterministic, seedable POMDP exposing raster observations only.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string_view id() const = 0;
  virtual GridSize grid() const = 0;
  virtual Legend legend() const = 0;

  virtual Observation reset(std::uint64_t seed) = 0;
  /// Applies one atomic action. Throws TerminalError after the episode ended.
  virtual Observation apply(const AtomicAction& action) = 0;
  virtual Observation observe() const = 0;
  virtual ProgressReport progress() const = 0;

  virtual EnvSnapshot snapshot() const = 0;
  /// Throws InvalidArgument when the snapshot comes from another env id.
  virtual Observation restore(const EnvSnapshot& snap) = 0;

  /// Replaces the hidden RNG stream without touching visible state. Search
  /// uses this to sample stochastic futures from one snapshot.
  virtual void reseed(std::uint64_t seed) = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;

  bool terminal() const { return progress().terminal; }

  /// Caps the number of atomic actions per episode (step-limit terminal).
  void set_step_limit(long limit) { step_limit_ = limit; }
  long step_limit() const noexcept { return step_limit_; }

 protected:
  void check_snapshot(const EnvSnapshot& snap) const {
    if (snap.env_id != id()) {
      throw InvalidArgument("snapshot from env '" + snap.env_id + "' cannot be restored into '" + std::string(id()) +
                            "'");
    }
  }

  long step_limit_ = 1000;
};

/// Small helper for building raster frames.
class Canvas {
 public:
  explicit Canvas(GridSize size) : size_(size), cells_(static_cast<std::size_t>(size.cells())) {}

  void fill(int col0, int row0, int col1, int row1, int glyph, int color) {
    for (int r = row0; r <= row1; ++r) {
      for (int c = col0; c <= col1; ++c) set(c, r, glyph, color);
    }
  }

  void set(int col, int row, int glyph, int color) {
    if (!size_.contains(col, row)) return;
    cells_[static_cast<std::size_t>(row * size_.width + col)] =
        Cell{static_cast<std::uint8_t>(glyph), static_cast<std::uint8_t>(color)};
  }

  /// Writes `value` as `width` decimal digit glyphs (codes 10..19).
  void number(int col, int row, long value, int width, int color) {
    if (value < 0) value = 0;
    for (int i = width - 1; i >= 0; --i) {
      set(col + i, row, kDigitGlyph + static_cast<int>(value % 10), color);
      value /= 10;
    }
  }

  Observation finish() && { return Observation(size_.width, size_.height, std::move(cells_)); }

  static constexpr int kDigitGlyph = 10;

 private:
  GridSize size_;
  std::vector<Cell> cells_;
};

inline bool is_digit_glyph(int glyph) { return glyph >= Canvas::kDigitGlyph && glyph < Canvas::kDigitGlyph + 10; }

inline bool inside(Point p, int col0, int row0, int col1, int row1) {
  return p.col >= col0 && p.col <= col1 && p.row >= row0 && p.row <= row1;
}

}  // namespace bottomup
