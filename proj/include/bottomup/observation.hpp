#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bottomup/error.hpp"
#include "bottomup/hash.hpp"

namespace bottomup {

struct GridSize {
  int width = 0;
  int height = 0;

  bool contains(int col, int row) const noexcept {
    return col >= 0 && row >= 0 && col < width && row < height;
  }
  int cells() const noexcept { return width * height; }
  bool operator==(const GridSize&) const = default;
};

/// One raster cell. glyph == 0 iff color == 0 (background).
struct Cell {
  std::uint8_t glyph = 0;
  std::uint8_t color = 0;

  bool background() const noexcept { return glyph == 0; }
  bool operator==(const Cell&) const = default;
};

/// A visual-only observation: a row-major cell grid and its canonical hash.
class Observation {
 public:
  Observation() = default;
  Observation(int width, int height, std::vector<Cell> cells)
      : size_{width, height}, cells_(std::move(cells)) {
    if (width < 0 || height < 0 || cells_.size() != static_cast<std::size_t>(width) * height) {
      throw InvalidArgument("observation: cell count does not match dimensions");
    }
    for (const Cell& c : cells_) {
      if ((c.glyph == 0) != (c.color == 0)) {
        throw InvalidArgument("observation: glyph/color background mismatch");
      }
    }
    state_hash_ = compute_hash();
  }

  int width() const noexcept { return size_.width; }
  int height() const noexcept { return size_.height; }
  GridSize size() const noexcept { return size_; }
  const std::vector<Cell>& cells() const noexcept { return cells_; }
  const Cell& at(int col, int row) const { return cells_.at(static_cast<std::size_t>(row * size_.width + col)); }
  std::uint64_t state_hash() const noexcept { return state_hash_; }

  bool operator==(const Observation& o) const { return size_ == o.size_ && cells_ == o.cells_; }

  /// Text rendering used in reasoner digests: one line per row, "." for
  /// background, otherwise a base-36 glyph digit.
  std::string to_text() const {
    static constexpr char kAlphabet[] = "0123456789abcdefghijklmnopqrstuvwxyz";
    std::string out;
    out.reserve(static_cast<std::size_t>((size_.width + 1) * size_.height));
    for (int r = 0; r < size_.height; ++r) {
      for (int c = 0; c < size_.width; ++c) {
        const Cell& cell = at(c, r);
        out.push_back(cell.background() ? '.' : kAlphabet[cell.glyph % 36]);
      }
      out.push_back('\n');
    }
    return out;
  }

 private:
  std::uint64_t compute_hash() const {
    std::string bytes;
    bytes.reserve(8 + cells_.size() * 2);
    for (int v : {size_.width, size_.height}) {
      for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    for (const Cell& c : cells_) {
      bytes.push_back(static_cast<char>(c.glyph));
      bytes.push_back(static_cast<char>(c.color));
    }
    return fnv1a64(bytes);
  }

  GridSize size_;
  std::vector<Cell> cells_;
  std::uint64_t state_hash_ = fnv1a64("");
};

/// Fraction of cells whose (glyph, color) pair differs. Hamming distance
/// normalised by cell count, so it is a metric on equal-sized grids.
inline double observation_diff(const Observation& a, const Observation& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("observation_diff: dimension mismatch");
  }
  const auto& ca = a.cells();
  const auto& cb = b.cells();
  if (ca.empty()) return 0.0;
  std::size_t differing = 0;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (!(ca[i] == cb[i])) ++differing;
  }
  return static_cast<double>(differing) / static_cast<double>(ca.size());
}

enum class TerminalReason { None, VictoryLimit, Defeat, StepLimit };

inline const char* to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::None: return "none";
    case TerminalReason::VictoryLimit: return "victory-limit";
    case TerminalReason::Defeat: return "defeat";
    case TerminalReason::StepLimit: return "step-limit";
  }
  return "none";
}

struct ProgressReport {
  std::string env_id;
  long progression = 0;
  long score = 0;
  long steps_taken = 0;
  bool terminal = false;
  TerminalReason reason = TerminalReason::None;

  bool operator==(const ProgressReport&) const = default;
};

/// Progress change across an executed skill, fed to the semantic rubric.
struct ProgressDelta {
  long progression = 0;
  long score = 0;
};

inline ProgressDelta operator-(const ProgressReport& after, const ProgressReport& before) {
  return {after.progression - before.progression, after.score - before.score};
}

}  // namespace bottomup
