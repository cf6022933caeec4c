#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bottomup/observation.hpp"
#include "bottomup/skill.hpp"

namespace bottomup {

struct BoundingBox {
  int col_min = 0, row_min = 0, col_max = 0, row_max = 0;

  bool contains(Point p) const { return p.col >= col_min && p.col <= col_max && p.row >= row_min && p.row <= row_max; }
  bool overlaps(const BoundingBox& o) const {
    return !(o.col_min > col_max || o.col_max < col_min || o.row_min > row_max || o.row_max < row_min);
  }
  bool operator==(const BoundingBox&) const = default;
};

/// A segmented UI element: one 4-connected same-color component.
struct UIElement {
  BoundingBox bbox;
  Point center;
  std::string signature;  // "glyph:count,..." sorted by glyph
  int color = 0;
  std::size_t cell_count = 0;

  bool operator==(const UIElement&) const = default;
};

/// 4-connected components of non-background cells sharing a color,
/// ordered row-major by bbox origin.
inline std::vector<UIElement> segment(const Observation& obs) {
  const int w = obs.width();
  const int h = obs.height();
  std::vector<int> label(static_cast<std::size_t>(w * h), -1);
  std::vector<UIElement> out;
  std::vector<int> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r * w + c);
      const Cell& seed = obs.cells()[idx];
      if (seed.background() || label[idx] >= 0) continue;
      const int id = static_cast<int>(out.size());
      UIElement e;
      e.color = seed.color;
      e.bbox = {c, r, c, r};
      std::map<int, std::size_t> glyphs;
      stack.assign(1, static_cast<int>(idx));
      label[idx] = id;
      while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        int cc = cur % w;
        int cr = cur / w;
        ++glyphs[obs.cells()[static_cast<std::size_t>(cur)].glyph];
        ++e.cell_count;
        e.bbox.col_min = std::min(e.bbox.col_min, cc);
        e.bbox.col_max = std::max(e.bbox.col_max, cc);
        e.bbox.row_min = std::min(e.bbox.row_min, cr);
        e.bbox.row_max = std::max(e.bbox.row_max, cr);
        const int nbr[4][2] = {{cc - 1, cr}, {cc + 1, cr}, {cc, cr - 1}, {cc, cr + 1}};
        for (const auto& n : nbr) {
          if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
          std::size_t ni = static_cast<std::size_t>(n[1] * w + n[0]);
          const Cell& nc = obs.cells()[ni];
          if (label[ni] >= 0 || nc.background() || nc.color != e.color) continue;
          label[ni] = id;
          stack.push_back(static_cast<int>(ni));
        }
      }
      e.center = {(e.bbox.col_min + e.bbox.col_max) / 2, (e.bbox.row_min + e.bbox.row_max) / 2};
      for (const auto& [g, n] : glyphs) {
        if (!e.signature.empty()) e.signature.push_back(',');
        e.signature += std::to_string(g) + ":" + std::to_string(n);
      }
      out.push_back(std::move(e));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const UIElement& a, const UIElement& b) {
    if (a.bbox.row_min != b.bbox.row_min) return a.bbox.row_min < b.bbox.row_min;
    return a.bbox.col_min < b.bbox.col_min;
  });
  return out;
}

/// Candidate pool: a click on every element center, a drag between every
/// ordered pair of centers, and the seven keys. Pools larger than `budget`
/// keep every click and fill the rest with a seeded uniform subsample
/// (pool order preserved).
inline std::vector<AtomicAction> propose_actions(const std::vector<UIElement>& elements, std::size_t budget,
                                                 std::uint64_t seed) {
  if (budget < 1) throw InvalidArgument("propose_actions: budget must be >= 1");
  std::vector<AtomicAction> clicks;
  std::vector<AtomicAction> rest;
  for (const auto& e : elements) clicks.emplace_back(Click{e.center});
  for (std::size_t i = 0; i < elements.size(); ++i) {
    for (std::size_t j = 0; j < elements.size(); ++j) {
      if (i != j) rest.emplace_back(Drag{elements[i].center, elements[j].center});
    }
  }
  for (KeyCode k : kAllKeys) rest.emplace_back(Key{k});

  if (clicks.size() + rest.size() <= budget) {
    clicks.insert(clicks.end(), rest.begin(), rest.end());
    return clicks;
  }

  // Seeded selection sampling (Knuth's algorithm S): each subset of size m is
  // equally likely and the chosen items keep their pool order.
  auto sample = [](const std::vector<AtomicAction>& pool, std::size_t m, std::uint64_t s) {
    std::vector<AtomicAction> picked;
    std::size_t remaining = pool.size();
    std::uint64_t counter = 0;
    for (const auto& a : pool) {
      if (picked.size() == m) break;
      std::uint64_t r = splitmix64(s ^ splitmix64(counter++));
      if (r % remaining < m - picked.size()) picked.push_back(a);
      --remaining;
    }
    return picked;
  };

  if (clicks.size() >= budget) return sample(clicks, budget, seed);
  auto out = clicks;
  auto extra = sample(rest, budget - clicks.size(), splitmix64(seed + 1));
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

}  // namespace bottomup
