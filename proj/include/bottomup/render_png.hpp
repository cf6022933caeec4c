#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bottomup/error.hpp"
#include "bottomup/observation.hpp"

namespace bottomup {

/// Debug palette, indexed by cell color. Documented in docs/colors.md.
inline constexpr std::array<std::array<std::uint8_t, 3>, 16> kPalette{{
    {0x10, 0x10, 0x18},  // 0 background
    {0x3c, 0x8d, 0xdc},  // 1
    {0xd2, 0x3c, 0x3c},  // 2
    {0xf0, 0xc8, 0x28},  // 3
    {0xe6, 0x78, 0x28},  // 4
    {0x46, 0xb4, 0x5a},  // 5
    {0xa0, 0xa0, 0xa8},  // 6
    {0x9b, 0x59, 0xb6},  // 7
    {0x1a, 0xbc, 0x9c},  // 8
    {0xe8, 0x43, 0x93},  // 9
    {0x7f, 0x8c, 0x2d},  // 10
    {0x5d, 0x6d, 0x7e},  // 11
    {0xff, 0xff, 0xff},  // 12
    {0x8e, 0x44, 0xad},  // 13
    {0x2e, 0x86, 0xc1},  // 14
    {0xca, 0x6f, 0x1e},  // 15
}};

inline constexpr int kCellPixels = 8;

namespace detail {

inline void put_be32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

inline void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_be32(out, static_cast<std::uint32_t>(crc32(0, reinterpret_cast<const Bytef*>(body.data()), body.size())));
}

}  // namespace detail

/// RGB PNG bytes: each cell becomes an 8x8 block in its palette color with
/// a 4x4 center shaded by the glyph.
inline std::string render_png(const Observation& obs) {
  const int w = obs.width() * kCellPixels;
  const int h = obs.height() * kCellPixels;
  std::string raw;
  raw.reserve(static_cast<std::size_t>(h) * (1 + 3 * w));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < w; ++x) {
      const Cell& c = obs.at(x / kCellPixels, y / kCellPixels);
      auto rgb = kPalette[c.color % kPalette.size()];
      const int px = x % kCellPixels;
      const int py = y % kCellPixels;
      if (!c.background() && px >= 2 && px < 6 && py >= 2 && py < 6) {
        const int shade = 40 + (c.glyph * 37) % 120;
        for (auto& ch : rgb) ch = static_cast<std::uint8_t>(ch > shade ? ch - shade : 0);
      }
      raw.append(reinterpret_cast<const char*>(rgb.data()), 3);
    }
  }
  uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_len, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw Error("render_png: compression failed");
  }
  packed.resize(packed_len);

  std::string png = "\x89PNG\r\n\x1a\n";
  std::string ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(w));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(h));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB
  detail::put_chunk(png, "IHDR", ihdr);
  detail::put_chunk(png, "IDAT", packed);
  detail::put_chunk(png, "IEND", "");
  return png;
}

inline void write_png(const Observation& obs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("render_png: cannot write " + path.string());
  out << render_png(obs);
}

}  // namespace bottomup
