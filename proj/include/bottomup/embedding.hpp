#pragma once

#include <cctype>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "bottomup/hash.hpp"
#include "bottomup/skill.hpp"

namespace bottomup {

/// Lowercased alphanumeric runs.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Hashed bag-of-words embedding, L2-normalised; empty text gives zeros.
inline Embedding embed(std::string_view text) {
  Embedding v{};
  for (const auto& tok : tokenize(text)) v[fnv1a64(tok) % kEmbeddingDim] += 1.0;
  double n = norm(v);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return v;
}

}  // namespace bottomup
