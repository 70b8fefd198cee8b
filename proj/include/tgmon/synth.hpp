#pragma once

// Deterministic synthetic content for fixtures and tests: smooth random
// images, pseudo-Portuguese text and seeded integer helpers. Only the raw
// output of std::mt19937_64 is used (its sequence is fixed by the
// standard); distributions are implemented here so outputs match across
// standard libraries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tgmon/image.hpp"

namespace tgmon::synth {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the result unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  bool chance(double p) { return unit() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Smooth RGB image: random low-frequency cosine texture (every basis
/// function up to 8 half-cycles per axis gets a random weight) plus a few
/// colored Gaussian blobs. Distinct draws give nearly independent perceptual
/// hashes, and the content survives recompression and mild rescaling.
inline Image smooth_image(Rng& rng, int width, int height) {
  constexpr int kBand = 8;
  double weights[kBand][kBand];
  for (int u = 0; u < kBand; ++u) {
    for (int v = 0; v < kBand; ++v) {
      weights[u][v] = (u == 0 && v == 0) ? 0.0 : rng.uniform(-1.0, 1.0) * 55.0 / (1.0 + 0.25 * (u + v));
    }
  }
  double base[3], tint[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(90, 165);
    tint[c] = rng.uniform(0.6, 1.2);
  }
  struct Blob {
    double cx, cy, sigma;
    double color[3];
  };
  const double side = std::min(width, height);
  std::vector<Blob> blobs(static_cast<std::size_t>(rng.between(2, 4)));
  for (auto& b : blobs) {
    b.cx = rng.uniform(0.0, 1.0) * width;
    b.cy = rng.uniform(0.0, 1.0) * height;
    b.sigma = rng.uniform(0.08, 0.2) * side;
    for (double& c : b.color) c = rng.uniform(-60, 60);
  }

  std::vector<double> cos_x(static_cast<std::size_t>(kBand * width));
  std::vector<double> cos_y(static_cast<std::size_t>(kBand * height));
  for (int u = 0; u < kBand; ++u) {
    for (int x = 0; x < width; ++x) {
      cos_x[static_cast<std::size_t>(u * width + x)] = std::cos(std::numbers::pi * u * (x + 0.5) / width);
    }
    for (int y = 0; y < height; ++y) {
      cos_y[static_cast<std::size_t>(u * height + y)] = std::cos(std::numbers::pi * u * (y + 0.5) / height);
    }
  }

  Image img(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double texture = 0.0;
      for (int u = 0; u < kBand; ++u) {
        for (int v = 0; v < kBand; ++v) {
          texture += weights[u][v] * cos_y[static_cast<std::size_t>(u * height + y)] *
                     cos_x[static_cast<std::size_t>(v * width + x)];
        }
      }
      for (int c = 0; c < 3; ++c) {
        double val = base[c] + tint[c] * texture;
        for (const auto& b : blobs) {
          const double dx = x - b.cx, dy = y - b.cy;
          val += b.color[c] * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
        }
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::round(val), 0.0, 255.0));
      }
    }
  }
  return img;
}

/// Word list built from Portuguese-like syllables, unique entries.
inline std::vector<std::string> vocabulary(Rng& rng, std::size_t size) {
  static const std::vector<std::string> kSyllables = {
      "ba", "be", "bi", "bo", "bu", "ca", "ce", "ci", "co", "cu", "da", "de", "di", "do",
      "du", "fa", "fe", "fi", "fo", "ga", "go", "la", "le", "li", "lo", "lu", "ma", "me",
      "mi", "mo", "mu", "na", "ne", "ni", "no", "pa", "pe", "pi", "po", "ra", "re", "ri",
      "ro", "sa", "se", "si", "so", "ta", "te", "ti", "to", "va", "ve", "vi", "vo", "ção",
      "são", "lá", "pé", "nó", "já", "ções", "nhe", "lha", "rão", "gua", "quê", "ês"};
  std::vector<std::string> words;
  std::set<std::string> seen;
  while (words.size() < size) {
    std::string w;
    auto n = rng.between(2, 4);
    for (std::int64_t i = 0; i < n; ++i) w += rng.pick(kSyllables);
    if (!seen.insert(w).second) continue;
    words.push_back(std::move(w));
  }
  return words;
}

}  // namespace tgmon::synth
