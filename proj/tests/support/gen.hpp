#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "stedeflick/histogram.hpp"
#include "stedeflick/image.hpp"

namespace testing_support {

// Small seeded generator for property tests. Each case gets its own seed so a
// failure can be replayed from the printed value.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  stedeflick::FrameRGB frame(int w, int h) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
    for (auto& p : px) p = static_cast<std::uint8_t>(integer(0, 255));
    return stedeflick::FrameRGB(w, h, std::move(px));
  }

  // Integer-valued map whose levels come from a random subset of [lo, hi].
  stedeflick::IlluminationMap map(int w, int h, int lo = 0, int hi = 255) {
    const int a = integer(lo, hi);
    const int b = integer(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (auto& x : v) x = integer(std::min(a, b), std::max(a, b));
    return stedeflick::IlluminationMap(w, h, std::move(v));
  }

  // Sparse random histogram: a handful of populated levels.
  stedeflick::Histogram histogram(int populated = 0) {
    if (populated == 0) populated = integer(1, 12);
    stedeflick::Histogram h;
    double total = 0.0;
    for (int i = 0; i < populated; ++i) {
      const double m = real(0.01, 1.0);
      h.bins[static_cast<std::size_t>(integer(0, 255))] += m;
      total += m;
    }
    for (auto& b : h.bins) b /= total;
    return h;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline stedeflick::FrameRGB solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  std::vector<std::uint8_t> px;
  px.reserve(static_cast<std::size_t>(w) * h * 3);
  for (int i = 0; i < w * h; ++i) {
    px.push_back(r);
    px.push_back(g);
    px.push_back(b);
  }
  return stedeflick::FrameRGB(w, h, std::move(px));
}

inline stedeflick::FrameRGB gray(int w, int h, std::uint8_t v) { return solid(w, h, v, v, v); }

}  // namespace testing_support
