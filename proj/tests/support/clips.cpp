#include "support/clips.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace testing_support {

using stedeflick::to_u8;

Texture::Texture(std::uint64_t seed, double lo, double hi) : lo_(lo), hi_(hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(0.04, 0.25);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  for (int i = 0; i < 5; ++i) {
    const double f = freq(rng);
    const double a = angle(rng);
    waves_.push_back({f * std::cos(a), f * std::sin(a), angle(rng), amp(rng)});
  }
}

double Texture::value(double x, double y) const {
  double s = 0.0;
  double norm = 0.0;
  for (const auto& w : waves_) {
    s += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
    norm += w.amp;
  }
  const double unit = 0.5 + 0.5 * s / norm;  // [0, 1]
  return lo_ + (hi_ - lo_) * unit;
}

FrameRGB Texture::render(int width, int height, double dx, double dy) const {
  FrameRGB f(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = value(x + dx, y + dy);
      f.at(x, y, 0) = to_u8(v);
      f.at(x, y, 1) = to_u8(0.75 * v + 10.0);
      f.at(x, y, 2) = to_u8(0.55 * v + 20.0);
    }
  }
  return f;
}

FrameSequence moving_pattern(std::uint64_t seed, int frames, int width, int height) {
  const Texture tex(seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  const double vx = vel(rng);
  const double vy = vel(rng);
  std::vector<FrameRGB> out;
  for (int t = 0; t < frames; ++t) out.push_back(tex.render(width, height, vx * t, vy * t));
  return FrameSequence(std::move(out));
}

FrameSequence static_texture(std::uint64_t seed, int frames, int width, int height, double lo,
                             double hi) {
  const Texture tex(seed, lo, hi);
  const FrameRGB f = tex.render(width, height);
  return FrameSequence(std::vector<FrameRGB>(static_cast<std::size_t>(frames), f));
}

std::vector<double> noise_plane(std::uint64_t seed, int width, int height) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  std::vector<double> raw(static_cast<std::size_t>(width) * height);
  for (double& v : raw) v = u(rng);
  std::vector<double> out(raw.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = std::clamp(x + dx, 0, width - 1);
          const int yy = std::clamp(y + dy, 0, height - 1);
          s += raw[static_cast<std::size_t>(yy) * width + xx];
          ++n;
        }
      }
      out[static_cast<std::size_t>(y) * width + x] = s / n;
    }
  }
  return out;
}

FrameSequence with_frame(const FrameSequence& seq, std::size_t t, FrameRGB replacement) {
  std::vector<FrameRGB> frames = seq.frames();
  frames[t] = std::move(replacement);
  return FrameSequence(std::move(frames), seq.frame_rate());
}

}  // namespace testing_support
