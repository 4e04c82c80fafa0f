#include "stedeflick/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stedeflick/error.hpp"

namespace stedeflick {

namespace {

void require_positive(int width, int height) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("raster size must be at least 1x1, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  }
}

}  // namespace

void require_same_size(Size a, Size b, std::string_view what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.width) + "x" +
                            std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                            std::to_string(b.height));
  }
}

std::uint8_t to_u8(double value) noexcept {
  if (!(value > 0.0)) return 0;  // also catches NaN
  if (value >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(value));
}

FrameRGB::FrameRGB(int width, int height) : size_{width, height} {
  require_positive(width, height);
  data_.assign(size_.area() * 3, 0);
}

FrameRGB::FrameRGB(int width, int height, std::vector<std::uint8_t> data)
    : size_{width, height}, data_(std::move(data)) {
  require_positive(width, height);
  if (data_.size() != size_.area() * 3) {
    throw InvalidArgument("frame data holds " + std::to_string(data_.size()) +
                          " bytes, expected " + std::to_string(size_.area() * 3));
  }
}

IlluminationMap::IlluminationMap(int width, int height, double fill) : size_{width, height} {
  require_positive(width, height);
  if (!(fill >= 0.0 && fill <= 255.0)) throw InvalidArgument("illumination fill outside [0,255]");
  values_.assign(size_.area(), fill);
}

IlluminationMap::IlluminationMap(int width, int height, std::vector<double> values)
    : size_{width, height}, values_(std::move(values)) {
  require_positive(width, height);
  if (values_.size() != size_.area()) {
    throw InvalidArgument("illumination map holds " + std::to_string(values_.size()) +
                          " values, expected " + std::to_string(size_.area()));
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 255.0)) {
      throw InvalidArgument("illumination value outside [0,255]: " + std::to_string(v));
    }
  }
}

BinaryMask::BinaryMask(int width, int height, std::uint8_t fill) : size_{width, height} {
  require_positive(width, height);
  if (fill > 1) throw InvalidArgument("mask fill must be 0 or 1");
  bits_.assign(size_.area(), fill);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : size_{width, height}, bits_(std::move(bits)) {
  require_positive(width, height);
  if (bits_.size() != size_.area()) {
    throw InvalidArgument("mask holds " + std::to_string(bits_.size()) + " entries, expected " +
                          std::to_string(size_.area()));
  }
  if (std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b > 1; })) {
    throw InvalidArgument("mask entries must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double BinaryMask::fraction() const noexcept {
  return static_cast<double>(count()) / static_cast<double>(pixel_count());
}

FrameSequence::FrameSequence(std::vector<FrameRGB> frames, double frame_rate)
    : frames_(std::move(frames)), frame_rate_(frame_rate) {
  if (frames_.empty()) throw InvalidArgument("frame sequence is empty");
  for (std::size_t t = 1; t < frames_.size(); ++t) {
    require_same_size(frames_[0].size(), frames_[t].size(),
                      "frame " + std::to_string(t) + " size differs from frame 0");
  }
}

IlluminationMap illumination_map(const FrameRGB& frame) {
  const auto rgb = frame.data();
  std::vector<double> v(frame.pixel_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::max({rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]});
  }
  return IlluminationMap(frame.width(), frame.height(), std::move(v));
}

FrameRGB apply_illumination(const FrameRGB& frame, const IlluminationMap& old_v,
                            const IlluminationMap& new_v) {
  require_same_size(frame.size(), old_v.size(), "apply_illumination: frame vs old illumination");
  require_same_size(frame.size(), new_v.size(), "apply_illumination: frame vs new illumination");

  const auto src = frame.data();
  const auto before = old_v.values();
  const auto after = new_v.values();
  std::vector<std::uint8_t> out(src.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i] <= 0.0) {
      const std::uint8_t gray = to_u8(after[i]);
      out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = gray;
      continue;
    }
    const double ratio = after[i] / before[i];
    for (std::size_t c = 0; c < 3; ++c) {
      out[3 * i + c] = to_u8(static_cast<double>(src[3 * i + c]) * ratio);
    }
  }
  return FrameRGB(frame.width(), frame.height(), std::move(out));
}

}  // namespace stedeflick
