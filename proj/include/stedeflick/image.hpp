#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace stedeflick {

struct Size {
  int width = 0;
  int height = 0;

  std::size_t area() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool operator==(const Size&) const = default;
};

/// One 8-bit frame, interleaved R,G,B, row-major.
class FrameRGB {
 public:
  /// Zero-filled frame. Throws InvalidArgument unless both sides are >= 1.
  FrameRGB(int width, int height);
  /// Takes ownership of `data`, which must hold width * height * 3 bytes.
  FrameRGB(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return size_.width; }
  int height() const noexcept { return size_.height; }
  Size size() const noexcept { return size_; }
  std::size_t pixel_count() const noexcept { return size_.area(); }

  std::uint8_t at(int x, int y, int channel) const noexcept {
    return data_[index(x, y) * 3 + static_cast<std::size_t>(channel)];
  }
  std::uint8_t& at(int x, int y, int channel) noexcept {
    return data_[index(x, y) * 3 + static_cast<std::size_t>(channel)];
  }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  bool operator==(const FrameRGB&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) +
           static_cast<std::size_t>(x);
  }

  Size size_;
  std::vector<std::uint8_t> data_;
};

/// Single-channel intensity plane with values in [0, 255]. Integer-valued when
/// extracted from a frame, real-valued after a lookup-table correction.
class IlluminationMap {
 public:
  IlluminationMap(int width, int height, double fill = 0.0);
  /// Throws InvalidArgument on a size mismatch or on any value outside [0, 255].
  IlluminationMap(int width, int height, std::vector<double> values);

  int width() const noexcept { return size_.width; }
  int height() const noexcept { return size_.height; }
  Size size() const noexcept { return size_; }
  std::size_t pixel_count() const noexcept { return size_.area(); }

  double at(int x, int y) const noexcept {
    return values_[static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) +
                   static_cast<std::size_t>(x)];
  }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const IlluminationMap&) const = default;

 private:
  Size size_;
  std::vector<double> values_;
};

/// Per-pixel 0/1 mask. Serves both as the exposure mask M_t and as the
/// flow-validity (occlusion) mask.
class BinaryMask {
 public:
  BinaryMask(int width, int height, std::uint8_t fill = 0);
  /// Throws InvalidArgument if any entry is not 0 or 1.
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return size_.width; }
  int height() const noexcept { return size_.height; }
  Size size() const noexcept { return size_; }
  std::size_t pixel_count() const noexcept { return size_.area(); }

  bool at(int x, int y) const noexcept {
    return bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) +
                 static_cast<std::size_t>(x)] != 0;
  }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t count() const noexcept;
  double fraction() const noexcept;
  bool any() const noexcept { return count() > 0; }

  bool operator==(const BinaryMask&) const = default;

 private:
  Size size_;
  std::vector<std::uint8_t> bits_;
};

using ExposureMask = BinaryMask;
using OcclusionMask = BinaryMask;

/// Ordered frames sharing one raster size; never empty.
class FrameSequence {
 public:
  explicit FrameSequence(std::vector<FrameRGB> frames, double frame_rate = 25.0);

  std::size_t size() const noexcept { return frames_.size(); }
  Size frame_size() const noexcept { return frames_.front().size(); }
  double frame_rate() const noexcept { return frame_rate_; }

  const FrameRGB& operator[](std::size_t t) const noexcept { return frames_[t]; }
  const std::vector<FrameRGB>& frames() const noexcept { return frames_; }

  auto begin() const noexcept { return frames_.begin(); }
  auto end() const noexcept { return frames_.end(); }

 private:
  std::vector<FrameRGB> frames_;
  double frame_rate_;
};

/// V = max(R, G, B) per pixel.
IlluminationMap illumination_map(const FrameRGB& frame);

/// Rescales every channel by new_v / old_v and rounds to 8 bits. Pixels with
/// old_v == 0 become gray at round(new_v). Throws DimensionMismatch.
FrameRGB apply_illumination(const FrameRGB& frame, const IlluminationMap& old_v,
                            const IlluminationMap& new_v);

/// Rounds half away from zero and clamps to [0, 255].
std::uint8_t to_u8(double value) noexcept;

void require_same_size(Size a, Size b, std::string_view what);

}  // namespace stedeflick
