#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "stedeflick/image.hpp"

namespace stedeflick {

/// Dense displacement field on the raster of a destination frame t. The
/// content of pixel (x, y) in t is found at (x + u, y + v) in the source
/// frame s, i.e. this is o_{s->t}.
class FlowField {
 public:
  /// Zero field.
  FlowField(int width, int height);
  /// `uv` is interleaved (u, v), row-major. Throws InvalidArgument on a size
  /// mismatch or on non-finite entries.
  FlowField(int width, int height, std::vector<float> uv);

  int width() const noexcept { return size_.width; }
  int height() const noexcept { return size_.height; }
  Size size() const noexcept { return size_; }

  float u(int x, int y) const noexcept { return uv_[2 * index(x, y)]; }
  float v(int x, int y) const noexcept { return uv_[2 * index(x, y) + 1]; }
  void set(int x, int y, float u, float v) noexcept {
    uv_[2 * index(x, y)] = u;
    uv_[2 * index(x, y) + 1] = v;
  }
  std::span<const float> data() const noexcept { return uv_; }

  static FlowField constant(int width, int height, float u, float v);

  bool operator==(const FlowField&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) +
           static_cast<std::size_t>(x);
  }

  Size size_;
  std::vector<float> uv_;
};

struct FlowParams {
  int pyramid_levels = 3;
  int window = 7;          // odd, >= 3
  int iterations = 3;      // per pyramid level
  double fb_threshold = 1.0;

  void validate() const;
};

/// Coarse-to-fine dense Lucas-Kanade on illumination maps, with a constant
/// brightness offset absorbed per window. Returns o_{src->dst}:
/// sampling `src` at p + flow(p) reproduces `dst` at p. Pixels flagged in the
/// optional ignore masks (src mask looked up at the displaced position) do not
/// contribute to the local least-squares fits; useful for clipped regions.
FlowField estimate_flow(const IlluminationMap& src, const IlluminationMap& dst,
                        const FlowParams& params, const BinaryMask* src_ignore = nullptr,
                        const BinaryMask* dst_ignore = nullptr);

FlowField estimate_flow(const FrameRGB& src, const FrameRGB& dst, const FlowParams& params);

/// Bilinear sample with border replication.
double sample_bilinear(std::span<const double> plane, Size size, double x, double y) noexcept;

/// Backward warp: out(p) = image(p + flow(p)), bilinear, clamped to the border.
IlluminationMap warp(const IlluminationMap& image, const FlowField& flow);
FrameRGB warp(const FrameRGB& image, const FlowField& flow);
/// Unrounded per-channel backward warp of an RGB frame (interleaved).
std::vector<double> warp_real(const FrameRGB& image, const FlowField& flow);

/// Valid (1) where p + fwd(p) lies inside the frame and
/// |fwd(p) + bwd(p + fwd(p))| <= threshold, with bwd sampled bilinearly.
OcclusionMask occlusion_mask(const FlowField& fwd, const FlowField& bwd, double fb_threshold);

/// Middlebury .flo: float 202021.25, int32 width, int32 height, then
/// row-major interleaved float32 (u, v), all little-endian.
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& field, const std::filesystem::path& path);

/// Externally computed flow for adjacent pairs, stored as
/// `fwd_%06d.flo` (o_{t+1->t}, raster of frame t) and
/// `bwd_%06d.flo` (o_{t->t+1}, raster of frame t+1), t = 0 .. T-2.
class FlowDirectory {
 public:
  explicit FlowDirectory(std::filesystem::path dir);

  /// o_{t+1->t}, if the file exists.
  std::optional<FlowField> next_to_cur(std::size_t t) const;
  /// o_{t->t+1}, if the file exists.
  std::optional<FlowField> cur_to_next(std::size_t t) const;

  const std::filesystem::path& path() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace stedeflick
