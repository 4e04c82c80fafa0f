#include "stedeflick/flow.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "stedeflick/error.hpp"

namespace fs = std::filesystem;

namespace stedeflick {

FlowField::FlowField(int width, int height) : size_{width, height} {
  if (width < 1 || height < 1) throw InvalidArgument("flow field must be at least 1x1");
  uv_.assign(size_.area() * 2, 0.0f);
}

FlowField::FlowField(int width, int height, std::vector<float> uv)
    : size_{width, height}, uv_(std::move(uv)) {
  if (width < 1 || height < 1) throw InvalidArgument("flow field must be at least 1x1");
  if (uv_.size() != size_.area() * 2) {
    throw InvalidArgument("flow data holds " + std::to_string(uv_.size()) + " floats, expected " +
                          std::to_string(size_.area() * 2));
  }
  if (!std::all_of(uv_.begin(), uv_.end(), [](float f) { return std::isfinite(f); })) {
    throw InvalidArgument("flow field contains non-finite displacements");
  }
}

FlowField FlowField::constant(int width, int height, float u, float v) {
  FlowField field(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) field.set(x, y, u, v);
  }
  return field;
}

void FlowParams::validate() const {
  if (pyramid_levels < 1) throw InvalidArgument("pyramid_levels must be >= 1");
  if (window < 3 || window % 2 == 0) throw InvalidArgument("flow window must be odd and >= 3");
  if (iterations < 1) throw InvalidArgument("flow iterations must be >= 1");
  if (!(fb_threshold > 0.0)) throw InvalidArgument("fb_threshold must be positive");
}

double sample_bilinear(std::span<const double> plane, Size size, double x, double y) noexcept {
  x = std::clamp(x, 0.0, static_cast<double>(size.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(size.height - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, size.width - 1);
  const int y1 = std::min(y0 + 1, size.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const auto w = static_cast<std::size_t>(size.width);
  const auto at = [&](int xx, int yy) {
    return plane[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)];
  };
  const double top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
  const double bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
  return top + fy * (bottom - top);
}

namespace {

struct Plane {
  Size size;
  std::vector<double> px;

  Plane(Size s, double fill = 0.0) : size(s), px(s.area(), fill) {}

  double& at(int x, int y) noexcept {
    return px[static_cast<std::size_t>(y) * static_cast<std::size_t>(size.width) +
              static_cast<std::size_t>(x)];
  }
  double at(int x, int y) const noexcept {
    return px[static_cast<std::size_t>(y) * static_cast<std::size_t>(size.width) +
              static_cast<std::size_t>(x)];
  }
  double sample(double x, double y) const noexcept { return sample_bilinear(px, size, x, y); }
};

// 5-tap binomial blur, then keep every second pixel.
Plane blur_downsample(const Plane& in) {
  constexpr std::array<double, 5> kTaps{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const int w = in.size.width;
  const int h = in.size.height;
  Plane horizontal(in.size);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) acc += kTaps[k + 2] * in.at(std::clamp(x + k, 0, w - 1), y);
      horizontal.at(x, y) = acc;
    }
  }
  Plane out(Size{(w + 1) / 2, (h + 1) / 2});
  for (int y = 0; y < out.size.height; ++y) {
    for (int x = 0; x < out.size.width; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) {
        acc += kTaps[k + 2] * horizontal.at(2 * x, std::clamp(2 * y + k, 0, h - 1));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

// Downsample of the reliable pixels only: blur(w * I) / blur(w). Where no
// reliable pixel contributes, the plain blur is kept.
Plane masked_downsample(const Plane& in, const Plane& weight, const Plane& coarse_weight) {
  Plane weighted(in.size);
  for (std::size_t i = 0; i < in.px.size(); ++i) weighted.px[i] = weight.px[i] * in.px[i];
  Plane out = blur_downsample(weighted);
  const Plane plain = blur_downsample(in);
  for (std::size_t i = 0; i < out.px.size(); ++i) {
    const double w = coarse_weight.px[i];
    out.px[i] = w > 1e-9 ? out.px[i] / w : plain.px[i];
  }
  return out;
}

void central_gradients(const Plane& in, Plane& gx, Plane& gy) {
  const int w = in.size.width;
  const int h = in.size.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      gx.at(x, y) = 0.5 * (in.at(std::min(x + 1, w - 1), y) - in.at(std::max(x - 1, 0), y));
      gy.at(x, y) = 0.5 * (in.at(x, std::min(y + 1, h - 1)) - in.at(x, std::max(y - 1, 0)));
    }
  }
}

// Sum over a (2r+1)^2 window clipped to the raster, via a summed-area table.
Plane box_sum(const Plane& in, int r) {
  const int w = in.size.width;
  const int h = in.size.height;
  const auto stride = static_cast<std::size_t>(w + 1);
  std::vector<double> sat(stride * static_cast<std::size_t>(h + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      row += in.at(x, y);
      sat[static_cast<std::size_t>(y + 1) * stride + static_cast<std::size_t>(x + 1)] =
          sat[static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x + 1)] + row;
    }
  }
  const auto s = [&](int x, int y) {
    return sat[static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x)];
  };
  Plane out(in.size);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r);
    const int y1 = std::min(h, y + r + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r);
      const int x1 = std::min(w, x + r + 1);
      out.at(x, y) = s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0);
    }
  }
  return out;
}

Plane to_plane(const IlluminationMap& map) {
  Plane p(map.size());
  std::copy(map.values().begin(), map.values().end(), p.px.begin());
  return p;
}

Plane reliability(const BinaryMask* ignore, Size size) {
  Plane p(size, 1.0);
  if (ignore == nullptr) return p;
  require_same_size(size, ignore->size(), "estimate_flow: ignore mask");
  const auto bits = ignore->bits();
  for (std::size_t i = 0; i < bits.size(); ++i) p.px[i] = bits[i] ? 0.0 : 1.0;
  return p;
}

// Local contrast normalization, (I - mean) / sqrt(var + eps^2) over a
// (2r+1)^2 box, with statistics taken from reliable pixels only. Makes the
// fit indifferent to per-neighborhood gain and offset changes between frames.
Plane normalize_contrast(const Plane& in, const Plane& weight, int r) {
  constexpr double kEps = 4.0;
  constexpr double kScale = 32.0;
  Plane wi(in.size), wii(in.size);
  for (std::size_t i = 0; i < in.px.size(); ++i) {
    wi.px[i] = weight.px[i] * in.px[i];
    wii.px[i] = weight.px[i] * in.px[i] * in.px[i];
  }
  const Plane n = box_sum(weight, r);
  const Plane s = box_sum(wi, r);
  const Plane ss = box_sum(wii, r);
  Plane out(in.size);
  for (std::size_t i = 0; i < in.px.size(); ++i) {
    if (n.px[i] <= 1e-9) continue;
    const double mean = s.px[i] / n.px[i];
    const double var = std::max(0.0, ss.px[i] / n.px[i] - mean * mean);
    out.px[i] = kScale * (in.px[i] - mean) / std::sqrt(var + kEps * kEps);
  }
  return out;
}

// Replaces unreliable pixels by the mean of reliable ones nearby, growing the
// neighborhood until every pixel is covered, so masked content cannot leak
// into gradients at the mask border.
Plane fill_unreliable(const Plane& in, const Plane& weight) {
  Plane out = in;
  Plane known(in.size);
  Plane wi(in.size);
  bool any_known = false;
  bool any_missing = false;
  for (std::size_t i = 0; i < in.px.size(); ++i) {
    known.px[i] = weight.px[i] >= 1.0 ? 1.0 : 0.0;
    wi.px[i] = known.px[i] * in.px[i];
    any_known = any_known || known.px[i] > 0.0;
    any_missing = any_missing || known.px[i] == 0.0;
  }
  if (!any_known || !any_missing) return out;
  const int limit = std::max(in.size.width, in.size.height);
  for (int r = 1; any_missing; r = std::min(2 * r, limit)) {
    const Plane n = box_sum(known, r);
    const Plane s = box_sum(wi, r);
    any_missing = false;
    for (std::size_t i = 0; i < in.px.size(); ++i) {
      if (known.px[i] > 0.0) continue;
      if (n.px[i] > 0.0) {
        out.px[i] = s.px[i] / n.px[i];
      } else {
        any_missing = true;
      }
    }
    if (r == limit) break;
  }
  return out;
}

struct Level {
  Plane src{Size{}}, dst{Size{}}, src_weight{Size{}}, dst_weight{Size{}};
};

// One Gauss-Newton step per pixel: the window around p is compared with the
// source displaced by p's own flow. A constant brightness offset per window is
// eliminated by centering the normal equations, then (A + reg I) d = -b.
void refine(const Level& level, Plane& u, Plane& v, Plane& support, int window) {
  const Size size = level.src.size;
  const int w = size.width;
  const int h = size.height;
  const int r = window / 2;
  Plane sgx(size), sgy(size), dgx(size), dgy(size);
  central_gradients(level.src, sgx, sgy);
  central_gradients(level.dst, dgx, dgy);

  // Tikhonov term: one unit of squared gradient per window pixel keeps flat
  // regions from producing large updates.
  const double reg = static_cast<double>(window * window);
  constexpr double kMaxStep = 1.0;
  constexpr double kMinSupport = 1e-6;

  Plane nu = u;
  Plane nv = v;
  const double area = static_cast<double>((2 * r + 1) * (2 * r + 1));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = u.at(x, y);
      const double fy = v.at(x, y);
      double s1 = 0, sx = 0, sy = 0, sr = 0, sxx = 0, sxy = 0, syy = 0, sbx = 0, sby = 0;
      for (int qy = std::max(0, y - r); qy <= std::min(h - 1, y + r); ++qy) {
        for (int qx = std::max(0, x - r); qx <= std::min(w - 1, x + r); ++qx) {
          const double px = qx + fx;
          const double py = qy + fy;
          if (px < 0.0 || px > w - 1 || py < 0.0 || py > h - 1) continue;
          const double wt = level.dst_weight.at(qx, qy) * level.src_weight.sample(px, py);
          if (wt <= 0.0) continue;
          const double gx = 0.5 * (sgx.sample(px, py) + dgx.at(qx, qy));
          const double gy = 0.5 * (sgy.sample(px, py) + dgy.at(qx, qy));
          const double res = level.src.sample(px, py) - level.dst.at(qx, qy);
          s1 += wt;
          sx += wt * gx;
          sy += wt * gy;
          sr += wt * res;
          sxx += wt * gx * gx;
          sxy += wt * gx * gy;
          syy += wt * gy * gy;
          sbx += wt * gx * res;
          sby += wt * gy * res;
        }
      }
      support.at(x, y) = s1 / area;
      if (s1 < kMinSupport) continue;
      const double mx = sx / s1;
      const double my = sy / s1;
      const double a = sxx - mx * sx + reg;
      const double b = sxy - mx * sy;
      const double c = syy - my * sy + reg;
      const double ex = sbx - mx * sr;
      const double ey = sby - my * sr;
      const double det = a * c - b * b;
      nu.at(x, y) = fx + std::clamp(-(c * ex - b * ey) / det, -kMaxStep, kMaxStep);
      nv.at(x, y) = fy + std::clamp(-(a * ey - b * ex) / det, -kMaxStep, kMaxStep);
    }
  }
  u = std::move(nu);
  v = std::move(nv);
}

constexpr double kMinWindowSupport = 0.5;

Plane upsample_flow(const Plane& coarse, Size fine) {
  Plane out(fine);
  for (int y = 0; y < fine.height; ++y) {
    for (int x = 0; x < fine.width; ++x) {
      out.at(x, y) = 2.0 * coarse.sample((x + 0.5) / 2.0 - 0.5, (y + 0.5) / 2.0 - 0.5);
    }
  }
  return out;
}

}  // namespace

FlowField estimate_flow(const IlluminationMap& src, const IlluminationMap& dst,
                        const FlowParams& params, const BinaryMask* src_ignore,
                        const BinaryMask* dst_ignore) {
  params.validate();
  require_same_size(src.size(), dst.size(), "estimate_flow: src vs dst");

  std::vector<Level> pyramid;
  {
    Level finest;
    finest.src_weight = reliability(src_ignore, src.size());
    finest.dst_weight = reliability(dst_ignore, dst.size());
    finest.src = fill_unreliable(to_plane(src), finest.src_weight);
    finest.dst = fill_unreliable(to_plane(dst), finest.dst_weight);
    pyramid.push_back(std::move(finest));
  }
  while (static_cast<int>(pyramid.size()) < params.pyramid_levels) {
    const Level& fine = pyramid.back();
    const Size next{(fine.src.size.width + 1) / 2, (fine.src.size.height + 1) / 2};
    if (std::min(next.width, next.height) < params.window) break;
    Level coarse;
    coarse.src_weight = blur_downsample(fine.src_weight);
    coarse.dst_weight = blur_downsample(fine.dst_weight);
    coarse.src = masked_downsample(fine.src, fine.src_weight, coarse.src_weight);
    coarse.dst = masked_downsample(fine.dst, fine.dst_weight, coarse.dst_weight);
    pyramid.push_back(std::move(coarse));
  }

  // Both frames take their statistics from the same pixels, so a mask present
  // in only one of them does not bias the comparison.
  for (auto& level : pyramid) {
    Plane joint(level.src.size);
    for (std::size_t i = 0; i < joint.px.size(); ++i) {
      joint.px[i] = level.src_weight.px[i] * level.dst_weight.px[i];
    }
    level.src = normalize_contrast(level.src, joint, 2 * params.window);
    level.dst = normalize_contrast(level.dst, joint, 2 * params.window);
  }

  Plane u(pyramid.back().src.size);
  Plane v(pyramid.back().src.size);
  for (auto level = pyramid.rbegin(); level != pyramid.rend(); ++level) {
    if (u.size != level->src.size) {
      u = upsample_flow(u, level->src.size);
      v = upsample_flow(v, level->src.size);
    }
    Plane support(level->src.size);
    for (int it = 0; it < params.iterations; ++it) refine(*level, u, v, support, params.window);
    // Windows that are mostly masked carry little evidence; take their flow
    // from better supported neighbors instead.
    for (auto& s : support.px) s = s >= kMinWindowSupport ? 1.0 : 0.0;
    u = fill_unreliable(u, support);
    v = fill_unreliable(v, support);
  }

  std::vector<float> uv(src.size().area() * 2);
  for (std::size_t i = 0; i < u.px.size(); ++i) {
    uv[2 * i] = static_cast<float>(u.px[i]);
    uv[2 * i + 1] = static_cast<float>(v.px[i]);
  }
  return FlowField(src.width(), src.height(), std::move(uv));
}

FlowField estimate_flow(const FrameRGB& src, const FrameRGB& dst, const FlowParams& params) {
  return estimate_flow(illumination_map(src), illumination_map(dst), params);
}

IlluminationMap warp(const IlluminationMap& image, const FlowField& flow) {
  require_same_size(image.size(), flow.size(), "warp: image vs flow");
  std::vector<double> out(image.pixel_count());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      out[static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width()) +
          static_cast<std::size_t>(x)] =
          sample_bilinear(image.values(), image.size(), x + flow.u(x, y), y + flow.v(x, y));
    }
  }
  return IlluminationMap(image.width(), image.height(), std::move(out));
}

std::vector<double> warp_real(const FrameRGB& image, const FlowField& flow) {
  require_same_size(image.size(), flow.size(), "warp: image vs flow");
  const Size size = image.size();
  std::array<std::vector<double>, 3> planes;
  for (auto& p : planes) p.resize(size.area());
  const auto rgb = image.data();
  for (std::size_t i = 0; i < size.area(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) planes[c][i] = rgb[3 * i + c];
  }
  std::vector<double> out(size.area() * 3);
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const double sx = x + flow.u(x, y);
      const double sy = y + flow.v(x, y);
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(size.width) +
                            static_cast<std::size_t>(x);
      for (std::size_t c = 0; c < 3; ++c) out[3 * i + c] = sample_bilinear(planes[c], size, sx, sy);
    }
  }
  return out;
}

FrameRGB warp(const FrameRGB& image, const FlowField& flow) {
  const auto real = warp_real(image, flow);
  std::vector<std::uint8_t> out(real.size());
  std::transform(real.begin(), real.end(), out.begin(), to_u8);
  return FrameRGB(image.width(), image.height(), std::move(out));
}

OcclusionMask occlusion_mask(const FlowField& fwd, const FlowField& bwd, double fb_threshold) {
  require_same_size(fwd.size(), bwd.size(), "occlusion_mask: fwd vs bwd");
  const Size size = fwd.size();
  std::vector<double> bu(size.area());
  std::vector<double> bv(size.area());
  for (std::size_t i = 0; i < size.area(); ++i) {
    bu[i] = bwd.data()[2 * i];
    bv[i] = bwd.data()[2 * i + 1];
  }
  std::vector<std::uint8_t> bits(size.area(), 0);
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const double u = fwd.u(x, y);
      const double v = fwd.v(x, y);
      const double sx = x + u;
      const double sy = y + v;
      if (!(sx >= 0.0 && sx <= size.width - 1 && sy >= 0.0 && sy <= size.height - 1)) continue;
      const double ru = u + sample_bilinear(bu, size, sx, sy);
      const double rv = v + sample_bilinear(bv, size, sx, sy);
      if (std::hypot(ru, rv) <= fb_threshold) {
        bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(size.width) +
             static_cast<std::size_t>(x)] = 1;
      }
    }
  }
  return OcclusionMask(size.width, size.height, std::move(bits));
}

namespace {

constexpr float kFloMagic = 202021.25f;

void put_u32(std::vector<char>& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::vector<char>& in, std::size_t offset) {
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) {
    value |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return value;
}

}  // namespace

void write_flo(const FlowField& field, const fs::path& path) {
  std::vector<char> bytes;
  bytes.reserve(12 + field.data().size() * 4);
  put_u32(bytes, std::bit_cast<std::uint32_t>(kFloMagic));
  put_u32(bytes, static_cast<std::uint32_t>(field.width()));
  put_u32(bytes, static_cast<std::uint32_t>(field.height()));
  for (float f : field.data()) put_u32(bytes, std::bit_cast<std::uint32_t>(f));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

FlowField read_flo(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw FormatError("truncated .flo header: " + path.string());
  if (std::bit_cast<float>(get_u32(bytes, 0)) != kFloMagic) {
    throw FormatError("bad .flo magic: " + path.string());
  }
  const auto width = static_cast<std::int32_t>(get_u32(bytes, 4));
  const auto height = static_cast<std::int32_t>(get_u32(bytes, 8));
  if (width < 1 || height < 1 || width > (1 << 16) || height > (1 << 16)) {
    throw FormatError("implausible .flo size in " + path.string());
  }
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 2;
  if (bytes.size() != 12 + count * 4) {
    throw FormatError(".flo payload is " + std::to_string(bytes.size() - 12) + " bytes, expected " +
                      std::to_string(count * 4) + ": " + path.string());
  }
  std::vector<float> uv(count);
  for (std::size_t i = 0; i < count; ++i) uv[i] = std::bit_cast<float>(get_u32(bytes, 12 + 4 * i));
  try {
    return FlowField(width, height, std::move(uv));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string(e.what()) + ": " + path.string());
  }
}

FlowDirectory::FlowDirectory(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) throw IoError("flow directory not found: " + dir_.string());
}

namespace {

std::optional<FlowField> read_if_present(const fs::path& dir, const char* prefix, std::size_t t) {
  char name[40];
  std::snprintf(name, sizeof(name), "%s_%06zu.flo", prefix, t);
  const fs::path path = dir / name;
  if (!fs::exists(path)) return std::nullopt;
  return read_flo(path);
}

}  // namespace

std::optional<FlowField> FlowDirectory::next_to_cur(std::size_t t) const {
  return read_if_present(dir_, "fwd", t);
}

std::optional<FlowField> FlowDirectory::cur_to_next(std::size_t t) const {
  return read_if_present(dir_, "bwd", t);
}

}  // namespace stedeflick
