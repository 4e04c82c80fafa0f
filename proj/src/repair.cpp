#include "stedeflick/repair.hpp"

#include <cmath>
#include <string>

#include "stedeflick/error.hpp"

namespace stedeflick {

void RepairParams::validate() const {
  if (!(conf_power >= 0.0)) throw InvalidArgument("confidence exponent must be >= 0");
  if (!(temporal_blend_alpha >= 0.0 && temporal_blend_alpha <= 1.0)) {
    throw InvalidArgument("temporal blend alpha must lie in [0,1]");
  }
}

FrameRGB global_correct(const FrameRGB& frame, const IlluminationMap& v,
                        const IlluminationMap& filtered_v) {
  return apply_illumination(frame, v, filtered_v);
}

namespace {

// Share of the bilinear footprint at (x, y) that lands on real pixels.
double footprint_inside(double x, double y, Size size) {
  const auto axis = [](double p, int extent) {
    const double lo = std::floor(p);
    const double frac = p - lo;
    const auto inside = [extent](double i) { return i >= 0.0 && i <= extent - 1; };
    return (inside(lo) ? 1.0 - frac : 0.0) + (inside(lo + 1.0) ? frac : 0.0);
  };
  return axis(x, size.width) * axis(y, size.height);
}

struct Candidate {
  std::vector<double> warped;      // interleaved RGB
  std::vector<double> confidence;  // per pixel
};

Candidate prepare(const Neighbor& n, Size size, const RepairParams& params, double fb_threshold) {
  require_same_size(size, n.frame.size(), "local_repair: neighbor frame");
  require_same_size(size, n.to_cur.size(), "local_repair: neighbor flow");
  require_same_size(size, n.from_cur.size(), "local_repair: reverse neighbor flow");

  Candidate c;
  c.warped = warp_real(n.frame, n.to_cur);
  const OcclusionMask valid = occlusion_mask(n.to_cur, n.from_cur, fb_threshold);
  c.confidence.resize(size.area());
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(size.width) +
                            static_cast<std::size_t>(x);
      const double validity = valid.at(x, y) ? 1.0 : 0.0;
      c.confidence[i] = std::pow(validity, params.conf_power) *
                        footprint_inside(x + n.to_cur.u(x, y), y + n.to_cur.v(x, y), size);
    }
  }
  return c;
}

}  // namespace

FrameRGB local_repair(const std::optional<Neighbor>& prev, const FrameRGB& cur,
                      const std::optional<Neighbor>& next, const ExposureMask& mask,
                      const RepairParams& params, double fb_threshold) {
  params.validate();
  const Size size = cur.size();
  require_same_size(size, mask.size(), "local_repair: exposure mask");
  if (!mask.any()) return cur;

  std::vector<Candidate> candidates;
  if (prev) candidates.push_back(prepare(*prev, size, params, fb_threshold));
  if (next) candidates.push_back(prepare(*next, size, params, fb_threshold));

  FrameRGB out = cur;
  auto rgb = out.data();
  const auto bits = mask.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (!bits[i]) continue;
    double total = 0.0;
    for (const auto& c : candidates) total += c.confidence[i];
    if (total <= 0.0) continue;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      double acc = 0.0;
      for (const auto& c : candidates) acc += c.confidence[i] * c.warped[3 * i + ch];
      rgb[3 * i + ch] = to_u8(acc / total);
    }
  }
  return out;
}

FrameSequence temporal_blend(const FrameSequence& frames, const std::vector<FlowField>& prev_to_cur,
                             const std::vector<OcclusionMask>& valid, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("temporal blend alpha outside [0,1]");
  if (alpha == 0.0 || frames.size() < 2) return frames;
  if (prev_to_cur.size() + 1 < frames.size() || valid.size() + 1 < frames.size()) {
    throw InvalidArgument("temporal_blend needs one flow and mask per adjacent pair");
  }

  std::vector<FrameRGB> out;
  out.reserve(frames.size());
  out.push_back(frames[0]);
  for (std::size_t t = 1; t < frames.size(); ++t) {
    const FlowField& flow = prev_to_cur[t - 1];
    const OcclusionMask& mask = valid[t - 1];
    require_same_size(frames.frame_size(), flow.size(), "temporal_blend: flow");
    require_same_size(frames.frame_size(), mask.size(), "temporal_blend: mask");

    const auto carried = warp_real(out.back(), flow);
    FrameRGB blended = frames[t];
    auto rgb = blended.data();
    const auto bits = mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (!bits[i]) continue;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        rgb[3 * i + ch] = to_u8((1.0 - alpha) * rgb[3 * i + ch] + alpha * carried[3 * i + ch]);
      }
    }
    out.push_back(std::move(blended));
  }
  return FrameSequence(std::move(out), frames.frame_rate());
}

}  // namespace stedeflick
