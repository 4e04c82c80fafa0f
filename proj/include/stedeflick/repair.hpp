#pragma once

#include <optional>
#include <vector>

#include "stedeflick/flow.hpp"
#include "stedeflick/image.hpp"

namespace stedeflick {

struct RepairParams {
  bool enable_local = true;
  double conf_power = 1.0;            // exponent on the 0/1 flow validity
  double temporal_blend_alpha = 0.0;  // 0 disables the temporal pass

  void validate() const;
};

/// Re-projects the filtered illumination onto the frame's colors.
FrameRGB global_correct(const FrameRGB& frame, const IlluminationMap& v,
                        const IlluminationMap& filtered_v);

/// A neighboring frame together with the flows linking it to the current
/// frame t. `to_cur` is o_{n->t} (raster of t, points into n); `from_cur` is
/// o_{t->n} (raster of n, points into t) and is only used for the
/// forward-backward validity check.
struct Neighbor {
  const FrameRGB& frame;
  const FlowField& to_cur;
  const FlowField& from_cur;
};

/// Inside `mask`, replaces the current frame with the confidence-weighted
/// mean of the warped neighbors. Each neighbor's confidence is
/// validity^conf_power times the share of its bilinear footprint that falls
/// inside the frame; where both confidences vanish the current pixel is kept.
/// Outside `mask` the output equals `cur`.
FrameRGB local_repair(const std::optional<Neighbor>& prev, const FrameRGB& cur,
                      const std::optional<Neighbor>& next, const ExposureMask& mask,
                      const RepairParams& params, double fb_threshold);

/// Recursive blend O_t = (1 - alpha) X_t + alpha W(O_{t-1}) on pixels where
/// the flow into t is valid; X_t elsewhere. `prev_to_cur[t - 1]` is
/// o_{t-1->t} and `valid[t - 1]` its occlusion mask, for t = 1 .. T-1.
FrameSequence temporal_blend(const FrameSequence& frames, const std::vector<FlowField>& prev_to_cur,
                             const std::vector<OcclusionMask>& valid, double alpha);

}  // namespace stedeflick
