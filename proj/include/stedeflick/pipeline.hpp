#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stedeflick/executor.hpp"
#include "stedeflick/flow.hpp"
#include "stedeflick/image.hpp"
#include "stedeflick/priors.hpp"
#include "stedeflick/repair.hpp"
#include "stedeflick/ste.hpp"

namespace stedeflick {

struct PipelineParams {
  SteParams ste;
  PriorParams priors;
  FlowParams flow;
  RepairParams repair;

  void validate() const;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineReport {
  std::size_t frame_count = 0;
  Size frame_size;
  /// 256 * (2l + 1): inverse-CDF evaluations behind one frame's LUT. Does not
  /// depend on the frame resolution.
  std::size_t lut_matches_per_frame = 0;
  std::vector<std::size_t> singular;
  std::vector<std::size_t> locally_repaired;
  std::string local_stage;     // "ran", "skipped: disabled", "skipped: no candidates"
  std::string temporal_stage;  // "ran", "skipped: disabled"
  std::string flow_source;     // "none", "internal", "imported", "mixed"
  std::vector<double> kl_series;
  std::vector<double> kl_average;
  std::vector<double> exposure_fraction;
  std::vector<StageTiming> timings;
};

struct PipelineResult {
  FrameSequence frames;
  DeflickerPriors priors;
  PipelineReport report;
};

/// Stage 1 extracts priors; stage 2 applies the STE correction to every frame
/// and, for singular frames with a non-empty exposure mask, migrates detail
/// from the stage-2 neighbors; stage 3 optionally blends along the flow.
/// Flows come from `imported` when a matching file exists, otherwise they are
/// estimated on the illumination of the input frames (exposed pixels masked
/// out) for the local stage and of the stage-2 output for the temporal stage.
PipelineResult deflicker_pipeline(const FrameSequence& frames, const PipelineParams& params,
                                  const Executor& executor = Executor(1),
                                  const FlowDirectory* imported = nullptr);

}  // namespace stedeflick
