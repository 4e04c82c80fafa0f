#include "stedeflick/pipeline.hpp"

#include <chrono>
#include <optional>

#include "stedeflick/histogram.hpp"

namespace stedeflick {

void PipelineParams::validate() const {
  ste.validate();
  priors.validate();
  flow.validate();
  repair.validate();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Flows between adjacent frames, o_{from->to} with |from - to| == 1.
class AdjacentFlows {
 public:
  AdjacentFlows(const std::vector<IlluminationMap>& maps, const std::vector<ExposureMask>* ignore,
                const FlowParams& params, const FlowDirectory* imported)
      : maps_(maps), ignore_(ignore), params_(params), imported_(imported) {}

  FlowField get(std::size_t from, std::size_t to, bool& was_imported) const {
    if (imported_ != nullptr) {
      std::optional<FlowField> file =
          to == from + 1 ? imported_->cur_to_next(from) : imported_->next_to_cur(to);
      if (file) {
        was_imported = true;
        return std::move(*file);
      }
    }
    was_imported = false;
    const BinaryMask* src_ignore = ignore_ ? &(*ignore_)[from] : nullptr;
    const BinaryMask* dst_ignore = ignore_ ? &(*ignore_)[to] : nullptr;
    return estimate_flow(maps_[from], maps_[to], params_, src_ignore, dst_ignore);
  }

 private:
  const std::vector<IlluminationMap>& maps_;
  const std::vector<ExposureMask>* ignore_;
  const FlowParams& params_;
  const FlowDirectory* imported_;
};

std::vector<IlluminationMap> illumination_maps(const std::vector<FrameRGB>& frames,
                                               const Executor& executor) {
  std::vector<IlluminationMap> maps(frames.size(),
                                    IlluminationMap(frames[0].width(), frames[0].height()));
  executor.parallel_for(frames.size(), [&](std::size_t t) { maps[t] = illumination_map(frames[t]); });
  return maps;
}

struct FlowTally {
  std::size_t imported = 0;
  std::size_t internal = 0;

  void add(bool was_imported) { ++(was_imported ? imported : internal); }
  void merge(const FlowTally& other) {
    imported += other.imported;
    internal += other.internal;
  }
  std::string describe() const {
    if (imported == 0 && internal == 0) return "none";
    if (imported == 0) return "internal";
    if (internal == 0) return "imported";
    return "mixed";
  }
};

}  // namespace

PipelineResult deflicker_pipeline(const FrameSequence& frames, const PipelineParams& params,
                                  const Executor& executor, const FlowDirectory* imported) {
  params.validate();
  const std::size_t count = frames.size();
  const auto pipeline_start = Clock::now();
  PipelineReport report;
  report.frame_count = count;
  report.frame_size = frames.frame_size();
  report.lut_matches_per_frame = static_cast<std::size_t>(kLevels) *
                                 (2 * static_cast<std::size_t>(params.ste.radius) + 1);

  // Stage 1: deflickering priors.
  auto start = Clock::now();
  const std::vector<IlluminationMap> maps = illumination_maps(frames.frames(), executor);
  report.timings.push_back({"stage1.illumination", seconds_since(start)});

  start = Clock::now();
  SteTimings ste_timings;
  DeflickerPriors priors = extract_priors(maps, params.ste, params.priors, executor, &ste_timings);
  const double priors_total = seconds_since(start);
  report.timings.push_back({"stage1.histograms", ste_timings.histograms});
  report.timings.push_back({"stage1.ste_luts", ste_timings.luts});
  report.timings.push_back({"stage1.ste_apply", ste_timings.apply});
  report.timings.push_back(
      {"stage1.kl_exposure",
       priors_total - ste_timings.histograms - ste_timings.luts - ste_timings.apply});

  // Stage 2, global: exact LUT re-projection per frame.
  start = Clock::now();
  std::vector<FrameRGB> corrected(count, FrameRGB(frames.frame_size().width,
                                                  frames.frame_size().height));
  executor.parallel_for(count, [&](std::size_t t) {
    corrected[t] = global_correct(frames[t], maps[t], priors.filtered_maps[t]);
  });
  report.timings.push_back({"stage2.global", seconds_since(start)});

  // Stage 2, local: only singular frames with exposed pixels, reading the
  // unrepaired stage-2 neighbors so the result is order-independent.
  start = Clock::now();
  std::vector<std::size_t> candidates;
  for (std::size_t t : priors.singular) {
    if (priors.exposure[t].any() && count > 1) candidates.push_back(t);
  }
  FlowTally tally;
  std::vector<FrameRGB> repaired = corrected;
  if (!params.repair.enable_local) {
    report.local_stage = "skipped: disabled";
  } else if (candidates.empty()) {
    report.local_stage = "skipped: no candidates";
  } else {
    report.local_stage = "ran";
    // Flows come from the raw input; exposed pixels do not take part in the fit.
    const AdjacentFlows flows(maps, &priors.exposure, params.flow, imported);
    std::vector<FlowTally> tallies(candidates.size());
    executor.parallel_for(candidates.size(), [&](std::size_t i) {
      const std::size_t t = candidates[i];
      bool was_imported = false;
      std::optional<FlowField> prev_to_cur, cur_to_prev, next_to_cur, cur_to_next;
      std::optional<Neighbor> prev, next;
      if (t > 0) {
        prev_to_cur = flows.get(t - 1, t, was_imported);
        tallies[i].add(was_imported);
        cur_to_prev = flows.get(t, t - 1, was_imported);
        tallies[i].add(was_imported);
        prev.emplace(Neighbor{corrected[t - 1], *prev_to_cur, *cur_to_prev});
      }
      if (t + 1 < count) {
        next_to_cur = flows.get(t + 1, t, was_imported);
        tallies[i].add(was_imported);
        cur_to_next = flows.get(t, t + 1, was_imported);
        tallies[i].add(was_imported);
        next.emplace(Neighbor{corrected[t + 1], *next_to_cur, *cur_to_next});
      }
      repaired[t] = local_repair(prev, corrected[t], next, priors.exposure[t], params.repair,
                                 params.flow.fb_threshold);
    });
    for (const auto& t : tallies) tally.merge(t);
    report.locally_repaired = candidates;
  }
  report.timings.push_back({"stage2.local", seconds_since(start)});

  // Stage 3: optional flow-guided temporal blend.
  start = Clock::now();
  FrameSequence output(std::move(repaired), frames.frame_rate());
  if (params.repair.temporal_blend_alpha > 0.0 && count > 1) {
    report.temporal_stage = "ran";
    const std::vector<IlluminationMap> out_maps = illumination_maps(output.frames(), executor);
    const AdjacentFlows flows(out_maps, nullptr, params.flow, imported);
    std::vector<FlowField> prev_to_cur(count - 1, FlowField(1, 1));
    std::vector<OcclusionMask> valid(count - 1, OcclusionMask(1, 1));
    std::vector<FlowTally> tallies(count - 1);
    executor.parallel_for(count - 1, [&](std::size_t i) {
      const std::size_t t = i + 1;
      bool was_imported = false;
      prev_to_cur[i] = flows.get(t - 1, t, was_imported);
      tallies[i].add(was_imported);
      const FlowField back = flows.get(t, t - 1, was_imported);
      tallies[i].add(was_imported);
      valid[i] = occlusion_mask(prev_to_cur[i], back, params.flow.fb_threshold);
    });
    for (const auto& t : tallies) tally.merge(t);
    output = temporal_blend(output, prev_to_cur, valid, params.repair.temporal_blend_alpha);
  } else {
    report.temporal_stage = "skipped: disabled";
  }
  report.timings.push_back({"stage3.temporal", seconds_since(start)});
  report.timings.push_back({"total", seconds_since(pipeline_start)});

  report.flow_source = tally.describe();
  report.singular = priors.singular;
  report.kl_series = priors.kl_series;
  report.kl_average = priors.kl_average;
  report.exposure_fraction.reserve(count);
  for (const auto& m : priors.exposure) report.exposure_fraction.push_back(m.fraction());

  return PipelineResult{std::move(output), std::move(priors), std::move(report)};
}

}  // namespace stedeflick
