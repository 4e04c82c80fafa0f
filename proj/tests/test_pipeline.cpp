#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stedeflick/error.hpp"
#include "stedeflick/metrics.hpp"
#include "stedeflick/pipeline.hpp"
#include "stedeflick/synth.hpp"
#include "support/clips.hpp"
#include "support/gen.hpp"
#include "support/tempdir.hpp"

using namespace stedeflick;
using testing_support::moving_pattern;
using testing_support::static_texture;

namespace {

int max_channel_diff(const FrameSequence& a, const FrameSequence& b) {
  int worst = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 0; i < a[t].data().size(); ++i) {
      worst = std::max(worst, std::abs(int(a[t].data()[i]) - int(b[t].data()[i])));
    }
  }
  return worst;
}

double mean_abs_diff(const FrameSequence& a, const FrameSequence& b) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 0; i < a[t].data().size(); ++i, ++n) {
      s += std::abs(int(a[t].data()[i]) - int(b[t].data()[i]));
    }
  }
  return s / static_cast<double>(n);
}

double mean_psnr(const FrameSequence& a, const FrameSequence& b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) s += psnr(a[t], b[t]);
  return s / static_cast<double>(a.size());
}

struct BlobClip {
  FrameSequence gt;
  FrameSequence input;
  std::size_t frame;
  std::vector<std::size_t> region;
};

// Heavily clipped texture, so neighbors also reach 255, with a saturated disc
// over 10% of one frame.
BlobClip blob_clip() {
  const FrameSequence gt = static_texture(4242, 24, 48, 48, -120.0, 375.0);
  const std::size_t bad = 12;
  FrameRGB f = gt[bad];
  std::vector<std::size_t> region;
  const double r = std::sqrt(0.10 * 48 * 48 / 3.14159265358979);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 48; ++x) {
      if (std::hypot(x - 22.0, y - 25.0) > r) continue;
      for (int c = 0; c < 3; ++c) f.at(x, y, c) = 255;
      region.push_back(static_cast<std::size_t>(y) * 48 + x);
    }
  }
  return {gt, testing_support::with_frame(gt, bad, f), bad, region};
}

double region_mae(const FrameRGB& a, const FrameRGB& b, const std::vector<std::size_t>& region) {
  double s = 0.0;
  for (auto i : region) {
    for (int c = 0; c < 3; ++c) s += std::abs(int(a.data()[3 * i + c]) - int(b.data()[3 * i + c]));
  }
  return s / (3.0 * region.size());
}

const StageTiming* timing(const PipelineReport& r, const std::string& name) {
  for (const auto& t : r.timings) {
    if (t.stage == name) return &t;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("clean static clip passes through") {
  const FrameSequence clip = static_texture(1, 16, 40, 32);
  const PipelineResult r = deflicker_pipeline(clip, PipelineParams{});
  CHECK(max_channel_diff(r.frames, clip) <= 1);
  CHECK(r.report.singular.empty());
  CHECK(r.report.local_stage == "skipped: no candidates");
  CHECK(r.report.temporal_stage == "skipped: disabled");
  CHECK(r.report.flow_source == "none");
}

TEST_CASE("window-3 flicker is reduced") {
  double before = 0.0, after = 0.0;
  for (int clip = 0; clip < 3; ++clip) {
    const FrameSequence gt = moving_pattern(300 + clip, 40, 48, 48);
    FlickerSpec spec;
    spec.window_w = 3;
    spec.seed = 17;
    const FrameSequence degraded = synth_flicker(gt, spec, std::to_string(clip));
    PipelineParams params;
    params.ste.radius = 20;
    params.ste.scale = 40.0;
    const FrameSequence out = deflicker_pipeline(degraded, params).frames;
    before += mean_psnr(degraded, gt);
    after += mean_psnr(out, gt);
  }
  CHECK(after / 3 >= before / 3 + 3.0);
}

TEST_CASE("local repair beats global correction on an over-exposed frame") {
  const BlobClip c = blob_clip();
  PipelineParams off;
  off.repair.enable_local = false;
  const PipelineResult full = deflicker_pipeline(c.input, PipelineParams{});
  const PipelineResult global = deflicker_pipeline(c.input, off);
  REQUIRE(full.report.local_stage == "ran");
  CHECK(std::find(full.report.locally_repaired.begin(), full.report.locally_repaired.end(),
                  c.frame) != full.report.locally_repaired.end());
  CHECK(global.report.local_stage == "skipped: disabled");
  CHECK(region_mae(full.frames[c.frame], c.gt[c.frame], c.region) <
        region_mae(global.frames[c.frame], c.gt[c.frame], c.region));
  CHECK(full.report.flow_source == "internal");
}

TEST_CASE("disabling local repair only affects singular frames") {
  const BlobClip c = blob_clip();
  PipelineParams off;
  off.repair.enable_local = false;
  const PipelineResult full = deflicker_pipeline(c.input, PipelineParams{});
  const PipelineResult global = deflicker_pipeline(c.input, off);
  for (std::size_t t = 0; t < c.input.size(); ++t) {
    if (full.priors.is_singular(t)) continue;
    CAPTURE(t);
    CHECK(full.frames[t] == global.frames[t]);
  }
}

TEST_CASE("stage 2 on ordinary frames is the illumination rescale") {
  const FrameSequence gt = moving_pattern(8, 20, 40, 40);
  FlickerSpec spec;
  spec.seed = 2;
  const FrameSequence input = synth_flicker(gt, spec, "x");
  const PipelineResult r = deflicker_pipeline(input, PipelineParams{});
  for (std::size_t t = 0; t < input.size(); ++t) {
    if (r.priors.is_singular(t)) continue;
    const FrameRGB expected =
        global_correct(input[t], illumination_map(input[t]), r.priors.filtered_maps[t]);
    CAPTURE(t);
    CHECK(r.frames[t] == expected);
  }
}

TEST_CASE("second pass on a clean clip is nearly idempotent") {
  const FrameSequence clip = static_texture(6, 16, 32, 32);
  const FrameSequence once = deflicker_pipeline(clip, PipelineParams{}).frames;
  const FrameSequence twice = deflicker_pipeline(once, PipelineParams{}).frames;
  CHECK(mean_abs_diff(once, twice) <= 1.0);
}

TEST_CASE("results do not depend on the thread count") {
  const BlobClip c = blob_clip();
  PipelineParams p;
  p.repair.temporal_blend_alpha = 0.3;
  const PipelineResult a = deflicker_pipeline(c.input, p, Executor(1));
  const PipelineResult b = deflicker_pipeline(c.input, p, Executor(4));
  CHECK(a.frames.frames() == b.frames.frames());
  CHECK(a.report.kl_series == b.report.kl_series);
  CHECK(a.report.singular == b.report.singular);
  CHECK(a.report.temporal_stage == "ran");
}

TEST_CASE("report bookkeeping") {
  const FrameSequence clip = moving_pattern(4, 10, 32, 24);
  PipelineParams p;
  p.ste.radius = 3;
  const PipelineResult r = deflicker_pipeline(clip, p);
  CHECK(r.report.frame_count == 10);
  CHECK(r.report.frame_size == Size{32, 24});
  CHECK(r.report.lut_matches_per_frame == 256 * 7);
  CHECK(r.report.kl_series.size() == 10);
  CHECK(r.report.kl_average.size() == 10);
  CHECK(r.report.exposure_fraction.size() == 10);
  for (const char* name : {"stage1.illumination", "stage1.histograms", "stage1.ste_luts",
                           "stage1.ste_apply", "stage1.kl_exposure", "stage2.global",
                           "stage2.local", "stage3.temporal", "total"}) {
    CAPTURE(name);
    const StageTiming* t = timing(r.report, name);
    REQUIRE(t != nullptr);
    CHECK(t->seconds >= 0.0);
  }
}

TEST_CASE("imported flows are used when present") {
  const FrameSequence clip = static_texture(2, 6, 24, 24);
  testing_support::TempDir dir;
  for (std::size_t t = 0; t + 1 < clip.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "fwd_%06zu.flo", t);
    write_flo(FlowField(24, 24), dir / name);
    std::snprintf(name, sizeof name, "bwd_%06zu.flo", t);
    write_flo(FlowField(24, 24), dir / name);
  }
  const FlowDirectory flows(dir.path());
  PipelineParams p;
  p.repair.temporal_blend_alpha = 0.5;
  const PipelineResult r = deflicker_pipeline(clip, p, Executor(1), &flows);
  CHECK(r.report.flow_source == "imported");
  CHECK(max_channel_diff(r.frames, clip) <= 1);

  // A field of the wrong size is an error, not a silent fallback.
  write_flo(FlowField(8, 8), dir / "fwd_000000.flo");
  CHECK_THROWS_AS(deflicker_pipeline(clip, p, Executor(1), &flows), DimensionMismatch);
}

TEST_CASE("single frame input") {
  const FrameSequence one({testing_support::Texture(3).render(16, 16)});
  PipelineParams p;
  p.repair.temporal_blend_alpha = 0.5;
  const PipelineResult r = deflicker_pipeline(one, p);
  CHECK(r.frames.size() == 1);
  CHECK(max_channel_diff(r.frames, one) <= 1);
}

TEST_CASE("invalid parameters are rejected before work starts") {
  PipelineParams p;
  p.flow.window = 2;
  CHECK_THROWS_AS(deflicker_pipeline(static_texture(1, 3, 16, 16), p), InvalidArgument);
}
