#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stedeflick/executor.hpp"
#include "stedeflick/flow.hpp"
#include "stedeflick/image.hpp"

namespace stedeflick {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(255^2 / MSE) over all channels; kPsnrCap when the frames match.
double psnr(const FrameRGB& a, const FrameRGB& b);

/// Mean SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, on BT.601 luma. Both sides must be >= 11.
double ssim(const FrameRGB& a, const FrameRGB& b);

/// Mean over mask-valid pixels and channels of |o_t - warp(o_s, flow)|, where
/// `flow_s_to_t` is o_{s->t}. Zero when no pixel is valid.
double pair_error(const FrameRGB& o_t, const FrameRGB& o_s, const FlowField& flow_s_to_t,
                  const OcclusionMask& mask);

/// Same residual weighted by weight * (exposure + 1), averaged over the
/// mask-valid pixels and channels. A null `weight` means the constant 1.
double weighted_pair_error(const FrameRGB& o_t, const FrameRGB& o_s, const FlowField& flow_s_to_t,
                           const OcclusionMask& mask, const ExposureMask& exposure,
                           const std::vector<double>* weight = nullptr);

/// Flows and validity masks for the short-term (t-1 -> t) and long-term
/// (0 -> t) terms, indexed by t - 1 for t = 1 .. T-1.
struct WarpFlows {
  std::vector<FlowField> prev;
  std::vector<OcclusionMask> prev_valid;
  std::vector<FlowField> first;
  std::vector<OcclusionMask> first_valid;
  std::string source;  // "internal", "imported" or "mixed"
};

/// Estimates the flows on `reference`. Adjacent flows are read from `imported`
/// when the files exist; long-term flows are always estimated.
WarpFlows estimate_warp_flows(const FrameSequence& reference, const FlowParams& params,
                              const Executor& executor = Executor(1),
                              const FlowDirectory* imported = nullptr);

struct PairErrors {
  std::vector<double> prev;   // index t; 0 at t = 0
  std::vector<double> first;  // index t; 0 at t = 0
};

PairErrors warp_pair_errors(const FrameSequence& seq, const WarpFlows& flows,
                            const Executor& executor = Executor(1));

/// sum_{t>=1} (E_pair(O_t, O_0) + E_pair(O_t, O_{t-1})) / (T - 1). Needs T >= 2.
double e_warp(const FrameSequence& seq, const WarpFlows& flows,
              const Executor& executor = Executor(1));

struct FrameScores {
  double psnr = 0.0;
  double ssim = 0.0;
  double pair_err_prev = 0.0;
  double pair_err_first = 0.0;
};

struct SequenceScores {
  std::vector<FrameScores> per_frame;
  double psnr_mean = 0.0;
  double ssim_mean = 0.0;
  double e_warp = 0.0;
};

struct EvalReport {
  SequenceScores pred;
  std::optional<SequenceScores> raw;
  std::string flow_source;
};

/// Scores `pred` (and `raw`, if given) against `gt`. Warping flows are
/// estimated once on `gt` and shared by every scored sequence.
EvalReport evaluate(const FrameSequence& pred, const FrameSequence& gt,
                    const FrameSequence* raw, const FlowParams& params,
                    const Executor& executor = Executor(1),
                    const FlowDirectory* imported = nullptr);

}  // namespace stedeflick
