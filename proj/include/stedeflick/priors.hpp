#pragma once

#include <cstddef>
#include <vector>

#include "stedeflick/executor.hpp"
#include "stedeflick/histogram.hpp"
#include "stedeflick/image.hpp"
#include "stedeflick/ste.hpp"

namespace stedeflick {

struct PriorParams {
  int ma_radius = 2;           // moving-average radius n
  double kl_margin = 1.0;      // rho: multiplier on the moving average
  double kl_floor = 0.0;       // absolute minimum KL to flag
  double dark_threshold = 10.0;
  double bright_threshold = 245.0;
  double kl_smoothing = 1e-8;  // additive mass per bin before renormalizing

  void validate() const;
};

struct DeflickerPriors {
  std::vector<IlluminationMap> filtered_maps;
  std::vector<LookupTable> luts;
  /// Flagged frames, ascending, 0-based.
  std::vector<std::size_t> singular;
  std::vector<ExposureMask> exposure;
  std::vector<double> kl_series;
  /// Moving average of kl_series over the truncated window (the per-frame
  /// reference level that kl_series is compared against).
  std::vector<double> kl_average;

  bool is_singular(std::size_t t) const;
};

/// KL(p || q) in nats after adding `smoothing` to every bin of both inputs and
/// renormalizing. Never negative.
double kl_divergence(const Histogram& p, const Histogram& q, double smoothing);

/// Mean of series[t - n .. t + n] clipped to the series bounds.
std::vector<double> moving_average(const std::vector<double>& series, int radius);

/// Frames with kl[t] > max(rho * average[t], floor), ascending and 0-based.
std::vector<std::size_t> singular_frames(const std::vector<double>& kl_series,
                                         const PriorParams& params);

/// 1 where the filtered illumination is below the dark threshold or above
/// the bright threshold.
ExposureMask exposure_map(const IlluminationMap& filtered, const PriorParams& params);

/// Illumination extraction, STE, per-frame KL(smoothed || input), singular
/// frame detection and exposure masks.
DeflickerPriors extract_priors(const FrameSequence& frames, const SteParams& ste,
                               const PriorParams& params, const Executor& executor = Executor(1));

/// Same, from precomputed illumination maps.
DeflickerPriors extract_priors(const std::vector<IlluminationMap>& maps, const SteParams& ste,
                               const PriorParams& params, const Executor& executor = Executor(1),
                               SteTimings* timings = nullptr);

}  // namespace stedeflick
