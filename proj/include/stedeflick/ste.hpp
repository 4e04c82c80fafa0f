#pragma once

#include <cstddef>
#include <vector>

#include "stedeflick/executor.hpp"
#include "stedeflick/histogram.hpp"
#include "stedeflick/image.hpp"

namespace stedeflick {

/// Scale-time equalization parameters: Gaussian scale s and window radius l.
struct SteParams {
  double scale = 3.5;
  int radius = 7;

  void validate() const;
};

struct TemporalWeight {
  std::size_t frame;
  double weight;
};

/// Wall-clock seconds spent in each ste_filter phase.
struct SteTimings {
  double histograms = 0.0;
  double luts = 0.0;
  double apply = 0.0;
};

struct SteResult {
  std::vector<LookupTable> luts;
  std::vector<IlluminationMap> filtered_maps;
  std::vector<Histogram> smoothed_hists;
};

/// Kernel G_s(d) = exp(-d^2 / 4s) / sqrt(4 pi s) over the window
/// [t - l, t + l] clipped to [0, count), renormalized to sum to 1.
/// Frame indices are 0-based.
std::vector<TemporalWeight> gaussian_weights(const SteParams& params, std::size_t t,
                                             std::size_t count);

/// entries[level] = sum over the window of weight * match(level; H_t -> H_tau).
LookupTable ste_lut(std::size_t t, const std::vector<Histogram>& hists, const SteParams& params);

/// Same as ste_lut, reusing per-frame CDFs and inverse CDFs.
LookupTable ste_lut(std::size_t t, const std::vector<CumulativeHistogram>& cdfs,
                    const std::vector<InverseCdf>& inverses, const SteParams& params);

/// Histogram pass, then one LUT per frame, then per-pixel LUT application.
/// Throws DimensionMismatch when maps differ in size.
SteResult ste_filter(const std::vector<IlluminationMap>& maps, const SteParams& params,
                     const Executor& executor = Executor(1), SteTimings* timings = nullptr);

}  // namespace stedeflick
