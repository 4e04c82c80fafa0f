#include "stedeflick/priors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stedeflick/error.hpp"

namespace stedeflick {

void PriorParams::validate() const {
  if (ma_radius < 0) throw InvalidArgument("moving-average radius must be >= 0");
  if (!(kl_margin > 0.0)) throw InvalidArgument("KL margin must be positive");
  if (!(kl_floor >= 0.0)) throw InvalidArgument("KL floor must be >= 0");
  if (!(kl_smoothing > 0.0)) throw InvalidArgument("KL smoothing must be positive");
  if (!(dark_threshold >= 0.0 && bright_threshold <= 255.0 && dark_threshold < bright_threshold)) {
    throw InvalidArgument("exposure thresholds must satisfy 0 <= dark < bright <= 255, got " +
                          std::to_string(dark_threshold) + " / " +
                          std::to_string(bright_threshold));
  }
}

bool DeflickerPriors::is_singular(std::size_t t) const {
  return std::binary_search(singular.begin(), singular.end(), t);
}

double kl_divergence(const Histogram& p, const Histogram& q, double smoothing) {
  if (!(smoothing > 0.0)) throw InvalidArgument("KL smoothing must be positive");
  double p_total = 0.0;
  double q_total = 0.0;
  for (int r = 0; r < kLevels; ++r) {
    p_total += p.bins[r] + smoothing;
    q_total += q.bins[r] + smoothing;
  }
  double kl = 0.0;
  for (int r = 0; r < kLevels; ++r) {
    const double ps = (p.bins[r] + smoothing) / p_total;
    const double qs = (q.bins[r] + smoothing) / q_total;
    kl += ps * std::log(ps / qs);
  }
  return std::max(kl, 0.0);
}

std::vector<double> moving_average(const std::vector<double>& series, int radius) {
  if (radius < 0) throw InvalidArgument("moving-average radius must be >= 0");
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  std::vector<double> average(series.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const std::ptrdiff_t first = std::max<std::ptrdiff_t>(0, t - radius);
    const std::ptrdiff_t last = std::min<std::ptrdiff_t>(n - 1, t + radius);
    double sum = 0.0;
    for (std::ptrdiff_t tau = first; tau <= last; ++tau) sum += series[static_cast<std::size_t>(tau)];
    average[static_cast<std::size_t>(t)] = sum / static_cast<double>(last - first + 1);
  }
  return average;
}

std::vector<std::size_t> singular_frames(const std::vector<double>& kl_series,
                                         const PriorParams& params) {
  params.validate();
  const auto average = moving_average(kl_series, params.ma_radius);
  std::vector<std::size_t> flagged;
  for (std::size_t t = 0; t < kl_series.size(); ++t) {
    if (kl_series[t] > std::max(params.kl_margin * average[t], params.kl_floor)) {
      flagged.push_back(t);
    }
  }
  return flagged;
}

ExposureMask exposure_map(const IlluminationMap& filtered, const PriorParams& params) {
  const auto values = filtered.values();
  std::vector<std::uint8_t> bits(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    bits[i] = (values[i] < params.dark_threshold || values[i] > params.bright_threshold) ? 1 : 0;
  }
  return ExposureMask(filtered.width(), filtered.height(), std::move(bits));
}

DeflickerPriors extract_priors(const std::vector<IlluminationMap>& maps, const SteParams& ste,
                               const PriorParams& params, const Executor& executor,
                               SteTimings* timings) {
  params.validate();
  SteResult filtered = ste_filter(maps, ste, executor, timings);
  const std::size_t count = maps.size();

  DeflickerPriors priors;
  priors.kl_series.resize(count);
  std::vector<ExposureMask> exposure(count, ExposureMask(maps[0].width(), maps[0].height()));
  executor.parallel_for(count, [&](std::size_t t) {
    priors.kl_series[t] =
        kl_divergence(filtered.smoothed_hists[t], histogram(maps[t]), params.kl_smoothing);
    exposure[t] = exposure_map(filtered.filtered_maps[t], params);
  });
  priors.kl_average = moving_average(priors.kl_series, params.ma_radius);
  priors.singular = singular_frames(priors.kl_series, params);
  priors.exposure = std::move(exposure);
  priors.filtered_maps = std::move(filtered.filtered_maps);
  priors.luts = std::move(filtered.luts);
  return priors;
}

DeflickerPriors extract_priors(const FrameSequence& frames, const SteParams& ste,
                               const PriorParams& params, const Executor& executor) {
  std::vector<IlluminationMap> maps(frames.size(),
                                    IlluminationMap(frames.frame_size().width,
                                                    frames.frame_size().height));
  executor.parallel_for(frames.size(), [&](std::size_t t) { maps[t] = illumination_map(frames[t]); });
  return extract_priors(maps, ste, params, executor);
}

}  // namespace stedeflick
