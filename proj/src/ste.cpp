#include "stedeflick/ste.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "stedeflick/error.hpp"

namespace stedeflick {

void SteParams::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("STE scale must be positive, got " + std::to_string(scale));
  }
  if (radius < 0) throw InvalidArgument("STE radius must be >= 0, got " + std::to_string(radius));
}

std::vector<TemporalWeight> gaussian_weights(const SteParams& params, std::size_t t,
                                             std::size_t count) {
  params.validate();
  if (t >= count) {
    throw InvalidArgument("frame index " + std::to_string(t) + " outside sequence of " +
                          std::to_string(count));
  }
  const auto radius = static_cast<std::size_t>(params.radius);
  const std::size_t first = t >= radius ? t - radius : 0;
  const std::size_t last = std::min(count - 1, t + radius);

  const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * params.scale);
  std::vector<TemporalWeight> weights;
  weights.reserve(last - first + 1);
  double total = 0.0;
  for (std::size_t tau = first; tau <= last; ++tau) {
    const double d = static_cast<double>(tau) - static_cast<double>(t);
    const double g = norm * std::exp(-d * d / (4.0 * params.scale));
    weights.push_back({tau, g});
    total += g;
  }
  for (auto& w : weights) w.weight /= total;
  return weights;
}

LookupTable ste_lut(std::size_t t, const std::vector<CumulativeHistogram>& cdfs,
                    const std::vector<InverseCdf>& inverses, const SteParams& params) {
  const auto weights = gaussian_weights(params, t, cdfs.size());
  const CumulativeHistogram& source = cdfs[t];

  LookupTable lut;
  for (const auto& [tau, weight] : weights) {
    const InverseCdf& inverse = inverses[tau];
    for (int level = 0; level < kLevels; ++level) {
      lut.entries[level] += weight * inverse(source.values[level]);
    }
  }
  for (double& e : lut.entries) e = std::clamp(e, 0.0, 255.0);
  return lut;
}

LookupTable ste_lut(std::size_t t, const std::vector<Histogram>& hists, const SteParams& params) {
  if (hists.empty()) throw InvalidArgument("ste_lut needs at least one histogram");
  std::vector<CumulativeHistogram> cdfs;
  std::vector<InverseCdf> inverses;
  cdfs.reserve(hists.size());
  inverses.reserve(hists.size());
  for (const auto& h : hists) {
    cdfs.push_back(cumulative(h));
    inverses.emplace_back(cdfs.back());
  }
  return ste_lut(t, cdfs, inverses, params);
}

SteResult ste_filter(const std::vector<IlluminationMap>& maps, const SteParams& params,
                     const Executor& executor, SteTimings* timings) {
  params.validate();
  if (maps.empty()) throw InvalidArgument("ste_filter on an empty sequence");
  for (std::size_t t = 1; t < maps.size(); ++t) {
    require_same_size(maps[0].size(), maps[t].size(),
                      "ste_filter: map " + std::to_string(t) + " vs map 0");
  }
  const std::size_t count = maps.size();
  using Clock = std::chrono::steady_clock;
  const auto seconds_since = [](Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };

  auto phase = Clock::now();
  std::vector<Histogram> hists(count);
  executor.parallel_for(count, [&](std::size_t t) { hists[t] = histogram(maps[t]); });

  std::vector<CumulativeHistogram> cdfs;
  std::vector<InverseCdf> inverses;
  cdfs.reserve(count);
  inverses.reserve(count);
  for (const auto& h : hists) {
    cdfs.push_back(cumulative(h));
    inverses.emplace_back(cdfs.back());
  }

  if (timings) timings->histograms = seconds_since(phase);

  phase = Clock::now();
  SteResult result;
  result.luts.resize(count);
  executor.parallel_for(count,
                        [&](std::size_t t) { result.luts[t] = ste_lut(t, cdfs, inverses, params); });

  if (timings) timings->luts = seconds_since(phase);

  phase = Clock::now();
  // Blank placeholders; each slot is overwritten by exactly one task.
  std::vector<IlluminationMap> filtered(count, IlluminationMap(maps[0].width(), maps[0].height()));
  result.smoothed_hists.resize(count);
  executor.parallel_for(count, [&](std::size_t t) {
    filtered[t] = apply_lut(maps[t], result.luts[t]);
    result.smoothed_hists[t] = histogram(filtered[t]);
  });
  result.filtered_maps = std::move(filtered);
  if (timings) timings->apply = seconds_since(phase);
  return result;
}

}  // namespace stedeflick
