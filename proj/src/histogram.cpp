#include "stedeflick/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "stedeflick/error.hpp"

namespace stedeflick {

namespace {

int quantize(double v) noexcept {
  return static_cast<int>(std::clamp(std::lround(v), 0L, static_cast<long>(kLevels - 1)));
}

}  // namespace

LookupTable LookupTable::identity() {
  LookupTable lut;
  for (int level = 0; level < kLevels; ++level) lut.entries[level] = level;
  return lut;
}

Histogram histogram(const IlluminationMap& map) {
  const auto values = map.values();
  if (values.empty()) throw InvalidArgument("histogram of an empty map");

  std::array<std::size_t, kLevels> counts{};
  for (double v : values) ++counts[quantize(v)];

  Histogram hist;
  const double total = static_cast<double>(values.size());
  for (int level = 0; level < kLevels; ++level) {
    hist.bins[level] = static_cast<double>(counts[level]) / total;
  }
  return hist;
}

CumulativeHistogram cumulative(const Histogram& hist) {
  CumulativeHistogram cdf;
  double running = 0.0;
  for (int level = 0; level < kLevels; ++level) {
    running += hist.bins[level];
    cdf.values[level] = running;
  }
  return cdf;
}

InverseCdf::InverseCdf(const CumulativeHistogram& target) : cdf_(target.values) {
  int last = -1;
  for (int level = 0; level < kLevels; ++level) {
    previous_populated_[level] = last;
    const double below = level > 0 ? cdf_[level - 1] : 0.0;
    if (cdf_[level] > below) last = level;
  }
}

double InverseCdf::operator()(double p) const noexcept {
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), p - kTolerance);
  int j = 0;
  if (it == cdf_.end()) {
    // Only reachable through accumulated rounding; fall back to the top
    // populated level.
    j = kLevels - 1;
    while (j > 0 && cdf_[j] <= cdf_[j - 1]) --j;
    return j;
  }
  j = static_cast<int>(it - cdf_.begin());

  const int k = previous_populated_[j];
  if (k < 0) return j;
  const double lo = cdf_[k];
  const double hi = cdf_[j];
  const double frac = std::clamp((p - lo) / (hi - lo), 0.0, 1.0);
  return k + frac * (j - k);
}

double match_value(int level, const CumulativeHistogram& source_cdf,
                   const CumulativeHistogram& target_cdf) {
  if (level < 0 || level >= kLevels) {
    throw InvalidArgument("intensity level outside [0,255]: " + std::to_string(level));
  }
  return InverseCdf(target_cdf)(source_cdf.values[level]);
}

LookupTable match_lut(const Histogram& source, const Histogram& target) {
  const CumulativeHistogram src = cumulative(source);
  const InverseCdf inverse(cumulative(target));
  LookupTable lut;
  for (int level = 0; level < kLevels; ++level) lut.entries[level] = inverse(src.values[level]);
  return lut;
}

IlluminationMap apply_lut(const IlluminationMap& map, const LookupTable& lut) {
  const auto in = map.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::clamp(lut.entries[quantize(in[i])], 0.0, 255.0);
  }
  return IlluminationMap(map.width(), map.height(), std::move(out));
}

double kolmogorov_distance(const CumulativeHistogram& a, const CumulativeHistogram& b) {
  double worst = 0.0;
  for (int level = 0; level < kLevels; ++level) {
    worst = std::max(worst, std::abs(a.values[level] - b.values[level]));
  }
  return worst;
}

void write_histogram_csv(const Histogram& hist, std::ostream& out) {
  const auto precision = out.precision(17);
  for (int level = 0; level < kLevels; ++level) out << level << ',' << hist.bins[level] << '\n';
  out.precision(precision);
}

}  // namespace stedeflick
