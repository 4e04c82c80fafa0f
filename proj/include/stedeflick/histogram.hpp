#pragma once

#include <array>
#include <iosfwd>

#include "stedeflick/image.hpp"

namespace stedeflick {

inline constexpr int kLevels = 256;

/// Fraction of pixels at each 8-bit intensity level.
struct Histogram {
  std::array<double, kLevels> bins{};

  bool operator==(const Histogram&) const = default;
};

/// Running sum of a Histogram; values[255] == 1 up to rounding.
struct CumulativeHistogram {
  std::array<double, kLevels> values{};
};

/// Per-level corrected intensity, real-valued, monotone, within [0, 255].
struct LookupTable {
  std::array<double, kLevels> entries{};

  static LookupTable identity();
};

/// n_level / (H * W). Real-valued maps are quantized to the nearest level.
Histogram histogram(const IlluminationMap& map);

CumulativeHistogram cumulative(const Histogram& hist);

/// Inverse of a target CDF, piecewise linear between consecutive populated
/// levels. Built once per target so a whole table costs 256 binary searches.
class InverseCdf {
 public:
  explicit InverseCdf(const CumulativeHistogram& target);

  /// Smallest populated level j with cdf[j] >= p (within kTolerance), then
  /// linear interpolation from the previous populated level k at cdf[k].
  /// When j is the first populated level the result is j itself.
  double operator()(double p) const noexcept;

  static constexpr double kTolerance = 1e-12;

 private:
  std::array<double, kLevels> cdf_;
  std::array<int, kLevels> previous_populated_;  // -1 when none below
};

/// Hist'^{-1}(Hist(level)). Throws InvalidArgument for levels outside [0, 255].
double match_value(int level, const CumulativeHistogram& source_cdf,
                   const CumulativeHistogram& target_cdf);

LookupTable match_lut(const Histogram& source, const Histogram& target);

/// Replaces each pixel v with lut.entries[round(v)].
IlluminationMap apply_lut(const IlluminationMap& map, const LookupTable& lut);

/// sup over levels of |cdf_a - cdf_b|.
double kolmogorov_distance(const CumulativeHistogram& a, const CumulativeHistogram& b);

/// 256 lines of `bin,value`.
void write_histogram_csv(const Histogram& hist, std::ostream& out);

}  // namespace stedeflick
