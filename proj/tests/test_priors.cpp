#include <doctest.h>

#include <cmath>

#include "stedeflick/error.hpp"
#include "stedeflick/priors.hpp"
#include "stedeflick/synth.hpp"
#include "support/clips.hpp"
#include "support/gen.hpp"

using namespace stedeflick;
using testing_support::Gen;

namespace {

double brute_kl(const Histogram& p, const Histogram& q, double eps) {
  double pt = 0.0, qt = 0.0;
  for (int r = 0; r < 256; ++r) {
    pt += p.bins[r] + eps;
    qt += q.bins[r] + eps;
  }
  double kl = 0.0;
  for (int r = 0; r < 256; ++r) {
    const double a = (p.bins[r] + eps) / pt;
    const double b = (q.bins[r] + eps) / qt;
    kl += a * std::log(a / b);
  }
  return kl;
}

// Flagging rule evaluated from scratch for every t.
std::vector<std::size_t> brute_singular(const std::vector<double>& kl, int n, double rho,
                                        double floor) {
  std::vector<std::size_t> out;
  const int T = static_cast<int>(kl.size());
  for (int t = 0; t < T; ++t) {
    double s = 0.0;
    int c = 0;
    for (int k = std::max(0, t - n); k <= std::min(T - 1, t + n); ++k, ++c) s += kl[k];
    if (kl[t] > std::max(rho * s / c, floor)) out.push_back(static_cast<std::size_t>(t));
  }
  return out;
}

PriorParams radius(int n) {
  PriorParams p;
  p.ma_radius = n;
  return p;
}

}  // namespace

TEST_CASE("kl divergence examples") {
  Gen g(5);
  const Histogram h = g.histogram();
  CHECK(kl_divergence(h, h, 1e-8) == doctest::Approx(0.0).epsilon(1e-12));

  Histogram uniform;
  uniform.bins.fill(1.0 / 256);
  CHECK(std::abs(kl_divergence(uniform, uniform, 1e-8)) <= 1e-12);

  Histogram lo, hi;
  lo.bins[0] = 1.0;
  hi.bins[255] = 1.0;
  const double kl = kl_divergence(lo, hi, 1e-8);
  CHECK(kl > 10.0);
  CHECK(kl == doctest::Approx(brute_kl(lo, hi, 1e-8)).epsilon(1e-12));
}

TEST_CASE("property: kl of a distribution with itself is zero and kl is never negative") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    Gen g(seed);
    const Histogram p = g.histogram();
    const Histogram q = g.histogram();
    const double eps = std::pow(10.0, g.real(-10.0, -2.0));
    CHECK(std::abs(kl_divergence(p, p, eps)) <= 1e-12);
    CHECK(kl_divergence(p, q, eps) >= 0.0);
    CHECK(kl_divergence(p, q, eps) == doctest::Approx(brute_kl(p, q, eps)).epsilon(1e-9));
  }
}

TEST_CASE("singular frame examples") {
  CHECK(singular_frames(std::vector<double>(9, 0.0), PriorParams{}).empty());

  // Index 3 is the fourth frame.
  const std::vector<double> pulse{0, 0, 0, 1, 0, 0, 0};
  CHECK(singular_frames(pulse, radius(1)) == std::vector<std::size_t>{3});
  const auto avg = moving_average(pulse, 1);
  CHECK(avg[3] == doctest::Approx(1.0 / 3));
  CHECK(avg[2] == doctest::Approx(1.0 / 3));

  for (double c : {0.1, 0.3, 1.0, 7.25, 1e-6}) {
    CAPTURE(c);
    CHECK(singular_frames(std::vector<double>(11, c), PriorParams{}).empty());
  }
}

TEST_CASE("margin and floor suppress small peaks") {
  const std::vector<double> series{0.1, 0.1, 0.3, 0.1, 0.1, 2.0, 0.1, 0.1};
  CHECK(singular_frames(series, radius(2)) == std::vector<std::size_t>{2, 5});
  PriorParams floored = radius(2);
  floored.kl_floor = 0.5;
  CHECK(singular_frames(series, floored) == std::vector<std::size_t>{5});
  PriorParams margin = radius(2);
  margin.kl_margin = 2.5;
  CHECK(singular_frames(series, margin) == std::vector<std::size_t>{5});
}

TEST_CASE("property: rule matches direct evaluation") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CAPTURE(seed);
    Gen g(seed);
    std::vector<double> kl(static_cast<std::size_t>(g.integer(1, 40)));
    for (auto& x : kl) x = g.coin() ? g.real(0.0, 0.2) : g.real(0.0, 3.0);
    PriorParams p;
    p.ma_radius = g.integer(0, 5);
    p.kl_margin = g.real(0.5, 3.0);
    p.kl_floor = g.coin() ? 0.0 : g.real(0.0, 1.0);
    CHECK(singular_frames(kl, p) == brute_singular(kl, p.ma_radius, p.kl_margin, p.kl_floor));
  }
}

TEST_CASE("property: flagging is scale free without a floor") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CAPTURE(seed);
    Gen g(seed);
    std::vector<double> kl(static_cast<std::size_t>(g.integer(1, 30)));
    for (auto& x : kl) x = g.real(0.0, 2.0);
    // Powers of two scale exactly.
    const double c = std::ldexp(1.0, g.integer(-20, 20));
    std::vector<double> scaled = kl;
    for (auto& x : scaled) x *= c;
    const PriorParams p = radius(g.integer(0, 4));
    CHECK(singular_frames(kl, p) == singular_frames(scaled, p));
  }
}

TEST_CASE("exposure map examples") {
  const PriorParams p;
  CHECK_FALSE(exposure_map(IlluminationMap(4, 4, 128.0), p).any());
  CHECK(exposure_map(IlluminationMap(4, 4, 0.0), p).count() == 16);
  const ExposureMask m = exposure_map(IlluminationMap(3, 1, std::vector<double>{5, 128, 250}), p);
  CHECK(m.at(0, 0));
  CHECK_FALSE(m.at(1, 0));
  CHECK(m.at(2, 0));
  // Boundaries themselves are safe.
  const ExposureMask edge = exposure_map(IlluminationMap(2, 1, std::vector<double>{10, 245}), p);
  CHECK_FALSE(edge.any());
}

TEST_CASE("property: widening the safe band never adds mask pixels") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    Gen g(seed);
    const IlluminationMap m = g.map(8, 8);
    PriorParams narrow;
    narrow.dark_threshold = g.real(0.0, 120.0);
    narrow.bright_threshold = g.real(130.0, 255.0);
    PriorParams wide = narrow;
    wide.dark_threshold = g.real(0.0, narrow.dark_threshold);
    wide.bright_threshold = g.real(narrow.bright_threshold, 255.0);
    const ExposureMask a = exposure_map(m, narrow);
    const ExposureMask b = exposure_map(m, wide);
    for (std::size_t i = 0; i < a.bits().size(); ++i) CHECK(b.bits()[i] <= a.bits()[i]);
  }
}

TEST_CASE("parameter validation") {
  PriorParams p;
  p.kl_margin = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = PriorParams{};
  p.dark_threshold = 250.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = PriorParams{};
  p.ma_radius = -1;
  CHECK_THROWS_AS(singular_frames({1.0}, p), InvalidArgument);
}

TEST_CASE("priors on a static clip") {
  const FrameSequence clip = testing_support::static_texture(3, 12, 32, 32, 40.0, 200.0);
  const DeflickerPriors p = extract_priors(clip, SteParams{}, PriorParams{});
  CHECK(p.singular.empty());
  REQUIRE(p.filtered_maps.size() == clip.size());
  CHECK(p.exposure.size() == clip.size());
  CHECK(p.kl_series.size() == clip.size());
  CHECK(p.kl_average.size() == clip.size());
  for (std::size_t t = 0; t < clip.size(); ++t) {
    CHECK_FALSE(p.exposure[t].any());
    const IlluminationMap in = illumination_map(clip[t]);
    for (std::size_t i = 0; i < in.values().size(); ++i) {
      CHECK(std::abs(in.values()[i] - p.filtered_maps[t].values()[i]) <= 1.0);
    }
  }
}

TEST_CASE("a brightened frame is flagged") {
  const FrameSequence clean = testing_support::moving_pattern(21, 20, 48, 48);
  const std::size_t t = 9;
  const FrameSequence clip =
      testing_support::with_frame(clean, t, apply_artifact(clean[t], Artifact{1.0, 80.0, {}}));
  const DeflickerPriors p = extract_priors(clip, SteParams{}, PriorParams{});
  CHECK(p.is_singular(t));
  // Same decision from the series the bundle reports.
  CHECK(p.singular == brute_singular(p.kl_series, 2, 1.0, 0.0));
}

TEST_CASE("a saturated blob shows up in the exposure mask") {
  const FrameSequence clean = testing_support::static_texture(8, 10, 40, 40, 40.0, 200.0);
  FrameRGB blob = clean[4];
  int painted = 0;
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) {
      if (std::hypot(x - 20.0, y - 20.0) <= std::sqrt(0.1 * 1600 / 3.14159265358979)) {
        for (int c = 0; c < 3; ++c) blob.at(x, y, c) = 255;
        ++painted;
      }
    }
  }
  const DeflickerPriors p =
      extract_priors(testing_support::with_frame(clean, 4, blob), SteParams{}, PriorParams{});
  const double expected = painted / 1600.0;
  CHECK(p.exposure[4].fraction() == doctest::Approx(expected).epsilon(0.25));
  CHECK(p.exposure[3].fraction() < 0.02);
}

TEST_CASE("priors are thread-count independent") {
  const FrameSequence clip = testing_support::moving_pattern(2, 16, 32, 32);
  const DeflickerPriors a = extract_priors(clip, SteParams{}, PriorParams{}, Executor(1));
  const DeflickerPriors b = extract_priors(clip, SteParams{}, PriorParams{}, Executor(3));
  CHECK(a.kl_series == b.kl_series);
  CHECK(a.singular == b.singular);
  CHECK(a.filtered_maps == b.filtered_maps);
}
