#include <doctest.h>

#include <cmath>

#include "stedeflick/error.hpp"
#include "stedeflick/metrics.hpp"
#include "support/clips.hpp"
#include "support/gen.hpp"

using namespace stedeflick;
using testing_support::Gen;
using testing_support::gray;

namespace {

WarpFlows zero_flows(std::size_t frames, Size size) {
  WarpFlows w;
  for (std::size_t t = 1; t < frames; ++t) {
    w.prev.emplace_back(size.width, size.height);
    w.first.emplace_back(size.width, size.height);
    w.prev_valid.emplace_back(size.width, size.height, 1);
    w.first_valid.emplace_back(size.width, size.height, 1);
  }
  w.source = "internal";
  return w;
}

FrameSequence constant_video(std::initializer_list<int> values, int w = 6, int h = 4) {
  std::vector<FrameRGB> frames;
  for (int v : values) frames.push_back(gray(w, h, static_cast<std::uint8_t>(v)));
  return FrameSequence(frames);
}

BinaryMask left_half(int w, int h) {
  std::vector<std::uint8_t> bits;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) bits.push_back(x < w / 2);
  }
  return BinaryMask(w, h, bits);
}

}  // namespace

TEST_CASE("psnr examples") {
  Gen g(1);
  const FrameRGB a = g.frame(5, 5);
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK(psnr(gray(3, 3, 0), gray(3, 3, 255)) == doctest::Approx(0.0));
  CHECK(psnr(gray(1, 1, 100), gray(1, 1, 110)) ==
        doctest::Approx(10.0 * std::log10(255.0 * 255.0 / 100.0)));
  CHECK(psnr(gray(1, 1, 100), gray(1, 1, 110)) == doctest::Approx(28.13).epsilon(1e-3));
  CHECK_THROWS_AS(psnr(FrameRGB(2, 2), FrameRGB(2, 3)), DimensionMismatch);
}

TEST_CASE("property: psnr and ssim are symmetric") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    Gen g(seed);
    const FrameRGB a = g.frame(16, 13);
    const FrameRGB b = g.frame(16, 13);
    CHECK(psnr(a, b) == psnr(b, a));
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) <= 1e-9);
  }
}

TEST_CASE("ssim examples") {
  const FrameRGB tex = testing_support::Texture(3, 60.0, 200.0).render(32, 32);
  CHECK(ssim(tex, tex) == doctest::Approx(1.0).epsilon(1e-9));

  // Blurred noise: enough local variance that the structure term dominates.
  const auto noise = testing_support::noise_plane(8, 32, 32);
  FrameRGB pos(32, 32), neg(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const auto v = to_u8(noise[static_cast<std::size_t>(y) * 32 + x]);
      for (int c = 0; c < 3; ++c) {
        pos.at(x, y, c) = v;
        neg.at(x, y, c) = static_cast<std::uint8_t>(255 - v);
      }
    }
  }
  CHECK(ssim(pos, neg) < 0.2);

  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double expected = (2.0 * 100 * 110 + c1) / (100.0 * 100 + 110.0 * 110 + c1);
  CHECK(ssim(gray(16, 16, 100), gray(16, 16, 110)) == doctest::Approx(expected).epsilon(1e-9));

  CHECK_THROWS_AS(ssim(FrameRGB(10, 20), FrameRGB(10, 20)), InvalidArgument);
}

TEST_CASE("pair_error examples") {
  const Size s{6, 4};
  const FlowField zero(s.width, s.height);
  const BinaryMask full(s.width, s.height, 1);
  const FrameRGB base = gray(6, 4, 50);
  CHECK(pair_error(base, base, zero, full) == 0.0);
  CHECK(pair_error(gray(6, 4, 60), base, zero, full) == doctest::Approx(10.0));

  // Offset of 10 only where the mask is set.
  FrameRGB half = base;
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 3; ++x) {
      for (int c = 0; c < 3; ++c) half.at(x, y, c) = 60;
    }
  }
  CHECK(pair_error(half, base, zero, left_half(6, 4)) == doctest::Approx(10.0));
  CHECK(pair_error(half, base, zero, BinaryMask(6, 4)) == 0.0);
}

TEST_CASE("property: a larger residual never lowers pair_error") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CAPTURE(seed);
    Gen g(seed);
    const FrameRGB s = g.frame(8, 8);
    FrameRGB t = g.frame(8, 8);
    std::vector<std::uint8_t> bits(64);
    for (auto& b : bits) b = g.coin();
    bits[static_cast<std::size_t>(g.integer(0, 63))] = 1;
    const BinaryMask mask(8, 8, bits);
    const FlowField zero(8, 8);
    const double before = pair_error(t, s, zero, mask);
    // Push one masked value further from the source.
    int x = 0, y = 0;
    do {
      x = g.integer(0, 7);
      y = g.integer(0, 7);
    } while (!mask.at(x, y));
    const int c = g.integer(0, 2);
    auto& v = t.at(x, y, c);
    v = s.at(x, y, c) >= v ? std::uint8_t(std::max(0, v - 10)) : std::uint8_t(std::min(255, v + 10));
    CHECK(pair_error(t, s, zero, mask) >= before);
  }
}

TEST_CASE("weighted pair error examples") {
  Gen g(4);
  const FrameRGB a = g.frame(6, 4), b = g.frame(6, 4);
  const FlowField zero(6, 4);
  const BinaryMask full(6, 4, 1);
  const double plain = pair_error(a, b, zero, full);
  CHECK(weighted_pair_error(a, b, zero, full, BinaryMask(6, 4)) == plain);
  CHECK(weighted_pair_error(a, b, zero, full, BinaryMask(6, 4, 1)) ==
        doctest::Approx(2.0 * plain));
  CHECK(weighted_pair_error(gray(6, 4, 60), gray(6, 4, 50), zero, full, left_half(6, 4)) ==
        doctest::Approx(15.0));
  const std::vector<double> ones(24, 1.0);
  CHECK(weighted_pair_error(a, b, zero, full, BinaryMask(6, 4), &ones) == plain);
}

TEST_CASE("e_warp examples") {
  const FrameSequence still = constant_video({80, 80, 80, 80});
  CHECK(e_warp(still, zero_flows(4, still.frame_size())) == 0.0);

  const FrameSequence two = constant_video({40, 47});
  const auto flows2 = zero_flows(2, two.frame_size());
  CHECK(e_warp(two, flows2) == doctest::Approx(2.0 * 7.0));

  const FrameSequence three = constant_video({0, 10, 0});
  const WarpFlows flows3 = zero_flows(3, three.frame_size());
  CHECK(e_warp(three, flows3) == doctest::Approx(15.0));
  const PairErrors pe = warp_pair_errors(three, flows3);
  CHECK(pe.prev == std::vector<double>{0.0, 10.0, 10.0});
  CHECK(pe.first == std::vector<double>{0.0, 10.0, 0.0});

  CHECK_THROWS_AS(e_warp(constant_video({1}), zero_flows(1, Size{6, 4})), InvalidArgument);
}

TEST_CASE("static video has zero warping error with estimated flows") {
  const FrameSequence still = testing_support::static_texture(5, 6, 32, 32);
  const WarpFlows flows = estimate_warp_flows(still, FlowParams{});
  CHECK(flows.source == "internal");
  CHECK(e_warp(still, flows) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("evaluate scores prediction and raw input against the reference") {
  const FrameSequence gt = testing_support::moving_pattern(3, 8, 32, 32);
  std::vector<FrameRGB> noisy;
  for (const auto& f : gt) {
    FrameRGB n = f;
    for (auto& v : n.data()) v = static_cast<std::uint8_t>(std::min(255, v + 20));
    noisy.push_back(n);
  }
  const FrameSequence raw(noisy);
  const EvalReport r = evaluate(gt, gt, &raw, FlowParams{});
  CHECK(r.pred.psnr_mean == kPsnrCap);
  CHECK(r.pred.ssim_mean == doctest::Approx(1.0));
  REQUIRE(r.raw.has_value());
  CHECK(r.raw->psnr_mean < 30.0);
  CHECK(r.pred.per_frame.size() == 8);
  const EvalReport threads = evaluate(gt, gt, &raw, FlowParams{}, Executor(4));
  CHECK(threads.raw->e_warp == r.raw->e_warp);

  const FrameSequence shorter(std::vector<FrameRGB>(gt.frames().begin(), gt.frames().end() - 1));
  CHECK_THROWS_AS(evaluate(shorter, gt, nullptr, FlowParams{}), DimensionMismatch);
}
