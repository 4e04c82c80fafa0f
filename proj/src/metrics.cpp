#include "stedeflick/metrics.hpp"

#include <array>
#include <cmath>

#include "stedeflick/error.hpp"

namespace stedeflick {

double psnr(const FrameRGB& a, const FrameRGB& b) {
  require_same_size(a.size(), b.size(), "psnr");
  const auto da = a.data();
  const auto db = b.data();
  double sse = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrCap;
  const double mse = sse / static_cast<double>(da.size());
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> luma(const FrameRGB& f) {
  std::vector<double> y(f.pixel_count());
  const auto d = f.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * d[3 * i] + 0.587 * d[3 * i + 1] + 0.114 * d[3 * i + 2];
  }
  return y;
}

std::array<double, kSsimWindow> ssim_kernel() {
  std::array<double, kSsimWindow> k{};
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

// Separable Gaussian filter keeping only positions where the window fits.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h,
                                 const std::array<double, kSsimWindow>& k) {
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) s += k[i] * plane[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) s += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

struct Residual {
  double sum = 0.0;
  std::size_t count = 0;
};

}  // namespace

double ssim(const FrameRGB& a, const FrameRGB& b) {
  require_same_size(a.size(), b.size(), "ssim");
  const int w = a.width();
  const int h = a.height();
  if (w < kSsimWindow || h < kSsimWindow) {
    throw InvalidArgument("ssim needs frames of at least 11x11, got " + std::to_string(w) + "x" +
                          std::to_string(h));
  }
  const auto k = ssim_kernel();
  const std::vector<double> ya = luma(a);
  const std::vector<double> yb = luma(b);
  std::vector<double> aa(ya.size()), bb(ya.size()), ab(ya.size());
  for (std::size_t i = 0; i < ya.size(); ++i) {
    aa[i] = ya[i] * ya[i];
    bb[i] = yb[i] * yb[i];
    ab[i] = ya[i] * yb[i];
  }
  const auto mu_a = filter_valid(ya, w, h, k);
  const auto mu_b = filter_valid(yb, w, h, k);
  const auto s_aa = filter_valid(aa, w, h, k);
  const auto s_bb = filter_valid(bb, w, h, k);
  const auto s_ab = filter_valid(ab, w, h, k);

  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = s_aa[i] - ma * ma;
    const double vb = s_bb[i] - mb * mb;
    const double cov = s_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

namespace {

// Weighted L1 residual between o_t and the warp of o_s, accumulated over
// valid pixels; `scale(i)` is the per-pixel weight.
template <class Scale>
Residual masked_residual(const FrameRGB& o_t, const FrameRGB& o_s, const FlowField& flow,
                         const OcclusionMask& mask, Scale scale) {
  require_same_size(o_t.size(), o_s.size(), "pair error frames");
  require_same_size(o_t.size(), flow.size(), "pair error flow");
  require_same_size(o_t.size(), mask.size(), "pair error mask");
  const std::vector<double> warped = warp_real(o_s, flow);
  const auto cur = o_t.data();
  const auto bits = mask.bits();
  Residual r;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == 0) continue;
    const double s = scale(i);
    for (std::size_t c = 0; c < 3; ++c) {
      r.sum += s * std::abs(static_cast<double>(cur[3 * i + c]) - warped[3 * i + c]);
    }
    r.count += 3;
  }
  return r;
}

}  // namespace

double pair_error(const FrameRGB& o_t, const FrameRGB& o_s, const FlowField& flow_s_to_t,
                  const OcclusionMask& mask) {
  const Residual r = masked_residual(o_t, o_s, flow_s_to_t, mask, [](std::size_t) { return 1.0; });
  return r.count == 0 ? 0.0 : r.sum / static_cast<double>(r.count);
}

double weighted_pair_error(const FrameRGB& o_t, const FrameRGB& o_s, const FlowField& flow_s_to_t,
                           const OcclusionMask& mask, const ExposureMask& exposure,
                           const std::vector<double>* weight) {
  require_same_size(o_t.size(), exposure.size(), "weighted pair error exposure mask");
  if (weight && weight->size() != o_t.pixel_count()) {
    throw DimensionMismatch("weight field has " + std::to_string(weight->size()) +
                            " entries, frame has " + std::to_string(o_t.pixel_count()));
  }
  const auto m = exposure.bits();
  const Residual r = masked_residual(o_t, o_s, flow_s_to_t, mask, [&](std::size_t i) {
    const double wt = weight ? (*weight)[i] : 1.0;
    return wt * (static_cast<double>(m[i]) + 1.0);
  });
  return r.count == 0 ? 0.0 : r.sum / static_cast<double>(r.count);
}

WarpFlows estimate_warp_flows(const FrameSequence& reference, const FlowParams& params,
                              const Executor& executor, const FlowDirectory* imported) {
  params.validate();
  const std::size_t n = reference.size() > 0 ? reference.size() - 1 : 0;
  const Size sz = reference.frame_size();
  WarpFlows out;
  out.prev.assign(n, FlowField(sz.width, sz.height));
  out.prev_valid.assign(n, OcclusionMask(sz.width, sz.height));
  out.first.assign(n, FlowField(sz.width, sz.height));
  out.first_valid.assign(n, OcclusionMask(sz.width, sz.height));
  std::vector<std::uint8_t> from_file(n, 0);

  executor.parallel_for(n, [&](std::size_t i) {
    const std::size_t t = i + 1;
    std::optional<FlowField> fwd, bwd;
    if (imported) {
      fwd = imported->cur_to_next(t - 1);
      bwd = imported->next_to_cur(t - 1);
    }
    if (fwd && bwd) {
      from_file[i] = 1;
    } else {
      fwd = estimate_flow(reference[t - 1], reference[t], params);
      bwd = estimate_flow(reference[t], reference[t - 1], params);
    }
    out.prev[i] = std::move(*fwd);
    out.prev_valid[i] = occlusion_mask(out.prev[i], *bwd, params.fb_threshold);
    if (t == 1) {
      out.first[i] = out.prev[i];
      out.first_valid[i] = out.prev_valid[i];
    } else {
      out.first[i] = estimate_flow(reference[0], reference[t], params);
      const FlowField back = estimate_flow(reference[t], reference[0], params);
      out.first_valid[i] = occlusion_mask(out.first[i], back, params.fb_threshold);
    }
  });

  std::size_t imported_count = 0;
  for (auto f : from_file) imported_count += f;
  if (imported_count == 0) {
    out.source = "internal";
  } else if (imported_count == n && n == 1) {
    out.source = "imported";
  } else {
    out.source = "mixed";  // long-term flows are always internal
  }
  return out;
}

PairErrors warp_pair_errors(const FrameSequence& seq, const WarpFlows& flows,
                            const Executor& executor) {
  const std::size_t count = seq.size();
  if (count < 2) throw InvalidArgument("warping error needs at least 2 frames");
  if (flows.prev.size() != count - 1 || flows.first.size() != count - 1) {
    throw DimensionMismatch("warping flows cover " + std::to_string(flows.prev.size() + 1) +
                            " frames, sequence has " + std::to_string(count));
  }
  PairErrors e;
  e.prev.assign(count, 0.0);
  e.first.assign(count, 0.0);
  executor.parallel_for(count - 1, [&](std::size_t i) {
    const std::size_t t = i + 1;
    e.prev[t] = pair_error(seq[t], seq[t - 1], flows.prev[i], flows.prev_valid[i]);
    e.first[t] = pair_error(seq[t], seq[0], flows.first[i], flows.first_valid[i]);
  });
  return e;
}

double e_warp(const FrameSequence& seq, const WarpFlows& flows, const Executor& executor) {
  const PairErrors e = warp_pair_errors(seq, flows, executor);
  double total = 0.0;
  for (std::size_t t = 1; t < seq.size(); ++t) total += e.first[t] + e.prev[t];
  return total / static_cast<double>(seq.size() - 1);
}

namespace {

SequenceScores score(const FrameSequence& seq, const FrameSequence& gt, const WarpFlows& flows,
                     const Executor& executor) {
  const std::size_t count = seq.size();
  SequenceScores s;
  s.per_frame.resize(count);
  executor.parallel_for(count, [&](std::size_t t) {
    s.per_frame[t].psnr = psnr(seq[t], gt[t]);
    s.per_frame[t].ssim = ssim(seq[t], gt[t]);
  });
  if (count >= 2) {
    const PairErrors e = warp_pair_errors(seq, flows, executor);
    double total = 0.0;
    for (std::size_t t = 0; t < count; ++t) {
      s.per_frame[t].pair_err_prev = e.prev[t];
      s.per_frame[t].pair_err_first = e.first[t];
      if (t > 0) total += e.first[t] + e.prev[t];
    }
    s.e_warp = total / static_cast<double>(count - 1);
  }
  for (const auto& f : s.per_frame) {
    s.psnr_mean += f.psnr;
    s.ssim_mean += f.ssim;
  }
  s.psnr_mean /= static_cast<double>(count);
  s.ssim_mean /= static_cast<double>(count);
  return s;
}

void require_matching(const FrameSequence& seq, const FrameSequence& gt, const char* what) {
  if (seq.size() != gt.size()) {
    throw DimensionMismatch(std::string(what) + " has " + std::to_string(seq.size()) +
                            " frames, ground truth has " + std::to_string(gt.size()));
  }
  require_same_size(seq.frame_size(), gt.frame_size(), std::string(what) + " vs ground truth");
}

}  // namespace

EvalReport evaluate(const FrameSequence& pred, const FrameSequence& gt, const FrameSequence* raw,
                    const FlowParams& params, const Executor& executor,
                    const FlowDirectory* imported) {
  require_matching(pred, gt, "prediction");
  if (raw) require_matching(*raw, gt, "raw input");
  EvalReport report;
  WarpFlows flows;
  if (gt.size() >= 2) {
    flows = estimate_warp_flows(gt, params, executor, imported);
    report.flow_source = flows.source;
  } else {
    report.flow_source = "none";
  }
  report.pred = score(pred, gt, flows, executor);
  if (raw) report.raw = score(*raw, gt, flows, executor);
  return report;
}

}  // namespace stedeflick
