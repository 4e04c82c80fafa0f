#include "stedeflick/synth.hpp"

#include <algorithm>
#include <random>

#include "stedeflick/error.hpp"
#include "stedeflick/frame_io.hpp"
#include "stedeflick/report.hpp"

namespace fs = std::filesystem;

namespace stedeflick {

void FlickerSpec::validate() const {
  if (window_w < 1) throw InvalidArgument("window_w must be >= 1, got " + std::to_string(window_w));
  if (local_window_l && *local_window_l < 1) {
    throw InvalidArgument("local window must be >= 1, got " + std::to_string(*local_window_l));
  }
  if (!(offset_range.first <= offset_range.second)) {
    throw InvalidArgument("offset range lo > hi");
  }
  if (gain_range) {
    if (!(gain_range->first > 0.0) || !(gain_range->first <= gain_range->second)) {
      throw InvalidArgument("gain range must satisfy 0 < lo <= hi");
    }
  }
}

std::string FlickerSpec::label() const {
  if (local_window_l) return "L" + std::to_string(*local_window_l);
  return "W" + std::to_string(window_w);
}

namespace {

std::uint64_t fnv1a(const std::uint8_t* bytes, std::size_t n, std::uint64_t h) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ULL;

class BlockRng {
 public:
  BlockRng(const FlickerSpec& spec, std::uint64_t clip_hash, std::size_t block) {
    const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(spec.seed),
                      hi(spec.seed),
                      lo(clip_hash),
                      hi(clip_hash),
                      static_cast<std::uint32_t>(block),
                      static_cast<std::uint32_t>(spec.window_w),
                      static_cast<std::uint32_t>(spec.local_window_l.value_or(0))};
    engine_.seed(seq);
  }

  // Uniform in [lo, hi], fixed bit recipe so results match across standard libraries.
  double uniform(double lo, double hi) {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + unit * (hi - lo);
  }

  int integer(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }

 private:
  std::mt19937_64 engine_;
};

std::string clip_name(const fs::path& source) {
  fs::path p = source.lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return io::is_y4m_path(p) ? p.stem().string() : p.filename().string();
}

}  // namespace

std::vector<Artifact> block_artifacts(const FlickerSpec& spec, std::size_t frame_count,
                                      Size frame_size, const std::string& clip_id) {
  spec.validate();
  const std::uint64_t clip_hash =
      fnv1a(reinterpret_cast<const std::uint8_t*>(clip_id.data()), clip_id.size(), kFnvBasis);
  const auto w = static_cast<std::size_t>(spec.window_w);
  const std::size_t blocks = (frame_count + w - 1) / w;

  std::vector<Artifact> artifacts;
  artifacts.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    BlockRng rng(spec, clip_hash, b);
    Artifact a;
    a.gain = spec.gain_range ? rng.uniform(spec.gain_range->first, spec.gain_range->second) : 1.0;
    a.offset = rng.uniform(spec.offset_range.first, spec.offset_range.second);
    if (spec.local_window_l) {
      const int l = *spec.local_window_l;
      Rect r;
      r.width = std::max(1, frame_size.width / l);
      r.height = std::max(1, frame_size.height / l);
      r.x = rng.integer(0, frame_size.width - r.width);
      r.y = rng.integer(0, frame_size.height - r.height);
      a.region = r;
    }
    artifacts.push_back(a);
  }
  return artifacts;
}

FrameRGB apply_artifact(const FrameRGB& clean, const Artifact& artifact) {
  FrameRGB out = clean;
  for (int y = 0; y < clean.height(); ++y) {
    for (int x = 0; x < clean.width(); ++x) {
      if (artifact.region && !artifact.region->contains(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = to_u8(artifact.gain * clean.at(x, y, c) + artifact.offset);
      }
    }
  }
  return out;
}

FrameSequence synth_flicker(const FrameSequence& clean, const FlickerSpec& spec,
                            const std::string& clip_id) {
  const auto artifacts = block_artifacts(spec, clean.size(), clean.frame_size(), clip_id);
  const auto w = static_cast<std::size_t>(spec.window_w);
  std::vector<FrameRGB> frames;
  frames.reserve(clean.size());
  for (std::size_t t = 0; t < clean.size(); ++t) {
    frames.push_back(apply_artifact(clean[t], artifacts[t / w]));
  }
  return FrameSequence(std::move(frames), clean.frame_rate());
}

std::vector<FlickerSpec> table_specs(std::uint64_t seed) {
  std::vector<FlickerSpec> specs(4);
  specs[0].window_w = 1;
  specs[1].window_w = 3;
  specs[2].window_w = 10;
  specs[3].window_w = 3;
  specs[3].local_window_l = 3;
  for (auto& s : specs) s.seed = seed;
  return specs;
}

std::uint64_t frames_checksum(const FrameSequence& frames) {
  std::uint64_t h = kFnvBasis;
  for (const auto& f : frames) h = fnv1a(f.data().data(), f.data().size(), h);
  return h;
}

CorpusManifest build_corpus(const std::vector<fs::path>& clean_dirs,
                            const std::vector<FlickerSpec>& specs, const fs::path& out) {
  CorpusManifest manifest;
  if (specs.empty()) return manifest;
  for (const auto& s : specs) s.validate();

  for (const auto& dir : clean_dirs) {
    const std::string clip = clip_name(dir);
    try {
      const FrameSequence clean = io::read_frames(dir);
      for (const auto& spec : specs) {
        const FrameSequence degraded = synth_flicker(clean, spec, clip);
        CorpusEntry entry;
        entry.clip = clip;
        entry.label = spec.label();
        entry.spec = spec;
        entry.gt = fs::absolute(dir).lexically_normal();
        entry.degraded = fs::absolute(out / clip / entry.label).lexically_normal();
        entry.checksum = frames_checksum(degraded);
        io::write_png_dir(degraded, entry.degraded);
        manifest.entries.push_back(std::move(entry));
      }
    } catch (const Error& e) {
      throw IoError("clip '" + clip + "': " + e.what());
    } catch (const fs::filesystem_error& e) {
      throw IoError("clip '" + clip + "': " + e.what());
    }
  }
  write_corpus_manifest(manifest, out / "corpus.json");
  return manifest;
}

}  // namespace stedeflick
