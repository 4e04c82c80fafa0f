#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stedeflick/image.hpp"

namespace stedeflick {

struct FlickerSpec {
  int window_w = 1;
  std::optional<int> local_window_l;  // absent: whole-frame flicker
  std::pair<double, double> offset_range{-50.0, 50.0};
  std::optional<std::pair<double, double>> gain_range{std::pair{0.7, 1.3}};
  std::uint64_t seed = 0;

  void validate() const;
  /// "W3", or "L3" in local mode.
  std::string label() const;
};

/// Half-open pixel rectangle [x, x + width) x [y, y + height).
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool contains(int px, int py) const noexcept {
    return px >= x && px < x + width && py >= y && py < y + height;
  }
  bool operator==(const Rect&) const = default;
};

/// One block's flicker: X = clamp(gain * G + offset), optionally only inside `region`.
struct Artifact {
  double gain = 1.0;
  double offset = 0.0;
  std::optional<Rect> region;

  bool operator==(const Artifact&) const = default;
};

/// Artifacts for consecutive blocks of `window_w` frames (the last block may be
/// shorter). Each block draws from its own generator seeded by
/// (seed, clip_id, block index), so the result does not depend on the order in
/// which blocks or clips are produced.
std::vector<Artifact> block_artifacts(const FlickerSpec& spec, std::size_t frame_count,
                                      Size frame_size, const std::string& clip_id);

FrameRGB apply_artifact(const FrameRGB& clean, const Artifact& artifact);

FrameSequence synth_flicker(const FrameSequence& clean, const FlickerSpec& spec,
                            const std::string& clip_id = "");

/// The four degradations reported per corpus: W1, W3, W10 and a local L3
/// variant (L3 uses W = 3).
std::vector<FlickerSpec> table_specs(std::uint64_t seed);

/// FNV-1a over every pixel byte, in frame order.
std::uint64_t frames_checksum(const FrameSequence& frames);

struct CorpusEntry {
  std::string clip;
  std::string label;
  FlickerSpec spec;
  std::filesystem::path gt;
  std::filesystem::path degraded;
  std::uint64_t checksum = 0;
};

struct CorpusManifest {
  std::vector<CorpusEntry> entries;
};

/// Applies every spec to every clip and writes `<out>/<clip>/<label>/` PNG
/// frames. Clip names come from the directory names. Writes nothing when
/// `specs` is empty. Failures name the clip.
CorpusManifest build_corpus(const std::vector<std::filesystem::path>& clean_dirs,
                            const std::vector<FlickerSpec>& specs,
                            const std::filesystem::path& out);

}  // namespace stedeflick
