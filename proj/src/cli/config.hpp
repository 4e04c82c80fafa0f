#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include "stedeflick/pipeline.hpp"
#include "stedeflick/synth.hpp"

namespace stedeflick::cli {

struct IoPaths {
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> flows;
};

struct Config {
  PipelineParams pipeline;
  FlickerSpec flicker;
  IoPaths io;
  int threads = 0;  // 0: STE_DEFLICK_THREADS, then hardware concurrency

  void validate() const;
};

/// Overlays a TOML document onto `base`. Sections: [ste] [priors] [flow]
/// [repair] [synth] [io] plus a top-level `threads`. Unknown keys and
/// mistyped values throw InvalidArgument.
Config parse_config(std::string_view toml_text, Config base = {}, std::string_view origin = "config");
Config load_config(const std::filesystem::path& path, Config base = {});

/// Explicit count, else the environment, else the hardware.
int resolve_threads(int configured);

}  // namespace stedeflick::cli
