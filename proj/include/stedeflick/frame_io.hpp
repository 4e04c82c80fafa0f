#pragma once

#include <filesystem>
#include <vector>

#include "stedeflick/image.hpp"

namespace stedeflick::io {

FrameRGB read_png(const std::filesystem::path& path);
void write_png(const FrameRGB& frame, const std::filesystem::path& path);

/// Reads every *.png in `dir`, ordered by file name. Throws IoError when the
/// directory is missing or holds no PNG files.
FrameSequence read_png_dir(const std::filesystem::path& dir, double frame_rate = 25.0);
/// Writes frames as `dir/%06d.png`, numbered from 0. Creates `dir` if needed.
void write_png_dir(const FrameSequence& frames, const std::filesystem::path& dir);

/// Uncompressed YUV4MPEG2, 8-bit 4:2:0 only. Conversion uses BT.601
/// full-range coefficients; the round trip is lossy by chroma subsampling.
FrameSequence read_y4m(const std::filesystem::path& path);
void write_y4m(const FrameSequence& frames, const std::filesystem::path& path);

bool is_y4m_path(const std::filesystem::path& path);

/// Dispatches on the path: `.y4m` files go through Y4M, anything else is
/// treated as a PNG directory.
FrameSequence read_frames(const std::filesystem::path& source);
void write_frames(const FrameSequence& frames, const std::filesystem::path& target);

}  // namespace stedeflick::io
