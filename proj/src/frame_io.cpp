#include "stedeflick/frame_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "stedeflick/error.hpp"

namespace fs = std::filesystem;

namespace stedeflick::io {

FrameRGB read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw FormatError("PNG has zero size: " + path.string());
  }
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
  // Background composited onto black for images with alpha.
  if (!png_image_finish_read(&image, nullptr, data.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw FormatError("cannot decode PNG " + path.string() + ": " + message);
  }
  return FrameRGB(static_cast<int>(image.width), static_cast<int>(image.height),
                  std::move(data));
}

void write_png(const FrameRGB& frame, const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, frame.data().data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

FrameSequence read_png_dir(const fs::path& dir, double frame_rate) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) throw IoError("no PNG frames in " + dir.string());
  std::sort(files.begin(), files.end());

  std::vector<FrameRGB> frames;
  frames.reserve(files.size());
  for (const auto& f : files) frames.push_back(read_png(f));
  return FrameSequence(std::move(frames), frame_rate);
}

void write_png_dir(const FrameSequence& frames, const fs::path& dir) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t t = 0; t < frames.size(); ++t) {
    std::snprintf(name, sizeof(name), "%06zu.png", t);
    write_png(frames[t], dir / name);
  }
}

namespace {

struct Y4mHeader {
  int width = 0;
  int height = 0;
  double frame_rate = 25.0;
};

Y4mHeader parse_y4m_header(const std::string& line, const fs::path& path) {
  std::istringstream tokens(line);
  std::string tag;
  tokens >> tag;
  if (tag != "YUV4MPEG2") throw FormatError("missing YUV4MPEG2 signature: " + path.string());

  Y4mHeader header;
  while (tokens >> tag) {
    const char key = tag[0];
    const std::string value = tag.substr(1);
    if (key == 'W') {
      header.width = std::stoi(value);
    } else if (key == 'H') {
      header.height = std::stoi(value);
    } else if (key == 'F') {
      const auto colon = value.find(':');
      if (colon == std::string::npos) throw FormatError("bad Y4M frame rate: " + tag);
      const double num = std::stod(value.substr(0, colon));
      const double den = std::stod(value.substr(colon + 1));
      if (num > 0 && den > 0) header.frame_rate = num / den;
    } else if (key == 'C') {
      if (value.rfind("420", 0) != 0) {
        throw FormatError("unsupported Y4M colorspace C" + value + " (only 4:2:0 8-bit)");
      }
    } else if (key == 'I') {
      if (value != "p" && value != "?") throw FormatError("interlaced Y4M not supported");
    }
  }
  if (header.width < 1 || header.height < 1) {
    throw FormatError("Y4M header lacks frame size: " + path.string());
  }
  return header;
}

// BT.601 full-range (JFIF) conversion.
void rgb_to_ycbcr(double r, double g, double b, double& y, double& cb, double& cr) {
  y = 0.299 * r + 0.587 * g + 0.114 * b;
  cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
  cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
}

}  // namespace

FrameSequence read_y4m(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty Y4M file: " + path.string());
  const Y4mHeader header = parse_y4m_header(line, path);

  const int w = header.width;
  const int h = header.height;
  const int cw = (w + 1) / 2;
  const int ch = (h + 1) / 2;
  const std::size_t luma_bytes = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t chroma_bytes = static_cast<std::size_t>(cw) * static_cast<std::size_t>(ch);
  std::vector<std::uint8_t> planes(luma_bytes + 2 * chroma_bytes);

  std::vector<FrameRGB> frames;
  while (std::getline(in, line)) {
    if (line.rfind("FRAME", 0) != 0) throw FormatError("expected FRAME marker in " + path.string());
    in.read(reinterpret_cast<char*>(planes.data()), static_cast<std::streamsize>(planes.size()));
    if (static_cast<std::size_t>(in.gcount()) != planes.size()) {
      throw FormatError("truncated Y4M frame " + std::to_string(frames.size()) + " in " +
                        path.string());
    }
    const std::uint8_t* luma = planes.data();
    const std::uint8_t* cb_plane = luma + luma_bytes;
    const std::uint8_t* cr_plane = cb_plane + chroma_bytes;

    FrameRGB frame(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t ci = static_cast<std::size_t>(y / 2) * static_cast<std::size_t>(cw) +
                               static_cast<std::size_t>(x / 2);
        const double yy = luma[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                               static_cast<std::size_t>(x)];
        const double cb = cb_plane[ci] - 128.0;
        const double cr = cr_plane[ci] - 128.0;
        frame.at(x, y, 0) = to_u8(yy + 1.402 * cr);
        frame.at(x, y, 1) = to_u8(yy - 0.344136 * cb - 0.714136 * cr);
        frame.at(x, y, 2) = to_u8(yy + 1.772 * cb);
      }
    }
    frames.push_back(std::move(frame));
  }
  if (frames.empty()) throw FormatError("Y4M file has no frames: " + path.string());
  return FrameSequence(std::move(frames), header.frame_rate);
}

void write_y4m(const FrameSequence& frames, const fs::path& path) {
  const int w = frames.frame_size().width;
  const int h = frames.frame_size().height;
  const int cw = (w + 1) / 2;
  const int ch = (h + 1) / 2;

  // Frame rate as a rational with millisecond-ish precision.
  long num = std::lround(frames.frame_rate() * 1000.0);
  long den = 1000;
  if (num <= 0) num = 25000;
  const long g = std::gcd(num, den);
  num /= g;
  den /= g;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out << "YUV4MPEG2 W" << w << " H" << h << " F" << num << ':' << den << " Ip A1:1 C420jpeg\n";

  std::vector<std::uint8_t> luma(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  std::vector<std::uint8_t> cb_plane(static_cast<std::size_t>(cw) * static_cast<std::size_t>(ch));
  std::vector<std::uint8_t> cr_plane(cb_plane.size());
  for (const FrameRGB& frame : frames) {
    for (int cy = 0; cy < ch; ++cy) {
      for (int cx = 0; cx < cw; ++cx) {
        double cb_sum = 0.0;
        double cr_sum = 0.0;
        int n = 0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int x = 2 * cx + dx;
            const int y = 2 * cy + dy;
            if (x >= w || y >= h) continue;
            double yy, cb, cr;
            rgb_to_ycbcr(frame.at(x, y, 0), frame.at(x, y, 1), frame.at(x, y, 2), yy, cb, cr);
            luma[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                 static_cast<std::size_t>(x)] = to_u8(yy);
            cb_sum += cb;
            cr_sum += cr;
            ++n;
          }
        }
        const std::size_t ci =
            static_cast<std::size_t>(cy) * static_cast<std::size_t>(cw) + static_cast<std::size_t>(cx);
        cb_plane[ci] = to_u8(cb_sum / n);
        cr_plane[ci] = to_u8(cr_sum / n);
      }
    }
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(luma.data()), static_cast<std::streamsize>(luma.size()));
    out.write(reinterpret_cast<const char*>(cb_plane.data()),
              static_cast<std::streamsize>(cb_plane.size()));
    out.write(reinterpret_cast<const char*>(cr_plane.data()),
              static_cast<std::streamsize>(cr_plane.size()));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

bool is_y4m_path(const fs::path& path) { return path.extension() == ".y4m"; }

FrameSequence read_frames(const fs::path& source) {
  if (is_y4m_path(source)) return read_y4m(source);
  return read_png_dir(source);
}

void write_frames(const FrameSequence& frames, const fs::path& target) {
  if (is_y4m_path(target)) {
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    write_y4m(frames, target);
  } else {
    write_png_dir(frames, target);
  }
}

}  // namespace stedeflick::io
