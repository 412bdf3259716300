#pragma once

// Grayscale PGM reader/writer (P2 ASCII and P5 binary, maxval <= 255).

#include "uslads/image.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace uslads {

enum class ImageErrorCode
{
  missing_file,
  malformed_header,
  unsupported_format,
  unsupported_depth,
  truncated_data,
  invalid_sample,
  io_failure,
};

inline const char* to_string(ImageErrorCode code)
{
  switch (code) {
  case ImageErrorCode::missing_file: return "missing file";
  case ImageErrorCode::malformed_header: return "malformed header";
  case ImageErrorCode::unsupported_format: return "unsupported format";
  case ImageErrorCode::unsupported_depth: return "unsupported bit depth";
  case ImageErrorCode::truncated_data: return "truncated pixel data";
  case ImageErrorCode::invalid_sample: return "sample exceeds maxval";
  case ImageErrorCode::io_failure: return "I/O failure";
  }
  return "unknown";
}

class ImageError : public std::runtime_error
{
public:
  ImageError(ImageErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code)
  {
  }

  ImageErrorCode code() const { return code_; }

private:
  ImageErrorCode code_;
};

namespace detail {

class PgmCursor
{
public:
  explicit PgmCursor(const std::string& bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments.
  void skip_space()
  {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r')
          ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool read_uint(unsigned long& out)
  {
    skip_space();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (v > 0xffffffUL)
        return false;
      ++pos_;
    }
    if (pos_ == start)
      return false;
    out = v;
    return true;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

} // namespace detail

/// Parses PGM bytes. Throws ImageError naming the defect.
inline Image parse_pgm(const std::string& bytes, const std::string& origin = "<memory>")
{
  if (bytes.size() < 2 || bytes[0] != 'P')
    throw ImageError(ImageErrorCode::malformed_header, origin + ": missing PNM magic number");
  const char kind = bytes[1];
  if (kind != '2' && kind != '5') {
    if (kind >= '1' && kind <= '7')
      throw ImageError(ImageErrorCode::unsupported_format,
                       origin + ": P" + std::string(1, kind) + " is not a grayscale PGM (expected P2 or P5)");
    throw ImageError(ImageErrorCode::malformed_header, origin + ": unknown magic number");
  }

  detail::PgmCursor cur(bytes);
  cur.advance(2);
  unsigned long width = 0, height = 0, maxval = 0;
  if (!cur.read_uint(width) || !cur.read_uint(height) || !cur.read_uint(maxval))
    throw ImageError(ImageErrorCode::malformed_header, origin + ": expected width, height and maxval");
  if (width == 0 || height == 0)
    throw ImageError(ImageErrorCode::malformed_header, origin + ": zero image dimension");
  if (maxval == 0)
    throw ImageError(ImageErrorCode::malformed_header, origin + ": maxval must be positive");
  if (maxval > 255)
    throw ImageError(ImageErrorCode::unsupported_depth,
                     origin + ": maxval " + std::to_string(maxval) + " exceeds 8 bits");

  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<std::uint8_t> data(n);
  if (kind == '5') {
    // Exactly one whitespace byte separates the header from the raster.
    if (cur.remaining() == 0 || !std::isspace(static_cast<unsigned char>(bytes[cur.pos()])))
      throw ImageError(ImageErrorCode::malformed_header, origin + ": missing whitespace after maxval");
    cur.advance(1);
    if (cur.remaining() < n)
      throw ImageError(ImageErrorCode::truncated_data,
                       origin + ": expected " + std::to_string(n) + " bytes, found " + std::to_string(cur.remaining()));
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<unsigned char>(bytes[cur.pos() + i]);
      if (v > maxval)
        throw ImageError(ImageErrorCode::invalid_sample, origin + ": pixel " + std::to_string(i));
      data[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      unsigned long v = 0;
      if (!cur.read_uint(v))
        throw ImageError(ImageErrorCode::truncated_data,
                         origin + ": expected " + std::to_string(n) + " samples, found " + std::to_string(i));
      if (v > maxval)
        throw ImageError(ImageErrorCode::invalid_sample, origin + ": pixel " + std::to_string(i));
      data[i] = static_cast<std::uint8_t>(v);
    }
  }
  return Image(width, height, std::move(data));
}

inline Image load_image(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ImageError(ImageErrorCode::missing_file, path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_pgm(bytes, path.string());
}

/// Encodes as binary P5 with maxval 255.
inline std::string encode_pgm(const Image& img)
{
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.data().data()), img.size());
  return out;
}

inline void save_image(const Image& img, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw ImageError(ImageErrorCode::io_failure, "cannot open " + path.string() + " for writing");
  const std::string bytes = encode_pgm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw ImageError(ImageErrorCode::io_failure, "write failed for " + path.string());
}

inline void save_mask(const MeasurementSet& ms, const std::filesystem::path& path) { save_image(mask_image(ms), path); }

} // namespace uslads
