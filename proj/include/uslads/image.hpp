#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uslads {

struct Location
{
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const Location&, const Location&) = default;
};

/// Dense 8-bit grayscale image, row-major.
class Image
{
public:
  Image() = default;

  Image(std::size_t width, std::size_t height, std::uint8_t fill = 0)
      : width_(width), height_(height), data_(width * height, fill)
  {
  }

  Image(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
      : width_(width), height_(height), data_(std::move(data))
  {
    if (data_.size() != width_ * height_)
      throw std::invalid_argument("Image: data length does not match width x height");
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(const Location& loc) const { return loc.row < height_ && loc.col < width_; }

  std::size_t index(const Location& loc) const { return loc.row * width_ + loc.col; }
  Location location(std::size_t index) const { return {index / width_, index % width_}; }

  std::uint8_t operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
  std::uint8_t& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  std::uint8_t operator[](std::size_t index) const { return data_[index]; }
  std::uint8_t& operator[](std::size_t index) { return data_[index]; }

  const std::vector<std::uint8_t>& data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Point-wise measurement oracle: the ground-truth intensity at `loc`.
inline std::uint8_t measure(const Image& image, const Location& loc)
{
  if (!image.contains(loc))
    throw std::out_of_range("measure: location (" + std::to_string(loc.row) + ", " +
                            std::to_string(loc.col) + ") outside " + std::to_string(image.width()) +
                            "x" + std::to_string(image.height()) + " image");
  return image(loc.row, loc.col);
}

struct Measurement
{
  Location loc;
  std::uint8_t value = 0;

  friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Ordered measurements over a width x height domain, with an O(1) membership mask.
class MeasurementSet
{
public:
  MeasurementSet() = default;
  MeasurementSet(std::size_t width, std::size_t height) : width_(width), height_(height), mask_(width * height, 0) {}

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t area() const { return mask_.size(); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Measured fraction of the domain.
  double ratio() const { return area() == 0 ? 0.0 : static_cast<double>(size()) / static_cast<double>(area()); }

  bool contains(const Location& loc) const { return mask_[loc.row * width_ + loc.col] != 0; }
  bool contains(std::size_t index) const { return mask_[index] != 0; }

  /// Appends a measurement. A location may be recorded only once.
  void add(const Location& loc, std::uint8_t value)
  {
    if (loc.row >= height_ || loc.col >= width_)
      throw std::out_of_range("MeasurementSet::add: location outside domain");
    auto& bit = mask_[loc.row * width_ + loc.col];
    if (bit)
      throw std::logic_error("MeasurementSet::add: location (" + std::to_string(loc.row) + ", " +
                             std::to_string(loc.col) + ") measured twice");
    bit = 1;
    entries_.push_back({loc, value});
  }

  const std::vector<Measurement>& entries() const { return entries_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  friend bool operator==(const MeasurementSet&, const MeasurementSet&) = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<Measurement> entries_;
  std::vector<std::uint8_t> mask_;
};

/// Measures `loc` on `truth` and records it in `ms`.
inline std::uint8_t measure_into(const Image& truth, MeasurementSet& ms, const Location& loc)
{
  const std::uint8_t v = measure(truth, loc);
  ms.add(loc, v);
  return v;
}

/// Truth intensities at measured locations, 0 elsewhere.
inline Image sampled_image(const Image& truth, const std::vector<std::uint8_t>& mask)
{
  if (mask.size() != truth.size())
    throw std::invalid_argument("sampled_image: mask size does not match image");
  Image out(truth.width(), truth.height());
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (mask[i])
      out[i] = truth[i];
  return out;
}

inline Image sampled_image(const Image& truth, const MeasurementSet& ms)
{
  if (ms.width() != truth.width() || ms.height() != truth.height())
    throw std::invalid_argument("sampled_image: measurement domain " + std::to_string(ms.width()) + "x" +
                                std::to_string(ms.height()) + " does not match image " +
                                std::to_string(truth.width()) + "x" + std::to_string(truth.height()));
  return sampled_image(truth, ms.mask());
}

/// 255 at measured locations, 0 elsewhere.
inline Image mask_image(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& mask)
{
  Image out(width, height);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = mask[i] ? 255 : 0;
  return out;
}

inline Image mask_image(const MeasurementSet& ms) { return mask_image(ms.width(), ms.height(), ms.mask()); }

} // namespace uslads
