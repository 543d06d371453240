#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "xtc/attr_schema.hpp"

namespace xtc {

/// Interleaved 8-bit RGB buffer.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, std::uint8_t fill = 0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::uint8_t* at(int x, int y) noexcept { return &data_[3 * (static_cast<std::size_t>(y) * width_ + x)]; }
  const std::uint8_t* at(int x, int y) const noexcept {
    return &data_[3 * (static_cast<std::size_t>(y) * width_ + x)];
  }
  const std::vector<std::uint8_t>& data() const noexcept { return data_; }
  std::vector<std::uint8_t>& data() noexcept { return data_; }
  bool operator==(const RgbImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Separable box blur with edge clamping.
RgbImage box_blur(const RgbImage& img, int radius);

/// Blurred full view with the target region left sharp and outlined in `outline`.
RgbImage render_spotlight(const RgbImage& img, const ViewSpec& spec,
                          std::array<std::uint8_t, 3> outline = {255, 0, 0});

/// The crop rectangle, with every pixel outside the target box set to the background gray.
RgbImage render_detail_crop(const RgbImage& img, const ViewSpec& spec);

/// Binary PPM (P6) I/O.
RgbImage read_ppm(const std::string& path);
void write_ppm(const RgbImage& img, const std::string& path);
std::string encode_ppm(const RgbImage& img);

}  // namespace xtc
