#include "xtc/raster.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "xtc/error.hpp"

namespace xtc {

RgbImage::RgbImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height), data_(3 * static_cast<std::size_t>(std::max(0, width)) * std::max(0, height), fill) {
  if (width < 0 || height < 0) throw InputError("RgbImage: negative dimensions");
}

namespace {

// One horizontal (dx=1) or vertical (dx=0) pass of a running-sum box filter.
RgbImage blur_pass(const RgbImage& src, int radius, bool horizontal) {
  RgbImage dst(src.width(), src.height());
  const int len = horizontal ? src.width() : src.height();
  const int lines = horizontal ? src.height() : src.width();
  const int window = 2 * radius + 1;
  for (int line = 0; line < lines; ++line) {
    auto px = [&](int i) {
      i = std::clamp(i, 0, len - 1);
      return horizontal ? src.at(i, line) : src.at(line, i);
    };
    int sum[3] = {0, 0, 0};
    for (int i = -radius; i <= radius; ++i) {
      for (int c = 0; c < 3; ++c) sum[c] += px(i)[c];
    }
    for (int i = 0; i < len; ++i) {
      std::uint8_t* out = horizontal ? dst.at(i, line) : dst.at(line, i);
      for (int c = 0; c < 3; ++c) out[c] = static_cast<std::uint8_t>((sum[c] + window / 2) / window);
      for (int c = 0; c < 3; ++c) sum[c] += px(i + radius + 1)[c] - px(i - radius)[c];
    }
  }
  return dst;
}

}  // namespace

RgbImage box_blur(const RgbImage& img, int radius) {
  if (radius <= 0 || img.width() == 0 || img.height() == 0) return img;
  return blur_pass(blur_pass(img, radius, true), radius, false);
}

RgbImage render_spotlight(const RgbImage& img, const ViewSpec& spec, std::array<std::uint8_t, 3> outline) {
  RgbImage out = box_blur(img, spec.blur_radius);
  const PixelRect& t = spec.target;
  for (int y = t.y; y < t.y + t.h; ++y) {
    for (int x = t.x; x < t.x + t.w; ++x) std::copy_n(img.at(x, y), 3, out.at(x, y));
  }
  if (t.w > 0 && t.h > 0) {
    for (int x = t.x; x < t.x + t.w; ++x) {
      std::copy(outline.begin(), outline.end(), out.at(x, t.y));
      std::copy(outline.begin(), outline.end(), out.at(x, t.y + t.h - 1));
    }
    for (int y = t.y; y < t.y + t.h; ++y) {
      std::copy(outline.begin(), outline.end(), out.at(t.x, y));
      std::copy(outline.begin(), outline.end(), out.at(t.x + t.w - 1, y));
    }
  }
  return out;
}

RgbImage render_detail_crop(const RgbImage& img, const ViewSpec& spec) {
  const PixelRect& c = spec.crop;
  const PixelRect& t = spec.target;
  RgbImage out(c.w, c.h, spec.background);
  for (int y = 0; y < c.h; ++y) {
    for (int x = 0; x < c.w; ++x) {
      const int sx = c.x + x, sy = c.y + y;
      if (sx >= t.x && sx < t.x + t.w && sy >= t.y && sy < t.y + t.h) {
        std::copy_n(img.at(sx, sy), 3, out.at(x, y));
      }
    }
  }
  return out;
}

std::string encode_ppm(const RgbImage& img) {
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.data().data()), img.data().size());
  return out;
}

void write_ppm(const RgbImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << encode_ppm(img);
}

RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) throw ParseError("'" + path + "' is not an 8-bit P6 PPM");
  in.get();
  RgbImage img(w, h);
  in.read(reinterpret_cast<char*>(img.data().data()),
          static_cast<std::streamsize>(img.data().size()));
  if (!in) throw ParseError("'" + path + "' is truncated");
  return img;
}

}  // namespace xtc
