#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

namespace dronecap {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB raster, row-major, interleaved channels.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // size = width * height * 3

  Frame() = default;
  Frame(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}
  Frame(int w, int h, Rgb fill) : width(w), height(h) {
    data.resize(static_cast<std::size_t>(w) * h * 3);
    if (data.empty()) return;
    std::uint8_t* p = data.data();
    const std::size_t row = static_cast<std::size_t>(w) * 3;
    for (std::size_t i = 0; i < row; i += 3) {
      p[i] = fill.r;
      p[i + 1] = fill.g;
      p[i + 2] = fill.b;
    }
    for (int y = 1; y < h; ++y) std::memcpy(p + y * row, p, row);
  }

  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * 3;
  }
  Rgb at(int x, int y) const {
    const std::size_t o = offset(x, y);
    return {data[o], data[o + 1], data[o + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t o = offset(x, y);
    data[o] = c.r;
    data[o + 1] = c.g;
    data[o + 2] = c.b;
  }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool operator==(const Frame&) const = default;
};

// Binary raster; nonzero marks foreground.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  void set(int x, int y, std::uint8_t v) { data[static_cast<std::size_t>(y) * width + x] = v; }
  bool any() const {
    for (auto v : data)
      if (v) return true;
    return false;
  }
  bool operator==(const Mask&) const = default;
};

}  // namespace dronecap
