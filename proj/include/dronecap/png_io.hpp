#pragma once

#include <string>
#include <utility>

#include "dronecap/image.hpp"

namespace dronecap {

// 8-bit RGB PNG with fixed encoder settings, so identical frames produce
// identical files. Throws std::runtime_error on I/O or codec failure.
void write_png(const std::string& path, const Frame& frame);
Frame read_png(const std::string& path);

// Width/height straight from the IHDR chunk, without decoding pixel data.
std::pair<int, int> read_png_size(const std::string& path);

}  // namespace dronecap
