#pragma once

#include <map>
#include <optional>
#include <string>

#include "dronecap/geometry.hpp"
#include "dronecap/image.hpp"

namespace dronecap::perception {

// Hue-based color window; hue in degrees [0, 360), saturation/value in [0, 1].
struct ColorRange {
  double h_lo = 0.0;
  double h_hi = 360.0;
  double s_lo = 0.0;
  double s_hi = 1.0;
  double v_lo = 0.0;
  double v_hi = 1.0;
  bool operator==(const ColorRange&) const = default;
};

// Throws std::invalid_argument unless lo <= hi on every channel.
void check_color_range(const ColorRange& range);

struct Hsv {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};

Hsv rgb_to_hsv(Rgb c);
bool in_range(const Hsv& hsv, const ColorRange& range);

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

struct GroundObservation {
  std::optional<PixelPoint> circle_centroid;
  std::optional<double> circle_pixel_radius;
  std::optional<double> blue_direction;  // image-plane line angle, [0, pi)
  std::optional<double> pink_direction;  // [0, pi)
  std::optional<PixelPoint> pink_centroid;  // resolves which way the mark points
};

struct DetectorParams {
  int min_component_area = 30;  // px
  double min_elongation = 3.0;  // principal / secondary axis ratio
};

// Segments each color range, takes the centroid of the largest orange
// connected component and the principal axis of the blue/pink masks.
// Absent markers come back as empty optionals, never as errors.
GroundObservation detect_markers(const Frame& frame,
                                 const std::map<std::string, ColorRange>& ranges,
                                 const DetectorParams& params = {});

}  // namespace dronecap::perception
