#pragma once

#include <cstdint>

#include "dronecap/geometry.hpp"
#include "dronecap/image.hpp"
#include "dronecap/vehicle.hpp"

namespace dronecap::capture {

struct DegradationParams {
  double blur_scale = 1200.0;       // px of kernel per (m/s * s) of projected motion
  double exposure_jitter_std = 0.06;  // relative gain std
  double sensor_noise_std = 2.0;      // intensity units (0..255)
  std::uint64_t seed = 0;
};

struct Bbox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;  // exclusive
  int y2 = 0;  // exclusive
  bool operator==(const Bbox&) const = default;
};

struct CaptureRecord {
  Frame frame;
  Bbox bbox;
  int stop_index = 0;
  int frame_index = 0;
  vehicle::DronePose instantaneous_pose;
  int nominal_view_degrees = 0;  // {0, 45, ..., 315}
};

// Kernel length used by degrade(); exposed so blur can be logged and tested
// against the linear law. speed is the image-plane projected speed.
double blur_kernel_length(double projected_speed, const DegradationParams& params,
                          double exposure_time);

// Motion blur along the projected velocity, then multiplicative exposure
// jitter, then additive sensor noise; clipped to [0, 255]. velocity_cam is in
// camera coordinates (x right, y down, z optical axis); only x and y blur.
// The RNG stream is fully determined by params.seed, so per-frame streams
// derived from (seed, stop, frame) make parallel and serial runs identical.
Frame degrade(const Frame& frame, const Vec3& velocity_cam, const DegradationParams& params,
              double exposure_time);

// Tight axis-aligned box around nonzero mask pixels, half-open on the
// upper edges. Throws EmptyMaskError when the mask has no foreground.
struct EmptyMaskError : std::runtime_error {
  EmptyMaskError() : std::runtime_error("no object in view: mask is empty") {}
};

Bbox compute_bbox(const Mask& mask);

}  // namespace dronecap::capture
