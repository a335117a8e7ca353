#include "dronecap/capture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dronecap/rng.hpp"

namespace dronecap::capture {

double blur_kernel_length(double projected_speed, const DegradationParams& params,
                          double exposure_time) {
  return std::max(1.0, params.blur_scale * projected_speed * exposure_time);
}

namespace {

inline std::uint8_t clip255(double v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0) + 0.5);
}

// Bilinear sample, clamped at the border.
inline void sample(const Frame& src, double x, double y, double acc[3]) {
  x = std::clamp(x, 0.0, src.width - 1.0);
  y = std::clamp(y, 0.0, src.height - 1.0);
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, src.width - 1);
  const int y1 = std::min(y0 + 1, src.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const std::uint8_t* p00 = &src.data[src.offset(x0, y0)];
  const std::uint8_t* p10 = &src.data[src.offset(x1, y0)];
  const std::uint8_t* p01 = &src.data[src.offset(x0, y1)];
  const std::uint8_t* p11 = &src.data[src.offset(x1, y1)];
  for (int c = 0; c < 3; ++c) {
    const double top = p00[c] + (p10[c] - p00[c]) * fx;
    const double bot = p01[c] + (p11[c] - p01[c]) * fx;
    acc[c] += top + (bot - top) * fy;
  }
}

}  // namespace

Frame degrade(const Frame& frame, const Vec3& velocity_cam, const DegradationParams& params,
              double exposure_time) {
  if (params.exposure_jitter_std < 0.0 || params.sensor_noise_std < 0.0 ||
      params.blur_scale < 0.0)
    throw std::invalid_argument("DegradationParams: stds and scale must be >= 0");

  const double speed = std::hypot(velocity_cam.x, velocity_cam.y);
  const double length = blur_kernel_length(speed, params, exposure_time);

  Frame out = frame;

  // 1. Linear motion blur: box average along the projected motion direction.
  if (length > 1.0 + 1e-12) {
    const double inv = 1.0 / speed;
    const double dirx = velocity_cam.x * inv;
    const double diry = velocity_cam.y * inv;
    const int taps = std::max(2, static_cast<int>(std::ceil(length)));
    const double step = (length - 1.0) / (taps - 1);
    const double start = -(length - 1.0) / 2.0;
    const double wt = 1.0 / taps;

    // Blurring a uniform region is the identity, so when the frame has a
    // uniform border color only the non-uniform box (padded by the kernel
    // reach) needs work. Falls back to the full frame otherwise.
    int bx0 = 0, by0 = 0, bx1 = frame.width - 1, by1 = frame.height - 1;
    const Rgb c00 = frame.at(0, 0);
    if (frame.at(frame.width - 1, 0) == c00 && frame.at(0, frame.height - 1) == c00 &&
        frame.at(frame.width - 1, frame.height - 1) == c00) {
      int ax0 = frame.width, ay0 = frame.height, ax1 = -1, ay1 = -1;
      const std::uint8_t* p = frame.data.data();
      for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x, p += 3) {
          if (p[0] != c00.r || p[1] != c00.g || p[2] != c00.b) {
            ax0 = std::min(ax0, x);
            ay0 = std::min(ay0, y);
            ax1 = std::max(ax1, x);
            ay1 = std::max(ay1, y);
          }
        }
      }
      if (ax1 < 0) {
        bx0 = by0 = 0;
        bx1 = by1 = -1;  // fully uniform; blur is the identity
      } else {
        const int pad = static_cast<int>(std::ceil(length / 2.0)) + 1;
        bx0 = std::max(0, ax0 - pad);
        by0 = std::max(0, ay0 - pad);
        bx1 = std::min(frame.width - 1, ax1 + pad);
        by1 = std::min(frame.height - 1, ay1 + pad);
      }
    }
    // Tap offsets are the same for every pixel, so the bilinear corners and
    // weights are constants; only border pixels need the clamped path.
    struct Tap {
      int ox, oy;
      double w00, w10, w01, w11;
      double dx, dy;
    };
    std::vector<Tap> tap_info(taps);
    int reach_lo_x = 0, reach_hi_x = 0, reach_lo_y = 0, reach_hi_y = 0;
    for (int k = 0; k < taps; ++k) {
      const double o = start + k * step;
      Tap& t = tap_info[k];
      t.dx = dirx * o;
      t.dy = diry * o;
      t.ox = static_cast<int>(std::floor(t.dx));
      t.oy = static_cast<int>(std::floor(t.dy));
      const double fx = t.dx - t.ox;
      const double fy = t.dy - t.oy;
      t.w00 = (1.0 - fx) * (1.0 - fy) * wt;
      t.w10 = fx * (1.0 - fy) * wt;
      t.w01 = (1.0 - fx) * fy * wt;
      t.w11 = fx * fy * wt;
      reach_lo_x = std::min(reach_lo_x, t.ox);
      reach_hi_x = std::max(reach_hi_x, t.ox + 1);
      reach_lo_y = std::min(reach_lo_y, t.oy);
      reach_hi_y = std::max(reach_hi_y, t.oy + 1);
    }
    const int row_bytes = frame.width * 3;
    for (int y = by0; y <= by1; ++y) {
      const bool y_safe = y + reach_lo_y >= 0 && y + reach_hi_y < frame.height;
      for (int x = bx0; x <= bx1; ++x) {
        double acc[3] = {0.0, 0.0, 0.0};
        if (y_safe && x + reach_lo_x >= 0 && x + reach_hi_x < frame.width) {
          const std::uint8_t* base = frame.data.data() + y * row_bytes + x * 3;
          for (const Tap& t : tap_info) {
            const std::uint8_t* p00 = base + t.oy * row_bytes + t.ox * 3;
            const std::uint8_t* p01 = p00 + row_bytes;
            for (int c = 0; c < 3; ++c)
              acc[c] += t.w00 * p00[c] + t.w10 * p00[c + 3] + t.w01 * p01[c] + t.w11 * p01[c + 3];
          }
          const std::size_t off = out.offset(x, y);
          out.data[off] = static_cast<std::uint8_t>(acc[0] + 0.5);
          out.data[off + 1] = static_cast<std::uint8_t>(acc[1] + 0.5);
          out.data[off + 2] = static_cast<std::uint8_t>(acc[2] + 0.5);
        } else {
          for (const Tap& t : tap_info) sample(frame, x + t.dx, y + t.dy, acc);
          const std::size_t off = out.offset(x, y);
          out.data[off] = clip255(acc[0] * wt);
          out.data[off + 1] = clip255(acc[1] * wt);
          out.data[off + 2] = clip255(acc[2] * wt);
        }
      }
    }
  }

  FastRng rng(derive_seed(params.seed, 0x6465677261646532ULL));

  // 2. Multiplicative exposure gain, one draw per frame, applied via a LUT.
  if (params.exposure_jitter_std > 0.0) {
    const double gain = std::max(0.0, 1.0 + params.exposure_jitter_std * rng.gaussian());
    std::uint8_t lut[256];
    for (int v = 0; v < 256; ++v) lut[v] = clip255(v * gain);
    for (auto& v : out.data) v = lut[v];
  }

  // 3. Additive Gaussian sensor noise.
  if (params.sensor_noise_std > 0.0) {
    const double std_dev = params.sensor_noise_std;
    for (auto& v : out.data) {
      const int nv = static_cast<int>(v + std_dev * rng.gaussian() + 0.5);
      v = static_cast<std::uint8_t>(nv < 0 ? 0 : (nv > 255 ? 255 : nv));
    }
  }
  return out;
}

Bbox compute_bbox(const Mask& mask) {
  if (mask.width != 640 || mask.height != 360)
    throw std::invalid_argument("compute_bbox: mask must be 640x360");
  int x1 = mask.width, y1 = mask.height, x2 = -1, y2 = -1;
  for (int y = 0; y < mask.height; ++y) {
    const std::uint8_t* row = &mask.data[static_cast<std::size_t>(y) * mask.width];
    for (int x = 0; x < mask.width; ++x) {
      if (!row[x]) continue;
      x1 = std::min(x1, x);
      y1 = std::min(y1, y);
      x2 = std::max(x2, x);
      y2 = std::max(y2, y);
    }
  }
  if (x2 < 0) throw EmptyMaskError();
  return {x1, y1, x2 + 1, y2 + 1};
}

}  // namespace dronecap::capture
