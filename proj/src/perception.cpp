#include "dronecap/perception.hpp"

#include <climits>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dronecap::perception {

void check_color_range(const ColorRange& r) {
  if (r.h_lo > r.h_hi || r.s_lo > r.s_hi || r.v_lo > r.v_hi)
    throw std::invalid_argument("ColorRange: low bound exceeds high bound");
  if (r.h_lo < 0.0 || r.h_hi > 360.0 || r.s_lo < 0.0 || r.s_hi > 1.0 || r.v_lo < 0.0 ||
      r.v_hi > 1.0)
    throw std::invalid_argument("ColorRange: bounds outside channel domain");
}

Hsv rgb_to_hsv(Rgb c) {
  const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    out.h = 0.0;
  } else if (mx == r) {
    out.h = 60.0 * std::fmod((g - b) / d + 6.0, 6.0);
  } else if (mx == g) {
    out.h = 60.0 * ((b - r) / d + 2.0);
  } else {
    out.h = 60.0 * ((r - g) / d + 4.0);
  }
  return out;
}

bool in_range(const Hsv& h, const ColorRange& r) {
  return h.h >= r.h_lo && h.h <= r.h_hi && h.s >= r.s_lo && h.s <= r.s_hi && h.v >= r.v_lo &&
         h.v <= r.v_hi;
}

namespace {

struct MomentAcc {
  long n = 0;
  double sx = 0.0, sy = 0.0;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;

  void add(double x, double y) {
    ++n;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
};

struct PrincipalAxis {
  double angle = 0.0;      // [0, pi)
  double elongation = 1.0;  // sqrt(lambda_major / lambda_minor)
  PixelPoint centroid;
};

PrincipalAxis principal_axis(const MomentAcc& m) {
  PrincipalAxis out;
  const double n = static_cast<double>(m.n);
  const double mx = m.sx / n;
  const double my = m.sy / n;
  out.centroid = {mx, my};
  const double cxx = m.sxx / n - mx * mx;
  const double cxy = m.sxy / n - mx * my;
  const double cyy = m.syy / n - my * my;
  const double tr = cxx + cyy;
  const double det = cxx * cyy - cxy * cxy;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  const double l1 = tr / 2.0 + disc;
  const double l2 = std::max(tr / 2.0 - disc, 1e-12);
  out.elongation = std::sqrt(l1 / l2);
  out.angle = wrap_line_direction(0.5 * std::atan2(2.0 * cxy, cxx - cyy));
  return out;
}

// Largest 4-connected component; iterative flood fill over a label buffer.
struct ComponentResult {
  long area = 0;
  MomentAcc moments;
};

struct PixelBounds {
  int x0 = INT_MAX, y0 = INT_MAX, x1 = -1, y1 = -1;
  void add(int x, int y) {
    x0 = std::min(x0, x);
    y0 = std::min(y0, y);
    x1 = std::max(x1, x);
    y1 = std::max(y1, y);
  }
  bool empty() const { return x1 < 0; }
};

ComponentResult largest_component(const std::vector<std::uint8_t>& mask, int w, int h,
                                  const PixelBounds& bounds) {
  ComponentResult best;
  if (bounds.empty()) return best;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> stack;
  for (int sy = bounds.y0; sy <= bounds.y1; ++sy)
  for (int sx = bounds.x0; sx <= bounds.x1; ++sx) {
    const int start = sy * w + sx;
    if (!mask[start] || seen[start]) continue;
    ComponentResult cur;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int idx = stack.back();
      stack.pop_back();
      const int x = idx % w;
      const int y = idx / w;
      ++cur.area;
      cur.moments.add(x + 0.5, y + 0.5);
      const int nb[4] = {idx - 1, idx + 1, idx - w, idx + w};
      const bool ok[4] = {x > 0, x + 1 < w, y > 0, y + 1 < h};
      for (int i = 0; i < 4; ++i) {
        if (ok[i] && mask[nb[i]] && !seen[nb[i]]) {
          seen[nb[i]] = 1;
          stack.push_back(nb[i]);
        }
      }
    }
    if (cur.area > best.area) best = cur;
  }
  return best;
}

}  // namespace

GroundObservation detect_markers(const Frame& frame, const std::map<std::string, ColorRange>& ranges,
                                 const DetectorParams& params) {
  const auto it_orange = ranges.find("orange");
  const auto it_blue = ranges.find("blue");
  const auto it_pink = ranges.find("pink");
  for (const auto& [name, r] : ranges) check_color_range(r);

  const int w = frame.width;
  const int h = frame.height;
  std::vector<std::uint8_t> orange_mask;
  if (it_orange != ranges.end()) orange_mask.assign(static_cast<std::size_t>(w) * h, 0);
  PixelBounds orange_bounds;
  MomentAcc blue_acc, pink_acc;

  // Cheapest rejection first: saturation and value bounds need no division by
  // hue sector. The bulk of a ground frame is low-saturation floor.
  double s_floor = 1.0, v_floor = 1.0;
  for (const auto& [name, r] : ranges) {
    s_floor = std::min(s_floor, r.s_lo);
    v_floor = std::min(v_floor, r.v_lo);
  }

  // Renders are long runs of identical colors, so the classification of the
  // previous pixel is reused whenever the bytes repeat.
  const std::uint8_t* px = frame.data.data();
  int prev_r = -1, prev_g = -1, prev_b = -1;
  unsigned prev_bits = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x, px += 3) {
      const int r = px[0], g = px[1], b = px[2];
      unsigned bits;
      if (r == prev_r && g == prev_g && b == prev_b) {
        bits = prev_bits;
      } else {
        bits = 0;
        const int mx = std::max({r, g, b});
        const int mn = std::min({r, g, b});
        const int d = mx - mn;
        if (mx > 0 && d >= s_floor * mx && mx >= v_floor * 255.0) {
          const Hsv hsv = rgb_to_hsv({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                      static_cast<std::uint8_t>(b)});
          if (it_orange != ranges.end() && in_range(hsv, it_orange->second)) bits |= 1u;
          if (it_blue != ranges.end() && in_range(hsv, it_blue->second)) bits |= 2u;
          if (it_pink != ranges.end() && in_range(hsv, it_pink->second)) bits |= 4u;
        }
        prev_r = r;
        prev_g = g;
        prev_b = b;
        prev_bits = bits;
      }
      if (bits == 0) continue;
      if (bits & 1u) {
        orange_mask[static_cast<std::size_t>(y) * w + x] = 1;
        orange_bounds.add(x, y);
      }
      if (bits & 2u) blue_acc.add(x + 0.5, y + 0.5);
      if (bits & 4u) pink_acc.add(x + 0.5, y + 0.5);
    }
  }

  GroundObservation obs;
  if (it_orange != ranges.end()) {
    const ComponentResult comp = largest_component(orange_mask, w, h, orange_bounds);
    if (comp.area >= params.min_component_area) {
      const double n = static_cast<double>(comp.area);
      obs.circle_centroid = PixelPoint{comp.moments.sx / n, comp.moments.sy / n};
      obs.circle_pixel_radius = std::sqrt(n / kPi);
    }
  }
  if (blue_acc.n >= params.min_component_area) {
    const PrincipalAxis axis = principal_axis(blue_acc);
    if (axis.elongation >= params.min_elongation) obs.blue_direction = axis.angle;
  }
  if (pink_acc.n >= params.min_component_area) {
    const PrincipalAxis axis = principal_axis(pink_acc);
    if (axis.elongation >= params.min_elongation) {
      obs.pink_direction = axis.angle;
      obs.pink_centroid = axis.centroid;
    }
  }
  return obs;
}

}  // namespace dronecap::perception
