#include "dronecap/arena.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <cmath>
#include <stdexcept>

#include "dronecap/rng.hpp"

namespace dronecap::arena {

using json = nlohmann::json;

void check_object_spec(const ObjectSpec& spec) {
  const int s = spec.symmetry_degrees;
  if (s != 45 && s != 90 && s != 180 && s != 360)
    throw std::invalid_argument("ObjectSpec: symmetry_degrees must be one of 45, 90, 180, 360");
  if (spec.footprint.x <= 0.0 || spec.footprint.y <= 0.0)
    throw std::invalid_argument("ObjectSpec: footprint extents must be positive");
  if (spec.class_name.empty() || spec.instance_id.empty())
    throw std::invalid_argument("ObjectSpec: class_name and instance_id are required");
}

void check_camera_model(const CameraModel& cam) {
  if (cam.image_width != 640 || cam.image_height != 360)
    throw std::invalid_argument("CameraModel: image dimensions are fixed at 640x360");
  if (!(cam.horizontal_fov > 0.0 && cam.horizontal_fov < kPi))
    throw std::invalid_argument("CameraModel: horizontal_fov must be in (0, pi)");
  if (cam.exposure_time <= 0.0)
    throw std::invalid_argument("CameraModel: exposure_time must be positive");
}

ArenaLayout generate_layout(int n_stops, double radius, std::uint64_t seed) {
  if (n_stops < 1) throw std::invalid_argument("generate_layout: n_stops must be >= 1");
  if (radius <= 0.0) throw std::invalid_argument("generate_layout: radius must be positive");

  ArenaLayout layout;
  FastRng rng(derive_seed(seed, 0x6c61796f75ULL));
  const double start_angle = rng.uniform() * kTwoPi;
  const double step = kTwoPi / n_stops;

  const double extent = std::max(3.0, radius + 1.2);
  layout.bounds = Rect{-extent, -extent, extent, extent};

  layout.stops.resize(n_stops);
  for (int k = 0; k < n_stops; ++k) {
    Stop& s = layout.stops[k];
    const double a = start_angle + k * step;
    s.center = layout.platform_center + unit_from_angle(a) * radius;
    s.heading_direction = wrap_angle(a + kPi);  // toward the platform
  }
  for (int k = 0; k + 1 < n_stops; ++k) {
    layout.stops[k].outgoing_segment = Segment{layout.stops[k].center, layout.stops[k + 1].center};
  }
  validate_layout(layout);
  return layout;
}

void validate_layout(const ArenaLayout& layout, double heading_tolerance) {
  if (layout.stops.empty()) throw std::invalid_argument("layout: stops list is empty");
  if (layout.platform_height <= 0.0 || layout.platform_radius <= 0.0)
    throw std::invalid_argument("layout: platform dimensions must be positive");
  if (layout.tape_width <= 0.0 || layout.heading_mark_length <= 0.0 ||
      layout.heading_mark_inset < 0.0)
    throw std::invalid_argument("layout: tape dimensions must be positive");

  const auto inside = [&](const Vec2& p, double margin) {
    return p.x - margin >= layout.bounds.min_x && p.x + margin <= layout.bounds.max_x &&
           p.y - margin >= layout.bounds.min_y && p.y + margin <= layout.bounds.max_y;
  };
  if (!inside(layout.platform_center, layout.platform_radius))
    throw std::invalid_argument("layout: platform outside bounds");

  for (std::size_t k = 0; k < layout.stops.size(); ++k) {
    const Stop& s = layout.stops[k];
    if (s.circle_radius <= 0.0) throw std::invalid_argument("layout: circle_radius must be > 0");
    if (s.heading_direction < 0.0 || s.heading_direction >= kTwoPi)
      throw std::invalid_argument("layout: heading_direction not normalized");
    if (!inside(s.center, s.circle_radius))
      throw std::invalid_argument("layout: stop outside bounds");

    const Vec2 to_platform = layout.platform_center - s.center;
    const double want = std::atan2(to_platform.y, to_platform.x);
    if (std::abs(wrap_signed(s.heading_direction - want)) > heading_tolerance + 1e-12)
      throw std::invalid_argument("layout: heading mark does not point at the platform");

    const bool last = k + 1 == layout.stops.size();
    if (last) {
      if (s.outgoing_segment)
        throw std::invalid_argument("layout: last stop must not have an outgoing segment");
    } else {
      if (!s.outgoing_segment)
        throw std::invalid_argument("layout: interior stop missing its outgoing segment");
      const Segment& seg = *s.outgoing_segment;
      if ((seg.a - s.center).norm() > 1e-6 ||
          (seg.b - layout.stops[k + 1].center).norm() > 1e-6)
        throw std::invalid_argument("layout: segment endpoints must join consecutive stops");
    }
  }
}

// ---- Ground rendering ----------------------------------------------------

namespace {

struct GroundFrameMap {
  // Floor point -> pixel is a similarity: u = cx + k*(d.r), v = cy - k*(d.f).
  Vec2 origin;  // drone (x, y)
  Vec2 fwd;
  Vec2 right;
  double scale = 1.0;  // px per meter on the floor
  double cx = 0.0;
  double cy = 0.0;

  Vec2 project(const Vec2& p) const {
    const Vec2 d = p - origin;
    return {cx + scale * d.dot(right), cy - scale * d.dot(fwd)};
  }
};

GroundFrameMap make_ground_map(const DronePose& pose, const CameraModel& cam) {
  GroundFrameMap m;
  m.origin = {pose.x, pose.y};
  m.fwd = unit_from_angle(pose.yaw);
  m.right = {m.fwd.y, -m.fwd.x};
  m.scale = cam.focal_px() / pose.z;
  m.cx = cam.image_width / 2.0;
  m.cy = cam.image_height / 2.0;
  return m;
}

// Fills pixel centers with x+0.5 in [lo, hi] on row y.
void fill_span(Frame& img, int y, double lo, double hi, Rgb color) {
  int x0 = static_cast<int>(std::ceil(lo - 0.5));
  int x1 = static_cast<int>(std::floor(hi - 0.5));
  x0 = std::max(x0, 0);
  x1 = std::min(x1, img.width - 1);
  if (x0 > x1) return;
  std::uint8_t* p = &img.data[img.offset(x0, y)];
  for (int x = x0; x <= x1; ++x, p += 3) {
    p[0] = color.r;
    p[1] = color.g;
    p[2] = color.b;
  }
}

void fill_disk(Frame& img, const Vec2& c_px, double r_px, Rgb color) {
  const int y0 = std::max(0, static_cast<int>(std::floor(c_px.y - r_px)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(c_px.y + r_px)));
  const double r2 = r_px * r_px;
  for (int y = y0; y <= y1; ++y) {
    const double dy = (y + 0.5) - c_px.y;
    const double s2 = r2 - dy * dy;
    if (s2 < 0.0) continue;
    const double s = std::sqrt(s2);
    fill_span(img, y, c_px.x - s, c_px.x + s, color);
  }
}

// A capsule is the union of the oriented band rectangle and the two end
// disks; all three are convex, so each row cuts a single interval.
void fill_capsule(Frame& img, const Vec2& a_px, const Vec2& b_px, double hw_px, Rgb color) {
  const double len = (b_px - a_px).norm();
  if (len < 1e-12) {
    fill_disk(img, a_px, hw_px, color);
    return;
  }
  const Vec2 u = (b_px - a_px) * (1.0 / len);
  const Vec2 n{-u.y, u.x};
  const Vec2 quad[4] = {a_px + n * hw_px, b_px + n * hw_px, b_px - n * hw_px, a_px - n * hw_px};

  const int y0 = std::max(
      0, static_cast<int>(std::floor(std::min(a_px.y, b_px.y) - hw_px)));
  const int y1 = std::min(img.height - 1,
                          static_cast<int>(std::ceil(std::max(a_px.y, b_px.y) + hw_px)));
  for (int y = y0; y <= y1; ++y) {
    const double yc = y + 0.5;
    double lo = 1e300, hi = -1e300;
    for (int e = 0; e < 4; ++e) {
      const Vec2& p = quad[e];
      const Vec2& q = quad[(e + 1) % 4];
      if ((p.y - yc) * (q.y - yc) <= 0.0) {
        if (std::abs(q.y - p.y) > 1e-12) {
          const double x = p.x + (yc - p.y) * (q.x - p.x) / (q.y - p.y);
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        } else {
          lo = std::min({lo, p.x, q.x});
          hi = std::max({hi, p.x, q.x});
        }
      }
    }
    for (const Vec2& c : {a_px, b_px}) {
      const double dy = yc - c.y;
      const double s2 = hw_px * hw_px - dy * dy;
      if (s2 < 0.0) continue;
      const double s = std::sqrt(s2);
      lo = std::min(lo, c.x - s);
      hi = std::max(hi, c.x + s);
    }
    if (lo <= hi) fill_span(img, y, lo, hi, color);
  }
}

}  // namespace

Frame render_ground_view(const ArenaLayout& layout, const DronePose& pose,
                         const CameraModel& cam) {
  Frame img;
  render_ground_view_into(layout, pose, cam, img);
  return img;
}

void render_ground_view_into(const ArenaLayout& layout, const DronePose& pose,
                             const CameraModel& cam, Frame& img) {
  check_camera_model(cam);
  if (cam.orientation != CameraOrientation::GroundFacing)
    throw std::invalid_argument("render_ground_view: camera must be ground-facing");
  if (pose.z <= 0.0) throw std::invalid_argument("render_ground_view: altitude must be positive");
  if (!layout.bounds.contains({pose.x, pose.y}))
    throw std::invalid_argument("render_ground_view: pose outside arena bounds");

  if (img.width != cam.image_width || img.height != cam.image_height) {
    img = Frame(cam.image_width, cam.image_height, layout.floor_color);
  } else {
    std::uint8_t* p = img.data.data();
    const std::size_t row = static_cast<std::size_t>(img.width) * 3;
    for (std::size_t i = 0; i < row; i += 3) {
      p[i] = layout.floor_color.r;
      p[i + 1] = layout.floor_color.g;
      p[i + 2] = layout.floor_color.b;
    }
    for (int y = 1; y < img.height; ++y) std::memcpy(p + y * row, p, row);
  }
  const GroundFrameMap m = make_ground_map(pose, cam);
  const double tape_hw = m.scale * (layout.tape_width / 2.0);

  for (const Stop& s : layout.stops) {
    if (s.outgoing_segment) {
      fill_capsule(img, m.project(s.outgoing_segment->a), m.project(s.outgoing_segment->b),
                   tape_hw, layout.markers.blue);
    }
  }
  for (const Stop& s : layout.stops) {
    fill_disk(img, m.project(s.center), m.scale * s.circle_radius, layout.markers.orange);
  }
  for (const Stop& s : layout.stops) {
    // The mark sits just outside the circle so the orange disk stays whole.
    const Vec2 dir = unit_from_angle(s.heading_direction);
    const Vec2 base = s.center + dir * (s.circle_radius + layout.heading_mark_inset);
    const Vec2 tip = base + dir * layout.heading_mark_length;
    fill_capsule(img, m.project(base), m.project(tip), tape_hw, layout.markers.pink);
  }
}

// ---- Object geometry and rendering ---------------------------------------

namespace {

const Rgb kPalette[] = {
    {196, 30, 58},    // crimson
    {235, 160, 40},   // amber
    {50, 80, 200},    // royal blue
    {130, 60, 180},   // purple
    {230, 225, 215},  // off white
    {60, 60, 72},     // charcoal
    {230, 210, 60},   // yellow
    {200, 50, 160},   // magenta
    {130, 80, 45},    // brown
    {90, 150, 230},   // sky
};
constexpr int kPaletteSize = 10;

Rgb pick_color(FastRng& rng) { return kPalette[rng.next() % kPaletteSize]; }

Rgb pick_color_other_than(FastRng& rng, Rgb avoid) {
  Rgb c = pick_color(rng);
  while (c == avoid) c = pick_color(rng);
  return c;
}

}  // namespace

double placement_yaw(const ObjectSpec& spec) {
  FastRng rng(derive_seed(spec.appearance_seed, 0x706c616365ULL));
  return rng.uniform() * kTwoPi;
}

std::vector<Primitive> build_object_geometry(const ObjectSpec& spec, const ArenaLayout& layout) {
  check_object_spec(spec);
  const double half_diag = 0.5 * std::hypot(spec.footprint.x, spec.footprint.y);
  if (half_diag > layout.platform_radius)
    throw std::invalid_argument("object footprint does not fit on the platform");

  FastRng rng(derive_seed(spec.appearance_seed, 0x67656f6dULL));
  const double base_z = layout.platform_height;
  const Vec2 c = layout.platform_center;
  const double yaw0 = placement_yaw(spec);
  const int sym = spec.symmetry_degrees;
  const int replicas = 360 / sym;

  std::vector<Primitive> prims;

  // Body. A cylinder is symmetric under any rotation; a square box under 90
  // degrees; a general box under 180. Pick the least symmetric body allowed.
  const double body_h = 0.16 + rng.uniform() * 0.14;
  const Rgb body_color = pick_color(rng);
  const bool banded = rng.uniform() < 0.5;
  const Rgb band_color = banded ? pick_color_other_than(rng, body_color) : Rgb{};
  double side_radius;  // how far the body surface extends from the axis, roughly

  Primitive body;
  body.color = body_color;
  body.banded = banded;
  body.band_color = band_color;
  body.band_period = 0.04 + rng.uniform() * 0.05;
  if (sym <= 45 || rng.uniform() < 0.35) {
    body.kind = Primitive::Kind::Cylinder;
    body.radius = 0.5 * std::min(spec.footprint.x, spec.footprint.y);
    body.z_min = base_z;
    body.z_max = base_z + body_h;
    body.center = {c.x, c.y, base_z + body_h / 2.0};
    side_radius = body.radius;
  } else {
    body.kind = Primitive::Kind::Box;
    double hx = spec.footprint.x / 2.0;
    double hy = spec.footprint.y / 2.0;
    if (sym == 90) hx = hy = std::min(hx, hy);  // square cross-section
    body.half = {hx, hy, body_h / 2.0};
    body.center = {c.x, c.y, base_z + body_h / 2.0};
    body.yaw = yaw0;
    side_radius = std::min(hx, hy);
  }
  prims.push_back(body);

  // Top layer, stacked on the body; cylinders keep every symmetry class.
  const double top_h = 0.05 + rng.uniform() * 0.07;
  Primitive top;
  top.kind = Primitive::Kind::Cylinder;
  top.radius = side_radius * (0.45 + rng.uniform() * 0.3);
  top.z_min = base_z + body_h;
  top.z_max = base_z + body_h + top_h;
  top.center = {c.x, c.y, base_z + body_h + top_h / 2.0};
  top.color = pick_color_other_than(rng, body_color);
  prims.push_back(top);

  // Feature bumps, replicated at every multiple of symmetry_degrees so the
  // appearance repeats exactly under that rotation. One replica marks the
  // front face for asymmetric objects.
  const double feat_w = side_radius * (0.35 + rng.uniform() * 0.25);
  const double feat_d = 0.03 + rng.uniform() * 0.03;
  const double feat_h = body_h * (0.4 + rng.uniform() * 0.35);
  const double feat_z = base_z + body_h * (0.3 + rng.uniform() * 0.3);
  const Rgb feat_color = pick_color_other_than(rng, body_color);
  for (int k = 0; k < replicas; ++k) {
    const double a = yaw0 + k * (sym * kPi / 180.0);
    const Vec2 dir = unit_from_angle(a);
    Primitive f;
    f.kind = Primitive::Kind::Box;
    f.center = {c.x + dir.x * (side_radius + feat_d / 2.0),
                c.y + dir.y * (side_radius + feat_d / 2.0), feat_z + feat_h / 2.0};
    f.half = {feat_d / 2.0, feat_w / 2.0, feat_h / 2.0};
    f.yaw = a;
    f.color = feat_color;
    prims.push_back(f);
  }
  return prims;
}

Primitive platform_primitive(const ArenaLayout& layout) {
  Primitive p;
  p.kind = Primitive::Kind::Cylinder;
  p.radius = layout.platform_radius;
  p.z_min = 0.0;
  p.z_max = layout.platform_height;
  p.center = {layout.platform_center.x, layout.platform_center.y, layout.platform_height / 2.0};
  p.color = {92, 92, 100};
  p.belongs_to_object = false;
  return p;
}

namespace {

struct Ray {
  Vec3 origin;
  Vec3 dir;  // not normalized; t compares consistently across primitives
};

// Returns smallest t > eps where the ray enters the primitive, or nullopt.
std::optional<double> intersect(const Ray& ray, const Primitive& prim) {
  constexpr double eps = 1e-9;
  if (prim.kind == Primitive::Kind::Box) {
    const double cy = std::cos(-prim.yaw), sy = std::sin(-prim.yaw);
    const Vec3 rel = ray.origin - prim.center;
    const Vec3 o{rel.x * cy - rel.y * sy, rel.x * sy + rel.y * cy, rel.z};
    const Vec3 d{ray.dir.x * cy - ray.dir.y * sy, ray.dir.x * sy + ray.dir.y * cy, ray.dir.z};
    double t0 = -1e300, t1 = 1e300;
    const double ho[3] = {prim.half.x, prim.half.y, prim.half.z};
    const double oa[3] = {o.x, o.y, o.z};
    const double da[3] = {d.x, d.y, d.z};
    for (int i = 0; i < 3; ++i) {
      if (std::abs(da[i]) < 1e-15) {
        if (std::abs(oa[i]) > ho[i]) return std::nullopt;
        continue;
      }
      double ta = (-ho[i] - oa[i]) / da[i];
      double tb = (ho[i] - oa[i]) / da[i];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return std::nullopt;
    }
    if (t0 > eps) return t0;
    return std::nullopt;
  }

  // Cylinder: side surface plus caps.
  const double ox = ray.origin.x - prim.center.x;
  const double oy = ray.origin.y - prim.center.y;
  const double dx = ray.dir.x, dy = ray.dir.y;
  std::optional<double> best;
  const double a = dx * dx + dy * dy;
  if (a > 1e-15) {
    const double b = 2.0 * (ox * dx + oy * dy);
    const double cc = ox * ox + oy * oy - prim.radius * prim.radius;
    const double disc = b * b - 4.0 * a * cc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (t > eps) {
          const double z = ray.origin.z + t * ray.dir.z;
          if (z >= prim.z_min && z <= prim.z_max && (!best || t < *best)) best = t;
        }
      }
    }
  }
  if (std::abs(ray.dir.z) > 1e-15) {
    for (double zc : {prim.z_min, prim.z_max}) {
      const double t = (zc - ray.origin.z) / ray.dir.z;
      if (t > eps) {
        const double hx = ox + t * dx;
        const double hy = oy + t * dy;
        if (hx * hx + hy * hy <= prim.radius * prim.radius && (!best || t < *best)) best = t;
      }
    }
  }
  return best;
}

Rgb shade(const Primitive& prim, const Vec3& hit) {
  if (!prim.banded) return prim.color;
  const long band = static_cast<long>(std::floor(hit.z / prim.band_period));
  return (band & 1) ? prim.band_color : prim.color;
}

struct ObjectCamera {
  Vec3 pos;
  Vec3 fwd;
  Vec3 right;
  Vec3 down{0.0, 0.0, -1.0};
  double fpx = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  Ray ray_for_pixel(int x, int y) const {
    const double a = ((x + 0.5) - cx) / fpx;
    const double b = ((y + 0.5) - cy) / fpx;
    return {pos, fwd + right * a + down * b};
  }

  // Projects a world point; false when at or behind the image plane.
  bool project(const Vec3& p, double& u, double& v) const {
    const Vec3 rel = p - pos;
    const double depth = rel.dot(fwd);
    if (depth < 1e-6) return false;
    u = cx + fpx * rel.dot(right) / depth;
    v = cy + fpx * rel.dot(down) / depth;
    return true;
  }
};

struct PixelRect {
  int x0, y0, x1, y1;  // inclusive
  bool empty() const { return x0 > x1 || y0 > y1; }
};

// Conservative pixel bounds of a primitive: project the corners of its world
// AABB. Falls back to the full frame if a corner lands behind the camera.
PixelRect primitive_pixel_bounds(const Primitive& prim, const ObjectCamera& cam, int w, int h) {
  Vec3 lo, hi;
  if (prim.kind == Primitive::Kind::Cylinder) {
    lo = {prim.center.x - prim.radius, prim.center.y - prim.radius, prim.z_min};
    hi = {prim.center.x + prim.radius, prim.center.y + prim.radius, prim.z_max};
  } else {
    const double ax = std::abs(std::cos(prim.yaw)) * prim.half.x +
                      std::abs(std::sin(prim.yaw)) * prim.half.y;
    const double ay = std::abs(std::sin(prim.yaw)) * prim.half.x +
                      std::abs(std::cos(prim.yaw)) * prim.half.y;
    lo = {prim.center.x - ax, prim.center.y - ay, prim.center.z - prim.half.z};
    hi = {prim.center.x + ax, prim.center.y + ay, prim.center.z + prim.half.z};
  }
  double u_min = 1e300, u_max = -1e300, v_min = 1e300, v_max = -1e300;
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner{(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z};
    double u, v;
    if (!cam.project(corner, u, v)) return {0, 0, w - 1, h - 1};
    u_min = std::min(u_min, u);
    u_max = std::max(u_max, u);
    v_min = std::min(v_min, v);
    v_max = std::max(v_max, v);
  }
  PixelRect r;
  r.x0 = std::max(0, static_cast<int>(std::floor(u_min)) - 1);
  r.y0 = std::max(0, static_cast<int>(std::floor(v_min)) - 1);
  r.x1 = std::min(w - 1, static_cast<int>(std::ceil(u_max)) + 1);
  r.y1 = std::min(h - 1, static_cast<int>(std::ceil(v_max)) + 1);
  return r;
}

}  // namespace

namespace {

ObjectViewRender raycast_view(const ArenaLayout& layout, std::vector<Primitive> prims,
                              std::size_t n_object, const DronePose& pose,
                              const CameraModel& cam);

}  // namespace

ObjectViewRender render_object_view(const ArenaLayout& layout, const ObjectSpec& object,
                                    const DronePose& pose, const CameraModel& cam) {
  check_camera_model(cam);
  if (cam.orientation != CameraOrientation::ObjectFacing)
    throw std::invalid_argument("render_object_view: camera must be object-facing");

  std::vector<Primitive> prims = build_object_geometry(object, layout);
  const std::size_t n_object = prims.size();
  prims.push_back(platform_primitive(layout));
  return raycast_view(layout, std::move(prims), n_object, pose, cam);
}

ObjectViewRender render_empty_platform_view(const ArenaLayout& layout, const DronePose& pose,
                                            const CameraModel& cam) {
  check_camera_model(cam);
  if (cam.orientation != CameraOrientation::ObjectFacing)
    throw std::invalid_argument("render_empty_platform_view: camera must be object-facing");
  return raycast_view(layout, {platform_primitive(layout)}, 0, pose, cam);
}

namespace {

ObjectViewRender raycast_view(const ArenaLayout& layout, std::vector<Primitive> prims,
                              std::size_t n_object, const DronePose& pose,
                              const CameraModel& cam) {

  ObjectCamera oc;
  oc.pos = {pose.x, pose.y, pose.z};
  oc.fwd = {std::cos(pose.yaw), std::sin(pose.yaw), 0.0};
  oc.right = {oc.fwd.y, -oc.fwd.x, 0.0};
  oc.fpx = cam.focal_px();
  oc.cx = cam.image_width / 2.0;
  oc.cy = cam.image_height / 2.0;

  ObjectViewRender out;
  out.frame = Frame(cam.image_width, cam.image_height, layout.wall_color);
  out.mask = Mask(cam.image_width, cam.image_height);

  // Only pixels under some primitive's projected bounds need rays, and each
  // pixel only needs the primitives whose bounds cover it.
  std::vector<PixelRect> rects(prims.size());
  PixelRect region{cam.image_width, cam.image_height, -1, -1};
  for (std::size_t i = 0; i < prims.size(); ++i) {
    rects[i] = primitive_pixel_bounds(prims[i], oc, cam.image_width, cam.image_height);
    if (rects[i].empty()) continue;
    region.x0 = std::min(region.x0, rects[i].x0);
    region.y0 = std::min(region.y0, rects[i].y0);
    region.x1 = std::max(region.x1, rects[i].x1);
    region.y1 = std::max(region.y1, rects[i].y1);
  }
  if (region.empty()) return out;

  for (int y = region.y0; y <= region.y1; ++y) {
    for (int x = region.x0; x <= region.x1; ++x) {
      Ray ray;
      bool have_ray = false;
      double best_t = 1e300;
      int best_i = -1;
      for (std::size_t i = 0; i < prims.size(); ++i) {
        const PixelRect& rc = rects[i];
        if (x < rc.x0 || x > rc.x1 || y < rc.y0 || y > rc.y1) continue;
        if (!have_ray) {
          ray = oc.ray_for_pixel(x, y);
          have_ray = true;
        }
        const auto t = intersect(ray, prims[i]);
        if (t && *t < best_t) {
          best_t = *t;
          best_i = static_cast<int>(i);
        }
      }
      if (best_i < 0) continue;
      const Vec3 hit = ray.origin + ray.dir * best_t;
      out.frame.set(x, y, shade(prims[best_i], hit));
      if (static_cast<std::size_t>(best_i) < n_object) out.mask.set(x, y, 1);
    }
  }
  return out;
}

}  // namespace

// ---- Config serialization -------------------------------------------------

namespace {

json rgb_to_json(Rgb c) { return json::array({c.r, c.g, c.b}); }
Rgb rgb_from_json(const json& j) {
  return {j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(), j.at(2).get<std::uint8_t>()};
}

json vec2_to_json(const Vec2& v) { return json::array({v.x, v.y}); }
Vec2 vec2_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json camera_to_json(const CameraModel& cam) {
  return json{{"image_width", cam.image_width},
              {"image_height", cam.image_height},
              {"horizontal_fov", cam.horizontal_fov},
              {"orientation",
               cam.orientation == CameraOrientation::GroundFacing ? "ground" : "object"},
              {"exposure_time", cam.exposure_time}};
}

CameraModel camera_from_json(const json& j) {
  CameraModel cam;
  cam.image_width = j.at("image_width").get<int>();
  cam.image_height = j.at("image_height").get<int>();
  cam.horizontal_fov = j.at("horizontal_fov").get<double>();
  const std::string o = j.at("orientation").get<std::string>();
  if (o == "ground")
    cam.orientation = CameraOrientation::GroundFacing;
  else if (o == "object")
    cam.orientation = CameraOrientation::ObjectFacing;
  else
    throw std::invalid_argument("camera orientation must be 'ground' or 'object'");
  cam.exposure_time = j.at("exposure_time").get<double>();
  check_camera_model(cam);
  return cam;
}

json range_to_json(const perception::ColorRange& r) {
  return json{{"h", {r.h_lo, r.h_hi}}, {"s", {r.s_lo, r.s_hi}}, {"v", {r.v_lo, r.v_hi}}};
}

perception::ColorRange range_from_json(const json& j) {
  perception::ColorRange r;
  r.h_lo = j.at("h").at(0).get<double>();
  r.h_hi = j.at("h").at(1).get<double>();
  r.s_lo = j.at("s").at(0).get<double>();
  r.s_hi = j.at("s").at(1).get<double>();
  r.v_lo = j.at("v").at(0).get<double>();
  r.v_hi = j.at("v").at(1).get<double>();
  perception::check_color_range(r);
  return r;
}

}  // namespace

std::map<std::string, perception::ColorRange> default_color_ranges() {
  return {
      {"orange", {15.0, 50.0, 0.5, 1.0, 0.35, 1.0}},
      {"blue", {195.0, 245.0, 0.5, 1.0, 0.35, 1.0}},
      {"pink", {290.0, 340.0, 0.5, 1.0, 0.35, 1.0}},
  };
}

ArenaConfig default_arena_config(const ArenaLayout& layout) {
  ArenaConfig cfg;
  cfg.layout = layout;
  cfg.ground_camera = CameraModel{};
  cfg.object_camera =
      CameraModel{640, 360, 1.15, CameraOrientation::ObjectFacing, 1.0 / 60.0};
  cfg.color_ranges = default_color_ranges();
  return cfg;
}

std::string serialize_arena_config(const ArenaConfig& cfg) {
  json stops = json::array();
  for (const Stop& s : cfg.layout.stops) {
    json js{{"center", vec2_to_json(s.center)},
            {"circle_radius", s.circle_radius},
            {"heading_direction", s.heading_direction}};
    if (s.outgoing_segment) {
      js["outgoing_segment"] =
          json::array({vec2_to_json(s.outgoing_segment->a), vec2_to_json(s.outgoing_segment->b)});
    } else {
      js["outgoing_segment"] = nullptr;
    }
    stops.push_back(std::move(js));
  }
  json ranges;
  for (const auto& [name, r] : cfg.color_ranges) ranges[name] = range_to_json(r);

  const ArenaLayout& L = cfg.layout;
  json j{{"layout",
          {{"stops", std::move(stops)},
           {"platform_center", vec2_to_json(L.platform_center)},
           {"platform_height", L.platform_height},
           {"platform_radius", L.platform_radius},
           {"bounds", {L.bounds.min_x, L.bounds.min_y, L.bounds.max_x, L.bounds.max_y}},
           {"wall_color", rgb_to_json(L.wall_color)},
           {"floor_color", rgb_to_json(L.floor_color)},
           {"marker_colors",
            {{"orange", rgb_to_json(L.markers.orange)},
             {"blue", rgb_to_json(L.markers.blue)},
             {"pink", rgb_to_json(L.markers.pink)}}},
           {"tape_width", L.tape_width},
           {"heading_mark_length", L.heading_mark_length},
           {"heading_mark_inset", L.heading_mark_inset}}},
         {"ground_camera", camera_to_json(cfg.ground_camera)},
         {"object_camera", camera_to_json(cfg.object_camera)},
         {"color_ranges", std::move(ranges)}};
  return j.dump(2) + "\n";
}

ArenaConfig parse_arena_config(const std::string& text) {
  const json j = json::parse(text);
  ArenaConfig cfg;
  const json& jl = j.at("layout");
  ArenaLayout& L = cfg.layout;
  L.platform_center = vec2_from_json(jl.at("platform_center"));
  L.platform_height = jl.at("platform_height").get<double>();
  L.platform_radius = jl.at("platform_radius").get<double>();
  L.bounds = Rect{jl.at("bounds").at(0).get<double>(), jl.at("bounds").at(1).get<double>(),
                  jl.at("bounds").at(2).get<double>(), jl.at("bounds").at(3).get<double>()};
  L.wall_color = rgb_from_json(jl.at("wall_color"));
  L.floor_color = rgb_from_json(jl.at("floor_color"));
  L.markers.orange = rgb_from_json(jl.at("marker_colors").at("orange"));
  L.markers.blue = rgb_from_json(jl.at("marker_colors").at("blue"));
  L.markers.pink = rgb_from_json(jl.at("marker_colors").at("pink"));
  L.tape_width = jl.at("tape_width").get<double>();
  L.heading_mark_length = jl.at("heading_mark_length").get<double>();
  L.heading_mark_inset = jl.at("heading_mark_inset").get<double>();
  for (const json& js : jl.at("stops")) {
    Stop s;
    s.center = vec2_from_json(js.at("center"));
    s.circle_radius = js.at("circle_radius").get<double>();
    s.heading_direction = js.at("heading_direction").get<double>();
    if (!js.at("outgoing_segment").is_null()) {
      s.outgoing_segment = Segment{vec2_from_json(js.at("outgoing_segment").at(0)),
                                   vec2_from_json(js.at("outgoing_segment").at(1))};
    }
    L.stops.push_back(std::move(s));
  }
  cfg.ground_camera = camera_from_json(j.at("ground_camera"));
  cfg.object_camera = camera_from_json(j.at("object_camera"));
  for (const auto& [name, jr] : j.at("color_ranges").items())
    cfg.color_ranges[name] = range_from_json(jr);
  validate_layout(L, 1e-3);
  return cfg;
}

}  // namespace dronecap::arena
