#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "dronecap/arena.hpp"
#include "support/projection_oracle.hpp"

using namespace dronecap;
using namespace dronecap::arena;
using oracle_support::project_ground;
using oracle_support::project_object;

namespace {

// Centroid of the pixels matching one exact color.
struct Centroid {
  double x = 0.0, y = 0.0;
  long n = 0;
};

Centroid color_centroid(const Frame& f, Rgb color) {
  Centroid c;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      if (f.at(x, y) == color) {
        c.x += x + 0.5;
        c.y += y + 0.5;
        ++c.n;
      }
  if (c.n > 0) {
    c.x /= c.n;
    c.y /= c.n;
  }
  return c;
}

CameraModel ground_cam() { return CameraModel{}; }
CameraModel object_cam() {
  return CameraModel{640, 360, 1.15, CameraOrientation::ObjectFacing, 1.0 / 60.0};
}

ObjectSpec basic_object(std::uint64_t seed, int symmetry = 360) {
  ObjectSpec o;
  o.class_name = "mug";
  o.instance_id = "mug_00";
  o.description = "test mug";
  o.symmetry_degrees = symmetry;
  o.appearance_seed = seed;
  return o;
}

}  // namespace

TEST_CASE("generate_layout places stops at even spacing around the platform") {
  const ArenaLayout layout = generate_layout(8, 1.5, 7);
  REQUIRE(layout.stops.size() == 8);
  for (std::size_t k = 0; k < 8; ++k) {
    const Vec2 d = layout.stops[k].center - layout.platform_center;
    CHECK(d.norm() == doctest::Approx(1.5));
    const Vec2 dn = layout.stops[(k + 1) % 8].center - layout.platform_center;
    const double a0 = std::atan2(d.y, d.x);
    const double a1 = std::atan2(dn.y, dn.x);
    CHECK(wrap_angle(a1 - a0) == doctest::Approx(kPi / 4.0));  // 45 degree steps, CCW
  }
  for (std::size_t k = 0; k + 1 < 8; ++k) REQUIRE(layout.stops[k].outgoing_segment.has_value());
  CHECK(!layout.stops.back().outgoing_segment.has_value());
}

TEST_CASE("single-stop layout has no outgoing segment") {
  const ArenaLayout layout = generate_layout(1, 1.0, 123);
  REQUIRE(layout.stops.size() == 1);
  CHECK(!layout.stops[0].outgoing_segment.has_value());
  validate_layout(layout);
}

TEST_CASE("generate_layout is deterministic per seed, byte for byte") {
  const std::string a = serialize_arena_config(default_arena_config(generate_layout(8, 1.5, 7)));
  const std::string b = serialize_arena_config(default_arena_config(generate_layout(8, 1.5, 7)));
  CHECK(a == b);
  const std::string c = serialize_arena_config(default_arena_config(generate_layout(8, 1.5, 8)));
  CHECK(a != c);
}

TEST_CASE("generate_layout rejects bad parameters") {
  CHECK_THROWS_AS(generate_layout(0, 1.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_layout(8, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_layout(8, -2.0, 1), std::invalid_argument);
}

TEST_CASE("layout invariants are enforced") {
  ArenaLayout layout = generate_layout(4, 1.2, 3);
  SUBCASE("heading mark must aim at the platform") {
    layout.stops[1].heading_direction = wrap_angle(layout.stops[1].heading_direction + 0.5);
    CHECK_THROWS_AS(validate_layout(layout), std::invalid_argument);
  }
  SUBCASE("segments must join consecutive stops") {
    layout.stops[0].outgoing_segment->b.x += 0.4;
    CHECK_THROWS_AS(validate_layout(layout), std::invalid_argument);
  }
  SUBCASE("stops must lie inside bounds") {
    layout.stops[2].center = {99.0, 0.0};
    CHECK_THROWS_AS(validate_layout(layout), std::invalid_argument);
  }
}

TEST_CASE("arena config round-trips losslessly") {
  const ArenaConfig cfg = default_arena_config(generate_layout(8, 1.5, 21));
  const std::string text = serialize_arena_config(cfg);
  const ArenaConfig parsed = parse_arena_config(text);
  CHECK(parsed.layout == cfg.layout);
  CHECK(parsed.ground_camera == cfg.ground_camera);
  CHECK(parsed.object_camera == cfg.object_camera);
  CHECK(parsed.color_ranges == cfg.color_ranges);
  CHECK(serialize_arena_config(parsed) == text);
}

TEST_CASE("ground rendering is pure") {
  const ArenaLayout layout = generate_layout(8, 1.5, 7);
  const vehicle::DronePose pose{layout.stops[2].center.x + 0.1, layout.stops[2].center.y - 0.05,
                                1.1, 0.7};
  const Frame a = render_ground_view(layout, pose, ground_cam());
  const Frame b = render_ground_view(layout, pose, ground_cam());
  CHECK(a == b);
}

TEST_CASE("ground renderer rejects bad poses and cameras") {
  const ArenaLayout layout = generate_layout(8, 1.5, 7);
  CHECK_THROWS_AS(render_ground_view(layout, {0, 0, 0.0, 0}, ground_cam()), std::invalid_argument);
  CHECK_THROWS_AS(render_ground_view(layout, {55, 0, 1.0, 0}, ground_cam()), std::invalid_argument);
  CHECK_THROWS_AS(render_ground_view(layout, {0, 0, 1.0, 0}, object_cam()), std::invalid_argument);
}

TEST_CASE("circle centroid renders where the pinhole oracle says") {
  const ArenaLayout layout = generate_layout(8, 1.5, 7);
  const CameraModel cam = ground_cam();

  SUBCASE("directly above a stop the centroid is at the image center") {
    for (int k : {0, 3, 6}) {
      const Stop& s = layout.stops[k];
      const vehicle::DronePose pose{s.center.x, s.center.y, 1.0, 0.9 * k};
      const Frame img = render_ground_view(layout, pose, cam);
      const Centroid c = color_centroid(img, layout.markers.orange);
      REQUIRE(c.n > 500);
      CHECK(std::abs(c.x - 320.0) <= 1.0);
      CHECK(std::abs(c.y - 180.0) <= 1.0);
    }
  }

  SUBCASE("projection consistency over a grid of poses") {
    int tested = 0;
    for (int k = 0; k < 8; k += 2) {
      const Stop& s = layout.stops[k];
      for (double dx : {-0.15, 0.0, 0.2}) {
        for (double dy : {-0.1, 0.12}) {
          for (double yaw : {0.0, 1.1, 3.9}) {
            const vehicle::DronePose pose{s.center.x + dx, s.center.y + dy, 1.05, yaw};
            const auto uv = project_ground(pose, cam.focal_px(), s.center);
            REQUIRE(uv.has_value());
            if (uv->u < 80 || uv->u > 560 || uv->v < 80 || uv->v > 280) continue;
            const Frame img = render_ground_view(layout, pose, cam);
            const Centroid c = color_centroid(img, layout.markers.orange);
            REQUIRE(c.n > 500);
            CHECK(std::abs(c.x - uv->u) <= 1.0);
            CHECK(std::abs(c.y - uv->v) <= 1.0);
            ++tested;
          }
        }
      }
    }
    CHECK(tested >= 20);
  }
}

TEST_CASE("far from all markers the frame has no orange") {
  ArenaLayout layout = generate_layout(1, 1.0, 2);
  const vehicle::DronePose pose{layout.bounds.max_x - 0.2, layout.bounds.max_y - 0.2, 1.0, 0.0};
  const Frame img = render_ground_view(layout, pose, ground_cam());
  CHECK(color_centroid(img, layout.markers.orange).n == 0);
}

TEST_CASE("yaw change rotates the projected pink mark like the oracle") {
  const ArenaLayout layout = generate_layout(8, 1.5, 7);
  const CameraModel cam = ground_cam();
  const Stop& s = layout.stops[1];
  const Vec2 dir = unit_from_angle(s.heading_direction);

  const auto rendered_angle = [&](double yaw) {
    const vehicle::DronePose pose{s.center.x, s.center.y, 1.0, yaw};
    const Frame img = render_ground_view(layout, pose, cam);
    // principal direction from the pink pixels via the oracle-side moments
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    long n = 0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        if (img.at(x, y) == layout.markers.pink) {
          sx += x;
          sy += y;
          sxx += double(x) * x;
          sxy += double(x) * y;
          syy += double(y) * y;
          ++n;
        }
    REQUIRE(n > 100);
    const double mx = sx / n, my = sy / n;
    const double cxx = sxx / n - mx * mx, cxy = sxy / n - mx * my, cyy = syy / n - my * my;
    return wrap_line_direction(0.5 * std::atan2(2 * cxy, cxx - cyy));
  };

  for (double yaw : {0.0, 0.35, 1.2, 2.2, 4.4}) {
    const vehicle::DronePose pose{s.center.x, s.center.y, 1.0, yaw};
    const auto expect =
        oracle_support::ground_line_direction(pose, cam.focal_px(), s.center, dir);
    REQUIRE(expect.has_value());
    const double got = rendered_angle(yaw);
    const double err = std::abs(wrap_signed(2.0 * (got - *expect))) / 2.0;  // mod-pi distance
    CHECK(err < 2.0 * kPi / 180.0);
  }
}

TEST_CASE("object views repeat exactly under the symmetry rotation") {
  const ArenaLayout layout = generate_layout(8, 1.5, 7);
  const CameraModel cam = object_cam();

  const auto pose_at = [&](double angle_deg) {
    const double a = angle_deg * kPi / 180.0;
    const Vec2 p = layout.platform_center + unit_from_angle(a) * 1.5;
    return vehicle::DronePose{p.x, p.y, 1.0, wrap_angle(a + kPi)};
  };

  SUBCASE("45-degree symmetric object: views at 0 and 45 are pixel identical") {
    const ObjectSpec obj = basic_object(11, 45);
    const ObjectViewRender a = render_object_view(layout, obj, pose_at(10.0), cam);
    const ObjectViewRender b = render_object_view(layout, obj, pose_at(55.0), cam);
    REQUIRE(a.mask.any());
    CHECK(a.mask == b.mask);
    long diff = 0;
    for (int y = 0; y < 360; ++y)
      for (int x = 0; x < 640; ++x)
        if (a.mask.at(x, y) && !(a.frame.at(x, y) == b.frame.at(x, y))) ++diff;
    CHECK(diff == 0);
  }

  SUBCASE("asymmetric object: views at 0 and 180 differ") {
    const ObjectSpec obj = basic_object(12, 360);
    const ObjectViewRender a = render_object_view(layout, obj, pose_at(0.0), cam);
    const ObjectViewRender b = render_object_view(layout, obj, pose_at(180.0), cam);
    REQUIRE(a.mask.any());
    REQUIRE(b.mask.any());
    bool differs = !(a.mask == b.mask);
    if (!differs) {
      for (int y = 0; y < 360 && !differs; ++y)
        for (int x = 0; x < 640 && !differs; ++x)
          if (a.mask.at(x, y) && !(a.frame.at(x, y) == b.frame.at(x, y))) differs = true;
    }
    CHECK(differs);
  }

  SUBCASE("symmetry holds for random angles and seeds") {
    for (std::uint64_t seed : {101u, 202u, 303u}) {
      for (int sym : {45, 90, 180}) {
        const ObjectSpec obj = basic_object(seed + sym, sym);
        const double base = 17.0 + seed % 40;
        const ObjectViewRender a = render_object_view(layout, obj, pose_at(base), cam);
        const ObjectViewRender b = render_object_view(layout, obj, pose_at(base + sym), cam);
        CHECK(a.mask == b.mask);
        long diff = 0;
        for (int y = 0; y < 360; ++y)
          for (int x = 0; x < 640; ++x)
            if (a.mask.at(x, y) && !(a.frame.at(x, y) == b.frame.at(x, y))) ++diff;
        CHECK(diff == 0);
      }
    }
  }
}

TEST_CASE("object mask matches the projected geometry extent") {
  const ArenaLayout layout = generate_layout(8, 1.5, 7);
  const CameraModel cam = object_cam();
  const ObjectSpec obj = basic_object(31, 360);
  const Vec2 p = layout.platform_center + unit_from_angle(0.3) * 1.5;
  const vehicle::DronePose pose{p.x, p.y, 1.0, wrap_angle(0.3 + kPi)};

  const ObjectViewRender view = render_object_view(layout, obj, pose, cam);
  REQUIRE(view.mask.any());

  // Independent oracle: the silhouette of a convex primitive is bounded by
  // its edges (boxes) or its rims (vertical cylinders); project those densely
  // and take the pixel bounds.
  double u_min = 1e300, u_max = -1e300, v_min = 1e300, v_max = -1e300;
  const auto feed = [&](const Vec3& pt) {
    const auto uv = project_object(pose, cam.focal_px(), pt);
    if (!uv) return;
    u_min = std::min(u_min, std::clamp(uv->u, 0.0, 640.0));
    u_max = std::max(u_max, std::clamp(uv->u, 0.0, 640.0));
    v_min = std::min(v_min, std::clamp(uv->v, 0.0, 360.0));
    v_max = std::max(v_max, std::clamp(uv->v, 0.0, 360.0));
  };
  for (const Primitive& prim : build_object_geometry(obj, layout)) {
    if (prim.kind == Primitive::Kind::Cylinder) {
      for (int i = 0; i < 3000; ++i) {
        const double a = i * (2.0 * kPi / 3000.0);
        const double x = prim.center.x + prim.radius * std::cos(a);
        const double y = prim.center.y + prim.radius * std::sin(a);
        feed({x, y, prim.z_min});
        feed({x, y, prim.z_max});
      }
    } else {
      const double c = std::cos(prim.yaw), s = std::sin(prim.yaw);
      const auto corner = [&](int sx, int sy, int sz) {
        const double ex = sx * prim.half.x, ey = sy * prim.half.y;
        return Vec3{prim.center.x + ex * c - ey * s, prim.center.y + ex * s + ey * c,
                    prim.center.z + sz * prim.half.z};
      };
      const int signs[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
      const auto edge = [&](const Vec3& a, const Vec3& b) {
        for (int i = 0; i <= 400; ++i) {
          const double t = i / 400.0;
          feed({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t});
        }
      };
      for (const auto& sg : signs) edge(corner(sg[0], sg[1], -1), corner(sg[0], sg[1], 1));
      for (int sz : {-1, 1}) {
        edge(corner(-1, -1, sz), corner(-1, 1, sz));
        edge(corner(-1, 1, sz), corner(1, 1, sz));
        edge(corner(1, 1, sz), corner(1, -1, sz));
        edge(corner(1, -1, sz), corner(-1, -1, sz));
      }
    }
  }

  int mx1 = 640, my1 = 360, mx2 = -1, my2 = -1;
  for (int y = 0; y < 360; ++y)
    for (int x = 0; x < 640; ++x)
      if (view.mask.at(x, y)) {
        mx1 = std::min(mx1, x);
        my1 = std::min(my1, y);
        mx2 = std::max(mx2, x);
        my2 = std::max(my2, y);
      }
  CHECK(std::abs(mx1 - u_min) <= 1.0);
  CHECK(std::abs(my1 - v_min) <= 1.0);
  CHECK(std::abs((mx2 + 1) - u_max) <= 1.0);
  CHECK(std::abs((my2 + 1) - v_max) <= 1.0);
}

TEST_CASE("an empty platform renders with an all-zero mask") {
  const ArenaLayout layout = generate_layout(8, 1.5, 7);
  const Vec2 p = layout.platform_center + unit_from_angle(0.7) * 1.5;
  const vehicle::DronePose pose{p.x, p.y, 1.0, wrap_angle(0.7 + kPi)};
  const ObjectViewRender view = render_empty_platform_view(layout, pose, object_cam());
  CHECK(!view.mask.any());
  // the platform itself is visible against the green backdrop
  long non_wall = 0;
  for (int y = 0; y < 360; ++y)
    for (int x = 0; x < 640; ++x)
      if (!(view.frame.at(x, y) == layout.wall_color)) ++non_wall;
  CHECK(non_wall > 1000);
}

TEST_CASE("objects that do not fit the platform are rejected") {
  const ArenaLayout layout = generate_layout(8, 1.5, 7);
  ObjectSpec obj = basic_object(1);
  obj.footprint = {2.0, 2.0};
  const vehicle::DronePose pose{1.5, 0.0, 1.0, kPi};
  CHECK_THROWS_AS(render_object_view(layout, obj, pose, object_cam()), std::invalid_argument);
  ObjectSpec bad_sym = basic_object(2);
  bad_sym.symmetry_degrees = 120;
  CHECK_THROWS_AS(check_object_spec(bad_sym), std::invalid_argument);
}
