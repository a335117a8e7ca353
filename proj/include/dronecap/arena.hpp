#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dronecap/geometry.hpp"
#include "dronecap/image.hpp"
#include "dronecap/perception.hpp"
#include "dronecap/vehicle.hpp"

namespace dronecap::arena {

using vehicle::DronePose;

struct Segment {
  Vec2 a;
  Vec2 b;
  bool operator==(const Segment&) const = default;
};

struct Stop {
  Vec2 center;
  double circle_radius = 0.10;       // meters
  double heading_direction = 0.0;    // radians, [0, 2*pi); pink line direction
  std::optional<Segment> outgoing_segment;  // blue line to the next stop; absent for the last
  bool operator==(const Stop&) const = default;
};

struct MarkerPalette {
  Rgb orange{255, 140, 0};
  Rgb blue{0, 90, 255};
  Rgb pink{255, 0, 180};
  bool operator==(const MarkerPalette&) const = default;
};

struct ArenaLayout {
  std::vector<Stop> stops;
  Vec2 platform_center;
  double platform_height = 0.62;  // meters
  double platform_radius = 0.32;
  Rect bounds{-3.0, -3.0, 3.0, 3.0};
  Rgb wall_color{0, 168, 62};  // green screen
  Rgb floor_color{74, 74, 74};
  MarkerPalette markers;
  double tape_width = 0.04;           // blue/pink tape width, meters
  double heading_mark_length = 0.18;  // pink line length beyond the circle edge
  double heading_mark_inset = 0.01;   // clearance between circle edge and mark
  bool operator==(const ArenaLayout&) const = default;
};

enum class FrontFace { Yes, No, NotIdentifiable };

struct ObjectSpec {
  std::string class_name;
  std::string instance_id;
  std::string description;
  FrontFace has_front_face = FrontFace::Yes;
  int symmetry_degrees = 360;  // in {45, 90, 180, 360}; divides 360
  std::uint64_t appearance_seed = 0;
  Vec2 footprint{0.3, 0.3};  // extent on the platform, meters
};

// Throws std::invalid_argument when symmetry or footprint constraints fail.
void check_object_spec(const ObjectSpec& spec);

enum class CameraOrientation { GroundFacing, ObjectFacing };

struct CameraModel {
  int image_width = 640;
  int image_height = 360;
  double horizontal_fov = 1.15;  // radians
  CameraOrientation orientation = CameraOrientation::GroundFacing;
  double exposure_time = 1.0 / 60.0;  // seconds

  double focal_px() const { return (image_width / 2.0) / std::tan(horizontal_fov / 2.0); }
  bool operator==(const CameraModel&) const = default;
};

void check_camera_model(const CameraModel& cam);

// Stops evenly spaced counterclockwise on a circle around the platform, pink
// marks aimed at the platform, consecutive stops joined by blue segments.
// The seed picks the starting angle on the circle.
ArenaLayout generate_layout(int n_stops, double radius, std::uint64_t seed);

// Checks the layout invariants; throws std::invalid_argument on violation.
void validate_layout(const ArenaLayout& layout, double heading_tolerance = 1e-6);

// ---- Rendering ---------------------------------------------------------

// Floor seen by the down-facing camera: floor color plus the projected
// markers. Pure function of its inputs.
Frame render_ground_view(const ArenaLayout& layout, const DronePose& pose, const CameraModel& cam);

// Identical output, reusing the caller's buffer across calls.
void render_ground_view_into(const ArenaLayout& layout, const DronePose& pose,
                             const CameraModel& cam, Frame& out);

// Procedural object geometry: a composite of boxes and cylinders standing on
// the platform. Feature primitives are replicated at every multiple of
// symmetry_degrees so the appearance repeats exactly under that rotation.
struct Primitive {
  enum class Kind { Box, Cylinder };
  Kind kind = Kind::Box;
  Vec3 center;       // box center / cylinder axis point at mid-height
  Vec3 half;         // box half extents (x,y,z in its own frame)
  double radius = 0.0;  // cylinder
  double z_min = 0.0;
  double z_max = 0.0;
  double yaw = 0.0;  // box rotation about z
  Rgb color;
  bool banded = false;  // horizontal color bands (rotation-symmetric texture)
  Rgb band_color;
  double band_period = 0.06;  // meters
  bool belongs_to_object = true;
};

// World yaw the object was placed at, derived from appearance_seed (stands in
// for the operator randomizing which wall the front face points to).
double placement_yaw(const ObjectSpec& spec);

std::vector<Primitive> build_object_geometry(const ObjectSpec& spec, const ArenaLayout& layout);
Primitive platform_primitive(const ArenaLayout& layout);

struct ObjectViewRender {
  Frame frame;
  Mask mask;  // pixels whose closest hit belongs to the object
};

// The object camera view: green wall backdrop, platform, and the object,
// rendered by per-pixel ray casting. Mask covers object pixels only.
ObjectViewRender render_object_view(const ArenaLayout& layout, const ObjectSpec& object,
                                    const DronePose& pose, const CameraModel& cam);

// Same view with nothing on the platform; the mask is all zeros.
ObjectViewRender render_empty_platform_view(const ArenaLayout& layout, const DronePose& pose,
                                            const CameraModel& cam);

// ---- Arena config file --------------------------------------------------

struct ArenaConfig {
  ArenaLayout layout;
  CameraModel ground_camera;
  CameraModel object_camera{640, 360, 1.15, CameraOrientation::ObjectFacing, 1.0 / 60.0};
  std::map<std::string, perception::ColorRange> color_ranges;  // keys: orange, blue, pink
};

ArenaConfig default_arena_config(const ArenaLayout& layout);
std::map<std::string, perception::ColorRange> default_color_ranges();

std::string serialize_arena_config(const ArenaConfig& cfg);
ArenaConfig parse_arena_config(const std::string& text);

}  // namespace dronecap::arena
