#include "dronecap/flightctl.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dronecap/rng.hpp"

namespace dronecap::flightctl {

PidResult pid_step(const PidState& state, const PidGains& gains, double error, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("pid_step: dt must be positive");
  if (gains.kp < 0.0 || gains.ki < 0.0 || gains.kd < 0.0)
    throw std::invalid_argument("pid_step: gains must be >= 0");
  if (gains.integral_limit <= 0.0 || gains.output_limit <= 0.0)
    throw std::invalid_argument("pid_step: limits must be positive");

  PidResult r;
  r.state.integral = std::clamp(state.integral + error * dt, -gains.integral_limit,
                                gains.integral_limit);
  const double derivative = state.has_prev ? (error - state.prev_error) / dt : 0.0;
  r.state.prev_error = error;
  r.state.has_prev = true;
  r.output = std::clamp(gains.kp * error + gains.ki * r.state.integral + gains.kd * derivative,
                        -gains.output_limit, gains.output_limit);
  return r;
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Calibrate: return "Calibrate";
    case Phase::Takeoff: return "Takeoff";
    case Phase::ApproachStop: return "ApproachStop";
    case Phase::AlignHeading: return "AlignHeading";
    case Phase::HoverCapture: return "HoverCapture";
    case Phase::FollowLine: return "FollowLine";
    case Phase::Land: return "Land";
    case Phase::Done: return "Done";
  }
  return "?";
}

void check_mission_config(const MissionConfig& cfg) {
  if (cfg.target_altitude <= 0.0 || cfg.centering_tolerance_px <= 0.0 ||
      cfg.heading_tolerance <= 0.0 || cfg.frames_per_stop <= 0 || cfg.capture_rate_hz <= 0.0 ||
      cfg.settle_time <= 0.0 || cfg.timeout_per_state <= 0.0 || cfg.calibrate_time <= 0.0 ||
      cfg.altitude_band <= 0.0 || cfg.follow_speed <= 0.0 || cfg.follow_min_travel <= 0.0 ||
      cfg.touchdown_altitude <= 0.0 || cfg.dt <= 0.0 || cfg.max_sim_time <= 0.0 ||
      cfg.ground_focal_px <= 0.0 || cfg.search_speed <= 0.0 ||
      cfg.altitude_hold_tolerance <= 0.0)
    throw std::invalid_argument("MissionConfig: all parameters must be positive");
  if (1.0 / cfg.capture_rate_hz < cfg.dt - 1e-12)
    throw std::invalid_argument("MissionConfig: capture_rate must not exceed the tick rate");
}

std::string serialize_mission_config(const MissionConfig& cfg) {
  nlohmann::json j{{"target_altitude", cfg.target_altitude},
                   {"centering_tolerance_px", cfg.centering_tolerance_px},
                   {"heading_tolerance", cfg.heading_tolerance},
                   {"frames_per_stop", cfg.frames_per_stop},
                   {"capture_rate_hz", cfg.capture_rate_hz},
                   {"settle_time", cfg.settle_time},
                   {"timeout_per_state", cfg.timeout_per_state},
                   {"calibrate_time", cfg.calibrate_time},
                   {"altitude_band", cfg.altitude_band},
                   {"altitude_hold_tolerance", cfg.altitude_hold_tolerance},
                   {"follow_speed", cfg.follow_speed},
                   {"follow_min_travel", cfg.follow_min_travel},
                   {"touchdown_altitude", cfg.touchdown_altitude},
                   {"search_speed", cfg.search_speed},
                   {"dt", cfg.dt},
                   {"max_sim_time", cfg.max_sim_time}};
  return j.dump(2) + "\n";
}

MissionConfig parse_mission_config(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  MissionConfig cfg;
  cfg.target_altitude = j.value("target_altitude", cfg.target_altitude);
  cfg.centering_tolerance_px = j.value("centering_tolerance_px", cfg.centering_tolerance_px);
  cfg.heading_tolerance = j.value("heading_tolerance", cfg.heading_tolerance);
  cfg.frames_per_stop = j.value("frames_per_stop", cfg.frames_per_stop);
  cfg.capture_rate_hz = j.value("capture_rate_hz", cfg.capture_rate_hz);
  cfg.settle_time = j.value("settle_time", cfg.settle_time);
  cfg.timeout_per_state = j.value("timeout_per_state", cfg.timeout_per_state);
  cfg.calibrate_time = j.value("calibrate_time", cfg.calibrate_time);
  cfg.altitude_band = j.value("altitude_band", cfg.altitude_band);
  cfg.altitude_hold_tolerance = j.value("altitude_hold_tolerance", cfg.altitude_hold_tolerance);
  cfg.follow_speed = j.value("follow_speed", cfg.follow_speed);
  cfg.follow_min_travel = j.value("follow_min_travel", cfg.follow_min_travel);
  cfg.touchdown_altitude = j.value("touchdown_altitude", cfg.touchdown_altitude);
  cfg.search_speed = j.value("search_speed", cfg.search_speed);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.max_sim_time = j.value("max_sim_time", cfg.max_sim_time);
  check_mission_config(cfg);
  return cfg;
}

namespace {

constexpr double kImageCx = 320.0;
constexpr double kImageCy = 180.0;

// An image-plane line angle [0, pi) maps back to a world direction (mod pi):
// theta = yaw - atan2(cos(phi), -sin(phi)).
double image_line_to_world(double phi_img, double yaw) {
  return yaw - std::atan2(std::cos(phi_img), -std::sin(phi_img));
}

struct PinkHeading {
  double yaw_error = 0.0;  // signed; zero when facing along the mark
  bool valid = false;
};

// Orients the pink principal axis using the offset between the mark centroid
// and the circle centroid (the mark extends from the stop toward the
// platform), then measures the rotation needed to face along it.
PinkHeading pink_yaw_error(const perception::GroundObservation& obs) {
  PinkHeading out;
  if (!obs.pink_direction || !obs.pink_centroid) return out;
  double phi = *obs.pink_direction;
  const double ref_x = obs.circle_centroid ? obs.circle_centroid->x : kImageCx;
  const double ref_y = obs.circle_centroid ? obs.circle_centroid->y : kImageCy;
  const double off_x = obs.pink_centroid->x - ref_x;
  const double off_y = obs.pink_centroid->y - ref_y;
  if (std::cos(phi) * off_x + std::sin(phi) * off_y < 0.0) phi += kPi;
  // For an oriented image direction phi, facing along it means
  // phi == -pi/2 ("up"); the residual is exactly yaw - theta_world.
  out.yaw_error = wrap_signed(phi + kPi / 2.0);
  out.valid = true;
  return out;
}

}  // namespace

FsmStepResult fsm_step(const FlightState& state, const perception::GroundObservation& obs,
                       const DroneState& drone, const MissionConfig& cfg,
                       const ControllerGains& gains, double clock) {
  check_mission_config(cfg);
  if (state.phase == Phase::Done)
    throw std::invalid_argument("fsm_step: mission already finished");

  FsmStepResult r;
  r.state = state;
  FlightState& s = r.state;
  Command& cmd = r.command;
  const DronePose& pose = drone.pose;
  const Vec2 fwd = unit_from_angle(pose.yaw);
  const Vec2 right{fwd.y, -fwd.x};

  if (obs.blue_direction) {
    s.last_blue_world = wrap_line_direction(image_line_to_world(*obs.blue_direction, pose.yaw));
    s.last_blue_valid = true;
  }

  if (clock - s.entered_at > cfg.timeout_per_state) {
    std::ostringstream msg;
    msg << "timeout after " << cfg.timeout_per_state << " s in " << phase_name(s.phase)
        << " (stop " << s.stop_index << ")";
    r.abort_reason = msg.str();
    return r;
  }

  const auto enter = [&](Phase p, int idx) {
    s.phase = p;
    s.stop_index = idx;
    s.entered_at = clock;
    s.frames_requested = 0;
    s.entry_xy = {pose.x, pose.y};
    s.travel_direction_valid = false;
    s.pid_forward = PidState{};
    s.pid_right = PidState{};
    s.pid_yaw = PidState{};
  };

  // Altitude loop, shared by the airborne states. Inside the hold band the
  // command is zero so an undisturbed hover comes to an exact rest.
  const auto hold_altitude = [&](bool deadband) {
    const double e = cfg.target_altitude - pose.z;
    const PidResult pr = pid_step(s.pid_altitude, gains.altitude, e, cfg.dt);
    s.pid_altitude = pr.state;
    cmd.vz = (deadband && std::abs(e) <= cfg.altitude_hold_tolerance) ? 0.0 : pr.output;
  };

  // Lateral loop on the circle centroid; errors in meters on the floor.
  const auto center_on_circle = [&](bool deadband) {
    const double ex_px = obs.circle_centroid->x - kImageCx;
    const double ey_px = obs.circle_centroid->y - kImageCy;
    if (deadband && std::hypot(ex_px, ey_px) <= cfg.centering_tolerance_px) return;
    const double px_to_m = pose.z / cfg.ground_focal_px;
    const PidResult pf = pid_step(s.pid_forward, gains.lateral, -ey_px * px_to_m, cfg.dt);
    const PidResult pr = pid_step(s.pid_right, gains.lateral, ex_px * px_to_m, cfg.dt);
    s.pid_forward = pf.state;
    s.pid_right = pr.state;
    cmd.vx = fwd.x * pf.output + right.x * pr.output;
    cmd.vy = fwd.y * pf.output + right.y * pr.output;
  };

  const auto hold_heading = [&](bool deadband) -> PinkHeading {
    const PinkHeading ph = pink_yaw_error(obs);
    if (!ph.valid) return ph;
    if (deadband && std::abs(ph.yaw_error) <= cfg.heading_tolerance) return ph;
    const PidResult py = pid_step(s.pid_yaw, gains.yaw, -ph.yaw_error, cfg.dt);
    s.pid_yaw = py.state;
    cmd.yaw_rate = py.output;
    return ph;
  };

  const auto search_direction = [&]() -> Vec2 {
    if (!s.last_blue_valid) return fwd;
    const Vec2 cand = unit_from_angle(s.last_blue_world);
    return cand.dot(fwd) >= 0.0 ? cand : cand * -1.0;
  };

  switch (s.phase) {
    case Phase::Calibrate: {
      if (clock - s.entered_at >= cfg.calibrate_time) enter(Phase::Takeoff, 0);
      break;
    }
    case Phase::Takeoff: {
      hold_altitude(false);
      if (std::abs(pose.z - cfg.target_altitude) <= cfg.altitude_band)
        enter(Phase::ApproachStop, 0);
      break;
    }
    case Phase::ApproachStop: {
      hold_altitude(true);
      if (obs.circle_centroid) {
        center_on_circle(false);
        const double err_px = std::hypot(obs.circle_centroid->x - kImageCx,
                                         obs.circle_centroid->y - kImageCy);
        if (err_px <= cfg.centering_tolerance_px &&
            std::abs(pose.z - cfg.target_altitude) <= cfg.altitude_band)
          enter(Phase::AlignHeading, s.stop_index);
      } else {
        const Vec2 dir = search_direction();
        cmd.vx = dir.x * cfg.search_speed;
        cmd.vy = dir.y * cfg.search_speed;
      }
      break;
    }
    case Phase::AlignHeading: {
      hold_altitude(true);
      if (obs.circle_centroid) center_on_circle(true);
      const PinkHeading ph = hold_heading(false);
      if (ph.valid && std::abs(ph.yaw_error) <= cfg.heading_tolerance)
        enter(Phase::HoverCapture, s.stop_index);
      break;
    }
    case Phase::HoverCapture: {
      hold_altitude(true);
      if (obs.circle_centroid) center_on_circle(true);
      hold_heading(true);
      if (s.frames_requested >= cfg.frames_per_stop) {
        if (s.stop_index + 1 >= cfg.n_stops)
          enter(Phase::Land, s.stop_index);
        else
          enter(Phase::FollowLine, s.stop_index);
        break;
      }
      const double due =
          s.entered_at + cfg.settle_time + s.frames_requested / cfg.capture_rate_hz;
      if (clock >= due - 1e-9) {
        r.capture = CaptureRequest{s.stop_index, s.frames_requested, clock};
        ++s.frames_requested;
      }
      break;
    }
    case Phase::FollowLine: {
      hold_altitude(true);
      if (obs.blue_direction) {
        const double base = image_line_to_world(*obs.blue_direction, pose.yaw);
        const double ref = s.travel_direction_valid
                               ? s.travel_direction
                               : pose.yaw - kPi / 3.0;  // next stop sits front-right on a
                                                        // counterclockwise course
        const double c1 = base;
        const double c2 = base + kPi;
        const double pick = std::abs(wrap_signed(c1 - ref)) <= std::abs(wrap_signed(c2 - ref))
                                ? c1
                                : c2;
        s.travel_direction = wrap_angle(pick);
        s.travel_direction_valid = true;
      }
      const Vec2 dir = s.travel_direction_valid ? unit_from_angle(s.travel_direction)
                                                : search_direction();
      cmd.vx = dir.x * cfg.follow_speed;
      cmd.vy = dir.y * cfg.follow_speed;
      const double traveled = (Vec2{pose.x, pose.y} - s.entry_xy).norm();
      if (traveled >= cfg.follow_min_travel && obs.circle_centroid)
        enter(Phase::ApproachStop, s.stop_index + 1);
      break;
    }
    case Phase::Land: {
      cmd.vz = -0.4;
      if (pose.z <= cfg.touchdown_altitude) enter(Phase::Done, s.stop_index);
      break;
    }
    case Phase::Done:
      break;
  }
  return r;
}

int nominal_view_degrees(const arena::ArenaLayout& layout, const arena::ObjectSpec& object,
                         int stop_index) {
  const int n = static_cast<int>(layout.stops.size());
  if (stop_index < 0 || stop_index >= n)
    throw std::invalid_argument("nominal_view_degrees: stop index out of range");
  if (360 % n != 0 || (360 / n) % 45 != 0)
    throw std::invalid_argument(
        "nominal_view_degrees: stop count must place views on the 45-degree grid");
  int k_front = 0;
  if (object.has_front_face == arena::FrontFace::Yes) {
    const double want = arena::placement_yaw(object);
    double best = 1e300;
    for (int k = 0; k < n; ++k) {
      const Vec2 d = layout.stops[k].center - layout.platform_center;
      const double bearing = std::atan2(d.y, d.x);
      const double err = std::abs(wrap_signed(bearing - want));
      if (err < best) {
        best = err;
        k_front = k;
      }
    }
  }
  const int step = 360 / n;
  const int rel = ((stop_index - k_front) % n + n) % n;
  return rel * step;
}

MissionLog run_mission(const arena::ArenaConfig& arena_cfg, const arena::ObjectSpec& object,
                       const MissionConfig& cfg_in, const ControllerGains& gains,
                       const vehicle::ShakeModel& shake_in,
                       const capture::DegradationParams& degrade_in, std::uint64_t seed) {
  const arena::ArenaLayout& layout = arena_cfg.layout;
  arena::validate_layout(layout, 1e-3);
  arena::check_object_spec(object);

  MissionConfig cfg = cfg_in;
  cfg.ground_focal_px = arena_cfg.ground_camera.focal_px();
  cfg.n_stops = static_cast<int>(layout.stops.size());
  check_mission_config(cfg);
  nominal_view_degrees(layout, object, 0);  // rejects stop counts off the view grid

  vehicle::ShakeModel shake = shake_in;
  shake.seed = derive_seed(seed, 0x7368616b65ULL);
  const vehicle::VehicleParams vparams;

  MissionLog log;
  log.seed = seed;

  const arena::Stop& start = layout.stops.front();
  DroneState drone = vehicle::initial_state(
      DronePose{start.center.x, start.center.y, 0.0, start.heading_direction}, shake);
  FlightState state;

  DronePose prev_pose = drone.pose;
  const double min_vision_altitude = 0.06;
  Frame ground_frame;

  for (long tick = 0;; ++tick) {
    const double clock = tick * cfg.dt;
    if (clock > cfg.max_sim_time) {
      log.abort_reason = "exceeded maximum simulation time";
      break;
    }

    perception::GroundObservation obs;
    if (drone.pose.z > min_vision_altitude) {
      if (!layout.bounds.contains({drone.pose.x, drone.pose.y})) {
        log.abort_reason = "drone left the arena bounds";
        break;
      }
      arena::render_ground_view_into(layout, drone.pose, arena_cfg.ground_camera, ground_frame);
      obs = perception::detect_markers(ground_frame, arena_cfg.color_ranges);
    }

    const FsmStepResult step = fsm_step(state, obs, drone, cfg, gains, clock);
    log.ticks.push_back(
        {clock, step.state.phase, step.state.stop_index, drone.pose, step.command});
    log.duration = clock;

    if (step.abort_reason) {
      log.abort_reason = *step.abort_reason;
      break;
    }

    if (step.capture) {
      const arena::ObjectViewRender view =
          arena::render_object_view(layout, object, drone.pose, arena_cfg.object_camera);
      capture::Bbox bbox;
      try {
        bbox = capture::compute_bbox(view.mask);
      } catch (const capture::EmptyMaskError&) {
        log.abort_reason = "object out of frame at capture";
        break;
      }
      // Instantaneous velocity over the last tick, shake included, expressed
      // in camera coordinates (x right, y down, z optical axis).
      const Vec3 v_world{(drone.pose.x - prev_pose.x) / cfg.dt,
                         (drone.pose.y - prev_pose.y) / cfg.dt,
                         (drone.pose.z - prev_pose.z) / cfg.dt};
      const Vec2 fwd = unit_from_angle(drone.pose.yaw);
      const Vec3 v_cam{v_world.x * fwd.y - v_world.y * fwd.x,  // right
                       -v_world.z,                             // down
                       v_world.x * fwd.x + v_world.y * fwd.y};
      capture::DegradationParams dp = degrade_in;
      dp.seed = derive_seed(seed, static_cast<std::uint64_t>(step.capture->stop_index) + 1,
                            static_cast<std::uint64_t>(step.capture->frame_index) + 1);
      MissionCapture mc;
      mc.clock = clock;
      mc.projected_speed = std::hypot(v_cam.x, v_cam.y);
      mc.blur_length =
          capture::blur_kernel_length(mc.projected_speed, dp, arena_cfg.object_camera.exposure_time);
      mc.record.frame = capture::degrade(view.frame, v_cam, dp, arena_cfg.object_camera.exposure_time);
      mc.record.bbox = bbox;
      mc.record.stop_index = step.capture->stop_index;
      mc.record.frame_index = step.capture->frame_index;
      mc.record.instantaneous_pose = drone.pose;
      mc.record.nominal_view_degrees =
          nominal_view_degrees(layout, object, step.capture->stop_index);
      log.captures.push_back(std::move(mc));
    }

    if (step.state.phase == Phase::Done) {
      log.completed = true;
      break;
    }

    prev_pose = drone.pose;
    drone = vehicle::step_dynamics(drone, step.command, cfg.dt, vparams, shake);
    state = step.state;
  }
  return log;
}

std::string export_ticks_jsonl(const MissionLog& log) {
  std::ostringstream out;
  out.precision(17);
  for (const TickRecord& t : log.ticks) {
    out << "{\"t\":" << t.clock << ",\"state\":\"" << phase_name(t.phase) << "\",\"stop\":"
        << t.stop_index << ",\"pose\":[" << t.pose.x << ',' << t.pose.y << ',' << t.pose.z << ','
        << t.pose.yaw << "],\"cmd\":[" << t.command.vx << ',' << t.command.vy << ','
        << t.command.vz << ',' << t.command.yaw_rate << "]}\n";
  }
  return out.str();
}

}  // namespace dronecap::flightctl
