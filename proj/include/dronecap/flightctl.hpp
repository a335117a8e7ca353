#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dronecap/arena.hpp"
#include "dronecap/capture.hpp"
#include "dronecap/perception.hpp"
#include "dronecap/vehicle.hpp"

namespace dronecap::flightctl {

using vehicle::Command;
using vehicle::DronePose;
using vehicle::DroneState;

// ---- PID -----------------------------------------------------------------

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double integral_limit = 1.0;
  double output_limit = 1.0;
};

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
  bool has_prev = false;
};

struct PidResult {
  PidState state;
  double output = 0.0;
};

// output = clamp(kp*e + ki*I + kd*de/dt, +-output_limit); backward-difference
// derivative; integral clamped to +-integral_limit.
PidResult pid_step(const PidState& state, const PidGains& gains, double error, double dt);

// ---- Flight state machine --------------------------------------------------

enum class Phase {
  Calibrate,
  Takeoff,
  ApproachStop,
  AlignHeading,
  HoverCapture,
  FollowLine,
  Land,
  Done,
};

const char* phase_name(Phase p);

struct FlightState {
  Phase phase = Phase::Calibrate;
  int stop_index = 0;
  // Controller memory and per-phase bookkeeping carried across ticks.
  double entered_at = 0.0;
  int frames_requested = 0;
  Vec2 entry_xy;
  double travel_direction = 0.0;  // world angle while following a line
  bool travel_direction_valid = false;
  double last_blue_world = 0.0;  // last observed blue-line direction, world frame
  bool last_blue_valid = false;
  PidState pid_altitude;
  PidState pid_forward;
  PidState pid_right;
  PidState pid_yaw;
};

struct MissionConfig {
  double target_altitude = 1.0;        // m
  double centering_tolerance_px = 12.0;
  double heading_tolerance = 0.05;     // rad
  int frames_per_stop = 30;
  double capture_rate_hz = 5.0;
  double settle_time = 1.0;            // s of hold before the first capture
  double timeout_per_state = 30.0;     // s; exceeded -> mission abort
  double calibrate_time = 1.0;         // s; fixed sensor-settling wait
  double altitude_band = 0.08;         // m; takeoff/approach altitude gate
  double altitude_hold_tolerance = 0.03;  // m; no correction inside this band
  double follow_speed = 0.35;          // m/s along the blue line
  double follow_min_travel = 0.8;      // m before the next circle may be accepted
  double touchdown_altitude = 0.05;    // m
  double search_speed = 0.15;          // m/s when the circle is lost
  double dt = 0.05;                    // s, control tick
  double max_sim_time = 360.0;         // s, hard abort
  double ground_focal_px = 493.1;      // set from the ground camera by run_mission
  int n_stops = 8;                     // set from the layout by run_mission
};

void check_mission_config(const MissionConfig& cfg);

// Mission config as a structured text file; round-trips losslessly.
std::string serialize_mission_config(const MissionConfig& cfg);
MissionConfig parse_mission_config(const std::string& text);

struct ControllerGains {
  PidGains altitude{1.2, 0.15, 0.3, 0.5, 0.6};
  PidGains lateral{1.6, 0.1, 0.5, 0.5, 1.0};   // meters of floor error -> m/s
  PidGains yaw{2.2, 0.0, 0.25, 0.5, 1.5};      // rad error -> rad/s
};

struct CaptureRequest {
  int stop_index = 0;
  int frame_index = 0;
  double clock = 0.0;
};

struct FsmStepResult {
  FlightState state;
  Command command;
  std::optional<CaptureRequest> capture;
  std::optional<std::string> abort_reason;
};

// One control decision: consumes the current observation and drone state,
// returns the next flight state, the velocity command, and possibly a
// capture request. Aborts (timeouts) are reported, never thrown.
FsmStepResult fsm_step(const FlightState& state, const perception::GroundObservation& obs,
                       const DroneState& drone, const MissionConfig& cfg,
                       const ControllerGains& gains, double clock);

// ---- Mission runner --------------------------------------------------------

struct TickRecord {
  double clock = 0.0;
  Phase phase = Phase::Calibrate;
  int stop_index = 0;
  DronePose pose;
  Command command;
  bool operator==(const TickRecord&) const = default;
};

struct MissionCapture {
  capture::CaptureRecord record;
  double clock = 0.0;
  double projected_speed = 0.0;  // image-plane speed used for blur, m/s
  double blur_length = 0.0;      // px
};

struct MissionLog {
  std::uint64_t seed = 0;
  bool completed = false;
  std::string abort_reason;
  double duration = 0.0;  // simulated seconds
  std::vector<TickRecord> ticks;
  std::vector<MissionCapture> captures;
};

// Full closed loop (render -> detect -> fsm -> dynamics) for one object.
// Deterministic per seed, shake and degradation streams included.
MissionLog run_mission(const arena::ArenaConfig& arena_cfg, const arena::ObjectSpec& object,
                       const MissionConfig& cfg, const ControllerGains& gains,
                       const vehicle::ShakeModel& shake, const capture::DegradationParams& degrade,
                       std::uint64_t seed);

// Stop index -> dataset view label. The stop whose bearing best matches the
// object's placement yaw is view 0 for objects with a front face; stop 0
// otherwise. Throws unless 360 is divisible by the stop count on the 45 grid.
int nominal_view_degrees(const arena::ArenaLayout& layout, const arena::ObjectSpec& object,
                         int stop_index);

// One line per tick: clock, state, pose, command.
std::string export_ticks_jsonl(const MissionLog& log);

}  // namespace dronecap::flightctl
