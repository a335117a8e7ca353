#pragma once

#include <cstdint>
#include <random>

#include "dronecap/geometry.hpp"

namespace dronecap::vehicle {

struct DronePose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;    // meters above the floor, >= 0
  double yaw = 0.0;  // radians, [0, 2*pi)

  Vec2 xy() const { return {x, y}; }
  bool operator==(const DronePose&) const = default;
};

// Mean-reverting jitter applied to the hover pose; stationary std equals the
// configured sigma on each axis.
struct ShakeModel {
  double sigma_pos = 0.02;   // meters, per axis
  double sigma_yaw = 0.015;  // radians
  double tau = 0.4;          // seconds, mean-reversion time constant
  std::uint64_t seed = 0;
};

struct ShakeOffset {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double dyaw = 0.0;
  bool operator==(const ShakeOffset&) const = default;
};

struct ShakeState {
  ShakeOffset offset;
  std::mt19937_64 rng;

  ShakeState() : rng(0) {}
  explicit ShakeState(std::uint64_t seed) : rng(seed) {}
  bool operator==(const ShakeState& o) const { return offset == o.offset && rng == o.rng; }
};

// Advances the shake process by dt using the exact discrete-time update of a
// mean-reverting Gaussian process, and returns the new pose perturbation.
ShakeOffset sample_shake(ShakeState& state, const ShakeModel& model, double dt);

struct Command {
  double vx = 0.0;        // m/s, world frame
  double vy = 0.0;        // m/s
  double vz = 0.0;        // m/s
  double yaw_rate = 0.0;  // rad/s
  bool operator==(const Command&) const = default;
};

struct VehicleParams {
  double max_speed_xy = 1.0;     // m/s
  double max_speed_z = 0.6;      // m/s
  double max_yaw_rate = 1.5;     // rad/s
  double tracking_tau = 0.15;    // s; 0 means instantaneous velocity tracking
  double rest_threshold = 2e-3;  // m/s; snap to rest when commanded zero below this
};

struct DroneState {
  DronePose pose;  // physical pose, shake included
  Vec3 linear_velocity;
  double yaw_rate = 0.0;
  ShakeState shake;

  bool operator==(const DroneState& o) const {
    return pose == o.pose && linear_velocity == o.linear_velocity && yaw_rate == o.yaw_rate &&
           shake == o.shake;
  }
};

DroneState initial_state(const DronePose& pose, const ShakeModel& shake);

// One simulation tick: clamp the command, track it with a first-order lag,
// integrate position, then advance the shake process and recompose the pose.
DroneState step_dynamics(const DroneState& state, const Command& cmd, double dt,
                         const VehicleParams& params, const ShakeModel& shake);

}  // namespace dronecap::vehicle
