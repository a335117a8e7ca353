#include "dronecap/vehicle.hpp"

#include <cmath>
#include <stdexcept>

namespace dronecap::vehicle {

namespace {

double ou_step(double prev, double sigma, double decay, double diffuse, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return prev * decay + sigma * diffuse * n(rng);
}

double clamp_mag(double v, double limit) {
  if (v > limit) return limit;
  if (v < -limit) return -limit;
  return v;
}

}  // namespace

ShakeOffset sample_shake(ShakeState& state, const ShakeModel& model, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("sample_shake: dt must be positive");
  if (model.sigma_pos == 0.0 && model.sigma_yaw == 0.0) {
    state.offset = ShakeOffset{};
    return state.offset;
  }
  // x' = x * exp(-dt/tau) + sigma * sqrt(1 - exp(-2 dt/tau)) * N(0,1)
  // keeps the stationary std exactly sigma for any dt.
  const double decay = std::exp(-dt / model.tau);
  const double diffuse = std::sqrt(1.0 - decay * decay);
  ShakeOffset o;
  o.dx = ou_step(state.offset.dx, model.sigma_pos, decay, diffuse, state.rng);
  o.dy = ou_step(state.offset.dy, model.sigma_pos, decay, diffuse, state.rng);
  o.dz = ou_step(state.offset.dz, model.sigma_pos, decay, diffuse, state.rng);
  o.dyaw = ou_step(state.offset.dyaw, model.sigma_yaw, decay, diffuse, state.rng);
  state.offset = o;
  return o;
}

DroneState initial_state(const DronePose& pose, const ShakeModel& shake) {
  DroneState s;
  s.pose = pose;
  s.pose.yaw = wrap_angle(pose.yaw);
  s.shake = ShakeState(shake.seed);
  return s;
}

DroneState step_dynamics(const DroneState& state, const Command& cmd, double dt,
                         const VehicleParams& params, const ShakeModel& shake) {
  if (dt <= 0.0) throw std::invalid_argument("step_dynamics: dt must be positive");

  Command c;
  c.vx = clamp_mag(cmd.vx, params.max_speed_xy);
  c.vy = clamp_mag(cmd.vy, params.max_speed_xy);
  c.vz = clamp_mag(cmd.vz, params.max_speed_z);
  c.yaw_rate = clamp_mag(cmd.yaw_rate, params.max_yaw_rate);

  DroneState next = state;

  const double alpha = params.tracking_tau > 0.0 ? std::exp(-dt / params.tracking_tau) : 0.0;
  next.linear_velocity.x = c.vx + (state.linear_velocity.x - c.vx) * alpha;
  next.linear_velocity.y = c.vy + (state.linear_velocity.y - c.vy) * alpha;
  next.linear_velocity.z = c.vz + (state.linear_velocity.z - c.vz) * alpha;
  next.yaw_rate = c.yaw_rate + (state.yaw_rate - c.yaw_rate) * alpha;

  // Motor deadband: with a zero setpoint the residual creep is snapped to
  // rest so an undisturbed hover holds an exactly constant pose.
  auto settle = [&](double& v, double setpoint) {
    if (setpoint == 0.0 && std::abs(v) < params.rest_threshold) v = 0.0;
  };
  settle(next.linear_velocity.x, c.vx);
  settle(next.linear_velocity.y, c.vy);
  settle(next.linear_velocity.z, c.vz);
  settle(next.yaw_rate, c.yaw_rate);

  // Base pose excludes the old shake offset; the new offset is recomposed
  // after integration so shake stays mean-reverting rather than a random walk.
  const ShakeOffset& prev = state.shake.offset;
  double bx = state.pose.x - prev.dx + next.linear_velocity.x * dt;
  double by = state.pose.y - prev.dy + next.linear_velocity.y * dt;
  double bz = state.pose.z - prev.dz + next.linear_velocity.z * dt;
  double byaw = state.pose.yaw - prev.dyaw + next.yaw_rate * dt;

  const ShakeOffset o = sample_shake(next.shake, shake, dt);
  next.pose.x = bx + o.dx;
  next.pose.y = by + o.dy;
  next.pose.z = bz + o.dz;
  next.pose.yaw = wrap_angle(byaw + o.dyaw);
  if (next.pose.z < 0.0) next.pose.z = 0.0;
  return next;
}

}  // namespace dronecap::vehicle
