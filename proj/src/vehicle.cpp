/*
 * Copyright 2026 The Pipecrawl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pipecrawl/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pipecrawl {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLimitEps = 1e-9;

// Bore radius clamped to the walled span; used for terrain under the tracks.
double local_radius(const World& world, double x) {
  const double xc = std::clamp(x, 0.0, world.open_end_x());
  return world.radius_at(xc);
}
}  // namespace

VehicleConfig VehicleConfig::for_class(DiameterClass c) {
  VehicleConfig cfg;
  cfg.speed = nominal_speed(c);
  return cfg;
}

std::string DeployError::message() const {
  std::ostringstream ss;
  ss << "deployment envelope exceeded on " << axis << ": |" << value
     << "| > " << limit;
  return ss.str();
}

std::optional<RobotPose> deploy(const EntranceOffset& e, const VehicleConfig& cfg,
                                DeployError* error) {
  struct Axis {
    const char* name;
    double value;
    double limit;
  };
  const Axis axes[] = {
      {"dz", std::abs(e.dz), cfg.limit_dz},
      {"dy", std::abs(e.dy), cfg.limit_dy},
      {"yaw_deg", std::abs(e.yaw_deg), cfg.limit_yaw_deg},
      {"setback", e.setback, cfg.limit_setback},
      {"step", e.step, cfg.limit_step},
      {"gap", e.gap, cfg.limit_gap},
  };
  for (const Axis& a : axes) {
    if (a.value > a.limit + kLimitEps) {
      if (error) *error = {a.name, a.value, a.limit};
      return std::nullopt;
    }
  }
  // Half of each alignment offset persists once the tracks settle in-bore.
  RobotPose pose;
  pose.x = cfg.deploy_body_x;
  pose.y = 0.5 * e.dy;
  pose.z = 0.5 * e.dz;
  pose.yaw = 0.5 * deg2rad(e.yaw_deg);
  return pose;
}

void track_contact_clocks(const World& world, double x, const VehicleConfig& cfg,
                          double* left, double* right) {
  const double r = local_radius(world, x);
  const double half = std::min(0.5 * cfg.track_width / r, 0.9);
  const double off = std::asin(half);
  *left = kPi - off;
  *right = -(kPi - off);
}

namespace {

// Contact height relative to the pipe axis at an axial station, including
// traversable protrusions. Impassable protrusions are handled by grounding.
double contact_height(const World& world, double x, const VehicleConfig& cfg) {
  double cl, cr;
  track_contact_clocks(world, x, cfg, &cl, &cr);
  const double r = local_radius(world, x);
  double h = -r * std::cos(std::asin(std::min(0.5 * cfg.track_width / r, 0.9)));
  double prot = std::max(world.protrusion_under(x, cl),
                         world.protrusion_under(x, cr));
  if (prot > cfg.max_step) prot = 0.0;  // grounding handles it instead
  return h + prot;
}

}  // namespace

StepResult step_dynamics(RobotPose* pose, const DriveCommand& cmd,
                         const World& world, const VehicleConfig& cfg,
                         const NoiseConfig& noise, RngStream* rng) {
  StepResult out;
  const double dt = cfg.tick_dt;

  pose->yaw += cmd.yaw_rate * dt;
  pose->yaw = std::clamp(pose->yaw, -0.6, 0.6);

  if (cmd.speed != 0.0) {
    const double slip = rng->gaussian(0.0, noise.slip_sigma);
    double d = cmd.speed * dt * (1.0 + slip);

    // Grounding check at the leading contact.
    const double lead = pose->x + (d >= 0.0 ? 0.5 : -0.5) * cfg.wheelbase;
    double cl, cr;
    track_contact_clocks(world, lead, cfg, &cl, &cr);
    const double prot = std::max(world.protrusion_under(lead + d, cl),
                                 world.protrusion_under(lead + d, cr));
    if (d > 0.0 && prot > cfg.max_step) {
      out.grounded = true;
      d = 0.0;
    }

    pose->x += d * std::cos(pose->yaw) * std::cos(pose->pitch);
    pose->y += d * std::sin(pose->yaw);
    // Residual vertical offset from deployment relaxes as the robot settles.
    pose->z *= std::exp(-std::abs(d) / 2.0);
    out.distance = d;
  }

  const double hf = contact_height(world, pose->x + 0.5 * cfg.wheelbase, cfg);
  const double hr = contact_height(world, pose->x - 0.5 * cfg.wheelbase, cfg);
  pose->pitch = std::atan2(hf - hr, cfg.wheelbase);

  return out;
}

double steer_controller(double yaw_est, double y_est, const VehicleConfig& cfg) {
  const double rate = -cfg.steer_k_yaw * yaw_est - cfg.steer_k_y * y_est;
  return std::clamp(rate, -cfg.steer_max_rate, cfg.steer_max_rate);
}

}  // namespace pipecrawl
