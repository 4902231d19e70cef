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

#ifndef PIPECRAWL_VEHICLE_HPP_
#define PIPECRAWL_VEHICLE_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>
#include <string>

#include "pipecrawl/rng.hpp"
#include "pipecrawl/world.hpp"

namespace pipecrawl {

// Body origin sits at the center of the track base. x is axial, y lateral
// offset from the vertical plane through the pipe axis, z vertical offset of
// the mechanically centered sensor column from the pipe axis.
struct RobotPose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  // Positive pitch is nose up: the terrain model sets pitch from the height
  // difference of the two contact points, front minus rear.
  Eigen::Matrix3d rotation() const {
    return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
            Eigen::AngleAxisd(-pitch, Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
  }

  Eigen::Vector3d position() const { return {x, y, z}; }

  // Body-frame mount offset to world coordinates.
  Eigen::Vector3d transform(const Eigen::Vector3d& body_offset) const {
    return position() + rotation() * body_offset;
  }
};

struct VehicleConfig {
  double speed = 0.0508;          // nominal inspection speed, m/s
  double tick_dt = 0.02;          // master loop period, s
  double track_width = 0.40;      // lateral distance between track centerlines
  double wheelbase = 0.50;        // axial distance between contact extremes
  double max_step = 0.05;         // traversable protrusion under a track
  double max_gap = 0.18;          // traversable unsupported span
  double max_pitch_deg = 10.0;    // IMU safeguard threshold

  // Sensor mounts, body frame (x forward).
  Eigen::Vector3d detector_offset{0.35, 0.0, 0.0};
  Eigen::Vector3d mapper_offset{0.30, 0.0, 0.0};
  Eigen::Vector3d laser_offset{0.30, 0.0, 0.0};
  Eigen::Vector3d profiler_offset{-0.35, 0.0, 0.0};
  Eigen::Vector3d rangefinder_offset{-0.40, 0.0, 0.0};

  // Deployment envelope (single-axis limits).
  double limit_dz = 0.02;
  double limit_dy = 0.025;
  double limit_yaw_deg = 6.0;
  double limit_setback = 0.05;
  double limit_step = 0.05;
  double limit_gap = 0.18;

  // Steering gains, yaw_rate = -k_yaw*yaw - k_y*y.
  double steer_k_yaw = 0.5;
  double steer_k_y = 0.3;
  double steer_max_rate = 0.05;  // rad/s

  // Body position at deployment: detector crystal just past the entrance.
  double deploy_body_x = -0.23;

  static VehicleConfig for_class(DiameterClass c);
};

struct DeployError {
  std::string axis;
  double value = 0.0;
  double limit = 0.0;
  std::string message() const;
};

// Checks the entrance offsets against the deployment envelope and, on
// success, returns the in-pipe pose just past the entrance with residual
// offsets. Exceeding any single-axis limit fails; nothing is clamped.
std::optional<RobotPose> deploy(const EntranceOffset& entrance,
                                const VehicleConfig& cfg,
                                DeployError* error);

struct DriveCommand {
  double speed = 0.0;      // signed, m/s
  double yaw_rate = 0.0;   // rad/s
};

struct StepResult {
  double distance = 0.0;   // signed ground distance actually covered
  bool grounded = false;   // a track met a protrusion above max_step
};

// Advances the pose by one tick. Slip is multiplicative Gaussian noise on the
// commanded distance; pitch follows the terrain under the two contact
// extremes; a protrusion above max_step in the direction of travel grounds
// the vehicle instead of moving it.
StepResult step_dynamics(RobotPose* pose, const DriveCommand& cmd,
                         const World& world, const VehicleConfig& cfg,
                         const NoiseConfig& noise, RngStream* rng);

// Centering steering from estimated lateral offset and heading.
double steer_controller(double yaw_est, double y_est, const VehicleConfig& cfg);

// Clock angles (rad from top dead center) of the two track contact lines.
void track_contact_clocks(const World& world, double x, const VehicleConfig& cfg,
                          double* left, double* right);

}  // namespace pipecrawl

#endif  // PIPECRAWL_VEHICLE_HPP_
