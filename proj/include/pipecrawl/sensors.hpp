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

#ifndef PIPECRAWL_SENSORS_HPP_
#define PIPECRAWL_SENSORS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "Eigen/Core"
#include "pipecrawl/radiometry.hpp"
#include "pipecrawl/rng.hpp"
#include "pipecrawl/vehicle.hpp"
#include "pipecrawl/world.hpp"

namespace pipecrawl {

// Depth mapper field of view, centered on the sensor +x axis.
inline constexpr int kMapperCols = 64;
inline constexpr int kMapperRows = 48;
inline constexpr double kMapperFovHDeg = 70.0;
inline constexpr double kMapperFovVDeg = 55.0;

inline constexpr int kProfilerRays = 360;
inline constexpr double kProfilerHz = 10.0;

// Point cloud in the sensor frame (x forward along the body axis).
struct PointCloud {
  std::vector<Eigen::Vector3f> points;
  std::vector<float> confidence;
};

// Unit ray directions for the mapper grid, row-major, in the sensor frame.
const std::array<Eigen::Vector3d, kMapperCols * kMapperRows>& mapper_directions();

// One mapper frame: every grid ray cast against the world, range noise applied
// along the ray, per-point confidence from incidence angle and range.
PointCloud sample_depth_map(const RobotPose& pose, const Eigen::Vector3d& offset,
                            const World& world, const NoiseConfig& noise,
                            RngStream& rng);

struct LaserPair {
  double left = 0.0;
  double right = 0.0;
};

// Unit directions of the two point lasers in the body frame: yawed +-26 deg
// and pitched 26 deg down.
LaserPair point_laser_ranges(const RobotPose& pose, const Eigen::Vector3d& offset,
                             const World& world, const NoiseConfig& noise,
                             RngStream& rng);
const Eigen::Vector3d& point_laser_direction(int side);  // 0 left, 1 right

// Distance along dir (unit, from origin) to the cylinder y^2 + z^2 = r^2,
// axes in the cylinder frame. Negative when the ray never reaches the wall.
double ray_cylinder_range(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                          double radius);

struct ImuSample {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

// Attitude with white noise plus a per-run constant bias (passed in).
ImuSample sample_imu(const RobotPose& pose, const ImuSample& bias,
                     const NoiseConfig& noise, RngStream& rng);

struct RangefinderSample {
  double range = 0.0;
  bool fix = false;  // true when the return is from the reflector
};

// Range back to the rig reflector behind the entrance. Fix probability decays
// beyond the lock range; non-fixes return a wild short range.
RangefinderSample sample_rangefinder(const RobotPose& pose,
                                     const Eigen::Vector3d& offset,
                                     const Scenario& scenario,
                                     const NoiseConfig& noise, RngStream& rng);

struct EncoderSample {
  std::int64_t left_ticks = 0;
  std::int64_t right_ticks = 0;
};

// Quantization carry kept across ticks so long distances do not lose
// sub-tick remainders.
struct EncoderState {
  double scale_bias = 0.0;  // per-run multiplicative bias, sampled at startup
  double carry_left = 0.0;
  double carry_right = 0.0;
};

// Tick deltas for one control period of true travel. fault_scale multiplies
// the reported ticks (1.0 when healthy).
EncoderSample sample_encoders(double d_true, EncoderState& state,
                              const NoiseConfig& noise, double fault_scale,
                              RngStream& rng);

// Full 360 deg profiler ring in the sensor cross-section plane. Dropouts are
// encoded as range = -1.
RingRanges sample_profiler(const RobotPose& pose, const Eigen::Vector3d& offset,
                           const World& world, const NoiseConfig& noise,
                           RngStream& rng);

// Collimated detector sensitivity along the pipe axis. The shielding disc
// pair admits the full crystal within |u| <= plateau_end, tapering linearly
// to zero at support_end; normalized to unit integral.
class AnnulusResponse {
 public:
  struct Geometry {
    double crystal_length = 0.05;
    double crystal_radius = 0.025;
    double disc_radius = 0.10;
    double disc_gap = 0.10;
    double bore_radius = 0.381;
  };

  explicit AnnulusResponse(const Geometry& g);

  double plateau_end() const { return plateau_end_; }
  double support_end() const { return support_end_; }
  double height() const { return height_; }

  double eval(double u) const;
  // Cumulative integral from -support_end to u; 0 below, 1 above.
  double cumulative(double u) const;
  // Integral of activity(x) * eval(x - center) dx, exact for the piecewise
  // linear activity profile.
  double convolve(const DepositProfile& deposit, double center) const;

 private:
  double plateau_end_ = 0.0;
  double support_end_ = 0.0;
  double height_ = 0.0;
};

struct GammaContext {
  double efficiency = 0.05;
  double background_cps = 10.0;
  double peak_kev = kU235PeakKev;
  double fwhm_frac = 0.12;
  double cal_kev_per_channel = 0.5;
  int channels = 1024;
  Roi roi;               // default window used for background placement
  double gain = 1.0;     // energy scale fault, 1.0 when healthy
  bool dead = false;
  double extra_roi_cps = 0.0;  // activity riding on the robot itself
};

GammaContext make_gamma_context(const NoiseConfig& noise);

// ROI window capturing essentially the whole photopeak: center +- 3 sigma.
Roi default_roi(const NoiseConfig& noise);

// One live_time acquisition with the detector at pipe coordinate x.
Spectrum sample_gamma(double x, double live_time, const DepositProfile& deposit,
                      const AnnulusResponse& response, const GammaContext& ctx,
                      RngStream& rng);

// Am-241 check source held against the detector, plus ambient continuum.
Spectrum sample_check_source(double live_time, const NoiseConfig& noise,
                             double gain, bool dead, RngStream& rng);

// Per-run sensor instance: derived rng streams, per-run biases, quantization
// state. Mission code samples through this; tests can call the free functions
// with their own streams.
class SensorRig {
 public:
  SensorRig(const Scenario& scenario, const VehicleConfig& vehicle);

  PointCloud depth_map(const RobotPose& pose, const World& world);
  LaserPair lasers(const RobotPose& pose, const World& world);
  ImuSample imu(const RobotPose& pose);
  RangefinderSample rangefinder(const RobotPose& pose);
  EncoderSample encoders(double d_true, double fault_scale);
  RingRanges profiler(const RobotPose& pose, const World& world);
  Spectrum gamma(double x, double live_time, const DepositProfile& deposit,
                 double gain, bool dead, double extra_roi_cps = 0.0);
  Spectrum check_source(double live_time, double gain, bool dead);

  const AnnulusResponse& response() const { return response_; }
  const VehicleConfig& vehicle() const { return vehicle_; }
  const NoiseConfig& noise() const { return noise_; }
  const ImuSample& imu_bias() const { return imu_bias_; }
  double encoder_scale_bias() const { return encoder_state_.scale_bias; }
  double ticks_to_meters(std::int64_t ticks) const;

 private:
  VehicleConfig vehicle_;
  NoiseConfig noise_;
  AnnulusResponse response_;
  GammaContext gamma_ctx_;
  Scenario scenario_;
  ImuSample imu_bias_;
  EncoderState encoder_state_;
  RngStream mapper_rng_;
  RngStream laser_rng_;
  RngStream imu_rng_;
  RngStream rangefinder_rng_;
  RngStream encoder_rng_;
  RngStream profiler_rng_;
  RngStream gamma_rng_;
};

}  // namespace pipecrawl

#endif  // PIPECRAWL_SENSORS_HPP_
