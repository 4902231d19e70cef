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

#ifndef PIPECRAWL_SAFEGUARDING_HPP_
#define PIPECRAWL_SAFEGUARDING_HPP_

#include <deque>
#include <optional>
#include <vector>

#include "Eigen/Core"
#include "pipecrawl/rng.hpp"
#include "pipecrawl/sensors.hpp"
#include "pipecrawl/vehicle.hpp"
#include "pipecrawl/world.hpp"

namespace pipecrawl {

// Confidence prefilter: keeps points at or above the threshold.
std::vector<Eigen::Vector3d> prefilter(const PointCloud& cloud,
                                       double threshold);

enum class FitStatus { kOk, kInsufficientPoints, kNoConsensus };

// Cylinder in the sensor frame: axis through (0, center_y, center_z) with
// direction (1, slope_y, slope_z) normalized, radius r.
struct CylinderFit {
  FitStatus status = FitStatus::kInsufficientPoints;
  double center_y = 0.0;
  double center_z = 0.0;
  double slope_y = 0.0;
  double slope_z = 0.0;
  double radius = 0.0;
  int inlier_count = 0;
  double inlier_fraction = 0.0;

  bool ok() const { return status == FitStatus::kOk; }
  Eigen::Vector3d axis_dir() const {
    return Eigen::Vector3d(1.0, slope_y, slope_z).normalized();
  }
  Eigen::Vector3d axis_point() const {
    return Eigen::Vector3d(0.0, center_y, center_z);
  }
  double distance_to_axis(const Eigen::Vector3d& p) const;
};

struct FitParams {
  double nominal_radius = 0.381;
  double inlier_tol = 0.01;
  int min_points = 50;
  double min_inlier_fraction = 0.3;
  double max_tilt_deg = 15.0;  // axis hypotheses outside this are rejected
  int max_iterations = 200;    // budget; adaptive consensus exits earlier
  int score_subset = 256;
};

// RANSAC over 3-point circumcircle hypotheses (axis seeded along +x), with
// adaptive iteration count and Gauss-Newton refinement of all five
// parameters on the inlier set.
CylinderFit fit_cylinder(const std::vector<Eigen::Vector3d>& points,
                         const FitParams& params, RngStream& rng);

// Sensor pose relative to the pipe axis implied by a fit: where the sensor
// sits and how it is rotated, small-angle exact inverse of the axis params.
struct SensorPoseEstimate {
  double offset_y = 0.0;  // sensor position in the pipe frame
  double offset_z = 0.0;
  double yaw = 0.0;       // sensor attitude relative to the axis
  double pitch = 0.0;
};
SensorPoseEstimate pose_from_cylinder(const CylinderFit& fit);

// Points split against the fitted wall: on it, inside the bore, or beyond
// the wall (visible through an opening).
struct Segmentation {
  std::vector<Eigen::Vector3d> wall;      // pipe frame
  std::vector<Eigen::Vector3d> interior;
  std::vector<Eigen::Vector3d> exterior;
};
Segmentation segment(const std::vector<Eigen::Vector3d>& points,
                     const CylinderFit& fit, double tol = 0.02);

struct ObstacleCheck {
  bool blocked = false;
  double distance = 0.0;    // along the axis from the sensor
  double height = 0.0;      // protrusion above the wall
  int support = 0;          // points in the violating cluster
  bool in_track_corridor = false;
  bool in_body_envelope = false;
};

// Protrusions that matter: above max_step inside either track corridor, or
// intruding into the body envelope. Full-bore faces (interior clusters
// spanning most of the circumference) are excluded here; the circle
// classifier owns those.
ObstacleCheck check_obstacle(const Segmentation& seg, const CylinderFit& fit,
                             const VehicleConfig& vehicle, double lookahead = 2.5);

enum class SlabState { kNone, kOpen, kFilled };

struct CircleSlab {
  double x_center = 0.0;   // pipe frame, forward of the sensor
  SlabState state = SlabState::kNone;
  double radius = 0.0;     // best ring radius when a ring is present
  int ring_count = 0;
  int interior_count = 0;
  double ring_occupancy = 0.0;  // fraction of angular bins occupied
};

struct SweepParams {
  double window_lo = 0.8;
  double window_hi = 2.2;
  double slab = 0.05;
  double center_search = 0.03;   // +- around the fitted axis
  double radius_bin = 0.005;
  int min_ring_points = 20;
  double min_ring_occupancy = 0.5;
  int min_interior_points = 40;
  double min_interior_occupancy = 0.75;

  static SweepParams for_class(DiameterClass c);
};

// Plane-sweep circle extraction across the reliability window.
std::vector<CircleSlab> sweep_circles(const Segmentation& seg,
                                      const CylinderFit& fit,
                                      const SweepParams& params);

enum class EndKind { kNone, kClosedPipe, kOpenEnd, kReducer };

const char* to_string(EndKind k);

struct EndDetection {
  EndKind kind = EndKind::kNone;
  double x = 0.0;  // pipe-frame estimate, forward of the sensor
};

// Orders the slab evidence into an end-of-pipe call. A filled slice counts
// as persisting when the slab behind it is shadowed, since a thin face
// occludes everything downstream. Reducer takes precedence over open end;
// open-end transitions near the far edge of the window are ignored.
EndDetection classify_end(const std::vector<CircleSlab>& slabs,
                          const Segmentation& seg, const CylinderFit& fit,
                          const SweepParams& params, double nominal_radius);

// 25-tap moving average with partial-window warm-up.
class FirFilter {
 public:
  explicit FirFilter(int taps = 25) : taps_(taps) {}
  double push(double v);
  void reset();

 private:
  int taps_;
  std::deque<double> window_;
  double sum_ = 0.0;
};

struct LaserCheck {
  bool short_left = false;
  bool short_right = false;
  bool long_left = false;
  bool long_right = false;
  double expected_left = 0.0;
  double expected_right = 0.0;
  double filtered_left = 0.0;
  double filtered_right = 0.0;

  bool any_short() const { return short_left || short_right; }
  bool any_long() const { return long_left || long_right; }
};

// Independent floor-ahead check: expected laser ranges recomputed from IMU
// attitude and the fitted lateral offsets against the nominal bore. Short
// returns mean something rises from the wall ahead; long ones mean the wall
// is missing.
LaserCheck secondary_check(double filtered_left, double filtered_right,
                           const ImuSample& imu,
                           const SensorPoseEstimate& pose_estimate,
                           const VehicleConfig& vehicle, double nominal_radius,
                           double short_delta = 0.12, double long_delta = 0.5);

bool pitch_exceeded(const ImuSample& imu, double max_pitch_deg);

// One tick of safeguarding output.
struct SafeguardFrame {
  CylinderFit fit;          // possibly carried over from the last valid tick
  bool fit_fresh = false;   // fit produced this tick
  bool fit_stale = false;   // carried fit older than the staleness budget
  SensorPoseEstimate pose_estimate;
  ObstacleCheck obstacle;
  EndDetection end;
  LaserCheck laser;
  bool laser_short_debounced = false;
  bool laser_long_debounced = false;
  bool pitch_fault = false;
};

// Stateful wrapper owning the per-tick pipeline: prefilter, fit (with
// carry-over on dropout), segmentation, obstacle and circle checks, FIR
// lasers with debounce.
class SafeguardPipeline {
 public:
  SafeguardPipeline(DiameterClass diameter, const VehicleConfig& vehicle,
                    std::uint64_t seed);

  SafeguardFrame process(const PointCloud& cloud, const LaserPair& lasers,
                         const ImuSample& imu);

  const SweepParams& sweep_params() const { return sweep_; }
  const FitParams& fit_params() const { return fit_params_; }

 private:
  VehicleConfig vehicle_;
  FitParams fit_params_;
  SweepParams sweep_;
  double conf_threshold_;
  RngStream rng_;
  std::optional<CylinderFit> last_fit_;
  int stale_ticks_ = 0;
  FirFilter fir_left_;
  FirFilter fir_right_;
  int short_run_ = 0;
  int long_run_ = 0;
  static constexpr int kStaleBudgetTicks = 100;  // 2 s at 50 Hz
  static constexpr int kLaserDebounce = 5;
};

}  // namespace pipecrawl

#endif  // PIPECRAWL_SAFEGUARDING_HPP_
