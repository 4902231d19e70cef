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

#ifndef PIPECRAWL_WORLD_HPP_
#define PIPECRAWL_WORLD_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pipecrawl {

// World frame: x along the pipe axis, positive downrange, origin at the
// entrance plane. z up, y left when looking downrange. Clock angles are
// measured in degrees from top dead center (+z), increasing toward +y.
// All internal quantities are SI (m, s, rad); scenario documents use degrees.

enum class DiameterClass { kD30, kD42 };

// Nominal inner radius per diameter class.
double nominal_radius(DiameterClass c);
// Nominal inspection speed per diameter class (10 ft/min and 6 ft/min).
double nominal_speed(DiameterClass c);
const char* to_string(DiameterClass c);

struct EntranceOffset {
  double dz = 0.0;       // vertical misalignment, m
  double dy = 0.0;       // lateral misalignment, m
  double yaw_deg = 0.0;  // heading misalignment, degrees
  double setback = 0.0;  // rig set back from entrance plane, m
  double step = 0.0;     // vertical lip at the entrance, m
  double gap = 0.0;      // unsupported span between rig and pipe, m
};

struct Fitting {
  enum class Kind { kReducer, kSweptT, kClosedValve, kOpenEnd, kObstacle, kHole, kPort };

  Kind kind = Kind::kClosedValve;
  double position = 0.0;  // axial position of the fitting's leading edge, m

  // Kind-specific parameters; unused ones stay zero.
  double exit_radius = 0.0;        // reducer
  double branch_radius = 0.0;      // swept_t
  double clock_angle_deg = 0.0;    // swept_t, obstacle, hole, port
  double height = 0.0;             // obstacle, radial protrusion above wall
  double length = 0.0;             // obstacle, axial extent
  double axial_extent = 0.0;       // hole
  double angular_extent_deg = 0.0; // hole
  double radius = 0.0;             // port aperture radius

  // Axial span occupied by the fitting, used for overlap validation.
  double span_begin() const;
  double span_end() const;
};

const char* to_string(Fitting::Kind k);

// Piecewise-linear U-235 deposit line activity a(x), in emissions/s per meter
// of pipe reaching the detector geometry model, plus a flat in-ROI background.
struct DepositProfile {
  std::vector<std::pair<double, double>> breakpoints;  // (x, activity), sorted by x
  double background_rate = 10.0;                       // counts/s inside the ROI

  double line_activity(double x) const;  // 0 outside the breakpoint span
};

struct NoiseConfig {
  // Depth mapper.
  double mapper_sigma = 0.012;        // range noise, m
  double mapper_outlier_rate = 0.02;  // fraction of wild points
  double mapper_conf_range = 6.0;     // confidence falloff range constant, m
  double mapper_conf_jitter = 0.06;   // uniform half-width jitter on confidence
  double mapper_conf_threshold = 0.25;

  // Point lasers and profiler.
  double laser_sigma = 0.008;
  double profiler_sigma = 0.005;
  double profiler_dropout = 0.005;  // per-ray no-return probability

  // IMU.
  double imu_angle_sigma_deg = 0.3;
  double imu_bias_sigma_deg = 0.2;  // per-run constant bias

  // Rangefinder back to the launch-rig target.
  double rangefinder_sigma = 0.02;
  double rangefinder_lock_range = 13.0;  // fully reliable inside this range, m
  double rangefinder_decay_tau = 8.0;    // fix probability decay beyond lock, m
  double rangefinder_dropout_beyond = -1.0;  // hard dropout distance, m; <0 disables
  double rangefinder_wild_min = 0.5;     // wild returns are uniform short ranges

  // Track encoders.
  double encoder_ticks_per_m = 20000.0;
  double encoder_white_sigma = 0.0002;   // extra white noise per tick interval, m
  double encoder_scale_bias_sigma = 0.004;  // per-run track scale error

  // Track slip applied by dynamics, multiplicative per tick.
  double slip_sigma = 0.005;

  // Gamma chain.
  double gamma_efficiency = 0.05;     // counts per emission in the ROI line
  double gamma_fwhm_frac = 0.12;      // FWHM / energy at 186 keV
  double cal_kev_per_channel = 0.5;
  int spectrum_channels = 1024;
  double am241_energy_kev = 59.54;
  double am241_rate_cps = 300.0;
  double am241_fwhm_frac = 0.212;
  double qc_live_time = 60.0;         // seconds per QC acquisition
};

struct FaultInjection {
  enum class Kind {
    kGainShift,      // detector gain multiplied by factor
    kDeadDetector,   // gamma chain goes silent
    kEncoderScale,   // encoder ticks multiplied by factor
    kTempRunaway,    // enclosure temperature ramps up
    kDiskLow,        // storage alert
    kNodeHang,       // heartbeat goes stale
    kBatteryDrain,   // battery drain rate multiplied by factor
    kContamination,  // post-run ROI background raised by factor
  };
  double time = 0.0;  // seconds after mission start
  Kind kind = Kind::kGainShift;
  double factor = 1.0;
};

const char* to_string(FaultInjection::Kind k);

struct Scenario {
  std::string name;
  DiameterClass diameter_class = DiameterClass::kD30;
  double pipe_length = 40.0;
  double commanded_distance = 33.0;
  std::uint64_t seed = 1;
  EntranceOffset entrance;
  std::vector<Fitting> fittings;
  DepositProfile deposit;
  NoiseConfig noise;
  std::vector<FaultInjection> faults;

  double pipe_radius() const { return nominal_radius(diameter_class); }
  double pipe_speed() const { return nominal_speed(diameter_class); }
};

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

// Parses and validates a scenario document. Throws ScenarioError naming the
// offending field on any violation; never repairs input.
Scenario load_scenario(const std::string& json_text);
Scenario load_scenario_file(const std::string& path);
// Serializes a scenario back to its document form (used by the suite
// generator; floats rounded so regeneration is byte identical).
std::string scenario_to_json(const Scenario& s);

// FNV-1a digest of raw file bytes, hex encoded; recorded in reports.
std::string digest_hex(const std::string& bytes);

struct RayHit {
  enum class Surface { kNone, kWall, kFitting, kFloor };
  double range = 0.0;
  Surface surface = Surface::kNone;
  Fitting::Kind fitting_kind = Fitting::Kind::kClosedValve;  // valid iff kFitting
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();          // unit, toward the ray origin side
};

// Immutable ray-castable geometry compiled from a Scenario.
//
// Geometry model:
//  - Main bore: piecewise linear radius profile (reducers taper linearly over
//    kTaperLength and continue at exit_radius).
//  - ClosedValve: full-bore disc at its position.
//  - OpenEnd (and the end of the declared pipe): wall simply stops; rays that
//    leave the bore return the cell-space clamp.
//  - Obstacle: sector prism proud of the wall (fixed angular width).
//  - Hole: wall patch removed; rays escape to the clamp.
//  - Port: circular wall aperture with a blind radial stub of fixed depth.
//  - SweptT: cylindrical branch stub modeled as a capsule slanting from the
//    wall entry point across the bore (0.5 m sweep); presents an in-bore
//    obstruction ahead of the branch, which is the signature the robot keys on.
//  - Launch rig: floor plane at z = -R for x < 0 so the profiler sees
//    plausible cell-space returns outside the pipe.
class World {
 public:
  static constexpr double kRangeClamp = 10.0;   // cell-space background range, m
  static constexpr double kTaperLength = 0.3;   // reducer taper, m
  static constexpr double kPortDepth = 0.2;     // blind port stub depth, m
  static constexpr double kObstacleHalfAngleDeg = 18.0;
  static constexpr double kSweptAxial = 0.3;    // capsule endpoint offsets
  static constexpr double kSweptRadial = 0.4;   // (|AB| = 0.5 m sweep)

  explicit World(const Scenario& scenario);

  const Scenario& scenario() const { return scenario_; }

  // First surface along origin + t*dir (world frame, dir unit). Range clamps
  // at kRangeClamp with Surface::kNone when nothing is hit.
  RayHit cast_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const;

  // Local bore radius. Throws std::out_of_range outside [0, pipe_length] or
  // beyond an OpenEnd fitting.
  double radius_at(double x) const;

  // True when the given point lies inside solid matter (wall material,
  // fitting bodies). Used by the brute-force test oracle; kept independent of
  // the analytic intersection path.
  bool solid_at(const Eigen::Vector3d& p) const;

  // Wall material thickness used for solidity queries.
  static constexpr double kWallThickness = 0.04;
  static constexpr double kValveThickness = 0.02;

  // Obstacle protrusion height above the local wall under a track contact at
  // (x, clock angle rad from top), 0 where none. Drives grounding and pitch.
  double protrusion_under(double x, double clock_rad) const;

  // End of the wall: min(pipe_length, first OpenEnd position).
  double open_end_x() const { return open_x_; }

 private:
  struct RadiusSegment {
    double x0, x1, r0, r1;
    double radius_at(double x) const {
      return x1 > x0 ? r0 + (r1 - r0) * (x - x0) / (x1 - x0) : r0;
    }
  };
  struct Aperture {  // hole or port opening, on-wall footprint
    double x0, x1;
    double ang_c, ang_half;     // rad from top
    bool circular;              // port: circle in wall-surface coordinates
    double radius;              // port aperture radius
    double wall_r;              // local bore radius at the aperture
    int fitting;
  };
  struct Disc {  // closed valve
    double x, radius;
    int fitting;
  };
  struct Prism {  // obstacle
    double x0, x1, ang_c, ang_half, r_outer, r_inner;
    int fitting;
  };
  struct Capsule {  // swept tee branch stub
    Eigen::Vector3d a, b;
    double radius;
    int fitting;
  };
  struct Stub {  // port bore, radial
    Eigen::Vector3d base;  // wall entry point on the axis of the stub
    Eigen::Vector3d dir;   // unit radial direction
    double radius, depth;
    int fitting;
  };

  bool in_aperture(double x, double ang, const Aperture& ap) const;
  const Aperture* find_aperture(double x, double ang) const;

  Scenario scenario_;
  double radius_;
  double open_x_;
  std::vector<RadiusSegment> segments_;
  std::vector<Aperture> apertures_;
  std::vector<Disc> discs_;
  std::vector<Prism> prisms_;
  std::vector<Capsule> capsules_;
  std::vector<Stub> stubs_;
};

inline double deg2rad(double d) { return d * (3.14159265358979323846 / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / 3.14159265358979323846); }

}  // namespace pipecrawl

#endif  // PIPECRAWL_WORLD_HPP_
