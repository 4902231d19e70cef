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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "pipecrawl/safeguarding.hpp"
#include "pipecrawl/sensors.hpp"
#include "pipecrawl/world.hpp"

using namespace pipecrawl;

namespace {

constexpr double kGolden = 2.39996322972865332;
constexpr double kR30 = 0.381;

// Dense cylinder surface samples in the sensor frame.
std::vector<Eigen::Vector3d> cylinder_cloud(double cy, double cz, double ay,
                                            double az, double radius, int n) {
  const Eigen::Vector3d c(0.0, cy, cz);
  const Eigen::Vector3d d = Eigen::Vector3d(1.0, ay, az).normalized();
  const Eigen::Vector3d v1 = (Eigen::Vector3d::UnitY() - d * d.y()).normalized();
  const Eigen::Vector3d v2 = d.cross(v1);
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double t = 0.3 + 2.2 * (i + 0.5) / n;
    const double th = i * kGolden;
    pts.push_back(c + t * d + radius * (std::sin(th) * v1 + std::cos(th) * v2));
  }
  return pts;
}

CylinderFit identity_fit(double radius) {
  CylinderFit f;
  f.status = FitStatus::kOk;
  f.radius = radius;
  return f;
}

// Wall ring samples over [x0, x1] at the given radius, pipe frame.
void add_ring(std::vector<Eigen::Vector3d>& pts, double x0, double x1,
              double radius, int per_slab = 48) {
  const int n = std::max(1, static_cast<int>((x1 - x0) / 0.05)) * per_slab;
  for (int i = 0; i < n; ++i) {
    const double x = x0 + (x1 - x0) * (i + 0.5) / n;
    const double th = i * kGolden;
    pts.emplace_back(x, radius * std::sin(th), radius * std::cos(th));
  }
}

// Linearly tapering wall between two radii.
void add_taper(std::vector<Eigen::Vector3d>& pts, double x0, double x1,
               double r0, double r1, int n = 600) {
  for (int i = 0; i < n; ++i) {
    const double f = (i + 0.5) / n;
    const double x = x0 + (x1 - x0) * f;
    const double r = r0 + (r1 - r0) * f;
    const double th = i * kGolden;
    pts.emplace_back(x, r * std::sin(th), r * std::cos(th));
  }
}

// Flat face disc at axial x, radii spread over the full cross-section.
void add_disc(std::vector<Eigen::Vector3d>& pts, double x, double r_max,
              int n = 400) {
  for (int i = 0; i < n; ++i) {
    const double rho = r_max * std::sqrt((i + 0.5) / n);
    const double th = i * kGolden;
    pts.emplace_back(x, rho * std::sin(th), rho * std::cos(th));
  }
}

EndDetection classify(const std::vector<Eigen::Vector3d>& pts) {
  const CylinderFit fit = identity_fit(kR30);
  const Segmentation seg = segment(pts, fit);
  const SweepParams params;
  const auto slabs = sweep_circles(seg, fit, params);
  return classify_end(slabs, seg, fit, params, kR30);
}

}  // namespace

TEST_CASE("cylinder fit recovers exact parameters from a clean cloud") {
  const auto pts = cylinder_cloud(0.01, -0.005, 0.02, -0.01, kR30, 1500);
  RngStream rng(42, "fit");
  const CylinderFit fit = fit_cylinder(pts, FitParams{}, rng);
  REQUIRE(fit.ok());
  CHECK(fit.radius == doctest::Approx(kR30).epsilon(1e-6));
  CHECK(fit.center_y == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(fit.center_z == doctest::Approx(-0.005).epsilon(1e-4));
  const Eigen::Vector3d truth =Eigen::Vector3d(1.0, 0.02, -0.01).normalized();
  const double tilt_err = std::acos(std::clamp(fit.axis_dir().dot(truth), -1.0, 1.0));
  CHECK(rad2deg(tilt_err) < 0.01);
  CHECK(fit.inlier_fraction > 0.99);

  // Same stream seed, same data: bit-identical result.
  RngStream rng2(42, "fit");
  const CylinderFit again = fit_cylinder(pts, FitParams{}, rng2);
  CHECK(again.radius == fit.radius);
  CHECK(again.center_y == fit.center_y);
}

TEST_CASE("cylinder fit shrugs off interior outliers") {
  auto pts = cylinder_cloud(0.0, 0.0, 0.0, 0.0, kR30, 1200);
  for (int i = 0; i < 300; ++i) {  // 20% debris inside the bore
    const double rho = 0.9 * kR30 * std::sqrt((i + 0.5) / 300.0);
    const double th = i * kGolden;
    pts.emplace_back(0.3 + 2.2 * (i + 0.5) / 300.0, rho * std::sin(th),
                     rho * std::cos(th));
  }
  RngStream rng(43, "fit");
  const CylinderFit fit = fit_cylinder(pts, FitParams{}, rng);
  REQUIRE(fit.ok());
  CHECK(std::abs(fit.radius - kR30) < 1e-3);
  CHECK(std::abs(fit.center_y) < 1e-3);
  CHECK(std::abs(fit.center_z) < 1e-3);
}

TEST_CASE("cylinder fit refuses degenerate input") {
  RngStream rng(44, "fit");
  const std::vector<Eigen::Vector3d> few(20, Eigen::Vector3d(1.0, 0.0, kR30));
  CHECK(fit_cylinder(few, FitParams{}, rng).status ==
        FitStatus::kInsufficientPoints);

  // Uniform disc fill: any circle in the plausible radius window grazes only
  // a thin band of it, far under the consensus fraction.
  std::vector<Eigen::Vector3d> noise;
  for (int i = 0; i < 200; ++i) {
    const double rho = 0.6 * std::sqrt((i + 0.5) / 200.0);
    const double th = i * kGolden;
    noise.emplace_back(1.0 + 0.01 * i, rho * std::sin(th), rho * std::cos(th));
  }
  CHECK(fit_cylinder(noise, FitParams{}, rng).status == FitStatus::kNoConsensus);
}

TEST_CASE("pose estimate inverts the fitted axis parameters") {
  CylinderFit fit = identity_fit(kR30);
  fit.center_y = 0.012;
  fit.center_z = -0.02;
  fit.slope_y = 0.03;
  fit.slope_z = -0.015;
  const SensorPoseEstimate e = pose_from_cylinder(fit);
  CHECK(e.offset_y == doctest::Approx(-0.012));
  CHECK(e.offset_z == doctest::Approx(0.02));
  CHECK(e.yaw == doctest::Approx(-std::atan(0.03)));
  CHECK(e.pitch == doctest::Approx(std::atan(0.015)));
}

TEST_CASE("segmentation splits wall, interior, and exterior points") {
  const CylinderFit fit = identity_fit(kR30);
  std::vector<Eigen::Vector3d> pts = {
      {1.0, 0.0, -kR30},        // on the wall
      {1.0, 0.0, -kR30 + 0.015},  // inside tol
      {1.0, 0.0, -0.2},         // interior
      {1.0, 0.0, 0.5},          // beyond the wall
  };
  const Segmentation seg = segment(pts, fit);
  CHECK(seg.wall.size() == 2);
  CHECK(seg.interior.size() == 1);
  CHECK(seg.exterior.size() == 1);
}

TEST_CASE("track-corridor protrusion above the step limit blocks") {
  const CylinderFit fit = identity_fit(kR30);
  const VehicleConfig cfg = VehicleConfig::for_class(DiameterClass::kD30);
  const double clock_right = M_PI - std::asin(0.5 * cfg.track_width / kR30);
  const double rho = kR30 - 0.08;

  Segmentation seg;
  for (int i = 0; i < 12; ++i) {
    const double x = 1.0 + 0.005 * i;
    seg.interior.emplace_back(x, rho * std::sin(clock_right),
                              rho * std::cos(clock_right));
  }
  const ObstacleCheck c = check_obstacle(seg, fit, cfg);
  CHECK(c.blocked);
  CHECK(c.in_track_corridor);
  CHECK(c.distance == doctest::Approx(1.0).epsilon(0.03));
  CHECK(c.height == doctest::Approx(0.08).epsilon(0.01));
  CHECK(c.support == 12);
}

TEST_CASE("protrusions out of the travel path do not block") {
  const CylinderFit fit = identity_fit(kR30);
  const VehicleConfig cfg = VehicleConfig::for_class(DiameterClass::kD30);

  // Side-wall cluster: neither corridor nor body envelope.
  Segmentation side;
  const double rho = kR30 - 0.08;
  for (int i = 0; i < 12; ++i)
    side.interior.emplace_back(1.0 + 0.005 * i, rho, 0.0);
  CHECK_FALSE(check_obstacle(side, fit, cfg).blocked);

  // Bottom-center cluster under the belly: body envelope.
  Segmentation belly;
  for (int i = 0; i < 12; ++i)
    belly.interior.emplace_back(1.0 + 0.005 * i, 0.0, -rho);
  const ObstacleCheck b = check_obstacle(belly, fit, cfg);
  CHECK(b.blocked);
  CHECK(b.in_body_envelope);

  // Low bump below the step limit: traversable.
  Segmentation low;
  const double rho_low = kR30 - 0.04;
  const double clock_right = M_PI - std::asin(0.5 * cfg.track_width / kR30);
  for (int i = 0; i < 12; ++i)
    low.interior.emplace_back(1.0 + 0.005 * i, rho_low * std::sin(clock_right),
                              rho_low * std::cos(clock_right));
  CHECK_FALSE(check_obstacle(low, fit, cfg).blocked);

  // A full-bore face belongs to the end classifier, not the obstacle check.
  Segmentation face;
  for (int i = 0; i < 300; ++i) {
    const double r = 0.3 * std::sqrt((i + 0.5) / 300.0);
    const double th = i * kGolden;
    face.interior.emplace_back(1.2, r * std::sin(th), r * std::cos(th));
  }
  CHECK_FALSE(check_obstacle(face, fit, cfg).blocked);
}

TEST_CASE("plain bore sweep sees open rings and no end") {
  std::vector<Eigen::Vector3d> pts;
  add_ring(pts, 0.8, 2.2, kR30);
  const CylinderFit fit = identity_fit(kR30);
  const Segmentation seg = segment(pts, fit);
  const SweepParams params;
  const auto slabs = sweep_circles(seg, fit, params);
  REQUIRE(slabs.size() == 28);
  for (const CircleSlab& s : slabs) {
    CHECK(s.state == SlabState::kOpen);
    CHECK(s.radius == doctest::Approx(kR30).epsilon(0.02));
  }
  CHECK(classify_end(slabs, seg, fit, params, kR30).kind == EndKind::kNone);
}

TEST_CASE("a persisting face reads as a closed pipe at its median depth") {
  std::vector<Eigen::Vector3d> pts;
  add_ring(pts, 0.8, 1.5, kR30);
  add_disc(pts, 1.5, kR30 - 0.025);
  const EndDetection det = classify(pts);
  CHECK(det.kind == EndKind::kClosedPipe);
  CHECK(det.x == doctest::Approx(1.5).epsilon(0.03));
}

TEST_CASE("a vanishing wall reads as an open end at the last wall return") {
  std::vector<Eigen::Vector3d> pts;
  add_ring(pts, 0.8, 1.5, kR30);
  const EndDetection det = classify(pts);
  CHECK(det.kind == EndKind::kOpenEnd);
  CHECK(det.x == doctest::Approx(1.5).epsilon(0.03));
}

TEST_CASE("a narrowing bore reads as a reducer, not a closed face") {
  std::vector<Eigen::Vector3d> pts;
  add_ring(pts, 0.8, 1.6, kR30);
  add_taper(pts, 1.6, 1.9, kR30, 0.22);
  add_ring(pts, 1.9, 2.2, 0.22);
  const EndDetection det = classify(pts);
  CHECK(det.kind == EndKind::kReducer);
  // 90% of nominal is crossed 0.071 m into the taper.
  const double expect = 1.6 + (kR30 - 0.9 * kR30) / ((kR30 - 0.22) / 0.3);
  CHECK(det.x == doctest::Approx(expect).epsilon(0.08));
}

TEST_CASE("moving-average laser filter has unit gain and a warm-up ramp") {
  FirFilter fir(25);
  CHECK(fir.push(2.0) == doctest::Approx(2.0));
  CHECK(fir.push(4.0) == doctest::Approx(3.0));
  fir.reset();
  double last = 0.0;
  for (int i = 0; i < 25; ++i) last = fir.push(1.0);
  CHECK(last == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 25; ++i) last = fir.push(3.0);
  CHECK(last == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("independent laser check flags short and long returns") {
  const VehicleConfig cfg = VehicleConfig::for_class(DiameterClass::kD30);
  const ImuSample imu;  // level attitude
  const SensorPoseEstimate level;
  const double expect =
      ray_cylinder_range({0.0, 0.0, 0.0}, point_laser_direction(0), kR30);

  LaserCheck clean = secondary_check(expect, expect, imu, level, cfg, kR30);
  CHECK(clean.expected_left == doctest::Approx(expect).epsilon(1e-9));
  CHECK_FALSE(clean.any_short());
  CHECK_FALSE(clean.any_long());

  LaserCheck shorted = secondary_check(expect - 0.2, expect, imu, level, cfg, kR30);
  CHECK(shorted.short_left);
  CHECK_FALSE(shorted.short_right);
  CHECK(shorted.any_short());

  LaserCheck longed = secondary_check(expect, expect + 0.8, imu, level, cfg, kR30);
  CHECK(longed.long_right);
  CHECK_FALSE(longed.long_left);
  CHECK(longed.any_long());

  // Within the tolerance bands nothing trips.
  LaserCheck margin = secondary_check(expect - 0.1, expect + 0.4, imu, level,
                                      cfg, kR30);
  CHECK_FALSE(margin.any_short());
  CHECK_FALSE(margin.any_long());
}

TEST_CASE("pitch safeguard trips just past the configured limit") {
  ImuSample imu;
  imu.pitch = deg2rad(9.9);
  CHECK_FALSE(pitch_exceeded(imu, 10.0));
  imu.pitch = deg2rad(10.1);
  CHECK(pitch_exceeded(imu, 10.0));
  imu.pitch = deg2rad(-10.1);
  CHECK(pitch_exceeded(imu, 10.0));
}

TEST_CASE("pipeline debounces laser faults and carries stale fits") {
  Scenario s;
  s.name = "pipeline";
  s.diameter_class = DiameterClass::kD30;
  s.pipe_length = 20.0;
  s.commanded_distance = 18.0;
  s.seed = 23;
  const World w(s);
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  SensorRig rig(s, cfg);
  SafeguardPipeline pipeline(s.diameter_class, cfg, s.seed);

  RobotPose pose;
  pose.x = 10.0;
  const ImuSample imu;

  // Healthy lasers: no debounced faults, fresh fit.
  const double nominal =
      ray_cylinder_range({0.0, 0.0, 0.0}, point_laser_direction(0), kR30);
  SafeguardFrame frame;
  for (int i = 0; i < 10; ++i) {
    frame = pipeline.process(rig.depth_map(pose, w), {nominal, nominal}, imu);
    CHECK(frame.fit_fresh);
    CHECK_FALSE(frame.laser_short_debounced);
  }
  CHECK(frame.fit.radius == doctest::Approx(kR30).epsilon(0.02));
  CHECK(frame.end.kind == EndKind::kNone);
  CHECK_FALSE(frame.obstacle.blocked);

  // A short return must persist before the debounce trips: the moving
  // average crosses the short threshold on the third bad frame, and the
  // debounce needs five consecutive short frames beyond that.
  for (int i = 0; i < 6; ++i) {
    frame = pipeline.process(rig.depth_map(pose, w), {0.1, nominal}, imu);
    CHECK_FALSE(frame.laser_short_debounced);
  }
  frame = pipeline.process(rig.depth_map(pose, w), {0.1, nominal}, imu);
  CHECK(frame.laser_short_debounced);

  // One healthy frame clears the run.
  // The FIR mean is still dragged low by the short samples, so feed enough
  // healthy ticks for the window to recover before checking.
  for (int i = 0; i < 30; ++i)
    frame = pipeline.process(rig.depth_map(pose, w), {nominal, nominal}, imu);
  CHECK_FALSE(frame.laser_short_debounced);

  // Empty clouds: the last fit carries over, stale only after the budget.
  PointCloud empty;
  for (int i = 0; i < 100; ++i) {
    frame = pipeline.process(empty, {nominal, nominal}, imu);
    CHECK_FALSE(frame.fit_fresh);
    CHECK(frame.fit.ok());
    CHECK_FALSE(frame.fit_stale);
  }
  frame = pipeline.process(empty, {nominal, nominal}, imu);
  CHECK(frame.fit_stale);
}
