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
#include <numeric>

#include "oracles.hpp"
#include "pipecrawl/sensors.hpp"
#include "pipecrawl/world.hpp"

using namespace pipecrawl;

namespace {

Scenario bore_scenario() {
  Scenario s;
  s.name = "bore";
  s.diameter_class = DiameterClass::kD30;
  s.pipe_length = 20.0;
  s.commanded_distance = 18.0;
  s.seed = 17;
  return s;
}

}  // namespace

TEST_CASE("mapper grid rays are unit vectors inside the field of view") {
  const auto& dirs = mapper_directions();
  REQUIRE(dirs.size() == static_cast<std::size_t>(kMapperCols * kMapperRows));
  const double max_az = deg2rad(0.5 * kMapperFovHDeg);
  const double max_el = deg2rad(0.5 * kMapperFovVDeg);
  for (const auto& d : dirs) {
    CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.x() > 0.0);
    CHECK(std::abs(std::atan2(d.y(), d.x())) < max_az);
    CHECK(std::abs(std::asin(d.z())) < max_el);
  }
}

TEST_CASE("collimator cutoffs match a dense ray-blocking model") {
  AnnulusResponse::Geometry g;  // defaults
  const AnnulusResponse resp(g);
  double plateau = 0.0, support = 0.0;
  oracle::annulus_cutoffs(g, &plateau, &support);
  CHECK(resp.plateau_end() == doctest::Approx(plateau).epsilon(1e-3));
  CHECK(resp.support_end() == doctest::Approx(support).epsilon(1e-3));

  // A wider disc gap widens both cutoffs; the oracle should track it.
  g.disc_gap = 0.16;
  const AnnulusResponse wide(g);
  oracle::annulus_cutoffs(g, &plateau, &support);
  CHECK(wide.plateau_end() == doctest::Approx(plateau).epsilon(1e-3));
  CHECK(wide.support_end() == doctest::Approx(support).epsilon(1e-3));
  CHECK(wide.plateau_end() > resp.plateau_end());

  AnnulusResponse::Geometry bad;
  bad.disc_radius = bad.crystal_radius;  // shield touching the crystal
  CHECK_THROWS_AS(AnnulusResponse{bad}, std::invalid_argument);
}

TEST_CASE("response curve integrates to one and matches its cumulative") {
  const AnnulusResponse resp{AnnulusResponse::Geometry{}};
  const double u0 = resp.support_end();

  const int n = 200000;
  double integral = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = -u0 + 2.0 * u0 * i / n;
    const double b = -u0 + 2.0 * u0 * (i + 1) / n;
    integral += 0.5 * (resp.eval(a) + resp.eval(b)) * (b - a);
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-8));

  for (const double u : {-2.0, -0.3, -0.12, 0.0, 0.08, 0.2, 0.33, 2.0}) {
    double part = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = -u0 + (u + u0) * i / n;
      const double b = -u0 + (u + u0) * (i + 1) / n;
      if (b <= -u0) continue;
      part += 0.5 * (resp.eval(a) + resp.eval(b)) * (b - a);
    }
    if (u <= -u0) part = 0.0;
    CHECK(resp.cumulative(u) == doctest::Approx(part).epsilon(1e-6));
  }
  CHECK(resp.cumulative(-u0) == 0.0);
  CHECK(resp.cumulative(u0) == 1.0);
  CHECK(resp.cumulative(0.0) == doctest::Approx(0.5));
}

TEST_CASE("convolution is exact against numeric quadrature") {
  const AnnulusResponse resp{AnnulusResponse::Geometry{}};

  DepositProfile flat;
  flat.breakpoints = {{0.0, 500.0}, {20.0, 500.0}};
  CHECK(resp.convolve(flat, 10.0) == doctest::Approx(500.0).epsilon(1e-12));

  DepositProfile ramp;
  ramp.breakpoints = {{0.0, 0.0}, {2.0, 100.0}, {4.0, 0.0}};
  for (const double center : {1.3, 2.0, 2.7, 3.9}) {
    const double u0 = resp.support_end();
    const int n = 400000;
    double numeric = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = center - u0 + 2.0 * u0 * i / n;
      const double b = center - u0 + 2.0 * u0 * (i + 1) / n;
      numeric += 0.5 *
                 (ramp.line_activity(a) * resp.eval(a - center) +
                  ramp.line_activity(b) * resp.eval(b - center)) *
                 (b - a);
    }
    CHECK(resp.convolve(ramp, center) == doctest::Approx(numeric).epsilon(1e-6));
  }
}

TEST_CASE("gamma acquisition count rate follows the deposit model") {
  const Scenario s = bore_scenario();
  DepositProfile dep;
  dep.breakpoints = {{0.0, 500.0}, {20.0, 500.0}};
  dep.background_rate = 10.0;
  const AnnulusResponse resp{AnnulusResponse::Geometry{}};
  GammaContext ctx = make_gamma_context(s.noise);
  RngStream rng(99, "gamma-test");

  const int reps = 400;
  double total = 0.0;
  for (int i = 0; i < reps; ++i) {
    const Spectrum sp = sample_gamma(10.0, 1.0, dep, resp, ctx, rng);
    total += roi_counts(sp, ctx.roi);
  }
  // line rate = efficiency * activity = 25 cps, of which the 3 sigma ROI
  // keeps 99.7%; background adds 10 cps inside the window.
  const double expected = 0.05 * 500.0 * 0.9973 + dep.background_rate;
  const double mean = total / reps;
  CHECK(mean == doctest::Approx(expected).epsilon(0.05));

  GammaContext dead = ctx;
  dead.dead = true;
  const Spectrum sp = sample_gamma(10.0, 1.0, dep, resp, dead, rng);
  CHECK(std::accumulate(sp.counts.begin(), sp.counts.end(), 0u) == 0u);

  GammaContext hot = ctx;
  hot.extra_roi_cps = 40.0;
  double hot_total = 0.0;
  for (int i = 0; i < reps; ++i) {
    const Spectrum h = sample_gamma(10.0, 1.0, dep, resp, hot, rng);
    hot_total += roi_counts(h, ctx.roi);
  }
  CHECK(hot_total / reps == doctest::Approx(expected + 40.0).epsilon(0.05));
}

TEST_CASE("gain shift moves the photopeak off its energy") {
  const Scenario s = bore_scenario();
  RngStream rng(5, "check");
  const Spectrum nominal = sample_check_source(60.0, s.noise, 1.0, false, rng);
  const Spectrum shifted = sample_check_source(60.0, s.noise, 1.1, false, rng);
  auto argmax_kev = [](const Spectrum& sp) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(sp.counts.size()); ++i)
      if (sp.counts[i] > sp.counts[best]) best = i;
    return sp.channel_center_kev(best);
  };
  CHECK(argmax_kev(nominal) == doctest::Approx(59.54).epsilon(0.05));
  CHECK(argmax_kev(shifted) == doctest::Approx(59.54 * 1.1).epsilon(0.05));

  const Spectrum dead = sample_check_source(60.0, s.noise, 1.0, true, rng);
  CHECK(std::accumulate(dead.counts.begin(), dead.counts.end(), 0u) == 0u);
}

TEST_CASE("rangefinder locks onto the rig target inside its reliable range") {
  Scenario s = bore_scenario();
  s.entrance.setback = 0.03;
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  RngStream rng(7, "rf");

  RobotPose pose;
  pose.x = 5.0;
  // Sensor sits 0.40 m behind the body origin; the reflector is 0.30 m
  // behind the rig base, itself set back from the entrance plane.
  const double true_range = (pose.x - 0.40) + (s.entrance.setback + 0.3);
  double sum = 0.0;
  const int reps = 500;
  for (int i = 0; i < reps; ++i) {
    const RangefinderSample r = sample_rangefinder(pose, cfg.rangefinder_offset,
                                                   s, s.noise, rng);
    REQUIRE(r.fix);
    sum += r.range;
  }
  CHECK(sum / reps == doctest::Approx(true_range).epsilon(0.005));
}

TEST_CASE("rangefinder drops out hard beyond its cutoff") {
  Scenario s = bore_scenario();
  s.noise.rangefinder_dropout_beyond = 3.0;
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  RngStream rng(8, "rf");
  RobotPose pose;
  pose.x = 5.0;  // true range ~4.9, beyond the 3 m cutoff
  for (int i = 0; i < 100; ++i) {
    const RangefinderSample r = sample_rangefinder(pose, cfg.rangefinder_offset,
                                                   s, s.noise, rng);
    CHECK_FALSE(r.fix);
    CHECK(r.range < 4.0);  // wild short return, never the true range
  }
}

TEST_CASE("ray against a cylinder wall gives closed-form distances") {
  const double r = 0.381;
  CHECK(ray_cylinder_range({0, 0, 0}, {0, 0, 1}, r) == doctest::Approx(r));
  CHECK(ray_cylinder_range({0, 0.1, 0}, {0, 0, 1}, r) ==
        doctest::Approx(std::sqrt(r * r - 0.01)));
  CHECK(ray_cylinder_range({0, 0, 0}, {1, 0, 0}, r) == -1.0);  // parallel to axis
  CHECK(ray_cylinder_range({0, 0.5, 0}, {0, 1, 0}, r) == -1.0);  // outside, away
  // 45 degree ray travels sqrt(2) times the radial distance.
  CHECK(ray_cylinder_range({0, 0, 0}, {std::sqrt(0.5), 0, std::sqrt(0.5)}, r) ==
        doctest::Approx(r * std::sqrt(2.0)));
}

TEST_CASE("profiler ring reads the bore radius with rare dropouts") {
  const Scenario s = bore_scenario();
  const World w(s);
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  RngStream rng(9, "prof");
  RobotPose pose;
  pose.x = 10.0;
  const RingRanges ring = sample_profiler(pose, cfg.profiler_offset, w, s.noise, rng);
  REQUIRE(ring.ranges.size() == static_cast<std::size_t>(kProfilerRays));
  int dropouts = 0;
  int good = 0;
  for (const double rr : ring.ranges) {
    if (rr < 0.0) {
      ++dropouts;
      continue;
    }
    if (std::abs(rr - s.pipe_radius()) < 0.025) ++good;
  }
  CHECK(dropouts < 15);
  CHECK(good + dropouts == kProfilerRays);
}

TEST_CASE("point lasers look down-bore and strike the far wall") {
  const Scenario s = bore_scenario();
  const World w(s);
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  RngStream rng(10, "laser");
  RobotPose pose;
  pose.x = 10.0;
  // Both beams leave 26 deg down: expected range to the wall from the axis.
  const Eigen::Vector3d dir = point_laser_direction(0);
  const double expect = ray_cylinder_range(Eigen::Vector3d::Zero(), dir,
                                           s.pipe_radius());
  double sum_l = 0.0, sum_r = 0.0;
  const int reps = 200;
  for (int i = 0; i < reps; ++i) {
    const LaserPair lp = point_laser_ranges(pose, cfg.laser_offset, w, s.noise, rng);
    sum_l += lp.left;
    sum_r += lp.right;
  }
  CHECK(sum_l / reps == doctest::Approx(expect).epsilon(0.01));
  CHECK(sum_r / reps == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("encoder quantization conserves distance through the tick carry") {
  Scenario s = bore_scenario();
  s.noise.encoder_white_sigma = 0.0;
  EncoderState state;
  state.scale_bias = 0.003;
  RngStream rng(11, "enc");
  const double d_tick = 0.0508 * 0.02;
  std::int64_t total_l = 0, total_r = 0;
  const int n = 5000;
  for (int i = 0; i < n; ++i) {
    const EncoderSample e = sample_encoders(d_tick, state, s.noise, 1.0, rng);
    total_l += e.left_ticks;
    total_r += e.right_ticks;
  }
  const double expect = n * d_tick * 1.003 * s.noise.encoder_ticks_per_m;
  CHECK(std::abs(total_l - expect) <= 1.0);
  CHECK(std::abs(total_r - expect) <= 1.0);

  // A faulted channel scales the reported ticks.
  EncoderState f_state;
  RngStream rng2(11, "enc");
  std::int64_t faulted = 0;
  for (int i = 0; i < n; ++i)
    faulted += sample_encoders(d_tick, f_state, s.noise, 1.5, rng2).left_ticks;
  CHECK(std::abs(faulted - n * d_tick * 1.5 * s.noise.encoder_ticks_per_m) <= 1.0);
}

TEST_CASE("per-run sensor rig is bit deterministic for a fixed scenario") {
  const Scenario s = bore_scenario();
  const World w(s);
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  SensorRig a(s, cfg);
  SensorRig b(s, cfg);
  CHECK(a.imu_bias().pitch == b.imu_bias().pitch);
  CHECK(a.encoder_scale_bias() == b.encoder_scale_bias());

  RobotPose pose;
  pose.x = 5.0;
  DepositProfile dep;
  dep.breakpoints = {{0.0, 200.0}, {20.0, 200.0}};

  for (int i = 0; i < 5; ++i) {
    const ImuSample ia = a.imu(pose), ib = b.imu(pose);
    CHECK(ia.pitch == ib.pitch);
    CHECK(ia.yaw == ib.yaw);
    const RangefinderSample ra = a.rangefinder(pose), rb = b.rangefinder(pose);
    CHECK(ra.range == rb.range);
    CHECK(ra.fix == rb.fix);
    const EncoderSample ea = a.encoders(0.001, 1.0), eb = b.encoders(0.001, 1.0);
    CHECK(ea.left_ticks == eb.left_ticks);
    const LaserPair la = a.lasers(pose, w), lb = b.lasers(pose, w);
    CHECK(la.left == lb.left);
    const RingRanges pa = a.profiler(pose, w), pb = b.profiler(pose, w);
    CHECK(pa.ranges == pb.ranges);
    const Spectrum ga = a.gamma(5.0, 1.0, dep, 1.0, false);
    const Spectrum gb = b.gamma(5.0, 1.0, dep, 1.0, false);
    CHECK(ga.counts == gb.counts);
    const PointCloud ca = a.depth_map(pose, w), cb = b.depth_map(pose, w);
    REQUIRE(ca.points.size() == cb.points.size());
    CHECK((ca.points[100] - cb.points[100]).norm() == 0.0f);
    CHECK(ca.confidence == cb.confidence);
  }

  // Streams are independent: skipping draws on one stream must not change
  // another. Advance only the imu stream on rig a, then compare encoders.
  a.imu(pose);
  const EncoderSample ea = a.encoders(0.001, 1.0);
  b.imu(pose);
  const EncoderSample eb = b.encoders(0.001, 1.0);
  CHECK(ea.left_ticks == eb.left_ticks);
}

TEST_CASE("imu reports attitude with a per-run bias") {
  const Scenario s = bore_scenario();
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  SensorRig rig(s, cfg);
  RobotPose pose;
  pose.pitch = 0.05;
  const int reps = 4000;
  double sum = 0.0;
  for (int i = 0; i < reps; ++i) sum += rig.imu(pose).pitch;
  const double sigma = deg2rad(s.noise.imu_angle_sigma_deg);
  const double se = sigma / std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(sum / reps - (0.05 + rig.imu_bias().pitch)) < 5.0 * se);
}
