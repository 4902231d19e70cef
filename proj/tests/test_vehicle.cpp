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

#include "pipecrawl/vehicle.hpp"
#include "pipecrawl/world.hpp"

using namespace pipecrawl;

namespace {

Scenario plain_scenario() {
  Scenario s;
  s.name = "plain";
  s.diameter_class = DiameterClass::kD30;
  s.pipe_length = 10.0;
  s.commanded_distance = 8.0;
  s.seed = 11;
  return s;
}

}  // namespace

TEST_CASE("deployment accepts the envelope boundary and rejects beyond it") {
  const VehicleConfig cfg = VehicleConfig::for_class(DiameterClass::kD30);

  EntranceOffset ok;
  ok.dz = cfg.limit_dz;
  ok.dy = -cfg.limit_dy;
  ok.yaw_deg = cfg.limit_yaw_deg;
  ok.setback = cfg.limit_setback;
  ok.step = cfg.limit_step;
  ok.gap = cfg.limit_gap;
  DeployError err;
  const auto pose = deploy(ok, cfg, &err);
  REQUIRE(pose.has_value());
  CHECK(pose->x == doctest::Approx(cfg.deploy_body_x));
  // Half of each alignment offset persists after the tracks settle.
  CHECK(pose->y == doctest::Approx(-0.5 * cfg.limit_dy));
  CHECK(pose->z == doctest::Approx(0.5 * cfg.limit_dz));
  CHECK(pose->yaw == doctest::Approx(0.5 * deg2rad(cfg.limit_yaw_deg)));

  struct Case {
    const char* axis;
    EntranceOffset off;
  };
  Case cases[6];
  cases[0] = {"dz", {}};
  cases[0].off.dz = cfg.limit_dz * 1.01;
  cases[1] = {"dy", {}};
  cases[1].off.dy = -cfg.limit_dy * 1.01;
  cases[2] = {"yaw_deg", {}};
  cases[2].off.yaw_deg = cfg.limit_yaw_deg * 1.01;
  cases[3] = {"setback", {}};
  cases[3].off.setback = cfg.limit_setback * 1.01;
  cases[4] = {"step", {}};
  cases[4].off.step = cfg.limit_step * 1.01;
  cases[5] = {"gap", {}};
  cases[5].off.gap = cfg.limit_gap * 1.01;
  for (const Case& c : cases) {
    DeployError e2;
    CHECK_FALSE(deploy(c.off, cfg, &e2).has_value());
    CHECK(e2.axis == c.axis);
    CHECK(e2.message().find(c.axis) != std::string::npos);
  }
}

TEST_CASE("track contacts sit symmetrically either side of bottom dead center") {
  const Scenario s = plain_scenario();
  const World w(s);
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  double left = 0.0, right = 0.0;
  track_contact_clocks(w, 5.0, cfg, &left, &right);
  const double off = std::asin(0.5 * cfg.track_width / s.pipe_radius());
  CHECK(left == doctest::Approx(3.14159265358979323846 - off));
  CHECK(right == doctest::Approx(-(3.14159265358979323846 - off)));
}

TEST_CASE("noise-free step advances exactly speed*dt and stays level") {
  Scenario s = plain_scenario();
  s.noise.slip_sigma = 0.0;
  const World w(s);
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  RngStream rng(1, "dyn");

  RobotPose pose;
  pose.x = 2.0;
  DriveCommand cmd;
  cmd.speed = cfg.speed;
  for (int i = 0; i < 100; ++i) {
    const StepResult r = step_dynamics(&pose, cmd, w, cfg, s.noise, &rng);
    CHECK(r.distance == doctest::Approx(cfg.speed * cfg.tick_dt));
    CHECK_FALSE(r.grounded);
  }
  CHECK(pose.x == doctest::Approx(2.0 + 100 * cfg.speed * cfg.tick_dt));
  CHECK(pose.pitch == doctest::Approx(0.0));
  CHECK(pose.yaw == doctest::Approx(0.0));
}

TEST_CASE("yaw rate integrates and heading bends the path") {
  Scenario s = plain_scenario();
  s.noise.slip_sigma = 0.0;
  const World w(s);
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  RngStream rng(2, "dyn");

  RobotPose pose;
  pose.x = 2.0;
  DriveCommand cmd;
  cmd.speed = cfg.speed;
  cmd.yaw_rate = 0.01;
  double expect_y = 0.0, expect_yaw = 0.0;
  for (int i = 0; i < 50; ++i) {
    expect_yaw += cmd.yaw_rate * cfg.tick_dt;
    expect_y += cfg.speed * cfg.tick_dt * std::sin(expect_yaw);
    step_dynamics(&pose, cmd, w, cfg, s.noise, &rng);
  }
  CHECK(pose.yaw == doctest::Approx(expect_yaw));
  CHECK(pose.y == doctest::Approx(expect_y).epsilon(1e-9));
}

TEST_CASE("a traversable protrusion pitches the nose up under the front axle") {
  Scenario s = plain_scenario();
  s.noise.slip_sigma = 0.0;
  Fitting f;
  f.kind = Fitting::Kind::kObstacle;
  f.position = 5.0;
  f.height = 0.04;  // under max_step = 0.05
  f.length = 0.2;
  f.clock_angle_deg = 148.0;  // on the left track line
  s.fittings.push_back(f);
  const World w(s);
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  RngStream rng(3, "dyn");

  RobotPose pose;
  pose.x = 5.1 - 0.5 * cfg.wheelbase;  // front contact on the obstacle
  DriveCommand cmd;  // stationary: pitch still reflects the terrain
  step_dynamics(&pose, cmd, w, cfg, s.noise, &rng);
  CHECK(pose.pitch == doctest::Approx(std::atan2(0.04, cfg.wheelbase)));

  pose.x = 5.1 + 0.5 * cfg.wheelbase;  // rear contact on it instead
  step_dynamics(&pose, cmd, w, cfg, s.noise, &rng);
  CHECK(pose.pitch == doctest::Approx(std::atan2(-0.04, cfg.wheelbase)));
}

TEST_CASE("an impassable protrusion grounds the vehicle instead of moving it") {
  Scenario s = plain_scenario();
  s.noise.slip_sigma = 0.0;
  Fitting f;
  f.kind = Fitting::Kind::kObstacle;
  f.position = 5.0;
  f.height = 0.12;  // over max_step
  f.length = 0.3;
  f.clock_angle_deg = 148.0;
  s.fittings.push_back(f);
  const World w(s);
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  RngStream rng(4, "dyn");

  RobotPose pose;
  pose.x = 5.0 - 0.5 * cfg.wheelbase - 0.0005;  // leading contact about to enter
  DriveCommand cmd;
  cmd.speed = cfg.speed;
  const StepResult r = step_dynamics(&pose, cmd, w, cfg, s.noise, &rng);
  CHECK(r.grounded);
  CHECK(r.distance == 0.0);
  CHECK(pose.x == doctest::Approx(5.0 - 0.5 * cfg.wheelbase - 0.0005));

  // Reversing away from it is allowed.
  cmd.speed = -cfg.speed;
  const StepResult back = step_dynamics(&pose, cmd, w, cfg, s.noise, &rng);
  CHECK_FALSE(back.grounded);
  CHECK(back.distance < 0.0);
}

TEST_CASE("residual vertical offset decays as the robot settles in") {
  Scenario s = plain_scenario();
  s.noise.slip_sigma = 0.0;
  const World w(s);
  const VehicleConfig cfg = VehicleConfig::for_class(s.diameter_class);
  RngStream rng(5, "dyn");

  RobotPose pose;
  pose.x = 1.0;
  pose.z = 0.01;
  DriveCommand cmd;
  cmd.speed = cfg.speed;
  for (int i = 0; i < 500; ++i) step_dynamics(&pose, cmd, w, cfg, s.noise, &rng);
  const double travelled = 500 * cfg.speed * cfg.tick_dt;
  CHECK(pose.z == doctest::Approx(0.01 * std::exp(-travelled / 2.0)).epsilon(1e-9));
}

TEST_CASE("steering command is proportional with saturation") {
  const VehicleConfig cfg = VehicleConfig::for_class(DiameterClass::kD30);
  CHECK(steer_controller(0.0, 0.0, cfg) == 0.0);
  CHECK(steer_controller(0.02, 0.0, cfg) ==
        doctest::Approx(-cfg.steer_k_yaw * 0.02));
  CHECK(steer_controller(0.0, 0.05, cfg) ==
        doctest::Approx(-cfg.steer_k_y * 0.05));
  CHECK(steer_controller(-1.0, -1.0, cfg) == doctest::Approx(cfg.steer_max_rate));
  CHECK(steer_controller(1.0, 1.0, cfg) == doctest::Approx(-cfg.steer_max_rate));
}
