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

#ifndef PIPECRAWL_MISSION_HPP_
#define PIPECRAWL_MISSION_HPP_

#include <string>
#include <vector>

#include "pipecrawl/executive.hpp"
#include "pipecrawl/localization.hpp"
#include "pipecrawl/radiometry.hpp"
#include "pipecrawl/world.hpp"

namespace pipecrawl {

struct MissionParams {
  double battery_capacity_wh = 50.0;
  double drive_power_w = 30.0;
  double idle_power_w = 10.0;
  double base_temp_c = 40.0;
  double qc_duration_s = 120.0;  // check source then background, 60 s each
  double pitch_flag_deg = 5.0;   // assay geometry degraded above this
  double offtrack_flag_m = 0.05;
  bool keep_tick_log = true;
};

struct TickLog {
  double time = 0.0;
  MissionState state = MissionState::kIdle;
  double truth_x = 0.0;   // detector, world frame
  double loc_x = 0.0;
  double loc_sigma = 0.0;
  double speed_cmd = 0.0;
  double yaw = 0.0;
  double pitch = 0.0;
  double temp_c = 0.0;
  double battery_wh = 0.0;
};

struct MissionResult {
  Scenario scenario;
  int exit_code = 0;  // 0 completed, 2 faulted
  MissionState final_state = MissionState::kIdle;
  AbortReason abort_reason = AbortReason::kNone;
  std::string deploy_error;

  QcCheck qc_pre;
  QcCheck qc_post;
  ContaminationCheck contamination;
  bool qc_pre_pass = false;
  bool qc_post_pass = false;
  double pre_background_roi = 0.0;
  double post_background_roi = 0.0;

  bool entrance_found = false;
  double entrance_time = 0.0;
  double entrance_truth_x = 0.0;  // truth profiler coordinate at the stamp

  EndEstimate reported_end;

  double dock_range_error = 0.0;  // filtered rangefinder vs reference
  double dock_truth_error = 0.0;  // final body x vs deploy body x

  double max_drift = 0.0;         // node estimate vs truth, live
  double turnaround_drift = 0.0;
  double turnaround_truth_x = 0.0;  // body x when the reversal triggered
  double reacquire_drift = 0.0;   // first node after fixes resume, batch
  bool had_reacquire = false;
  double gate_accept_rate = 0.0;
  double encoder_scale_bias = 0.0;
  int node_count = 0;

  std::vector<GammaSample> gamma_samples;  // localized, batch solution
  std::vector<FootSegment> feet_forward;
  std::vector<FootSegment> feet_reverse;

  std::vector<MissionEvent> events;
  std::vector<TickLog> tick_log;  // 1 Hz
  double sim_time = 0.0;
  long ticks = 0;
  double max_abs_pitch = 0.0;
};

// Runs one full mission against a synthetic world, deterministically for a
// given scenario (seed included). See run_mission for the tick order.
MissionResult run_mission(const Scenario& scenario,
                          const MissionParams& params = MissionParams());

}  // namespace pipecrawl

#endif  // PIPECRAWL_MISSION_HPP_
