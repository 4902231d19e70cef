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

#ifndef PIPECRAWL_EXECUTIVE_HPP_
#define PIPECRAWL_EXECUTIVE_HPP_

#include <deque>
#include <string>
#include <vector>

#include "pipecrawl/localization.hpp"
#include "pipecrawl/safeguarding.hpp"
#include "pipecrawl/vehicle.hpp"

namespace pipecrawl {

enum class MissionState {
  kIdle,
  kQcPre,
  kForward,
  kApproach,
  kReverse,
  kDock,
  kQcPost,
  kFault,
};
const char* to_string(MissionState s);

enum class AbortReason {
  kNone,
  kObstacle,
  kLaserShort,
  kLaserLong,
  kPitch,
  kOverTemp,
  kHeartbeat,
  kDiskLow,
  kBattery,
  kOdometryDisagree,
  kDetectorSilent,
};
const char* to_string(AbortReason r);

struct HealthTelemetry {
  double temp_c = 25.0;
  double heartbeat_age = 0.0;       // seconds since the payload node beat
  double battery_wh = 100.0;
  double battery_reserve_wh = 0.0;  // required to get home, with margin
  double disk_free_frac = 1.0;
};

struct ExecParams {
  double commanded_distance = 33.0;
  double cruise_speed = 0.0508;
  double standoff = 0.30;           // stop this far short of a detected end
  double approach_speed_frac = 0.5;
  double dock_speed_frac = 0.25;
  double dock_window = 0.5;         // switch to Dock inside this of reference
  double dock_lag = 0.002;          // stop threshold above the reference
  int confirm_frames = 3;           // consecutive agreeing end detections
  double confirm_agree = 0.3;       // m between consecutive estimates
  double temp_warn_c = 70.0;
  double temp_fault_c = 80.0;
  double heartbeat_max = 1.0;
  double disk_min_frac = 0.05;
  double cross_check_rel = 0.5;     // odometry vs fixes disagreement
  int cross_check_pairs = 2;        // consecutive disagreeing node pairs
  double laser_mask_range = 2.0;    // laser aborts off this close to an end
};

struct ExecInputs {
  double time = 0.0;
  const SafeguardFrame* safeguard = nullptr;
  double loc_x = 0.0;
  double loc_sigma = 0.0;
  bool entrance_found = false;
  const std::vector<LocNode>* nodes = nullptr;
  RangefinderSample rf;
  HealthTelemetry health;
  bool detector_silent = false;  // no gross counts for several seconds
};

struct EndEstimate {
  EndKind kind = EndKind::kNone;
  double x = 0.0;     // world pipe coordinate of the feature
  double time = 0.0;  // when first confirmed
  bool valid = false;
};

struct MissionEvent {
  double time = 0.0;
  MissionState state = MissionState::kIdle;
  std::string code;
  double x = 0.0;
};

// Mission state machine. Drives the vehicle through pre-QC, the forward
// inspection leg, the turnaround (commanded distance, a detected end, or a
// safeguarding abort), the return leg, docking on the rangefinder reference
// captured during pre-QC, and post-QC. Faults before pipe entry are
// terminal; anything after entry turns the robot around instead.
class Executive {
 public:
  Executive(const ExecParams& params, const VehicleConfig& vehicle);

  DriveCommand tick(const ExecInputs& in);

  MissionState state() const { return state_; }
  bool finished() const { return finished_; }
  bool aborted() const { return abort_reason_ != AbortReason::kNone; }
  AbortReason abort_reason() const { return abort_reason_; }
  bool temp_warning_seen() const { return temp_warn_; }

  // First confirmed end detection, frozen for reporting; the controller
  // keeps refining its own copy for the standoff.
  const EndEstimate& reported_end() const { return reported_end_; }

  // Mission layer reports QC completion while the FSM idles in a QC state.
  void complete_qc(bool pass, double time);

  double dock_reference() const { return dock_ref_; }
  double dock_range_error() const { return dock_error_; }

  const std::vector<MissionEvent>& events() const { return events_; }

 private:
  void change_state(MissionState next, double time, double x,
                    const std::string& code);
  void abort(AbortReason reason, const ExecInputs& in);
  bool lasers_masked(const ExecInputs& in) const;
  bool safety_aborts(const ExecInputs& in);
  void update_end_confirmation(const ExecInputs& in);
  void update_cross_check(const ExecInputs& in);
  DriveCommand steer(const ExecInputs& in, double speed) const;

  ExecParams params_;
  VehicleConfig vehicle_;
  MissionState state_ = MissionState::kIdle;
  bool finished_ = false;
  AbortReason abort_reason_ = AbortReason::kNone;
  bool temp_warn_ = false;
  bool qc_done_ = false;
  bool qc_pass_ = false;

  int end_run_ = 0;
  double end_last_x_ = 0.0;
  EndKind end_last_kind_ = EndKind::kNone;
  EndEstimate reported_end_;
  double control_end_x_ = 0.0;

  double dock_ref_sum_ = 0.0;
  long dock_ref_count_ = 0;
  double dock_ref_ = 0.0;
  std::deque<double> dock_ranges_;
  double dock_error_ = 0.0;

  std::size_t cross_nodes_seen_ = 1;
  int cross_streak_ = 0;
  bool prev_pair_valid_ = false;
  double prev_abs_ = 0.0;
  double prev_odo_ = 0.0;

  std::vector<MissionEvent> events_;
};

}  // namespace pipecrawl

#endif  // PIPECRAWL_EXECUTIVE_HPP_
