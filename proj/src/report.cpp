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

#include "pipecrawl/report.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "pipecrawl/json_util.hpp"
#include "pipecrawl/rng.hpp"
#include "pipecrawl/safeguarding.hpp"

namespace pipecrawl {

namespace {

using nlohmann::json;

double r9(double v) { return round_sig9(v); }

json qc_json(const QcCheck& qc) {
  json j;
  j["pass"] = qc.pass;
  j["centroid_kev"] = r9(qc.centroid_kev);
  j["fwhm_kev"] = r9(qc.fwhm_kev);
  j["counts"] = r9(qc.counts);
  j["expected_counts"] = r9(qc.expected_counts);
  j["detail"] = qc.detail;
  return j;
}

json feet_json(const std::vector<FootSegment>& feet) {
  json arr = json::array();
  for (const auto& f : feet) {
    json j;
    j["index"] = f.index;
    j["x_lo"] = r9(f.x_lo);
    j["x_hi"] = r9(f.x_hi);
    j["counts"] = r9(f.counts);
    j["variance"] = r9(f.variance);
    j["live_time_s"] = r9(f.live_time);
    j["rate_cps"] = r9(f.rate_cps);
    j["sigma_cps"] = r9(f.sigma_cps);
    j["geometry_flag"] = f.round_pipe_broken;
    j["pitch_flag"] = f.pitch_exceeded;
    j["offtrack_flag"] = f.outside_track;
    arr.push_back(std::move(j));
  }
  return arr;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("short write: " + path);
}

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", round_sig9(v));
  return buf;
}

}  // namespace

std::string render_report_json(const MissionResult& r,
                               const std::string& digest) {
  json j;
  j["format"] = "pipecrawl-report-v1";
  j["rng_version"] = kRngVersion;

  json sc;
  sc["name"] = r.scenario.name;
  sc["seed"] = r.scenario.seed;
  sc["digest"] = digest;
  sc["diameter_class"] = to_string(r.scenario.diameter_class);
  sc["pipe_length_m"] = r9(r.scenario.pipe_length);
  sc["commanded_distance_m"] = r9(r.scenario.commanded_distance);
  j["scenario"] = std::move(sc);

  json term;
  term["exit_code"] = r.exit_code;
  term["final_state"] = to_string(r.final_state);
  term["abort_reason"] = to_string(r.abort_reason);
  term["deploy_error"] = r.deploy_error;
  term["sim_time_s"] = r9(r.sim_time);
  term["ticks"] = r.ticks;
  j["termination"] = std::move(term);

  json qc;
  qc["pre"] = qc_json(r.qc_pre);
  qc["post"] = qc_json(r.qc_post);
  qc["pre_pass"] = r.qc_pre_pass;
  qc["post_pass"] = r.qc_post_pass;
  qc["pre_background_roi"] = r9(r.pre_background_roi);
  qc["post_background_roi"] = r9(r.post_background_roi);
  json cont;
  cont["pass"] = r.contamination.pass;
  cont["z"] = r9(r.contamination.z);
  qc["contamination"] = std::move(cont);
  j["qc"] = std::move(qc);

  json ent;
  ent["found"] = r.entrance_found;
  ent["stamp_s"] = r9(r.entrance_time);
  ent["truth_x_m"] = r9(r.entrance_truth_x);
  j["entrance"] = std::move(ent);

  json end;
  end["valid"] = r.reported_end.valid;
  end["kind"] = to_string(r.reported_end.kind);
  end["x_m"] = r9(r.reported_end.x);
  end["stamp_s"] = r9(r.reported_end.time);
  j["end"] = std::move(end);

  json dock;
  dock["range_error_m"] = r9(r.dock_range_error);
  dock["truth_error_m"] = r9(r.dock_truth_error);
  j["dock"] = std::move(dock);

  double max_sigma = 0.0;
  for (const auto& g : r.gamma_samples)
    max_sigma = std::max(max_sigma, g.sigma_x);
  json loc;
  loc["entrance_stamp_s"] = r9(r.entrance_time);
  loc["node_count"] = r.node_count;
  loc["max_drift_m"] = r9(r.max_drift);
  loc["turnaround_drift_m"] = r9(r.turnaround_drift);
  loc["reacquire_drift_m"] = r9(r.reacquire_drift);
  loc["had_reacquire"] = r.had_reacquire;
  loc["gate_accept_rate"] = r9(r.gate_accept_rate);
  loc["max_sigma_m"] = r9(max_sigma);
  loc["encoder_scale_bias"] = r9(r.encoder_scale_bias);
  j["localization"] = std::move(loc);

  json assay;
  assay["sample_count"] = static_cast<int>(r.gamma_samples.size());
  assay["feet_forward"] = feet_json(r.feet_forward);
  assay["feet_reverse"] = feet_json(r.feet_reverse);
  j["assay"] = std::move(assay);

  json events = json::array();
  for (const auto& e : r.events) {
    json ev;
    ev["time_s"] = r9(e.time);
    ev["state"] = to_string(e.state);
    ev["code"] = e.code;
    ev["x_m"] = r9(e.x);
    events.push_back(std::move(ev));
  }
  j["events"] = std::move(events);

  return j.dump(2) + "\n";
}

void write_report_json(const MissionResult& result, const std::string& digest,
                       const std::string& path) {
  write_text(path, render_report_json(result, digest));
}

void write_per_foot_csv(const MissionResult& result, const std::string& path) {
  std::string out =
      "pass,index,x_lo_m,x_hi_m,rate_cps,sigma_cps,live_time_s,counts,"
      "geometry_flag,pitch_flag,offtrack_flag\n";
  const auto emit = [&out](const char* pass, const FootSegment& f) {
    out += pass;
    out += ',' + std::to_string(f.index) + ',' + fmt9(f.x_lo) + ',' +
           fmt9(f.x_hi) + ',' + fmt9(f.rate_cps) + ',' + fmt9(f.sigma_cps) +
           ',' + fmt9(f.live_time) + ',' + fmt9(f.counts) + ',' +
           std::to_string(f.round_pipe_broken ? 1 : 0) + ',' +
           std::to_string(f.pitch_exceeded ? 1 : 0) + ',' +
           std::to_string(f.outside_track ? 1 : 0) + '\n';
  };
  for (const auto& f : result.feet_forward) emit("forward", f);
  for (const auto& f : result.feet_reverse) emit("reverse", f);
  write_text(path, out);
}

void write_run_log_csv(const MissionResult& result, const std::string& path) {
  std::string out =
      "time_s,state,truth_x_m,loc_x_m,loc_sigma_m,speed_cmd,yaw_rad,pitch_rad,"
      "temp_c,battery_wh\n";
  for (const auto& t : result.tick_log) {
    out += fmt9(t.time);
    out += ',';
    out += to_string(t.state);
    out += ',' + fmt9(t.truth_x) + ',' + fmt9(t.loc_x) + ',' +
           fmt9(t.loc_sigma) + ',' + fmt9(t.speed_cmd) + ',' + fmt9(t.yaw) +
           ',' + fmt9(t.pitch) + ',' + fmt9(t.temp_c) + ',' +
           fmt9(t.battery_wh) + '\n';
  }
  write_text(path, out);
}

}  // namespace pipecrawl
