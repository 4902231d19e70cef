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

#ifndef PIPECRAWL_SCENARIO_GEN_HPP_
#define PIPECRAWL_SCENARIO_GEN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "pipecrawl/world.hpp"

namespace pipecrawl {

// Parameters for a randomized scenario family. Regeneration from the same
// spec is byte identical; every scenario draws from its own derived stream
// so reordering or resizing the suite never shifts another file's content.
struct SuiteSpec {
  int per_type = 5;  // scenarios per (end type, diameter) pair
  std::vector<DiameterClass> diameters{DiameterClass::kD30,
                                       DiameterClass::kD42};
  std::uint64_t seed = 7;

  // Adversity mix-ins, fraction of the suite each. Zero by default so the
  // base suite exercises clean end detection.
  double fault_fraction = 0.0;        // one injected health fault
  double bad_deploy_fraction = 0.0;   // one entrance axis out of envelope
  double obstacle_fraction = 0.0;     // traversal-blocking wall obstruction
};

// End types a suite cycles through. SweptT reverses through the obstacle
// safeguard rather than a circle classification; the other three map onto
// the end classifier's kinds.
enum class SuiteEndType { kClosedValve, kOpenEnd, kReducer, kSweptT };

const char* to_string(SuiteEndType t);

struct SuiteEntry {
  Scenario scenario;
  std::string filename;
  SuiteEndType end_type = SuiteEndType::kClosedValve;
  bool has_fault = false;
  bool bad_deploy = false;
  bool has_obstacle = false;
};

std::vector<SuiteEntry> gen_suite(const SuiteSpec& spec);

// Writes one JSON file per scenario plus manifest.json into out_dir
// (created if absent). Returns the manifest text.
std::string write_suite(const SuiteSpec& spec, const std::string& out_dir);

// Parses a suite spec document {"per_type":..,"diameters":[..],"seed":..,
// "fault_fraction":..,"bad_deploy_fraction":..,"obstacle_fraction":..}.
SuiteSpec load_suite_spec(const std::string& json_text);

}  // namespace pipecrawl

#endif  // PIPECRAWL_SCENARIO_GEN_HPP_
