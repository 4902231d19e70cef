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

#ifndef PIPECRAWL_REPORT_HPP_
#define PIPECRAWL_REPORT_HPP_

#include <string>

#include "pipecrawl/mission.hpp"

namespace pipecrawl {

// Serialized run report. Field names are frozen in docs/formats.md; every
// float passes through round_sig9 so identical (scenario, seed) inputs give
// byte-identical output. digest is the hex hash of the scenario document.
std::string render_report_json(const MissionResult& result,
                               const std::string& digest);

void write_report_json(const MissionResult& result, const std::string& digest,
                       const std::string& path);

// Per-foot assay table, forward then reverse rows.
void write_per_foot_csv(const MissionResult& result, const std::string& path);

// 1 Hz tick telemetry.
void write_run_log_csv(const MissionResult& result, const std::string& path);

}  // namespace pipecrawl

#endif  // PIPECRAWL_REPORT_HPP_
