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

#ifndef PIPECRAWL_VERIFY_HPP_
#define PIPECRAWL_VERIFY_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "pipecrawl/world.hpp"

namespace pipecrawl {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  bool evaluated = true;  // false when a report bundle lacks matching runs
  std::string detail;
};

struct VerifyOptions {
  int threads = 1;                   // mission fan-out, one scenario each
  std::ostream* progress = nullptr;  // optional per-stage progress lines
};

// Reads PIPECRAWL_THREADS (>= 1) or returns the given fallback.
int thread_cap_from_env(int fallback);

// Runs the complete acceptance battery in-process: scripted scenario
// families, randomized suites, and the statistical checks. Slow (hundreds
// of full missions); intended for the acceptance gate.
std::vector<CriterionResult> run_acceptance(const VerifyOptions& opts);

// Evaluates report bundles produced by earlier `run` invocations: loads
// every report.json under the given directories, maps runs onto the
// criteria they can support by scenario name, and always evaluates the
// mission-free statistical criteria. Throws std::runtime_error when no
// report is found.
std::vector<CriterionResult> verify_report_dirs(
    const std::vector<std::string>& dirs, const VerifyOptions& opts);

// One "PASS|FAIL <id>. <name>: <detail>" line per criterion plus a summary
// footer; returns true iff every evaluated criterion passed.
bool print_criteria(const std::vector<CriterionResult>& results,
                    std::ostream& out);

// Scripted scenario families, exposed for the CLI and tests.
Scenario reference_drift_scenario(std::uint64_t seed);

}  // namespace pipecrawl

#endif  // PIPECRAWL_VERIFY_HPP_
