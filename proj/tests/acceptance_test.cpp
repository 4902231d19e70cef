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

// Acceptance battery: every release gate criterion, one pass/fail line each.
// Exit 0 only when every criterion passes at its stated tolerance.

#include <iostream>

#include "pipecrawl/verify.hpp"

int main() {
  pipecrawl::VerifyOptions opts;
  opts.threads = pipecrawl::thread_cap_from_env(1);
  opts.progress = &std::cerr;
  const auto results = pipecrawl::run_acceptance(opts);
  return pipecrawl::print_criteria(results, std::cout) ? 0 : 1;
}
