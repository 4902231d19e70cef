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

#ifndef PIPECRAWL_JSON_UTIL_HPP_
#define PIPECRAWL_JSON_UTIL_HPP_

#include <cmath>
#include <cstdio>
#include <string>

namespace pipecrawl {

// Rounds to 9 significant digits. Every float written to a report or
// generated scenario passes through this so the files are byte identical
// across runs and platforms.
inline double round_sig9(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v == 0.0 ? 0.0 : v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return std::atof(buf);
}

}  // namespace pipecrawl

#endif  // PIPECRAWL_JSON_UTIL_HPP_
