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

#ifndef PIPECRAWL_RADIOMETRY_HPP_
#define PIPECRAWL_RADIOMETRY_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace pipecrawl {

inline constexpr double kFootMeters = 0.3048;
inline constexpr double kU235PeakKev = 186.0;

struct Spectrum {
  std::vector<std::uint32_t> counts;
  double live_time = 0.0;            // seconds
  double cal_kev_per_channel = 0.5;

  double channel_center_kev(int ch) const {
    return (ch + 0.5) * cal_kev_per_channel;
  }
};

struct Roi {
  double lo_kev = 0.0;
  double hi_kev = 0.0;
};

// Sum of counts in channels whose center energy lies inside [lo, hi].
double roi_counts(const Spectrum& s, const Roi& roi);

struct CheckSourceExpectation {
  double energy_kev = 59.54;
  double rate_cps = 300.0;
  double fwhm_kev = 12.6;
  double centroid_tol_kev = 1.5;
  double fwhm_tol_frac = 0.25;
};

struct QcCheck {
  bool pass = false;
  double centroid_kev = 0.0;
  double fwhm_kev = 0.0;
  double counts = 0.0;
  double expected_counts = 0.0;
  std::string detail;  // empty when passing, else the failed bound
};

// Check-source QC: peak centroid by first moment, FWHM by half-maximum
// crossing interpolation, gross counts against rate * live_time. Requires
// live_time >= 60 s; spectra below that never pass.
QcCheck check_source_qc(const Spectrum& s, const CheckSourceExpectation& exp);

struct ContaminationCheck {
  double z = 0.0;
  bool pass = false;
  double pre_counts = 0.0;
  double post_counts = 0.0;
};

// Compares co-located pre/post ROI counts: z = |post - pre| / sqrt(pre + post),
// fail above 3 sigma.
ContaminationCheck contamination_check(double pre_counts, double post_counts);

struct GeometryFlags {
  bool round_pipe_broken = false;
  double anomaly_fraction = 0.0;  // worst ring in the segment
};

// A profiler ring reduced to its ranges; non-returns carry range <= 0.
struct RingRanges {
  std::vector<double> ranges;
};

// Round-pipe assumption check over the rings spanning one report segment:
// broken when any ring has more than frac_threshold of its points deviating
// more than tol from the nominal radius.
GeometryFlags flag_geometry(const std::vector<RingRanges>& rings,
                            double nominal_radius, double tol = 0.02,
                            double frac_threshold = 0.10);

// One 1 Hz gamma acquisition localized after the fact.
struct GammaSample {
  double stamp = 0.0;
  double roi_counts = 0.0;
  double live_time = 0.0;
  double x = 0.0;        // localized detector position
  double sigma_x = 0.0;
  bool reverse = false;  // pass direction
  bool geometry_flag = false;
  bool pitch_flag = false;
  bool offtrack_flag = false;
};

struct FootSegment {
  int index = 0;         // floor(x / 0.3048)
  double x_lo = 0.0;
  double x_hi = 0.0;
  double counts = 0.0;
  double variance = 0.0;  // of counts
  double live_time = 0.0; // exposure share, s
  double rate_cps = 0.0;
  double sigma_cps = 0.0;
  bool round_pipe_broken = false;
  bool pitch_exceeded = false;
  bool outside_track = false;
};

class AnnulusResponse;  // sensors.hpp

// Apportions each sample's ROI counts into 0.3048 m bins by the annulus
// response mass overlapping each bin. Total counts are conserved exactly.
std::vector<FootSegment> per_foot_report(const std::vector<GammaSample>& samples,
                                         const AnnulusResponse& response,
                                         bool reverse_pass);

}  // namespace pipecrawl

#endif  // PIPECRAWL_RADIOMETRY_HPP_
