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
#include <vector>

#include "pipecrawl/radiometry.hpp"
#include "pipecrawl/sensors.hpp"

using namespace pipecrawl;

namespace {

// Deterministic near-Gaussian peak: each channel carries the rounded
// expected count, so centroid, width, and area are known analytically.
Spectrum gaussian_spectrum(double centroid_kev, double fwhm_kev, double total,
                           double live_time) {
  Spectrum s;
  s.counts.assign(1024, 0);
  s.live_time = live_time;
  const double sigma = fwhm_kev / 2.3548200450309493;
  for (int ch = 0; ch < 1024; ++ch) {
    const double e = s.channel_center_kev(ch);
    const double z = (e - centroid_kev) / sigma;
    const double expected = total * s.cal_kev_per_channel /
                            (sigma * std::sqrt(2.0 * M_PI)) *
                            std::exp(-0.5 * z * z);
    s.counts[ch] = static_cast<std::uint32_t>(std::lround(expected));
  }
  return s;
}

}  // namespace

TEST_CASE("window counting matches channel-center membership") {
  Spectrum s;
  s.counts = {1, 2, 4, 8, 16};
  s.live_time = 1.0;
  // Channel centers: 0.25, 0.75, 1.25, 1.75, 2.25 keV.
  CHECK(roi_counts(s, {1.0, 2.0}) == 12.0);
  CHECK(roi_counts(s, {1.25, 1.75}) == 12.0);  // bounds are inclusive
  CHECK(roi_counts(s, {1.26, 1.74}) == 0.0);
  CHECK(roi_counts(s, {0.0, 3.0}) == 31.0);
}

TEST_CASE("source check passes a healthy acquisition") {
  const CheckSourceExpectation exp;
  const Spectrum s = gaussian_spectrum(exp.energy_kev, exp.fwhm_kev,
                                       exp.rate_cps * 300.0, 300.0);
  const QcCheck qc = check_source_qc(s, exp);
  CHECK(qc.pass);
  CHECK(qc.detail.empty());
  CHECK(qc.centroid_kev == doctest::Approx(exp.energy_kev).epsilon(2e-3));
  CHECK(qc.fwhm_kev == doctest::Approx(exp.fwhm_kev).epsilon(0.05));
  CHECK(qc.expected_counts == doctest::Approx(90000.0));
  CHECK(qc.counts == doctest::Approx(90000.0).epsilon(5e-3));
}

TEST_CASE("source check refuses a short acquisition") {
  const CheckSourceExpectation exp;
  const Spectrum s =
      gaussian_spectrum(exp.energy_kev, exp.fwhm_kev, exp.rate_cps * 59.0, 59.0);
  const QcCheck qc = check_source_qc(s, exp);
  CHECK_FALSE(qc.pass);
  CHECK(qc.detail == "live_time");
}

TEST_CASE("source check catches a gain shift through the centroid") {
  const CheckSourceExpectation exp;
  // 5% gain error moves the peak by ~3 keV, double the tolerance.
  const Spectrum s = gaussian_spectrum(exp.energy_kev * 1.05, exp.fwhm_kev,
                                       exp.rate_cps * 300.0, 300.0);
  const QcCheck qc = check_source_qc(s, exp);
  CHECK_FALSE(qc.pass);
  CHECK(qc.detail == "centroid");
}

TEST_CASE("source check catches resolution loss through the width") {
  const CheckSourceExpectation exp;
  const Spectrum s = gaussian_spectrum(exp.energy_kev, exp.fwhm_kev * 1.30,
                                       exp.rate_cps * 300.0, 300.0);
  const QcCheck qc = check_source_qc(s, exp);
  CHECK_FALSE(qc.pass);
  CHECK(qc.detail == "fwhm");
}

TEST_CASE("source check catches missing activity through the net counts") {
  const CheckSourceExpectation exp;
  const Spectrum s = gaussian_spectrum(exp.energy_kev, exp.fwhm_kev,
                                       exp.rate_cps * 150.0, 300.0);
  const QcCheck qc = check_source_qc(s, exp);
  CHECK_FALSE(qc.pass);
  CHECK(qc.detail == "counts");
}

TEST_CASE("source check reports an absent peak") {
  Spectrum s;
  s.counts.assign(1024, 0);
  s.live_time = 300.0;
  const QcCheck qc = check_source_qc(s, CheckSourceExpectation{});
  CHECK_FALSE(qc.pass);
  CHECK(qc.detail == "no_peak");
}

TEST_CASE("contamination comparison is a two-sample z test") {
  const ContaminationCheck hot = contamination_check(10000.0, 10700.0);
  CHECK(hot.z == doctest::Approx(4.86536).epsilon(1e-4));
  CHECK_FALSE(hot.pass);

  const ContaminationCheck same = contamination_check(8000.0, 8000.0);
  CHECK(same.z == 0.0);
  CHECK(same.pass);

  const ContaminationCheck mild = contamination_check(5000.0, 5200.0);
  CHECK(mild.z == doctest::Approx(200.0 / std::sqrt(10200.0)));
  CHECK(mild.pass);

  CHECK(contamination_check(0.0, 0.0).pass);
}

TEST_CASE("geometry flag trips on the worst ring in the segment") {
  const double r0 = 0.381;
  RingRanges clean;
  clean.ranges.assign(360, r0);

  RingRanges mild = clean;
  for (int i = 0; i < 30; ++i) mild.ranges[i] = r0 - 0.031;

  RingRanges bad = clean;
  for (int i = 0; i < 40; ++i) bad.ranges[i] = r0 + 0.06;

  GeometryFlags f1 = flag_geometry({clean}, r0);
  CHECK_FALSE(f1.round_pipe_broken);
  CHECK(f1.anomaly_fraction == 0.0);

  GeometryFlags f2 = flag_geometry({clean, mild}, r0);
  CHECK_FALSE(f2.round_pipe_broken);
  CHECK(f2.anomaly_fraction == doctest::Approx(30.0 / 360.0));

  GeometryFlags f3 = flag_geometry({clean, mild, bad}, r0);
  CHECK(f3.round_pipe_broken);
  CHECK(f3.anomaly_fraction == doctest::Approx(40.0 / 360.0));
}

TEST_CASE("geometry flag ignores dropouts and under-filled rings") {
  const double r0 = 0.381;
  // Dropouts are not deviations.
  RingRanges holey;
  holey.ranges.assign(360, r0);
  for (int i = 0; i < 100; ++i) holey.ranges[i] = -1.0;
  CHECK_FALSE(flag_geometry({holey}, r0).round_pipe_broken);

  // A ring with under half its returns valid is not evidence of anything.
  RingRanges sparse;
  sparse.ranges.assign(360, -1.0);
  for (int i = 0; i < 160; ++i) sparse.ranges[i] = 0.2;
  const GeometryFlags f = flag_geometry({sparse}, r0);
  CHECK_FALSE(f.round_pipe_broken);
  CHECK(f.anomaly_fraction == 0.0);
}

TEST_CASE("foot binning conserves counts and exposure exactly") {
  const AnnulusResponse resp{AnnulusResponse::Geometry{}};
  std::vector<GammaSample> samples(3);
  samples[0].x = 1.0;
  samples[0].roi_counts = 500.0;
  samples[0].live_time = 1.0;
  samples[1].x = 1.3;
  samples[1].roi_counts = 700.0;
  samples[1].live_time = 1.0;
  samples[2].x = 2.2;
  samples[2].roi_counts = 900.0;
  samples[2].live_time = 1.0;

  const std::vector<FootSegment> feet = per_foot_report(samples, resp, false);
  double counts = 0.0, live = 0.0;
  for (const FootSegment& seg : feet) {
    counts += seg.counts;
    live += seg.live_time;
    CHECK(seg.x_lo == doctest::Approx(seg.index * kFootMeters));
    CHECK(seg.x_hi == doctest::Approx((seg.index + 1) * kFootMeters));
  }
  CHECK(counts == doctest::Approx(2100.0).epsilon(1e-12));
  CHECK(live == doctest::Approx(3.0).epsilon(1e-12));

  // Bins come out ordered and contiguous over the covered span.
  for (std::size_t i = 1; i < feet.size(); ++i) {
    CHECK(feet[i].index == feet[i - 1].index + 1);
  }
}

TEST_CASE("a single acquisition spreads at constant rate") {
  const AnnulusResponse resp{AnnulusResponse::Geometry{}};
  std::vector<GammaSample> samples(1);
  samples[0].x = 1.0;
  samples[0].roi_counts = 500.0;
  samples[0].live_time = 1.0;

  const std::vector<FootSegment> feet = per_foot_report(samples, resp, false);
  REQUIRE(feet.size() >= 2);  // response support spans a foot boundary
  for (const FootSegment& seg : feet) {
    // rate = (f C)/(f L) is invariant across bins of one sample.
    CHECK(seg.rate_cps == doctest::Approx(500.0));
    CHECK(seg.sigma_cps == doctest::Approx(std::sqrt(500.0)));
  }
}

TEST_CASE("foot binning separates the two pass directions") {
  const AnnulusResponse resp{AnnulusResponse::Geometry{}};
  std::vector<GammaSample> samples(2);
  samples[0].x = 1.0;
  samples[0].roi_counts = 500.0;
  samples[0].live_time = 1.0;
  samples[1].x = 1.0;
  samples[1].roi_counts = 900.0;
  samples[1].live_time = 1.0;
  samples[1].reverse = true;

  double fwd = 0.0, rev = 0.0;
  for (const FootSegment& s : per_foot_report(samples, resp, false))
    fwd += s.counts;
  for (const FootSegment& s : per_foot_report(samples, resp, true))
    rev += s.counts;
  CHECK(fwd == doctest::Approx(500.0).epsilon(1e-12));
  CHECK(rev == doctest::Approx(900.0).epsilon(1e-12));
}

TEST_CASE("quality flags follow the sample into bins it feeds materially") {
  const AnnulusResponse resp{AnnulusResponse::Geometry{}};
  std::vector<GammaSample> samples(1);
  // Centered in foot 3: [0.9144, 1.2192).
  samples[0].x = 1.07;
  samples[0].roi_counts = 100.0;
  samples[0].live_time = 1.0;
  samples[0].geometry_flag = true;
  samples[0].pitch_flag = true;
  samples[0].offtrack_flag = true;

  const std::vector<FootSegment> feet = per_foot_report(samples, resp, false);
  bool flagged_home = false;
  for (const FootSegment& seg : feet) {
    if (seg.index == 3) {
      CHECK(seg.round_pipe_broken);
      CHECK(seg.pitch_exceeded);
      CHECK(seg.outside_track);
      flagged_home = true;
    }
  }
  CHECK(flagged_home);
}
