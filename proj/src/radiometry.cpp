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

#include "pipecrawl/radiometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pipecrawl/sensors.hpp"

namespace pipecrawl {

double roi_counts(const Spectrum& s, const Roi& roi) {
  double total = 0.0;
  for (std::size_t ch = 0; ch < s.counts.size(); ++ch) {
    const double center = s.channel_center_kev(static_cast<int>(ch));
    if (center >= roi.lo_kev && center <= roi.hi_kev) total += s.counts[ch];
  }
  return total;
}

namespace {

double window_sum(const Spectrum& s, double lo_kev, double hi_kev) {
  return roi_counts(s, Roi{lo_kev, hi_kev});
}

}  // namespace

QcCheck check_source_qc(const Spectrum& s, const CheckSourceExpectation& exp) {
  QcCheck qc;
  qc.expected_counts = exp.rate_cps * s.live_time;
  if (s.live_time < 60.0) {
    qc.detail = "live_time";
    return qc;
  }

  const double half = 2.5 * exp.fwhm_kev;
  const double lo = exp.energy_kev - half;
  const double hi = exp.energy_kev + half;
  const int ch_lo = std::max(
      0, static_cast<int>(std::ceil(lo / s.cal_kev_per_channel - 0.5)));
  const int ch_hi = std::min(
      static_cast<int>(s.counts.size()) - 1,
      static_cast<int>(std::floor(hi / s.cal_kev_per_channel - 0.5)));

  double gross = 0.0, moment = 0.0;
  for (int ch = ch_lo; ch <= ch_hi; ++ch) {
    gross += s.counts[ch];
    moment += s.counts[ch] * s.channel_center_kev(ch);
  }
  if (gross < 100.0) {
    qc.detail = "no_peak";
    return qc;
  }
  qc.centroid_kev = moment / gross;

  // FWHM from half-maximum crossings of the 3-channel smoothed profile.
  auto smooth = [&](int ch) {
    double v = 0.0;
    int n = 0;
    for (int k = ch - 1; k <= ch + 1; ++k) {
      if (k >= 0 && k < static_cast<int>(s.counts.size())) {
        v += s.counts[k];
        ++n;
      }
    }
    return n > 0 ? v / n : 0.0;
  };
  int peak_ch = ch_lo;
  double peak_val = -1.0;
  for (int ch = ch_lo; ch <= ch_hi; ++ch) {
    const double v = smooth(ch);
    if (v > peak_val) {
      peak_val = v;
      peak_ch = ch;
    }
  }
  const double half_val = peak_val / 2.0;
  double left = s.channel_center_kev(ch_lo);
  for (int ch = peak_ch; ch > ch_lo; --ch) {
    const double v0 = smooth(ch - 1);
    const double v1 = smooth(ch);
    if (v0 < half_val && v1 >= half_val) {
      const double f = (half_val - v0) / std::max(1e-9, v1 - v0);
      left = s.channel_center_kev(ch - 1) + f * s.cal_kev_per_channel;
      break;
    }
  }
  double right = s.channel_center_kev(ch_hi);
  for (int ch = peak_ch; ch < ch_hi; ++ch) {
    const double v0 = smooth(ch);
    const double v1 = smooth(ch + 1);
    if (v0 >= half_val && v1 < half_val) {
      const double f = (v0 - half_val) / std::max(1e-9, v0 - v1);
      right = s.channel_center_kev(ch) + f * s.cal_kev_per_channel;
      break;
    }
  }
  qc.fwhm_kev = right - left;

  // Continuum estimate from the sidebands flanking the window, one FWHM wide
  // each, scaled to the window width.
  const double side_lo = window_sum(s, lo - exp.fwhm_kev, lo);
  const double side_hi = window_sum(s, hi, hi + exp.fwhm_kev);
  const double scale = (hi - lo) / (2.0 * exp.fwhm_kev);
  const double continuum = (side_lo + side_hi) * scale;
  qc.counts = gross - continuum;

  const double var = gross + scale * scale * (side_lo + side_hi);
  const double tol = 3.0 * std::sqrt(std::max(var, 1.0));

  if (std::abs(qc.centroid_kev - exp.energy_kev) > exp.centroid_tol_kev) {
    qc.detail = "centroid";
  } else if (std::abs(qc.fwhm_kev - exp.fwhm_kev) >
             exp.fwhm_tol_frac * exp.fwhm_kev) {
    qc.detail = "fwhm";
  } else if (std::abs(qc.counts - qc.expected_counts) > tol) {
    qc.detail = "counts";
  } else {
    qc.pass = true;
  }
  return qc;
}

ContaminationCheck contamination_check(double pre_counts, double post_counts) {
  ContaminationCheck c;
  c.pre_counts = pre_counts;
  c.post_counts = post_counts;
  const double denom = pre_counts + post_counts;
  c.z = denom > 0.0 ? std::abs(post_counts - pre_counts) / std::sqrt(denom) : 0.0;
  c.pass = c.z <= 3.0;
  return c;
}

GeometryFlags flag_geometry(const std::vector<RingRanges>& rings,
                            double nominal_radius, double tol,
                            double frac_threshold) {
  GeometryFlags flags;
  for (const auto& ring : rings) {
    int valid = 0, deviant = 0;
    for (const double r : ring.ranges) {
      if (r <= 0.0) continue;
      ++valid;
      if (std::abs(r - nominal_radius) > tol) ++deviant;
    }
    if (valid < static_cast<int>(ring.ranges.size()) / 2) continue;
    const double frac = static_cast<double>(deviant) / valid;
    flags.anomaly_fraction = std::max(flags.anomaly_fraction, frac);
  }
  flags.round_pipe_broken = flags.anomaly_fraction > frac_threshold;
  return flags;
}

std::vector<FootSegment> per_foot_report(const std::vector<GammaSample>& samples,
                                         const AnnulusResponse& response,
                                         bool reverse_pass) {
  std::map<int, FootSegment> bins;
  const double support = response.support_end();
  for (const auto& sample : samples) {
    if (sample.reverse != reverse_pass) continue;
    const int k_lo = static_cast<int>(std::floor((sample.x - support) / kFootMeters));
    const int k_hi = static_cast<int>(std::floor((sample.x + support) / kFootMeters));
    for (int k = k_lo; k <= k_hi; ++k) {
      const double lo = k * kFootMeters;
      const double hi = (k + 1) * kFootMeters;
      const double f = response.cumulative(hi - sample.x) -
                       response.cumulative(lo - sample.x);
      if (f <= 0.0) continue;
      FootSegment& seg = bins[k];
      seg.index = k;
      seg.x_lo = lo;
      seg.x_hi = hi;
      seg.counts += f * sample.roi_counts;
      seg.variance += f * f * sample.roi_counts;
      seg.live_time += f * sample.live_time;
      if (f > 0.1) {
        seg.round_pipe_broken = seg.round_pipe_broken || sample.geometry_flag;
        seg.pitch_exceeded = seg.pitch_exceeded || sample.pitch_flag;
        seg.outside_track = seg.outside_track || sample.offtrack_flag;
      }
    }
  }
  std::vector<FootSegment> out;
  out.reserve(bins.size());
  for (auto& [k, seg] : bins) {
    if (seg.live_time > 0.0) {
      seg.rate_cps = seg.counts / seg.live_time;
      seg.sigma_cps = std::sqrt(seg.variance) / seg.live_time;
    }
    out.push_back(seg);
  }
  return out;
}

}  // namespace pipecrawl
