// SPDX-License-Identifier: Apache-2.0
// Test-only reference implementations, kept independent of the library's
// numeric paths: trapezoid quadrature for the backscatter integral and a
// closed-form attenuation check.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fogsim/geom.hpp"
#include "fogsim/lidar.hpp"

namespace oracles {

// Crossover ramp written out longhand (must mirror the spec'd shape, not the
// library code path).
inline double xi_ref(double r, double near_field) {
  double x = r / near_field;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
  return s * s;
}

inline double soft_integrand_ref(double rp, double r_sample, double alpha, double beta,
                                 double near_field, double ctau) {
  if (rp <= 0.0) return 0.0;
  double s = std::sin(fogsim::kPi * (r_sample - rp) / ctau);
  return s * s * std::exp(-2.0 * alpha * rp) * beta * xi_ref(rp, near_field) / (rp * rp);
}

// Piecewise trapezoid with `oversample` times the implementation's cell
// budget per smooth segment (segment edges: support ends, the crossover
// junction, the hard-target cut).
inline double soft_value_trapezoid(double r_sample, double r0, double alpha, double beta,
                                   const fogsim::lidar::LidarConfig& cfg, int oversample = 10) {
  double ctau = cfg.pulse_extent();
  double lo = std::max(0.0, r_sample - ctau);
  double hi = std::min(r_sample, r0);
  if (hi <= lo) return 0.0;
  std::vector<double> brks{lo, hi};
  if (cfg.near_field > lo && cfg.near_field < hi) brks.push_back(cfg.near_field);
  std::sort(brks.begin(), brks.end());
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < brks.size(); ++k) {
    double a = brks[k], b = brks[k + 1];
    int base_cells = std::max(
        128, static_cast<int>(std::ceil((b - a) / fogsim::lidar::kQuadCell)));
    long n = static_cast<long>(base_cells) * oversample;
    double h = (b - a) / static_cast<double>(n);
    double sum = 0.5 * (soft_integrand_ref(a, r_sample, alpha, beta, cfg.near_field, ctau) +
                        soft_integrand_ref(b, r_sample, alpha, beta, cfg.near_field, ctau));
    for (long i = 1; i < n; ++i)
      sum += soft_integrand_ref(a + h * static_cast<double>(i), r_sample, alpha, beta,
                                cfg.near_field, ctau);
    acc += sum * h;
  }
  return cfg.c_a * cfg.p0 * acc;
}

// Same quadrature without the hard-target cut, for the truncation check.
inline double soft_value_no_cut(double r_sample, double alpha, double beta,
                                const fogsim::lidar::LidarConfig& cfg, int oversample = 10) {
  return soft_value_trapezoid(r_sample, std::numeric_limits<double>::infinity(), alpha, beta, cfg,
                              oversample);
}

}  // namespace oracles
