// SPDX-License-Identifier: Apache-2.0
#include "fogsim/lidar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace fogsim::lidar {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int LidarConfig::azimuth_count() const {
  return static_cast<int>(std::llround(360.0 / horizontal_resolution_deg));
}

int LidarConfig::sample_count() const {
  return static_cast<int>(std::floor(max_range / range_bin + 1e-9));
}

void LidarConfig::validate() const {
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  if (!(tau_h > 0.0)) throw std::invalid_argument("tau_h must be > 0");
  if (!(range_bin > 0.0)) throw std::invalid_argument("range_bin must be > 0");
  if (range_bin > kSpeedOfLight * tau_h / 10.0 + 1e-12)
    throw std::invalid_argument("range_bin too coarse to resolve the pulse");
  double m = 360.0 / horizontal_resolution_deg;
  if (std::abs(m - std::round(m)) > 1e-9)
    throw std::invalid_argument("horizontal_resolution must divide 360");
  if (!(max_range > 0.0)) throw std::invalid_argument("max_range must be > 0");
  if (!(p0 > 0.0) || !(c_a > 0.0)) throw std::invalid_argument("p0 and c_a must be > 0");
  if (vertical_fov_max_deg < vertical_fov_min_deg)
    throw std::invalid_argument("vertical fov inverted");
  double cells = near_field / kQuadCell;
  if (!(near_field >= kQuadCell) || std::abs(cells - std::round(cells)) > 1e-9)
    throw std::invalid_argument("near_field must be a positive multiple of 1/64 m");
}

std::vector<EmitDirection> emit_directions(const LidarConfig& cfg) {
  cfg.validate();
  int naz = cfg.azimuth_count();
  std::vector<EmitDirection> out;
  out.reserve(static_cast<std::size_t>(naz) * cfg.channels);
  for (int a = 0; a < naz; ++a) {
    double az_deg = a * cfg.horizontal_resolution_deg;
    for (int ch = 0; ch < cfg.channels; ++ch) {
      double el_deg =
          cfg.channels == 1
              ? 0.5 * (cfg.vertical_fov_min_deg + cfg.vertical_fov_max_deg)
              : cfg.vertical_fov_min_deg + (cfg.vertical_fov_max_deg - cfg.vertical_fov_min_deg) *
                                               ch / (cfg.channels - 1);
      out.push_back({dir_from_angles(deg2rad(az_deg), deg2rad(el_deg)), ch, az_deg, el_deg});
    }
  }
  return out;
}

namespace detail {

double crossover(double r, double near_field) {
  double s = smootherstep01(r / near_field);
  return s * s;
}

double soft_point_integrand(double rp, double r_sample, double alpha, double beta,
                            double near_field, double ctau) {
  if (rp <= 0.0) return 0.0;
  double s = std::sin(kPi * (r_sample - rp) / ctau);
  return s * s * std::exp(-2.0 * alpha * rp) * beta * crossover(rp, near_field) / (rp * rp);
}

double hard_sample(double r, double r0, double beta0, double transmit_sq,
                   const LidarConfig& cfg) {
  double ctau = cfg.pulse_extent();
  if (r < r0 || r > r0 + ctau) return 0.0;
  double s = std::sin(kPi * (r - r0) / ctau);
  return cfg.c_a * cfg.p0 * transmit_sq * beta0 * s * s / (r0 * r0);
}

namespace {

// 5-node composite Simpson over [a, b]; used for sub-cell partial intervals.
template <typename F>
double simpson5(double a, double b, F&& f) {
  double len = b - a;
  if (len <= 0.0) return 0.0;
  double h = len * 0.25;
  return len / 12.0 *
         (f(a) + 4.0 * f(a + h) + 2.0 * f(a + 2.0 * h) + 4.0 * f(a + 3.0 * h) + f(b));
}

// Composite Simpson with one cell per kQuadCell of length.
template <typename F>
double simpson_cells(double a, double b, F&& f) {
  double len = b - a;
  if (len <= 0.0) return 0.0;
  int n = std::max(32, static_cast<int>(std::ceil(len / kQuadCell)));
  double h = len / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double x0 = a + i * h, x1 = a + (i + 1) * h;
    acc += h / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1));
  }
  return acc;
}

}  // namespace

double soft_sample_profile(double r, double r0_cap, const scene::FogProfile& fog,
                           const LidarConfig& cfg) {
  double ctau = cfg.pulse_extent();
  double lo = std::max(0.0, r - ctau);
  double hi = std::min(r, r0_cap);
  if (hi <= lo) return 0.0;
  std::vector<double> brks{lo, hi};
  if (cfg.near_field > lo && cfg.near_field < hi) brks.push_back(cfg.near_field);
  fog.breakpoints(lo, hi, brks);
  std::sort(brks.begin(), brks.end());
  brks.erase(std::unique(brks.begin(), brks.end()), brks.end());
  auto f = [&](double rp) {
    if (rp <= 0.0) return 0.0;
    double s = std::sin(kPi * (r - rp) / ctau);
    return s * s * std::exp(-2.0 * fog.optical_depth(rp)) * fog.beta_at(rp) *
           crossover(rp, cfg.near_field) / (rp * rp);
  };
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < brks.size(); ++k) acc += simpson_cells(brks[k], brks[k + 1], f);
  return cfg.c_a * cfg.p0 * acc;
}

}  // namespace detail

namespace {

// Cell-accumulated Simpson moments of g(r) = exp(-2 a r) b xi(r)/r^2 against
// {1, cos B, sin B}, B = 2 pi r / ctau. The sin^2 pulse weight at sample R
// expands over these moments, so one table serves every sampled R.
void build_moment_tables(double alpha, double beta, const LidarConfig& cfg,
                         std::vector<double>& p0, std::vector<double>& pc,
                         std::vector<double>& ps) {
  double ctau = cfg.pulse_extent();
  int cells = static_cast<int>(std::ceil(cfg.max_range / kQuadCell));
  p0.assign(static_cast<std::size_t>(cells) + 1, 0.0);
  pc.assign(static_cast<std::size_t>(cells) + 1, 0.0);
  ps.assign(static_cast<std::size_t>(cells) + 1, 0.0);
  auto g = [&](double r) {
    if (r <= 0.0) return 0.0;
    return std::exp(-2.0 * alpha * r) * beta * detail::crossover(r, cfg.near_field) / (r * r);
  };
  double w = kQuadCell / 6.0;
  double omega = 2.0 * kPi / ctau;
  for (int c = 0; c < cells; ++c) {
    double a = c * kQuadCell, m = (c + 0.5) * kQuadCell, b = (c + 1) * kQuadCell;
    double ga = g(a), gm = g(m), gb = g(b);
    p0[c + 1] = p0[c] + w * (ga + 4.0 * gm + gb);
    pc[c + 1] = pc[c] + w * (ga * std::cos(omega * a) + 4.0 * gm * std::cos(omega * m) +
                             gb * std::cos(omega * b));
    ps[c + 1] = ps[c] + w * (ga * std::sin(omega * a) + 4.0 * gm * std::sin(omega * m) +
                             gb * std::sin(omega * b));
  }
}

// Supports shorter than this bypass the cell tables: the fixed 1/64 m cells
// cannot hold the pointwise relative error of very small integrals, so short
// windows are integrated directly with a denser composite rule.
constexpr double kShortSupport = 2.5;  // m
constexpr int kShortSupportCells = 160;

template <typename F>
double integrate_short_support(double lo, double hi, double near_field, F&& f) {
  double acc = 0.0;
  double mid = std::clamp(near_field, lo, hi);  // split at the crossover junction
  for (auto [a, b] : {std::pair{lo, mid}, std::pair{mid, hi}}) {
    double len = b - a;
    if (len <= 0.0) continue;
    int n = std::max(kShortSupportCells, static_cast<int>(std::ceil(len / kQuadCell)));
    double h = len / n;
    for (int i = 0; i < n; ++i) {
      double x0 = a + i * h, x1 = a + (i + 1) * h;
      acc += h / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1));
    }
  }
  return acc;
}

double soft_sample_tables(double r, double r0_cap, double alpha, double beta,
                          const LidarConfig& cfg, const std::vector<double>& p0,
                          const std::vector<double>& pc, const std::vector<double>& ps) {
  double ctau = cfg.pulse_extent();
  double lo = std::max(0.0, r - ctau);
  double hi = std::min(r, r0_cap);
  if (hi <= lo) return 0.0;
  auto f = [&](double rp) {
    return detail::soft_point_integrand(rp, r, alpha, beta, cfg.near_field, ctau);
  };
  double acc = 0.0;
  if (hi - lo < kShortSupport) {
    acc = integrate_short_support(lo, hi, cfg.near_field, f);
    return cfg.c_a * cfg.p0 * acc;
  }
  int k0 = static_cast<int>(std::ceil(lo / kQuadCell - 1e-12));
  int k1 = static_cast<int>(std::floor(hi / kQuadCell + 1e-12));
  k1 = std::min<int>(k1, static_cast<int>(p0.size()) - 1);
  if (k1 > k0) {
    double d0 = p0[k1] - p0[k0];
    double dc = pc[k1] - pc[k0];
    double ds = ps[k1] - ps[k0];
    double A = 2.0 * kPi * r / ctau;
    acc += 0.5 * (d0 - std::cos(A) * dc - std::sin(A) * ds);
    acc += detail::simpson5(lo, k0 * kQuadCell, f);
    acc += detail::simpson5(k1 * kQuadCell, hi, f);
  } else {
    acc += detail::simpson5(lo, hi, f);
  }
  return cfg.c_a * cfg.p0 * acc;
}

}  // namespace

ScanContext::ScanContext(const scene::FogField& fog, const LidarConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  fog.validate();
  clear_ = fog.is_clear();
  homogeneous_ = fog.mode == scene::FogField::Mode::kHomogeneous;
  if (clear_ || !homogeneous_) return;
  alpha_ = fog.alpha;
  beta_ = fog.beta_from_alpha(fog.alpha);
  build_moment_tables(alpha_, beta_, cfg_, prefix0_, prefixc_, prefixs_);
  int n = cfg_.sample_count();
  soft_base_.resize(static_cast<std::size_t>(n));
  best_val_.resize(static_cast<std::size_t>(n));
  best_idx_.resize(static_cast<std::size_t>(n));
  double bv = -1.0;
  int bi = 0;
  for (int i = 0; i < n; ++i) {
    double v = soft_sample(cfg_.sample_r(i), kInf);
    soft_base_[static_cast<std::size_t>(i)] = v;
    if (v > bv) {
      bv = v;
      bi = i;
    }
    best_val_[static_cast<std::size_t>(i)] = bv;
    best_idx_[static_cast<std::size_t>(i)] = bi;
  }
}

std::pair<double, int> ScanContext::best_soft_upto(int i) const {
  if (i < 0 || soft_base_.empty()) return {-1.0, -1};
  i = std::min<int>(i, static_cast<int>(soft_base_.size()) - 1);
  return {best_val_[static_cast<std::size_t>(i)], best_idx_[static_cast<std::size_t>(i)]};
}

double ScanContext::soft_sample(double r, double r0_cap) const {
  if (clear_ || !homogeneous_) return 0.0;
  return soft_sample_tables(r, r0_cap, alpha_, beta_, cfg_, prefix0_, prefixc_, prefixs_);
}

PulseResponse hard_response(double r0, double beta0, const scene::PathAttenuation& path,
                            const LidarConfig& cfg) {
  cfg.validate();
  if (!(r0 > 0.0)) throw std::invalid_argument("hard target distance must be > 0");
  if (beta0 < 0.0 || beta0 > 1.0) throw std::invalid_argument("reflectivity outside [0,1]");
  double tsq = std::exp(-2.0 * path.optical_depth());
  PulseResponse out;
  out.r0 = r0;
  int n = cfg.sample_count();
  out.samples.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double r = cfg.sample_r(i);
    out.samples[static_cast<std::size_t>(i)] = {r, detail::hard_sample(r, r0, beta0, tsq, cfg)};
  }
  return out;
}

PulseResponse soft_response(const scene::FogProfile& fog, double r0, const LidarConfig& cfg) {
  cfg.validate();
  if (!(r0 > 0.0)) throw std::invalid_argument("target distance must be > 0 (or infinite)");
  PulseResponse out;
  if (std::isfinite(r0)) out.r0 = r0;
  int n = cfg.sample_count();
  out.samples.resize(static_cast<std::size_t>(n));
  if (fog.homogeneous) {
    if (fog.alpha0 <= 0.0 || fog.beta0 <= 0.0) {
      for (int i = 0; i < n; ++i) out.samples[static_cast<std::size_t>(i)] = {cfg.sample_r(i), 0.0};
      return out;
    }
    std::vector<double> p0, pc, ps;
    build_moment_tables(fog.alpha0, fog.beta0, cfg, p0, pc, ps);
    for (int i = 0; i < n; ++i) {
      double r = cfg.sample_r(i);
      out.samples[static_cast<std::size_t>(i)] = {
          r, soft_sample_tables(r, r0, fog.alpha0, fog.beta0, cfg, p0, pc, ps)};
    }
    return out;
  }
  for (int i = 0; i < n; ++i) {
    double r = cfg.sample_r(i);
    out.samples[static_cast<std::size_t>(i)] = {r, detail::soft_sample_profile(r, r0, fog, cfg)};
  }
  return out;
}

PulseResponse total_response(const PulseResponse& hard, const PulseResponse& soft) {
  if (hard.samples.size() != soft.samples.size())
    throw std::invalid_argument("response grids differ in size");
  PulseResponse out;
  out.r0 = hard.r0 ? hard.r0 : soft.r0;
  out.samples.resize(hard.samples.size());
  for (std::size_t i = 0; i < hard.samples.size(); ++i) {
    if (hard.samples[i].r != soft.samples[i].r)
      throw std::invalid_argument("response grids differ in sampling");
    out.samples[i] = {hard.samples[i].r, hard.samples[i].power + soft.samples[i].power};
  }
  return out;
}

std::optional<LidarPoint> select_return(const PulseResponse& total, const LidarConfig& cfg,
                                        double noise_floor, const RayTag& tag) {
  double best = 0.0;
  int best_i = -1;
  for (std::size_t i = 0; i < total.samples.size(); ++i) {
    if (total.samples[i].power > best) {
      best = total.samples[i].power;
      best_i = static_cast<int>(i);
    }
  }
  if (best_i < 0 || best <= 0.0 || best < noise_floor) return std::nullopt;
  double r_win = total.samples[static_cast<std::size_t>(best_i)].r;
  double reported = cfg.raw_argmax ? r_win : std::max(0.0, r_win - 0.5 * cfg.pulse_extent());
  bool is_hard = total.r0 && r_win >= *total.r0 - 1e-12;
  LidarPoint pt;
  pt.position = tag.dir * reported;
  pt.intensity = best;
  pt.channel = tag.channel;
  pt.azimuth_deg = tag.azimuth_deg;
  pt.provenance = is_hard ? Provenance::kHardTarget : Provenance::kFogNoise;
  if (is_hard) pt.actor_id = tag.actor_id;
  pt.true_range = total.r0;
  return pt;
}

namespace {

struct Candidate {
  double value = 0.0;
  int index = -1;
};

// argmax with the first-return convention: strictly greater wins, ties keep
// the smaller sample index.
void consider(Candidate& best, double value, int index) {
  if (index < 0) return;
  if (value > best.value || (value == best.value && best.index >= 0 && index < best.index))
    best = {value, index};
}

std::optional<LidarPoint> trace_ray(const scene::Scene& sc, const ScanContext& ctx,
                                    const Pose& pose, const EmitDirection& ed) {
  const LidarConfig& cfg = ctx.config();
  Vec3 wdir = pose.to_world_dir(ed.dir);
  auto hit = scene::raycast(sc, pose.position, wdir, cfg.max_range);
  double floor = cfg.noise_floor();
  int n = cfg.sample_count();
  double ctau = cfg.pulse_extent();
  RayTag tag{ed.dir, ed.channel, ed.azimuth_deg, hit ? hit->actor_id : std::nullopt};

  Candidate best;
  std::optional<double> r0;
  double tsq = 1.0;
  if (hit) {
    r0 = hit->distance;
    tsq = std::exp(-2.0 * scene::path_attenuation_sum(sc, pose.position, wdir, hit->distance)
                              .optical_depth());
  }

  if (ctx.fog_clear()) {
    if (!hit) return std::nullopt;
    int i_lo = std::max(0, static_cast<int>(std::floor(hit->distance / cfg.range_bin)) - 1);
    int i_hi = std::min(n - 1, static_cast<int>(std::floor((hit->distance + ctau) / cfg.range_bin)));
    for (int i = i_lo; i <= i_hi; ++i)
      consider(best, detail::hard_sample(cfg.sample_r(i), hit->distance, hit->reflectivity, tsq, cfg),
               i);
  } else if (ctx.fog_homogeneous()) {
    int i_floor = hit ? std::min(n - 1, static_cast<int>(std::floor(hit->distance / cfg.range_bin)) - 1)
                      : n - 1;
    // soft-only region: precomputed no-target curve applies verbatim
    auto [bv, bi] = ctx.best_soft_upto(i_floor);
    consider(best, bv, bi);
    int i_lo = i_floor + 1;
    int i_hi = hit ? std::min(n - 1,
                              static_cast<int>(std::floor((hit->distance + ctau) / cfg.range_bin)))
                   : -1;
    if (hit && i_lo <= i_hi) {
      auto exact_total = [&](int i) {
        double r = cfg.sample_r(i);
        return detail::hard_sample(r, hit->distance, hit->reflectivity, tsq, cfg) +
               ctx.soft_sample(r, hit->distance);
      };
      // seed with the sample nearest the pulse centroid so the bound prunes
      int i_peak = std::clamp(
          static_cast<int>(std::llround((hit->distance + 0.5 * ctau) / cfg.range_bin)) - 1, i_lo,
          i_hi);
      consider(best, exact_total(i_peak), i_peak);
      for (int i = i_lo; i <= i_hi; ++i) {
        if (i == i_peak) continue;
        double r = cfg.sample_r(i);
        double hard = detail::hard_sample(r, hit->distance, hit->reflectivity, tsq, cfg);
        // truncated backscatter never exceeds the no-target curve
        double bound = hard + ctx.soft_base(i) * (1.0 + 1e-9);
        if (bound < best.value) continue;
        consider(best, exact_total(i), i);
      }
    }
  } else {
    // voxel fog: evaluate the full curve directly
    scene::FogProfile prof = scene::fog_profile(sc, pose.position, wdir, cfg.max_range);
    double cap = hit ? hit->distance : kInf;
    for (int i = 0; i < n; ++i) {
      double r = cfg.sample_r(i);
      double p = detail::soft_sample_profile(r, cap, prof, cfg);
      if (hit) p += detail::hard_sample(r, hit->distance, hit->reflectivity, tsq, cfg);
      consider(best, p, i);
    }
  }

  if (best.index < 0 || best.value <= 0.0 || best.value < floor) return std::nullopt;
  double r_win = cfg.sample_r(best.index);
  double reported = cfg.raw_argmax ? r_win : std::max(0.0, r_win - 0.5 * ctau);
  bool is_hard = r0 && r_win >= *r0 - 1e-12;
  LidarPoint pt;
  pt.position = ed.dir * reported;
  pt.intensity = best.value;
  pt.channel = ed.channel;
  pt.azimuth_deg = ed.azimuth_deg;
  pt.provenance = is_hard ? Provenance::kHardTarget : Provenance::kFogNoise;
  if (is_hard) pt.actor_id = tag.actor_id;
  pt.true_range = r0;
  return pt;
}

}  // namespace

std::optional<LidarPoint> trace_single(const scene::Scene& sc, const ScanContext& ctx,
                                       const Pose& sensor_pose, const EmitDirection& ed) {
  return trace_ray(sc, ctx, sensor_pose, ed);
}

PointCloud scan(const scene::Scene& sc, const ScanContext& ctx, const Pose& sensor_pose,
                std::uint64_t frame) {
  PointCloud cloud;
  cloud.frame = frame;
  cloud.sensor_pose = sensor_pose;
  auto dirs = emit_directions(ctx.config());
  cloud.points.reserve(dirs.size() / 4);
  for (const auto& ed : dirs) {
    auto pt = trace_ray(sc, ctx, sensor_pose, ed);
    if (pt) cloud.points.push_back(*pt);
  }
  return cloud;
}

PointCloud scan(const scene::Scene& sc, const LidarConfig& cfg, const Pose& sensor_pose,
                std::uint64_t frame) {
  ScanContext ctx(sc.fog, cfg);
  return scan(sc, ctx, sensor_pose, frame);
}

PointCloud scan_parallel(const scene::Scene& sc, const ScanContext& ctx, const Pose& sensor_pose,
                         std::uint64_t frame, int threads) {
  auto dirs = emit_directions(ctx.config());
  std::vector<std::optional<LidarPoint>> slots(dirs.size());
  threads = std::max(1, threads);
  std::vector<std::thread> pool;
  std::size_t chunk = (dirs.size() + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    std::size_t lo = t * chunk, hi = std::min(dirs.size(), lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) slots[i] = trace_ray(sc, ctx, sensor_pose, dirs[i]);
    });
  }
  for (auto& th : pool) th.join();
  PointCloud cloud;
  cloud.frame = frame;
  cloud.sensor_pose = sensor_pose;
  for (auto& s : slots)
    if (s) cloud.points.push_back(*s);
  return cloud;
}

}  // namespace fogsim::lidar
