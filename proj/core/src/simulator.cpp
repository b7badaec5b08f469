#include "texloc/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace texloc {

namespace {

// Independent rng streams derived from one pipeline seed.
constexpr std::uint64_t kStreamHist = 1;
constexpr std::uint64_t kStreamFilter = 2;
constexpr std::uint64_t kStreamCamera = 3;
constexpr std::uint64_t kStreamSweep = 4;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

/// Bilinear value noise over an integer lattice, in [0, 1].
double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = smoothstep(x - fx);
  const double ty = smoothstep(y - fy);
  const double v00 = lattice_unit(seed, ix, iy);
  const double v10 = lattice_unit(seed, ix + 1, iy);
  const double v01 = lattice_unit(seed, ix, iy + 1);
  const double v11 = lattice_unit(seed, ix + 1, iy + 1);
  const double a = v00 + (v10 - v00) * tx;
  const double b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

/// Multi-octave noise mapped to [-1, 1].
double octave_noise(std::uint64_t seed, double x, double y, int octaves, double base_wavelength) {
  double amp = 1.0;
  double total_amp = 0.0;
  double wavelength = base_wavelength;
  double acc = 0.0;
  for (int o = 0; o < octaves; ++o) {
    const std::uint64_t oseed = derive_seed(seed, static_cast<std::uint64_t>(o));
    acc += amp * value_noise(oseed, x / wavelength, y / wavelength);
    total_amp += amp;
    amp *= 0.55;
    wavelength *= 0.5;
  }
  return 2.0 * (acc / total_amp) - 1.0;
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

/// The one fixed stamp pattern; repeating it across the floor creates
/// deliberately ambiguous regions.
void apply_stamp(ImageYuv& img, double cx_px, double cy_px, double radius_px) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx_px - radius_px)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx_px + radius_px)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy_px - radius_px)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy_px + radius_px)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x - cx_px) / radius_px;
      const double dy = (y - cy_px) / radius_px;
      const double r = std::hypot(dx, dy);
      if (r > 1.0) continue;
      const double rings = 0.5 + 0.5 * std::cos(r * 18.0);
      img.y_at(x, y) = to_u8(40.0 + 200.0 * rings);
      img.u_at(x, y) = to_u8(90.0);
      img.v_at(x, y) = to_u8(170.0);
    }
}

void box_blur_plane(std::vector<double>& plane, int w, int h, int radius) {
  if (radius <= 0) return;
  std::vector<double> tmp(plane.size());
  std::vector<double> prefix;
  // Horizontal pass.
  prefix.resize(static_cast<std::size_t>(w) + 1);
  for (int y = 0; y < h; ++y) {
    const double* row = plane.data() + static_cast<std::size_t>(y) * w;
    prefix[0] = 0.0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + row[x];
    double* out = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const int a = std::max(0, x - radius);
      const int b = std::min(w - 1, x + radius);
      out[x] = (prefix[b + 1] - prefix[a]) / (b - a + 1);
    }
  }
  // Vertical pass.
  prefix.resize(static_cast<std::size_t>(h) + 1);
  for (int x = 0; x < w; ++x) {
    prefix[0] = 0.0;
    for (int y = 0; y < h; ++y)
      prefix[y + 1] = prefix[y] + tmp[static_cast<std::size_t>(y) * w + x];
    for (int y = 0; y < h; ++y) {
      const int a = std::max(0, y - radius);
      const int b = std::min(h - 1, y + radius);
      plane[static_cast<std::size_t>(y) * w + x] = (prefix[b + 1] - prefix[a]) / (b - a + 1);
    }
  }
}

struct BilinearCoord {
  int i0, i1;
  double frac;
};

BilinearCoord bilinear_coord(double p, int extent) {
  BilinearCoord c;
  const double clamped = std::clamp(p, 0.0, static_cast<double>(extent - 1));
  c.i0 = static_cast<int>(std::floor(clamped));
  c.i0 = std::min(c.i0, extent - 1);
  c.i1 = std::min(c.i0 + 1, extent - 1);
  c.frac = clamped - c.i0;
  return c;
}

double bilinear_sample(const std::vector<std::uint8_t>& plane, int w, const BilinearCoord& cx,
                       const BilinearCoord& cy) {
  const double p00 = plane[static_cast<std::size_t>(cy.i0) * w + cx.i0];
  const double p10 = plane[static_cast<std::size_t>(cy.i0) * w + cx.i1];
  const double p01 = plane[static_cast<std::size_t>(cy.i1) * w + cx.i0];
  const double p11 = plane[static_cast<std::size_t>(cy.i1) * w + cx.i1];
  const double a = p00 + (p10 - p00) * cx.frac;
  const double b = p01 + (p11 - p01) * cx.frac;
  return a + (b - a) * cy.frac;
}

/// One reflecting random-walk step inside the bounds.
Vec2 walk_step(const Vec2& pos, double& heading, double speed, const ArenaBounds& bounds,
               Rng& rng) {
  std::normal_distribution<double> wander(0.0, 0.25);
  heading += wander(rng);
  Vec2 next = pos + Vec2{speed * std::cos(heading), speed * std::sin(heading)};
  if (next.x < bounds.x_min) {
    next.x = 2.0 * bounds.x_min - next.x;
    heading = 3.14159265358979323846 - heading;
  } else if (next.x > bounds.x_max) {
    next.x = 2.0 * bounds.x_max - next.x;
    heading = 3.14159265358979323846 - heading;
  }
  if (next.y < bounds.y_min) {
    next.y = 2.0 * bounds.y_min - next.y;
    heading = -heading;
  } else if (next.y > bounds.y_max) {
    next.y = 2.0 * bounds.y_max - next.y;
    heading = -heading;
  }
  next.x = std::clamp(next.x, bounds.x_min, bounds.x_max);
  next.y = std::clamp(next.y, bounds.y_min, bounds.y_max);
  return next;
}

void validate_pipeline_config(const TrainingSet& ts, const PipelineConfig& config) {
  if (config.k < 1 || config.k > ts.size())
    throw std::invalid_argument("pipeline config: k out of range for training set");
  if (config.n_particles < 1) throw std::invalid_argument("pipeline config: need particles");
  if (config.n_samples < 0) throw std::invalid_argument("pipeline config: negative n_samples");
  if (config.measurement.k() != config.k)
    throw std::invalid_argument("pipeline config: measurement model k does not match");
  config.arena.validate();
}

}  // namespace

FloorMap generate_floor(const ArenaBounds& bounds, double meters_per_pixel,
                        const TextureSpec& spec, Rng& rng) {
  bounds.validate();
  if (!(meters_per_pixel > 0.0)) throw std::invalid_argument("generate_floor: bad resolution");
  const int w = static_cast<int>(std::lround(bounds.width() / meters_per_pixel));
  const int h = static_cast<int>(std::lround(bounds.height() / meters_per_pixel));
  if (w < 1 || h < 1) throw std::invalid_argument("generate_floor: zero-size map");
  if (spec.richness < 0.0 || spec.octaves < 1)
    throw std::invalid_argument("generate_floor: bad texture spec");

  const std::uint64_t base = rng();
  const std::uint64_t seed_y = derive_seed(base, 101);
  const std::uint64_t seed_u = derive_seed(base, 102);
  const std::uint64_t seed_v = derive_seed(base, 103);

  FloorMap map;
  map.meters_per_pixel = meters_per_pixel;
  map.bounds = bounds;
  map.image = ImageYuv(w, h);
  for (int py = 0; py < h; ++py) {
    const double my = bounds.y_min + (py + 0.5) * meters_per_pixel;
    for (int px = 0; px < w; ++px) {
      const double mx = bounds.x_min + (px + 0.5) * meters_per_pixel;
      const double ny = octave_noise(seed_y, mx, my, spec.octaves, spec.base_wavelength_m);
      const double nu = octave_noise(seed_u, mx, my, spec.octaves, spec.base_wavelength_m);
      const double nv = octave_noise(seed_v, mx, my, spec.octaves, spec.base_wavelength_m);
      map.image.y_at(px, py) = to_u8(128.0 + spec.richness * 110.0 * ny);
      map.image.u_at(px, py) = to_u8(128.0 + spec.richness * spec.color_variation * 80.0 * nu);
      map.image.v_at(px, py) = to_u8(128.0 + spec.richness * spec.color_variation * 80.0 * nv);
    }
  }

  if (spec.n_stamps > 0) {
    const double radius_px = 0.5 * spec.stamp_size_m / meters_per_pixel;
    std::uniform_real_distribution<double> ux(radius_px, w - 1 - radius_px);
    std::uniform_real_distribution<double> uy(radius_px, h - 1 - radius_px);
    for (int s = 0; s < spec.n_stamps; ++s) apply_stamp(map.image, ux(rng), uy(rng), radius_px);
  }
  return map;
}

ArenaBounds flight_bounds(const ArenaBounds& arena, const CameraModel& cam) {
  double mx = 0.5 * cam.footprint_width;
  double my = 0.5 * cam.footprint_height();
  if (cam.max_rotation != 0.0) {
    // Rotated footprint: bound by the half-diagonal on both axes.
    mx = my = 0.5 * std::hypot(cam.footprint_width, cam.footprint_height());
  }
  ArenaBounds fb = arena.shrunk(mx, my);
  fb.validate();
  return fb;
}

ImageYuv render_view(const FloorMap& map, const CameraModel& cam, const Vec2& pos, Rng& rng) {
  map.image.validate();
  if (cam.out_width < 1 || cam.out_height < 1 || !(cam.footprint_width > 0.0))
    throw std::invalid_argument("render_view: bad camera model");
  const double fw = cam.footprint_width;
  const double fh = cam.footprint_height();
  if (!flight_bounds(map.bounds, cam).contains(pos))
    throw std::invalid_argument("render_view: camera footprint leaves the map");

  double rotation = 0.0;
  if (cam.max_rotation != 0.0) {
    std::uniform_real_distribution<double> rot(-cam.max_rotation, cam.max_rotation);
    rotation = rot(rng);
  }

  const int ow = cam.out_width;
  const int oh = cam.out_height;
  const std::size_t n = static_cast<std::size_t>(ow) * oh;
  std::vector<double> py(n), pu(n), pv(n);

  if (rotation == 0.0) {
    std::vector<BilinearCoord> cx(static_cast<std::size_t>(ow));
    std::vector<BilinearCoord> cy(static_cast<std::size_t>(oh));
    for (int ox = 0; ox < ow; ++ox) {
      const double mx = pos.x + ((ox + 0.5) / ow - 0.5) * fw;
      cx[ox] = bilinear_coord((mx - map.bounds.x_min) / map.meters_per_pixel - 0.5,
                              map.image.width);
    }
    for (int oy = 0; oy < oh; ++oy) {
      const double my = pos.y + ((oy + 0.5) / oh - 0.5) * fh;
      cy[oy] = bilinear_coord((my - map.bounds.y_min) / map.meters_per_pixel - 0.5,
                              map.image.height);
    }
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const std::size_t i = static_cast<std::size_t>(oy) * ow + ox;
        py[i] = bilinear_sample(map.image.y_plane, map.image.width, cx[ox], cy[oy]);
        pu[i] = bilinear_sample(map.image.u_plane, map.image.width, cx[ox], cy[oy]);
        pv[i] = bilinear_sample(map.image.v_plane, map.image.width, cx[ox], cy[oy]);
      }
  } else {
    const double cs = std::cos(rotation);
    const double sn = std::sin(rotation);
    for (int oy = 0; oy < oh; ++oy) {
      const double dy = ((oy + 0.5) / oh - 0.5) * fh;
      for (int ox = 0; ox < ow; ++ox) {
        const double dx = ((ox + 0.5) / ow - 0.5) * fw;
        const double mx = pos.x + dx * cs - dy * sn;
        const double my = pos.y + dx * sn + dy * cs;
        const auto bx = bilinear_coord((mx - map.bounds.x_min) / map.meters_per_pixel - 0.5,
                                       map.image.width);
        const auto by = bilinear_coord((my - map.bounds.y_min) / map.meters_per_pixel - 0.5,
                                       map.image.height);
        const std::size_t i = static_cast<std::size_t>(oy) * ow + ox;
        py[i] = bilinear_sample(map.image.y_plane, map.image.width, bx, by);
        pu[i] = bilinear_sample(map.image.u_plane, map.image.width, bx, by);
        pv[i] = bilinear_sample(map.image.v_plane, map.image.width, bx, by);
      }
    }
  }

  box_blur_plane(py, ow, oh, cam.blur_radius);
  box_blur_plane(pu, ow, oh, cam.blur_radius);
  box_blur_plane(pv, ow, oh, cam.blur_radius);

  if (cam.pixel_noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cam.pixel_noise_sigma);
    for (auto& v : py) v += noise(rng);
    for (auto& v : pu) v += noise(rng);
    for (auto& v : pv) v += noise(rng);
  }

  ImageYuv out(ow, oh);
  for (std::size_t i = 0; i < n; ++i) {
    out.y_plane[i] = to_u8(py[i]);
    out.u_plane[i] = to_u8(pu[i]);
    out.v_plane[i] = to_u8(pv[i]);
  }
  return out;
}

Trajectory make_waypoint_path(const std::vector<Vec2>& waypoints, double speed) {
  if (waypoints.empty()) throw std::invalid_argument("make_waypoint_path: no waypoints");
  if (!(speed > 0.0)) throw std::invalid_argument("make_waypoint_path: speed must be positive");
  Trajectory traj;
  traj.positions.push_back(waypoints.front());
  for (std::size_t s = 0; s + 1 < waypoints.size(); ++s) {
    const Vec2 a = waypoints[s];
    const Vec2 b = waypoints[s + 1];
    const double len = distance(a, b);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / speed)));
    for (int i = 1; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      traj.positions.push_back({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t});
    }
  }
  return traj;
}

Trajectory make_trajectory(TrajectoryKind kind, const ArenaBounds& bounds, int n_ticks,
                           double speed, Rng& rng) {
  bounds.validate();
  if (n_ticks < 1) throw std::invalid_argument("make_trajectory: need at least one tick");
  if (speed < 0.0) throw std::invalid_argument("make_trajectory: negative speed");
  if (speed > std::min(bounds.width(), bounds.height()))
    throw std::invalid_argument("make_trajectory: speed too large to stay in bounds");

  Trajectory traj;
  traj.positions.reserve(static_cast<std::size_t>(n_ticks));

  if (kind == TrajectoryKind::kRandomWalk) {
    std::uniform_real_distribution<double> ux(bounds.x_min, bounds.x_max);
    std::uniform_real_distribution<double> uy(bounds.y_min, bounds.y_max);
    std::uniform_real_distribution<double> uh(0.0, 6.283185307179586);
    Vec2 pos{ux(rng), uy(rng)};
    double heading = uh(rng);
    traj.positions.push_back(pos);
    for (int t = 1; t < n_ticks; ++t) {
      pos = walk_step(pos, heading, speed, bounds, rng);
      traj.positions.push_back(pos);
    }
    return traj;
  }

  // Serpentine sweep sized to roughly n_ticks * speed of path length, then
  // resampled by arc length to exactly n_ticks positions.
  if (n_ticks == 1 || speed == 0.0) {
    traj.positions.assign(static_cast<std::size_t>(n_ticks),
                          Vec2{0.5 * (bounds.x_min + bounds.x_max),
                               0.5 * (bounds.y_min + bounds.y_max)});
    return traj;
  }
  const double target_length = n_ticks * speed;
  int rows = static_cast<int>(std::lround((target_length - bounds.height()) / bounds.width()));
  rows = std::clamp(rows, 2, 400);
  std::vector<Vec2> waypoints;
  for (int r = 0; r < rows; ++r) {
    const double y = bounds.y_min + bounds.height() * r / (rows - 1);
    if (r % 2 == 0) {
      waypoints.push_back({bounds.x_min, y});
      waypoints.push_back({bounds.x_max, y});
    } else {
      waypoints.push_back({bounds.x_max, y});
      waypoints.push_back({bounds.x_min, y});
    }
  }
  std::vector<double> cumulative{0.0};
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i)
    cumulative.push_back(cumulative.back() + distance(waypoints[i], waypoints[i + 1]));
  const double total = cumulative.back();
  std::size_t seg = 0;
  for (int t = 0; t < n_ticks; ++t) {
    const double s = total * t / (n_ticks - 1);
    while (seg + 2 < cumulative.size() && cumulative[seg + 1] < s) ++seg;
    const double seg_len = cumulative[seg + 1] - cumulative[seg];
    const double u = seg_len > 0.0 ? (s - cumulative[seg]) / seg_len : 0.0;
    const Vec2 a = waypoints[seg];
    const Vec2 b = waypoints[seg + 1];
    traj.positions.push_back({a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u});
  }
  return traj;
}

RecordedFlight record_flight(const FloorMap& map, const CameraModel& cam, const Trajectory& traj,
                             Rng& rng) {
  if (traj.size() == 0) throw std::invalid_argument("record_flight: empty trajectory");
  RecordedFlight flight;
  flight.trajectory = traj;
  flight.frames.reserve(traj.positions.size());
  double total_ms = 0.0;
  for (const auto& pos : traj.positions) {
    const auto t0 = Clock::now();
    flight.frames.push_back(render_view(map, cam, pos, rng));
    total_ms += elapsed_ms(t0, Clock::now());
  }
  flight.mean_render_ms = total_ms / traj.size();
  return flight;
}

TrainingSet build_dataset(const FloorMap& map, const CameraModel& cam, const Trajectory& traj,
                          const TextonDictionary& dict, Rng& rng) {
  if (traj.size() == 0) throw std::invalid_argument("build_dataset: empty trajectory");
  std::vector<TrainingSet::Entry> entries;
  entries.reserve(traj.positions.size());
  const SamplingMode full = SamplingMode::full_sampling();
  for (const auto& pos : traj.positions) {
    const ImageYuv frame = render_view(map, cam, pos, rng);
    entries.push_back({extract_histogram(frame, dict, full, rng), pos});
  }
  return fit(std::move(entries));
}

CalibrationResult calibrate_models(const TrainingSet& ts, const TextonDictionary& dict,
                                   const FloorMap& map, const CameraModel& cam,
                                   const Trajectory& calib_traj, int n_samples, int k, Rng& rng) {
  if (calib_traj.size() < 3)
    throw std::invalid_argument("calibrate_models: calibration trajectory too short");
  CalibrationResult result;
  result.motion = estimate_process_noise(calib_traj.positions);
  const SamplingMode mode =
      n_samples == 0 ? SamplingMode::full_sampling() : SamplingMode::random_sampling(n_samples);
  result.truth = calib_traj.positions;
  result.predictions.reserve(result.truth.size());
  for (const auto& pos : calib_traj.positions) {
    const ImageYuv frame = render_view(map, cam, pos, rng);
    const TextonHistogram hist = extract_histogram(frame, dict, mode, rng);
    result.predictions.push_back(predict(ts, hist, k));
  }
  result.measurement.sigmas = estimate_measurement_covariances(result.truth, result.predictions);
  return result;
}

RunResult run_localization(const TrainingSet& ts, const TextonDictionary& dict,
                           const RecordedFlight& flight, const PipelineConfig& config) {
  validate_pipeline_config(ts, config);
  if (flight.frames.size() != flight.trajectory.positions.size() || flight.frames.empty())
    throw std::invalid_argument("run_localization: malformed flight");

  Rng hist_rng = make_rng(config.seed, kStreamHist);
  Rng filter_rng = make_rng(config.seed, kStreamFilter);
  const SamplingMode mode = config.n_samples == 0
                                ? SamplingMode::full_sampling()
                                : SamplingMode::random_sampling(config.n_samples);

  FilterState state = init_particles(config.n_particles, config.arena, filter_rng);

  RunResult result;
  result.frames.reserve(flight.frames.size());
  for (std::size_t i = 0; i < flight.frames.size(); ++i) {
    FrameRecord rec;
    rec.tick = static_cast<int>(i);
    rec.truth = flight.trajectory.positions[i];

    const auto t0 = Clock::now();
    const TextonHistogram hist = extract_histogram(flight.frames[i], dict, mode, hist_rng);
    const auto t1 = Clock::now();
    rec.knn = predict(ts, hist, config.k);
    const auto t2 = Clock::now();
    const std::vector<Vec2> z = rec.knn.positions();
    FilterState next = update(state, z, config.motion, config.measurement, filter_rng);
    const auto t3 = Clock::now();
    rec.estimate = map_estimate(next, z, config.motion, config.measurement, state);
    const auto t4 = Clock::now();

    rec.spread = uncertainty(next);
    rec.hist_ms = elapsed_ms(t0, t1);
    rec.knn_ms = elapsed_ms(t1, t2);
    rec.filter_ms = elapsed_ms(t2, t3);
    rec.map_ms = elapsed_ms(t3, t4);
    rec.loop_ms = elapsed_ms(t0, t4);
    result.frames.push_back(std::move(rec));
    state = std::move(next);
  }

  // Summary statistics over all frames.
  RunSummary& s = result.summary;
  s.frames = static_cast<int>(result.frames.size());
  const double n = static_cast<double>(s.frames);
  double sq = 0.0;
  for (const auto& rec : result.frames) {
    s.mean_abs_err_x += std::abs(rec.estimate.x - rec.truth.x);
    s.mean_abs_err_y += std::abs(rec.estimate.y - rec.truth.y);
    const Vec2 e = rec.estimate - rec.truth;
    sq += e.x * e.x + e.y * e.y;
    s.mean_hist_ms += rec.hist_ms;
    s.mean_knn_ms += rec.knn_ms;
    s.mean_filter_ms += rec.filter_ms;
    s.mean_map_ms += rec.map_ms;
    s.mean_loop_ms += rec.loop_ms;
  }
  s.mean_abs_err_x /= n;
  s.mean_abs_err_y /= n;
  s.rmse = std::sqrt(sq / n);
  s.mean_hist_ms /= n;
  s.mean_knn_ms /= n;
  s.mean_filter_ms /= n;
  s.mean_map_ms /= n;
  s.mean_loop_ms /= n;
  if (s.frames > 1) {
    double vx = 0.0, vy = 0.0;
    for (const auto& rec : result.frames) {
      const double ax = std::abs(rec.estimate.x - rec.truth.x) - s.mean_abs_err_x;
      const double ay = std::abs(rec.estimate.y - rec.truth.y) - s.mean_abs_err_y;
      vx += ax * ax;
      vy += ay * ay;
    }
    s.std_abs_err_x = std::sqrt(vx / (n - 1.0));
    s.std_abs_err_y = std::sqrt(vy / (n - 1.0));
  }
  s.loop_hz = s.mean_loop_ms > 0.0 ? 1000.0 / s.mean_loop_ms : 0.0;
  s.mean_render_ms = flight.mean_render_ms;
  return result;
}

RunResult run_localization(const TrainingSet& ts, const TextonDictionary& dict,
                           const FloorMap& map, const CameraModel& cam,
                           const Trajectory& test_traj, const PipelineConfig& config) {
  Rng camera_rng = make_rng(config.seed, kStreamCamera);
  const RecordedFlight flight = record_flight(map, cam, test_traj, camera_rng);
  return run_localization(ts, dict, flight, config);
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kParticles:
      return "particles";
    case SweepAxis::kSamples:
      return "samples";
    case SweepAxis::kTrainingSize:
      return "training_size";
  }
  return "unknown";
}

std::vector<SweepRow> benchmark_sweep(const TrainingSet& ts, const TextonDictionary& dict,
                                      const RecordedFlight& flight, const PipelineConfig& base,
                                      SweepAxis axis, const std::vector<double>& values,
                                      int n_seeds) {
  if (values.empty()) throw std::invalid_argument("benchmark_sweep: no axis values");
  if (n_seeds < 1) throw std::invalid_argument("benchmark_sweep: need at least one seed");
  for (double v : values) {
    if (!(v >= 1.0)) throw std::invalid_argument("benchmark_sweep: axis values must be >= 1");
    if (axis == SweepAxis::kTrainingSize &&
        (v > ts.size() || v < static_cast<double>(base.k)))
      throw std::invalid_argument("benchmark_sweep: training size outside [k, N]");
  }

  std::vector<RunSummary> sums(values.size());
  // Seed-major order so slow machine drift averages out across values.
  for (int seed_i = 0; seed_i < n_seeds; ++seed_i) {
    for (std::size_t vi = 0; vi < values.size(); ++vi) {
      PipelineConfig config = base;
      config.seed = derive_seed(base.seed, kStreamSweep + static_cast<std::uint64_t>(seed_i));
      const int value = static_cast<int>(values[vi]);
      const TrainingSet* active = &ts;
      TrainingSet subset;
      switch (axis) {
        case SweepAxis::kParticles:
          config.n_particles = value;
          break;
        case SweepAxis::kSamples:
          config.n_samples = value;
          break;
        case SweepAxis::kTrainingSize:
          subset.entries.assign(ts.entries.begin(), ts.entries.begin() + value);
          active = &subset;
          break;
      }
      const RunResult run = run_localization(*active, dict, flight, config);
      RunSummary& acc = sums[vi];
      const RunSummary& r = run.summary;
      acc.frames = r.frames;
      acc.mean_abs_err_x += r.mean_abs_err_x;
      acc.mean_abs_err_y += r.mean_abs_err_y;
      acc.std_abs_err_x += r.std_abs_err_x;
      acc.std_abs_err_y += r.std_abs_err_y;
      acc.rmse += r.rmse;
      acc.mean_hist_ms += r.mean_hist_ms;
      acc.mean_knn_ms += r.mean_knn_ms;
      acc.mean_filter_ms += r.mean_filter_ms;
      acc.mean_map_ms += r.mean_map_ms;
      acc.mean_loop_ms += r.mean_loop_ms;
      acc.mean_render_ms += r.mean_render_ms;
    }
  }

  std::vector<SweepRow> rows(values.size());
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    RunSummary& m = sums[vi];
    const double inv = 1.0 / n_seeds;
    m.mean_abs_err_x *= inv;
    m.mean_abs_err_y *= inv;
    m.std_abs_err_x *= inv;
    m.std_abs_err_y *= inv;
    m.rmse *= inv;
    m.mean_hist_ms *= inv;
    m.mean_knn_ms *= inv;
    m.mean_filter_ms *= inv;
    m.mean_map_ms *= inv;
    m.mean_loop_ms *= inv;
    m.mean_render_ms *= inv;
    m.loop_hz = m.mean_loop_ms > 0.0 ? 1000.0 / m.mean_loop_ms : 0.0;
    rows[vi] = {values[vi], n_seeds, m};
  }
  return rows;
}

std::vector<LandingTrial> landing_simulation(const TrainingSet& ts, const TextonDictionary& dict,
                                             const FloorMap& map, const CameraModel& cam,
                                             const PipelineConfig& config, int n_trials,
                                             double zone_radius, double theta, int tick_budget,
                                             Rng& rng) {
  validate_pipeline_config(ts, config);
  if (n_trials < 1) throw std::invalid_argument("landing_simulation: need at least one trial");
  if (!(zone_radius > 0.0) || theta < 0.0)
    throw std::invalid_argument("landing_simulation: bad radius or thresholds");
  if (tick_budget < 1) throw std::invalid_argument("landing_simulation: need a tick budget");

  const ArenaBounds fb = flight_bounds(config.arena, cam);
  const double walk_speed = 0.08;
  const SamplingMode mode = config.n_samples == 0
                                ? SamplingMode::full_sampling()
                                : SamplingMode::random_sampling(config.n_samples);

  std::vector<LandingTrial> trials;
  trials.reserve(static_cast<std::size_t>(n_trials));
  std::uniform_real_distribution<double> ux(fb.x_min, fb.x_max);
  std::uniform_real_distribution<double> uy(fb.y_min, fb.y_max);
  std::uniform_real_distribution<double> uh(0.0, 6.283185307179586);

  for (int trial = 0; trial < n_trials; ++trial) {
    LandingTrial rec;
    rec.trial = trial;
    rec.zone = {{ux(rng), uy(rng)}, zone_radius, theta, theta};

    Rng walk_rng(rng());
    Rng camera_rng(rng());
    Rng hist_rng(rng());
    Rng filter_rng(rng());

    Vec2 pos{ux(walk_rng), uy(walk_rng)};
    double heading = uh(walk_rng);
    FilterState state = init_particles(config.n_particles, config.arena, filter_rng);

    for (int tick = 0; tick < tick_budget; ++tick) {
      if (tick > 0) pos = walk_step(pos, heading, walk_speed, fb, walk_rng);
      const ImageYuv frame = render_view(map, cam, pos, camera_rng);
      const TextonHistogram hist = extract_histogram(frame, dict, mode, hist_rng);
      const Prediction pred = predict(ts, hist, config.k);
      const std::vector<Vec2> z = pred.positions();
      FilterState next = update(state, z, config.motion, config.measurement, filter_rng);
      const Vec2 est = map_estimate(next, z, config.motion, config.measurement, state);
      const Vec2 spread = uncertainty(next);
      state = std::move(next);

      if (landing_trigger(est, spread, rec.zone)) {
        rec.triggered = true;
        rec.tick = tick;
        rec.estimate = est;
        rec.spread = spread;
        rec.truth = pos;
        break;
      }
      rec.estimate = est;
      rec.spread = spread;
      rec.truth = pos;
    }
    rec.dist_to_center = distance(rec.truth, rec.zone.center);
    rec.in_zone = rec.triggered && rec.dist_to_center <= rec.zone.radius;
    rec.outlier_distance =
        rec.triggered ? std::max(0.0, rec.dist_to_center - rec.zone.radius) : 0.0;
    trials.push_back(rec);
  }
  return trials;
}

void save_floor(const FloorMap& map, const std::string& ppm_path, const std::string& json_path,
                const std::string& command_line) {
  write_ppm(map.image, ppm_path);
  nlohmann::json j;
  j["schema"] = "texloc.floor/1";
  if (!command_line.empty()) j["cmd"] = command_line;
  j["meters_per_pixel"] = map.meters_per_pixel;
  j["bounds"] = {{"x_min", map.bounds.x_min},
                 {"x_max", map.bounds.x_max},
                 {"y_min", map.bounds.y_min},
                 {"y_max", map.bounds.y_max}};
  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("save_floor: cannot open " + json_path);
  out << j.dump(2) << "\n";
}

FloorMap load_floor(const std::string& ppm_path, const std::string& json_path) {
  FloorMap map;
  map.image = read_ppm(ppm_path);
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("load_floor: cannot open " + json_path);
  nlohmann::json j;
  in >> j;
  map.meters_per_pixel = j.at("meters_per_pixel").get<double>();
  const auto& b = j.at("bounds");
  map.bounds = {b.at("x_min").get<double>(), b.at("x_max").get<double>(),
                b.at("y_min").get<double>(), b.at("y_max").get<double>()};
  map.bounds.validate();
  return map;
}

void save_trajectory(const Trajectory& traj, const std::string& path,
                     const std::string& command_line) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_trajectory: cannot open " + path);
  out << "# schema=texloc.trajectory/1\n";
  if (!command_line.empty()) out << "# cmd=" << command_line << "\n";
  out << "tick,x,y\n";
  out.precision(17);
  for (std::size_t i = 0; i < traj.positions.size(); ++i)
    out << i << "," << traj.positions[i].x << "," << traj.positions[i].y << "\n";
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trajectory: cannot open " + path);
  Trajectory traj;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("tick,", 0) != 0)
        throw std::runtime_error("load_trajectory: missing tick,x,y header");
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() != 3) throw std::runtime_error("load_trajectory: malformed row");
    traj.positions.push_back({values[1], values[2]});
  }
  if (traj.positions.empty()) throw std::runtime_error("load_trajectory: empty trajectory");
  return traj;
}

void save_run_result(const RunResult& result, const std::string& frames_csv,
                     const std::string& summary_csv, const std::string& command_line) {
  {
    std::ofstream out(frames_csv);
    if (!out) throw std::runtime_error("save_run_result: cannot open " + frames_csv);
    out << "# schema=texloc.frames/1\n";
    if (!command_line.empty()) out << "# cmd=" << command_line << "\n";
    const int k = result.frames.empty() ? 0 : static_cast<int>(result.frames[0].knn.ranked.size());
    out << "tick,truth_x,truth_y,est_x,est_y,std_x,std_y,hist_ms,knn_ms,filter_ms,map_ms,loop_ms";
    for (int j = 1; j <= k; ++j) out << ",z" << j << "_x,z" << j << "_y,d" << j;
    out << "\n";
    out.precision(17);
    for (const auto& f : result.frames) {
      out << f.tick << "," << f.truth.x << "," << f.truth.y << "," << f.estimate.x << ","
          << f.estimate.y << "," << f.spread.x << "," << f.spread.y << "," << f.hist_ms << ","
          << f.knn_ms << "," << f.filter_ms << "," << f.map_ms << "," << f.loop_ms;
      for (const auto& r : f.knn.ranked)
        out << "," << r.position.x << "," << r.position.y << "," << r.distance;
      out << "\n";
    }
  }
  {
    std::ofstream out(summary_csv);
    if (!out) throw std::runtime_error("save_run_result: cannot open " + summary_csv);
    out << "# schema=texloc.summary/1\n";
    if (!command_line.empty()) out << "# cmd=" << command_line << "\n";
    out << "frames,mean_abs_err_x,mean_abs_err_y,std_abs_err_x,std_abs_err_y,rmse,"
           "mean_hist_ms,mean_knn_ms,mean_filter_ms,mean_map_ms,mean_loop_ms,loop_hz,"
           "mean_render_ms\n";
    const RunSummary& s = result.summary;
    out.precision(17);
    out << s.frames << "," << s.mean_abs_err_x << "," << s.mean_abs_err_y << ","
        << s.std_abs_err_x << "," << s.std_abs_err_y << "," << s.rmse << "," << s.mean_hist_ms
        << "," << s.mean_knn_ms << "," << s.mean_filter_ms << "," << s.mean_map_ms << ","
        << s.mean_loop_ms << "," << s.loop_hz << "," << s.mean_render_ms << "\n";
  }
}

void save_sweep(const std::vector<SweepRow>& rows, SweepAxis axis, const std::string& path,
                const std::string& command_line) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_sweep: cannot open " + path);
  out << "# schema=texloc.sweep/1\n";
  if (!command_line.empty()) out << "# cmd=" << command_line << "\n";
  out << "axis,value,seeds,mean_abs_err_x,mean_abs_err_y,std_abs_err_x,std_abs_err_y,rmse,"
         "mean_hist_ms,mean_knn_ms,mean_filter_ms,mean_map_ms,mean_loop_ms,loop_hz\n";
  out.precision(17);
  for (const auto& row : rows) {
    const RunSummary& s = row.mean;
    out << axis_name(axis) << "," << row.value << "," << row.seeds << "," << s.mean_abs_err_x
        << "," << s.mean_abs_err_y << "," << s.std_abs_err_x << "," << s.std_abs_err_y << ","
        << s.rmse << "," << s.mean_hist_ms << "," << s.mean_knn_ms << "," << s.mean_filter_ms
        << "," << s.mean_map_ms << "," << s.mean_loop_ms << "," << s.loop_hz << "\n";
  }
}

void save_landing_trials(const std::vector<LandingTrial>& trials, const std::string& path,
                         const std::string& command_line) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_landing_trials: cannot open " + path);
  out << "# schema=texloc.landing/1\n";
  if (!command_line.empty()) out << "# cmd=" << command_line << "\n";
  out << "trial,zone_x,zone_y,radius,theta_x,theta_y,triggered,tick,est_x,est_y,std_x,std_y,"
         "true_x,true_y,dist_to_center,in_zone,outlier_distance\n";
  out.precision(17);
  for (const auto& t : trials) {
    out << t.trial << "," << t.zone.center.x << "," << t.zone.center.y << "," << t.zone.radius
        << "," << t.zone.theta_x << "," << t.zone.theta_y << "," << (t.triggered ? 1 : 0) << ","
        << t.tick << "," << t.estimate.x << "," << t.estimate.y << "," << t.spread.x << ","
        << t.spread.y << "," << t.truth.x << "," << t.truth.y << "," << t.dist_to_center << ","
        << (t.in_zone ? 1 : 0) << "," << t.outlier_distance << "\n";
  }
}

}  // namespace texloc
