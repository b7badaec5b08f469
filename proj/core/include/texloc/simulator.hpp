#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texloc/filter.hpp"
#include "texloc/geometry.hpp"
#include "texloc/image.hpp"
#include "texloc/knn.hpp"
#include "texloc/rng.hpp"
#include "texloc/textons.hpp"

namespace texloc {

/// The hyperspatial map: a floor image with its metric placement.
struct FloorMap {
  ImageYuv image;
  double meters_per_pixel = 0.005;
  ArenaBounds bounds;

  /// Continuous pixel coordinate (pixel-center convention) of a metric point.
  Vec2 to_pixels(const Vec2& m) const {
    return {(m.x - bounds.x_min) / meters_per_pixel - 0.5,
            (m.y - bounds.y_min) / meters_per_pixel - 0.5};
  }
};

/// Procedural texture knobs. richness 0 produces a constant-color floor;
/// stamps repeat one fixed pattern to create deliberate ambiguity.
struct TextureSpec {
  double richness = 1.0;
  int octaves = 5;
  double base_wavelength_m = 2.5;
  double color_variation = 1.0;
  int n_stamps = 0;
  double stamp_size_m = 0.4;
};

/// Downward-looking orthographic camera at constant height.
struct CameraModel {
  int out_width = 640;
  int out_height = 480;
  double footprint_width = 1.0;  ///< meters of floor visible across the image
  double pixel_noise_sigma = 0.0;
  int blur_radius = 0;
  double max_rotation = 0.0;  ///< radians; 0 keeps the view axis-aligned

  double footprint_height() const {
    return footprint_width * static_cast<double>(out_height) / out_width;
  }
};

struct Trajectory {
  std::vector<Vec2> positions;
  double tick_rate = 12.5;  ///< Hz

  int size() const { return static_cast<int>(positions.size()); }
};

enum class TrajectoryKind { kWaypoints, kRandomWalk };

/// A rendered flight: per-tick ground truth and camera frames.
struct RecordedFlight {
  Trajectory trajectory;
  std::vector<ImageYuv> frames;
  double mean_render_ms = 0.0;
};

/// Per-frame pipeline knobs with the framework defaults.
struct PipelineConfig {
  int n_samples = 400;  ///< histogram samples per frame; 0 = full sampling
  int k = 5;
  int n_particles = 50;
  std::uint64_t seed = 1;
  ArenaBounds arena;
  MotionModel motion;
  MeasurementModel measurement;
};

struct FrameRecord {
  int tick = 0;
  Vec2 truth;
  Prediction knn;
  Vec2 estimate;
  Vec2 spread;
  double hist_ms = 0.0;
  double knn_ms = 0.0;
  double filter_ms = 0.0;
  double map_ms = 0.0;
  double loop_ms = 0.0;  ///< outer wall time of the four stages
};

struct RunSummary {
  int frames = 0;
  double mean_abs_err_x = 0.0;
  double mean_abs_err_y = 0.0;
  double std_abs_err_x = 0.0;
  double std_abs_err_y = 0.0;
  double rmse = 0.0;
  double mean_hist_ms = 0.0;
  double mean_knn_ms = 0.0;
  double mean_filter_ms = 0.0;
  double mean_map_ms = 0.0;
  double mean_loop_ms = 0.0;
  double loop_hz = 0.0;
  double mean_render_ms = 0.0;
};

struct RunResult {
  std::vector<FrameRecord> frames;
  RunSummary summary;
};

enum class SweepAxis { kParticles, kSamples, kTrainingSize };

struct SweepRow {
  double value = 0.0;
  int seeds = 0;
  RunSummary mean;
};

struct LandingTrial {
  int trial = 0;
  LandingZone zone;
  bool triggered = false;
  int tick = -1;
  Vec2 estimate;
  Vec2 spread;
  Vec2 truth;
  double dist_to_center = 0.0;   ///< true position to zone center
  bool in_zone = false;          ///< true position within the radius
  double outlier_distance = 0.0; ///< true position to the circumference, 0 if inside
};

/// Deterministic multi-octave value-noise floor.
FloorMap generate_floor(const ArenaBounds& bounds, double meters_per_pixel,
                        const TextureSpec& spec, Rng& rng);

/// Crops the camera footprint around pos, resamples bilinearly to the output
/// resolution, then applies rotation, box blur and clamped Gaussian noise.
ImageYuv render_view(const FloorMap& map, const CameraModel& cam, const Vec2& pos, Rng& rng);

/// Bounds a trajectory must stay inside so the footprint never leaves the map.
ArenaBounds flight_bounds(const ArenaBounds& arena, const CameraModel& cam);

/// In-bounds path; kWaypoints sweeps the bounds with a serpentine coverage
/// pattern, kRandomWalk wanders with reflection at the walls.
Trajectory make_trajectory(TrajectoryKind kind, const ArenaBounds& bounds, int n_ticks,
                           double speed, Rng& rng);

/// Piecewise-linear path through the given waypoints at up to `speed` meters
/// per tick; every waypoint is hit exactly.
Trajectory make_waypoint_path(const std::vector<Vec2>& waypoints, double speed);

/// Renders every trajectory point and records frames plus render timing.
RecordedFlight record_flight(const FloorMap& map, const CameraModel& cam,
                             const Trajectory& traj, Rng& rng);

/// Full-sampling histograms for every trajectory point, paired with the
/// exact ground-truth position.
TrainingSet build_dataset(const FloorMap& map, const CameraModel& cam, const Trajectory& traj,
                          const TextonDictionary& dict, Rng& rng);

/// Fits the motion model from the calibration trajectory and the per-rank
/// measurement covariances from k-NN errors on freshly rendered calibration
/// frames (flight conditions: camera noise + random sampling).
struct CalibrationResult {
  MotionModel motion;
  MeasurementModel measurement;
  std::vector<Vec2> truth;
  std::vector<Prediction> predictions;
};
CalibrationResult calibrate_models(const TrainingSet& ts, const TextonDictionary& dict,
                                   const FloorMap& map, const CameraModel& cam,
                                   const Trajectory& calib_traj, int n_samples, int k, Rng& rng);

/// The per-frame loop on pre-rendered frames: histogram, k-NN, filter
/// update, MAP estimate, with per-stage wall times.
RunResult run_localization(const TrainingSet& ts, const TextonDictionary& dict,
                           const RecordedFlight& flight, const PipelineConfig& config);

/// Convenience overload that renders the test trajectory first.
RunResult run_localization(const TrainingSet& ts, const TextonDictionary& dict,
                           const FloorMap& map, const CameraModel& cam,
                           const Trajectory& test_traj, const PipelineConfig& config);

/// One summary row per axis value, averaged over n_seeds pipeline seeds on
/// the same recorded flight (ceteris paribus).
std::vector<SweepRow> benchmark_sweep(const TrainingSet& ts, const TextonDictionary& dict,
                                      const RecordedFlight& flight, const PipelineConfig& base,
                                      SweepAxis axis, const std::vector<double>& values,
                                      int n_seeds);

/// Random-walk flights that land as soon as the trigger fires; one record
/// per trial with the trigger/truth geometry.
std::vector<LandingTrial> landing_simulation(const TrainingSet& ts, const TextonDictionary& dict,
                                             const FloorMap& map, const CameraModel& cam,
                                             const PipelineConfig& config, int n_trials,
                                             double zone_radius, double theta, int tick_budget,
                                             Rng& rng);

/// Floor files: PPM image + JSON sidecar {meters_per_pixel, bounds}.
void save_floor(const FloorMap& map, const std::string& ppm_path, const std::string& json_path,
                const std::string& command_line = "");
FloorMap load_floor(const std::string& ppm_path, const std::string& json_path);

/// Trajectory CSV `tick,x,y`.
void save_trajectory(const Trajectory& traj, const std::string& path,
                     const std::string& command_line = "");
Trajectory load_trajectory(const std::string& path);

/// Per-frame log CSV and one-row summary CSV.
void save_run_result(const RunResult& result, const std::string& frames_csv,
                     const std::string& summary_csv, const std::string& command_line = "");
void save_sweep(const std::vector<SweepRow>& rows, SweepAxis axis, const std::string& path,
                const std::string& command_line = "");
void save_landing_trials(const std::vector<LandingTrial>& trials, const std::string& path,
                         const std::string& command_line = "");

std::string axis_name(SweepAxis axis);

}  // namespace texloc
