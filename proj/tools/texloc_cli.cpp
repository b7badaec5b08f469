// texloc: texton-based indoor localization workflows on synthetic floors.
//
// Exit codes: 0 success, 2 missing/unreadable files, 3 incompatible inputs
// (e.g. dictionary/dataset size mismatch), 4 invalid parameters.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "texloc/mapeval.hpp"
#include "texloc/simulator.hpp"

namespace fs = std::filesystem;
using namespace texloc;

namespace {

struct IncompatibleInputs : std::exception {
  std::string message;
  explicit IncompatibleInputs(std::string m) : message(std::move(m)) {}
  const char* what() const noexcept override { return message.c_str(); }
};

std::string join_args(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

ArenaBounds parse_size(const std::string& size) {
  const auto x = size.find('x');
  if (x == std::string::npos) throw std::invalid_argument("--size expects WxH, e.g. 5x5");
  const double w = std::stod(size.substr(0, x));
  const double h = std::stod(size.substr(x + 1));
  const ArenaBounds bounds{0.0, w, 0.0, h};
  bounds.validate();
  return bounds;
}

struct CameraFlags {
  int width = 640;
  int height = 480;
  double footprint = 1.0;
  double noise = 0.0;
  int blur = 0;

  CameraModel model() const {
    CameraModel cam;
    cam.out_width = width;
    cam.out_height = height;
    cam.footprint_width = footprint;
    cam.pixel_noise_sigma = noise;
    cam.blur_radius = blur;
    return cam;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--cam-width", width, "Camera width in pixels");
    cmd->add_option("--cam-height", height, "Camera height in pixels");
    cmd->add_option("--footprint", footprint, "Floor width visible to the camera [m]");
    cmd->add_option("--noise", noise, "Per-pixel Gaussian noise sigma");
    cmd->add_option("--blur", blur, "Box blur radius in pixels");
  }
};

FloorMap load_floor_dir(const std::string& dir) {
  return load_floor(dir + "/floor.ppm", dir + "/floor.json");
}

void check_compatible(const TextonDictionary& dict, const TrainingSet& ts) {
  if (ts.histogram_size() != dict.size())
    throw IncompatibleInputs("dataset histograms have " + std::to_string(ts.histogram_size()) +
                             " bins but the dictionary has " + std::to_string(dict.size()) +
                             " textons");
}

Trajectory test_trajectory(const std::string& traj_file, const std::string& kind, int frames,
                           double speed, const FloorMap& floor, const CameraModel& cam,
                           std::uint64_t seed) {
  if (!traj_file.empty()) return load_trajectory(traj_file);
  Rng rng = make_rng(seed, 11);
  const ArenaBounds fb = flight_bounds(floor.bounds, cam);
  const TrajectoryKind k =
      kind == "random_walk" ? TrajectoryKind::kRandomWalk : TrajectoryKind::kWaypoints;
  return make_trajectory(k, fb, frames, speed, rng);
}

/// Shared setup of localize / benchmark / landing: calibrates the motion and
/// measurement models from a random-walk pass over the map.
PipelineConfig calibrated_config(const TrainingSet& ts, const TextonDictionary& dict,
                                 const FloorMap& floor, const CameraModel& cam, int samples,
                                 int k, int particles, int calib_frames, double speed,
                                 std::uint64_t seed) {
  if (k > ts.size())
    throw IncompatibleInputs("k=" + std::to_string(k) + " exceeds the dataset size " +
                             std::to_string(ts.size()));
  Rng calib_rng = make_rng(seed, 12);
  const ArenaBounds fb = flight_bounds(floor.bounds, cam);
  const Trajectory calib_traj =
      make_trajectory(TrajectoryKind::kRandomWalk, fb, calib_frames, speed, calib_rng);
  const CalibrationResult calib =
      calibrate_models(ts, dict, floor, cam, calib_traj, samples, k, calib_rng);
  PipelineConfig config;
  config.n_samples = samples;
  config.k = k;
  config.n_particles = particles;
  config.seed = seed;
  config.arena = floor.bounds;
  config.motion = calib.motion;
  config.measurement = calib.measurement;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"texton-based indoor localization pipeline"};
  app.require_subcommand(1);
  const std::string cmdline = join_args(argc, argv);

  // gen-floor
  auto* gen = app.add_subcommand("gen-floor", "Generate a procedural floor map");
  std::string gen_size = "5x5", gen_out = "floor";
  double gen_mpp = 0.005;
  std::uint64_t gen_seed = 1;
  TextureSpec gen_spec;
  gen->add_option("--size", gen_size, "Arena size WxH in meters")->capture_default_str();
  gen->add_option("--mpp", gen_mpp, "Meters per map pixel")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Texture seed")->capture_default_str();
  gen->add_option("--richness", gen_spec.richness, "Texture richness, 0 = constant floor");
  gen->add_option("--octaves", gen_spec.octaves, "Noise octaves");
  gen->add_option("--wavelength", gen_spec.base_wavelength_m, "Coarsest feature scale [m]");
  gen->add_option("--color", gen_spec.color_variation, "Chroma variation");
  gen->add_option("--stamps", gen_spec.n_stamps, "Repeated ambiguous pattern stamps");
  gen->add_option("--stamp-size", gen_spec.stamp_size_m, "Stamp diameter [m]");
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

  // train-dict
  auto* train = app.add_subcommand("train-dict", "Learn a texton dictionary from rendered frames");
  std::string train_floor = "floor", train_out = "dict.json", train_traj_file;
  int train_textons = 20, train_patch = 6, train_images = 100, train_ppi = 1000, train_epochs = 10;
  std::uint64_t train_seed = 1;
  double train_speed = 0.08;
  CameraFlags train_cam;
  train->add_option("--floor", train_floor, "Floor directory")->capture_default_str();
  train->add_option("--textons", train_textons, "Dictionary size T")->capture_default_str();
  train->add_option("--patch", train_patch, "Patch width and height")->capture_default_str();
  train->add_option("--images", train_images, "Training images to render")->capture_default_str();
  train->add_option("--patches-per-image", train_ppi, "Patches sampled per image")
      ->capture_default_str();
  train->add_option("--epochs", train_epochs, "Training epochs")->capture_default_str();
  train->add_option("--speed", train_speed, "Survey speed [m/tick]");
  train->add_option("--traj", train_traj_file, "Optional trajectory CSV for the survey");
  train->add_option("--seed", train_seed, "Seed")->capture_default_str();
  train->add_option("--out", train_out, "Dictionary JSON path")->capture_default_str();
  train_cam.attach(train);

  // build-dataset
  auto* build = app.add_subcommand("build-dataset", "Render a survey and extract the training set");
  std::string build_floor = "floor", build_dict = "dict.json", build_out = "dataset.csv";
  std::string build_traj_file, build_traj_out, build_kind = "waypoints";
  int build_frames = 800;
  double build_speed = 0.085;
  std::uint64_t build_seed = 2;
  CameraFlags build_cam;
  build->add_option("--floor", build_floor, "Floor directory")->capture_default_str();
  build->add_option("--dict", build_dict, "Dictionary JSON")->capture_default_str();
  build->add_option("--frames", build_frames, "Survey length in frames")->capture_default_str();
  build->add_option("--traj-kind", build_kind, "waypoints or random_walk")->capture_default_str();
  build->add_option("--speed", build_speed, "Survey speed [m/tick]")->capture_default_str();
  build->add_option("--traj", build_traj_file, "Optional trajectory CSV to fly instead");
  build->add_option("--traj-out", build_traj_out, "Write the flown trajectory CSV here");
  build->add_option("--seed", build_seed, "Seed")->capture_default_str();
  build->add_option("--out", build_out, "Dataset CSV path")->capture_default_str();
  build_cam.attach(build);

  // eval-map
  auto* eval = app.add_subcommand("eval-map", "Global loss and smoothed loss map of a dataset");
  std::string eval_dataset = "dataset.csv", eval_out = "lossmap";
  double eval_sx = 2.0, eval_sy = 2.0, eval_cell = 0.25, eval_smooth = 0.5;
  std::string eval_size;
  eval->add_option("--dataset", eval_dataset, "Dataset CSV")->capture_default_str();
  eval->add_option("--sigma-x", eval_sx, "Ideal-similarity sigma x [m]")->capture_default_str();
  eval->add_option("--sigma-y", eval_sy, "Ideal-similarity sigma y [m]")->capture_default_str();
  eval->add_option("--cell", eval_cell, "Loss grid cell size [m]")->capture_default_str();
  eval->add_option("--smooth", eval_smooth, "Gaussian smoothing sigma [m]")->capture_default_str();
  eval->add_option("--size", eval_size, "Grid bounds WxH [m]; default = data extent");
  eval->add_option("--out", eval_out, "Output directory")->capture_default_str();

  // localize
  auto* loc = app.add_subcommand("localize", "Run the per-frame localization loop");
  std::string loc_floor = "floor", loc_dict = "dict.json", loc_dataset = "dataset.csv";
  std::string loc_out = "run", loc_traj_file, loc_kind = "random_walk";
  int loc_frames = 415, loc_samples = 400, loc_particles = 50, loc_k = 5, loc_calib = 300;
  double loc_speed = 0.08;
  std::uint64_t loc_seed = 3;
  CameraFlags loc_cam;
  loc->add_option("--floor", loc_floor, "Floor directory")->capture_default_str();
  loc->add_option("--dict", loc_dict, "Dictionary JSON")->capture_default_str();
  loc->add_option("--dataset", loc_dataset, "Training dataset CSV")->capture_default_str();
  loc->add_option("--frames", loc_frames, "Test flight length")->capture_default_str();
  loc->add_option("--samples", loc_samples, "Histogram samples per frame, 0 = full sampling")
      ->capture_default_str();
  loc->add_option("--particles", loc_particles, "Particle count")->capture_default_str();
  loc->add_option("--k", loc_k, "k-NN neighbors")->capture_default_str();
  loc->add_option("--calib-frames", loc_calib, "Calibration pass length")->capture_default_str();
  loc->add_option("--traj-kind", loc_kind, "waypoints or random_walk")->capture_default_str();
  loc->add_option("--speed", loc_speed, "Flight speed [m/tick]")->capture_default_str();
  loc->add_option("--traj", loc_traj_file, "Optional test trajectory CSV");
  loc->add_option("--seed", loc_seed, "Seed")->capture_default_str();
  loc->add_option("--out", loc_out, "Output directory")->capture_default_str();
  loc_cam.attach(loc);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Speed/accuracy sweep over one parameter");
  std::string bench_floor = "floor", bench_dict = "dict.json", bench_dataset = "dataset.csv";
  std::string bench_out = "bench.csv", bench_axis = "samples", bench_traj_file,
              bench_kind = "random_walk";
  std::vector<double> bench_values{50, 100, 400, 1600};
  int bench_seeds = 5, bench_frames = 415, bench_samples = 400, bench_particles = 50, bench_k = 5,
      bench_calib = 300;
  double bench_speed = 0.08;
  std::uint64_t bench_seed = 4;
  CameraFlags bench_cam;
  bench->add_option("--floor", bench_floor, "Floor directory")->capture_default_str();
  bench->add_option("--dict", bench_dict, "Dictionary JSON")->capture_default_str();
  bench->add_option("--dataset", bench_dataset, "Training dataset CSV")->capture_default_str();
  bench->add_option("--axis", bench_axis, "particles | samples | training_size")
      ->capture_default_str();
  bench->add_option("--values", bench_values, "Axis values")->delimiter(',');
  bench->add_option("--seeds", bench_seeds, "Seeds per value")->capture_default_str();
  bench->add_option("--frames", bench_frames, "Test flight length")->capture_default_str();
  bench->add_option("--samples", bench_samples, "Base histogram samples")->capture_default_str();
  bench->add_option("--particles", bench_particles, "Base particle count")->capture_default_str();
  bench->add_option("--k", bench_k, "k-NN neighbors")->capture_default_str();
  bench->add_option("--calib-frames", bench_calib, "Calibration pass length")
      ->capture_default_str();
  bench->add_option("--traj-kind", bench_kind, "waypoints or random_walk")->capture_default_str();
  bench->add_option("--speed", bench_speed, "Flight speed [m/tick]")->capture_default_str();
  bench->add_option("--traj", bench_traj_file, "Optional test trajectory CSV");
  bench->add_option("--seed", bench_seed, "Seed")->capture_default_str();
  bench->add_option("--out", bench_out, "Sweep CSV path")->capture_default_str();
  bench_cam.attach(bench);

  // landing
  auto* land = app.add_subcommand("landing", "Triggered-landing trials");
  std::string land_floor = "floor", land_dict = "dict.json", land_dataset = "dataset.csv";
  std::string land_out = "landing.csv";
  int land_trials = 6, land_budget = 400, land_samples = 400, land_particles = 50, land_k = 5,
      land_calib = 300;
  double land_radius = 0.6, land_theta = 0.6, land_speed = 0.08;
  std::uint64_t land_seed = 5;
  CameraFlags land_cam;
  land->add_option("--floor", land_floor, "Floor directory")->capture_default_str();
  land->add_option("--dict", land_dict, "Dictionary JSON")->capture_default_str();
  land->add_option("--dataset", land_dataset, "Training dataset CSV")->capture_default_str();
  land->add_option("--trials", land_trials, "Number of landing trials")->capture_default_str();
  land->add_option("--radius", land_radius, "Landing zone radius [m]")->capture_default_str();
  land->add_option("--theta", land_theta, "Spread thresholds [m]")->capture_default_str();
  land->add_option("--budget", land_budget, "Tick budget per trial")->capture_default_str();
  land->add_option("--samples", land_samples, "Histogram samples per frame")
      ->capture_default_str();
  land->add_option("--particles", land_particles, "Particle count")->capture_default_str();
  land->add_option("--k", land_k, "k-NN neighbors")->capture_default_str();
  land->add_option("--calib-frames", land_calib, "Calibration pass length")
      ->capture_default_str();
  land->add_option("--speed", land_speed, "Flight speed [m/tick]")->capture_default_str();
  land->add_option("--seed", land_seed, "Seed")->capture_default_str();
  land->add_option("--out", land_out, "Trials CSV path")->capture_default_str();
  land_cam.attach(land);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      const ArenaBounds bounds = parse_size(gen_size);
      Rng rng = make_rng(gen_seed, 10);
      const FloorMap map = generate_floor(bounds, gen_mpp, gen_spec, rng);
      fs::create_directories(gen_out);
      save_floor(map, gen_out + "/floor.ppm", gen_out + "/floor.json", cmdline);
      std::printf("floor %dx%d px -> %s\n", map.image.width, map.image.height, gen_out.c_str());
    } else if (*train) {
      const FloorMap floor = load_floor_dir(train_floor);
      const CameraModel cam = train_cam.model();
      Rng rng = make_rng(train_seed, 13);
      Trajectory survey;
      if (!train_traj_file.empty()) {
        survey = load_trajectory(train_traj_file);
      } else {
        survey = make_trajectory(TrajectoryKind::kWaypoints, flight_bounds(floor.bounds, cam),
                                 train_images, train_speed, rng);
      }
      const int n_images = std::min<int>(train_images, survey.size());
      std::vector<ImageYuv> images;
      images.reserve(static_cast<std::size_t>(n_images));
      for (int i = 0; i < n_images; ++i)
        images.push_back(render_view(floor, cam, survey.positions[i], rng));
      KohonenSchedule schedule;
      schedule.epochs = train_epochs;
      const TextonDictionary dict = train_dictionary(images, train_textons, train_ppi, schedule,
                                                     rng, train_patch, train_patch);
      save_dictionary(dict, train_out, cmdline);
      std::printf("dictionary T=%d patch=%dx%d -> %s\n", dict.size(), dict.patch_width,
                  dict.patch_height, train_out.c_str());
    } else if (*build) {
      const FloorMap floor = load_floor_dir(build_floor);
      const TextonDictionary dict = load_dictionary(build_dict);
      const CameraModel cam = build_cam.model();
      Rng rng = make_rng(build_seed, 14);
      const Trajectory traj = test_trajectory(build_traj_file, build_kind, build_frames,
                                              build_speed, floor, cam, build_seed);
      const TrainingSet ts = build_dataset(floor, cam, traj, dict, rng);
      save_dataset(ts, build_out, cmdline);
      if (!build_traj_out.empty()) save_trajectory(traj, build_traj_out, cmdline);
      std::printf("dataset N=%d T=%d -> %s\n", ts.size(), ts.histogram_size(),
                  build_out.c_str());
    } else if (*eval) {
      const TrainingSet ts = load_dataset(eval_dataset);
      LossParams params{eval_sx, eval_sy};
      ArenaBounds bounds;
      if (!eval_size.empty()) {
        bounds = parse_size(eval_size);
      } else {
        bounds = {ts.entries[0].position.x, ts.entries[0].position.x,
                  ts.entries[0].position.y, ts.entries[0].position.y};
        for (const auto& e : ts.entries) {
          bounds.x_min = std::min(bounds.x_min, e.position.x);
          bounds.x_max = std::max(bounds.x_max, e.position.x);
          bounds.y_min = std::min(bounds.y_min, e.position.y);
          bounds.y_max = std::max(bounds.y_max, e.position.y);
        }
        bounds.x_min -= eval_cell;
        bounds.x_max += eval_cell;
        bounds.y_min -= eval_cell;
        bounds.y_max += eval_cell;
      }
      const LossField field = loss_map(ts, bounds, eval_cell, eval_smooth, params);
      fs::create_directories(eval_out);
      save_loss_field(field, params, eval_out + "/loss.csv", eval_out + "/loss.json",
                      eval_out + "/loss.pgm", cmdline);
      const double loss = global_loss(ts, params);
      std::printf("%.17g\n", loss);
    } else if (*loc) {
      const FloorMap floor = load_floor_dir(loc_floor);
      const TextonDictionary dict = load_dictionary(loc_dict);
      const TrainingSet ts = load_dataset(loc_dataset);
      check_compatible(dict, ts);
      const CameraModel cam = loc_cam.model();
      const PipelineConfig config =
          calibrated_config(ts, dict, floor, cam, loc_samples, loc_k, loc_particles, loc_calib,
                            loc_speed, loc_seed);
      const Trajectory traj =
          test_trajectory(loc_traj_file, loc_kind, loc_frames, loc_speed, floor, cam, loc_seed);
      const RunResult result = run_localization(ts, dict, floor, cam, traj, config);
      fs::create_directories(loc_out);
      save_run_result(result, loc_out + "/frames.csv", loc_out + "/summary.csv", cmdline);
      std::printf("frames=%d mae_x=%.3f mae_y=%.3f rmse=%.3f loop=%.2fms (%.1f Hz)\n",
                  result.summary.frames, result.summary.mean_abs_err_x,
                  result.summary.mean_abs_err_y, result.summary.rmse,
                  result.summary.mean_loop_ms, result.summary.loop_hz);
    } else if (*bench) {
      const FloorMap floor = load_floor_dir(bench_floor);
      const TextonDictionary dict = load_dictionary(bench_dict);
      const TrainingSet ts = load_dataset(bench_dataset);
      check_compatible(dict, ts);
      const CameraModel cam = bench_cam.model();
      SweepAxis axis;
      if (bench_axis == "particles") {
        axis = SweepAxis::kParticles;
      } else if (bench_axis == "samples") {
        axis = SweepAxis::kSamples;
      } else if (bench_axis == "training_size") {
        axis = SweepAxis::kTrainingSize;
      } else {
        throw std::invalid_argument("--axis must be particles, samples or training_size");
      }
      const PipelineConfig config =
          calibrated_config(ts, dict, floor, cam, bench_samples, bench_k, bench_particles,
                            bench_calib, bench_speed, bench_seed);
      const Trajectory traj = test_trajectory(bench_traj_file, bench_kind, bench_frames,
                                              bench_speed, floor, cam, bench_seed);
      Rng camera_rng = make_rng(bench_seed, 15);
      const RecordedFlight flight = record_flight(floor, cam, traj, camera_rng);
      const auto rows = benchmark_sweep(ts, dict, flight, config, axis, bench_values, bench_seeds);
      save_sweep(rows, axis, bench_out, cmdline);
      for (const auto& row : rows)
        std::printf("%s=%g mae_x=%.3f mae_y=%.3f loop=%.3fms (%.1f Hz)\n",
                    axis_name(axis).c_str(), row.value, row.mean.mean_abs_err_x,
                    row.mean.mean_abs_err_y, row.mean.mean_loop_ms, row.mean.loop_hz);
    } else if (*land) {
      const FloorMap floor = load_floor_dir(land_floor);
      const TextonDictionary dict = load_dictionary(land_dict);
      const TrainingSet ts = load_dataset(land_dataset);
      check_compatible(dict, ts);
      const CameraModel cam = land_cam.model();
      const PipelineConfig config =
          calibrated_config(ts, dict, floor, cam, land_samples, land_k, land_particles,
                            land_calib, land_speed, land_seed);
      Rng rng = make_rng(land_seed, 16);
      const auto trials = landing_simulation(ts, dict, floor, cam, config, land_trials,
                                             land_radius, land_theta, land_budget, rng);
      save_landing_trials(trials, land_out, cmdline);
      int in_zone = 0, triggered = 0;
      for (const auto& t : trials) {
        triggered += t.triggered ? 1 : 0;
        in_zone += t.in_zone ? 1 : 0;
      }
      std::printf("trials=%d triggered=%d in_zone=%d -> %s\n",
                  static_cast<int>(trials.size()), triggered, in_zone, land_out.c_str());
    }
  } catch (const IncompatibleInputs& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
