#pragma once

#include <vector>

#include "texloc/geometry.hpp"
#include "texloc/knn.hpp"
#include "texloc/rng.hpp"

namespace texloc {

struct Particle {
  Vec2 position;
  double weight = 0.0;
};

/// M weighted particles approximating p(X_t | Z_t). After every update the
/// particle count is unchanged and all weights are equal.
struct FilterState {
  std::vector<Particle> particles;
  long t = 0;

  int size() const { return static_cast<int>(particles.size()); }
};

/// Prediction step model: a fixed mean displacement per tick plus Gaussian
/// process noise.
struct MotionModel {
  Vec2 mean_step;
  Cov2 sigma_process;
};

/// GMM measurement model: one Gaussian per k-NN rank with the rank's error
/// covariance.
struct MeasurementModel {
  MeasurementCovariances sigmas;

  int k() const { return sigmas.k(); }
};

/// Position plus particle-spread thresholds that gate the landing decision.
struct LandingZone {
  Vec2 center;
  double radius = 0.6;
  double theta_x = 0.6;
  double theta_y = 0.6;
};

/// M particles uniform over the bounds, equal weights 1/M, t = 0.
FilterState init_particles(int m, const ArenaBounds& bounds, Rng& rng);

/// Mean and sample covariance of the forward differences of a trajectory.
MotionModel estimate_process_noise(const std::vector<Vec2>& trajectory);

/// Sum over ranks of the normalized bivariate Gaussian density of the
/// measurement at the particle position. Strictly positive.
double gmm_weight(const Vec2& particle_pos, const std::vector<Vec2>& z,
                  const MeasurementModel& mm);

/// Proportional-to-weight resampling with the circular wheel; returns the
/// same number of particles with uniform weights.
std::vector<Particle> resampling_wheel(const std::vector<Particle>& particles, Rng& rng);

/// One filter tick: displace by the motion model, weight by the GMM, then
/// importance-resample. Deterministic per rng state.
FilterState update(const FilterState& state, const std::vector<Vec2>& z,
                   const MotionModel& motion, const MeasurementModel& mm, Rng& rng);

/// Position of the particle maximizing measurement likelihood times the
/// predicted prior density under the previous particle set.
Vec2 map_estimate(const FilterState& state, const std::vector<Vec2>& z,
                  const MotionModel& motion, const MeasurementModel& mm,
                  const FilterState& previous);

/// Per-axis sample standard deviation of the particle positions; (0, 0) for
/// a single particle.
Vec2 uncertainty(const FilterState& state);

/// True iff the estimate is within the zone radius and both particle spreads
/// are below their thresholds.
bool landing_trigger(const Vec2& estimate, const Vec2& spread, const LandingZone& zone);

}  // namespace texloc
