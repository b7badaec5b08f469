#include "texloc/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace texloc {

namespace {

/// Precomputed inverse and normalizer of one measurement Gaussian.
struct GaussTerm {
  double inv_xx, inv_xy, inv_yy;
  double norm;

  explicit GaussTerm(const Cov2& sigma) {
    const Cov2 s = sigma.regularized();
    const double det = s.det();
    if (det <= 0.0) throw std::invalid_argument("measurement covariance not positive definite");
    inv_xx = s.yy / det;
    inv_xy = -s.xy / det;
    inv_yy = s.xx / det;
    constexpr double two_pi = 6.283185307179586476925286766559;
    norm = 1.0 / (two_pi * std::sqrt(det));
  }

  double density(const Vec2& d) const {
    const double q = d.x * (inv_xx * d.x + inv_xy * d.y) + d.y * (inv_xy * d.x + inv_yy * d.y);
    return norm * std::exp(-0.5 * q);
  }
};

std::vector<GaussTerm> measurement_terms(const MeasurementModel& mm) {
  std::vector<GaussTerm> terms;
  terms.reserve(mm.sigmas.sigmas.size());
  for (const auto& s : mm.sigmas.sigmas) terms.emplace_back(s);
  return terms;
}

void check_state(const FilterState& state) {
  if (state.particles.empty()) throw std::invalid_argument("filter state has no particles");
  for (const auto& p : state.particles) {
    if (!p.position.finite()) throw std::invalid_argument("particle position not finite");
    if (!(p.weight >= 0.0)) throw std::invalid_argument("particle weight negative or NaN");
  }
}

}  // namespace

FilterState init_particles(int m, const ArenaBounds& bounds, Rng& rng) {
  if (m < 1) throw std::invalid_argument("init_particles: need at least one particle");
  bounds.validate();
  std::uniform_real_distribution<double> ux(bounds.x_min, bounds.x_max);
  std::uniform_real_distribution<double> uy(bounds.y_min, bounds.y_max);
  FilterState state;
  state.particles.resize(static_cast<std::size_t>(m));
  const double w = 1.0 / static_cast<double>(m);
  for (auto& p : state.particles) {
    p.position.x = ux(rng);
    p.position.y = uy(rng);
    p.weight = w;
  }
  state.t = 0;
  return state;
}

MotionModel estimate_process_noise(const std::vector<Vec2>& trajectory) {
  if (trajectory.size() < 3)
    throw std::invalid_argument("estimate_process_noise: need at least 3 positions");
  const std::size_t n = trajectory.size() - 1;
  Vec2 mean;
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) mean += trajectory[i + 1] - trajectory[i];
  mean = mean * (1.0 / static_cast<double>(n));
  Cov2 cov;
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
    const Vec2 d = (trajectory[i + 1] - trajectory[i]) - mean;
    cov.xx += d.x * d.x;
    cov.xy += d.x * d.y;
    cov.yy += d.y * d.y;
  }
  cov = cov * (1.0 / static_cast<double>(n - 1));
  return {mean, cov};
}

double gmm_weight(const Vec2& particle_pos, const std::vector<Vec2>& z,
                  const MeasurementModel& mm) {
  if (static_cast<int>(z.size()) != mm.k())
    throw std::invalid_argument("gmm_weight: measurement count does not match model k");
  if (mm.k() == 0) throw std::invalid_argument("gmm_weight: empty measurement model");
  const auto terms = measurement_terms(mm);
  double w = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) w += terms[i].density(z[i] - particle_pos);
  return w;
}

std::vector<Particle> resampling_wheel(const std::vector<Particle>& particles, Rng& rng) {
  if (particles.empty()) throw std::invalid_argument("resampling_wheel: no particles");
  double max_w = 0.0;
  double total = 0.0;
  for (const auto& p : particles) {
    if (!(p.weight >= 0.0)) throw std::invalid_argument("resampling_wheel: negative weight");
    max_w = std::max(max_w, p.weight);
    total += p.weight;
  }
  if (!(total > 0.0)) throw std::invalid_argument("resampling_wheel: all weights zero");

  const std::size_t m = particles.size();
  std::uniform_int_distribution<std::size_t> start(0, m - 1);
  std::uniform_real_distribution<double> spin(0.0, 2.0 * max_w);
  std::size_t index = start(rng);
  double beta = 0.0;
  std::vector<Particle> out;
  out.reserve(m);
  const double w = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    beta += spin(rng);
    while (beta > particles[index].weight) {
      beta -= particles[index].weight;
      index = (index + 1) % m;
    }
    out.push_back({particles[index].position, w});
  }
  return out;
}

FilterState update(const FilterState& state, const std::vector<Vec2>& z,
                   const MotionModel& motion, const MeasurementModel& mm, Rng& rng) {
  check_state(state);
  if (static_cast<int>(z.size()) != mm.k())
    throw std::invalid_argument("update: measurement count does not match model k");

  const Cov2 noise_sqrt = motion.sigma_process.psd_sqrt();
  const auto terms = measurement_terms(mm);
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  std::vector<Particle> temp;
  temp.reserve(state.particles.size());
  double total = 0.0;
  for (const auto& p : state.particles) {
    const Vec2 n = noise_sqrt.apply({unit_normal(rng), unit_normal(rng)});
    const Vec2 pos = p.position + motion.mean_step + n;
    double w = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) w += terms[i].density(z[i] - pos);
    total += w;
    temp.push_back({pos, w});
  }
  // The GMM is positive everywhere but can underflow to zero when every
  // particle is far outside the measurement support; the measurement is then
  // uninformative at double precision and the posterior falls back to the
  // predicted prior.
  if (total == 0.0)
    for (auto& p : temp) p.weight = 1.0;

  FilterState next;
  next.particles = resampling_wheel(temp, rng);
  next.t = state.t + 1;
  return next;
}

Vec2 map_estimate(const FilterState& state, const std::vector<Vec2>& z,
                  const MotionModel& motion, const MeasurementModel& mm,
                  const FilterState& previous) {
  check_state(state);
  check_state(previous);
  if (static_cast<int>(z.size()) != mm.k())
    throw std::invalid_argument("map_estimate: measurement count does not match model k");

  double prev_total = 0.0;
  for (const auto& p : previous.particles) prev_total += p.weight;
  if (!(prev_total > 0.0))
    throw std::invalid_argument("map_estimate: previous state has zero total weight");

  const auto terms = measurement_terms(mm);
  const GaussTerm process(motion.sigma_process);

  Vec2 best = state.particles.front().position;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& p : state.particles) {
    double likelihood = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) likelihood += terms[i].density(z[i] - p.position);
    double prior = 0.0;
    for (const auto& q : previous.particles)
      prior += q.weight * process.density(p.position - (q.position + motion.mean_step));
    const double score = likelihood * (prior / prev_total);
    if (score > best_score) {
      best_score = score;
      best = p.position;
    }
  }
  return best;
}

Vec2 uncertainty(const FilterState& state) {
  check_state(state);
  const std::size_t m = state.particles.size();
  if (m < 2) return {0.0, 0.0};
  Vec2 mean;
  for (const auto& p : state.particles) mean += p.position;
  mean = mean * (1.0 / static_cast<double>(m));
  double vx = 0.0, vy = 0.0;
  for (const auto& p : state.particles) {
    const Vec2 d = p.position - mean;
    vx += d.x * d.x;
    vy += d.y * d.y;
  }
  const double denom = static_cast<double>(m - 1);
  return {std::sqrt(vx / denom), std::sqrt(vy / denom)};
}

bool landing_trigger(const Vec2& estimate, const Vec2& spread, const LandingZone& zone) {
  return distance(estimate, zone.center) <= zone.radius && spread.x < zone.theta_x &&
         spread.y < zone.theta_y;
}

}  // namespace texloc
