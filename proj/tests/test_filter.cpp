#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "texloc/filter.hpp"

using namespace texloc;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

MeasurementModel isotropic_model(int k, double sigma) {
  MeasurementModel mm;
  mm.sigmas.sigmas.assign(static_cast<std::size_t>(k), Cov2::isotropic(sigma * sigma));
  return mm;
}

// Synthetic tracking run with k = 1 measurements; returns per-step MAP errors.
std::vector<double> run_tracking(std::uint64_t seed, int steps, int m, double meas_sigma,
                                 double process_sigma, double truth_step_sigma,
                                 int teleport_step = -1, Vec2 teleport_to = {}) {
  const ArenaBounds arena{0.0, 5.0, 0.0, 5.0};
  Rng rng(seed);
  std::normal_distribution<double> step_noise(0.0, truth_step_sigma);
  std::normal_distribution<double> meas_noise(0.0, meas_sigma);

  const MeasurementModel mm = isotropic_model(1, meas_sigma);
  const MotionModel motion{{0.0, 0.0}, Cov2::isotropic(process_sigma * process_sigma)};

  Vec2 truth{1.0, 1.0};
  FilterState state = init_particles(m, arena, rng);
  std::vector<double> errors;
  for (int t = 0; t < steps; ++t) {
    if (t == teleport_step) truth = teleport_to;
    truth.x = std::clamp(truth.x + step_noise(rng), arena.x_min, arena.x_max);
    truth.y = std::clamp(truth.y + step_noise(rng), arena.y_min, arena.y_max);
    const std::vector<Vec2> z{{truth.x + meas_noise(rng), truth.y + meas_noise(rng)}};
    FilterState next = update(state, z, motion, mm, rng);
    const Vec2 est = map_estimate(next, z, motion, mm, state);
    errors.push_back(distance(est, truth));
    state = std::move(next);
  }
  return errors;
}

}  // namespace

TEST_CASE("init_particles") {
  const ArenaBounds arena{0.0, 5.0, 0.0, 5.0};
  SUBCASE("uniform over bounds with equal weights") {
    Rng rng(1);
    const FilterState state = init_particles(50, arena, rng);
    REQUIRE(state.size() == 50);
    CHECK(state.t == 0);
    for (const auto& p : state.particles) {
      CHECK(arena.contains(p.position));
      CHECK(p.weight == doctest::Approx(0.02).epsilon(1e-12));
    }
  }
  SUBCASE("single particle") {
    Rng rng(2);
    const FilterState state = init_particles(1, arena, rng);
    REQUIRE(state.size() == 1);
    CHECK(state.particles[0].weight == 1.0);
  }
  SUBCASE("deterministic per seed") {
    Rng a(3), b(3);
    const FilterState sa = init_particles(20, arena, a);
    const FilterState sb = init_particles(20, arena, b);
    for (int i = 0; i < 20; ++i) {
      CHECK(sa.particles[i].position.x == sb.particles[i].position.x);
      CHECK(sa.particles[i].position.y == sb.particles[i].position.y);
    }
  }
  SUBCASE("invalid bounds rejected") {
    Rng rng(4);
    CHECK_THROWS_AS(init_particles(10, ArenaBounds{1.0, 1.0, 0.0, 5.0}, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(init_particles(0, arena, rng), std::invalid_argument);
  }
}

TEST_CASE("estimate_process_noise") {
  SUBCASE("constant drift has zero covariance") {
    const MotionModel m = estimate_process_noise({{0, 0}, {1, 0}, {2, 0}});
    CHECK(m.mean_step.x == doctest::Approx(1.0));
    CHECK(m.mean_step.y == 0.0);
    CHECK(m.sigma_process.xx == 0.0);
    CHECK(m.sigma_process.yy == 0.0);
  }
  SUBCASE("stationary trajectory") {
    const MotionModel m = estimate_process_noise({{2, 3}, {2, 3}, {2, 3}, {2, 3}});
    CHECK(m.mean_step.x == 0.0);
    CHECK(m.mean_step.y == 0.0);
    CHECK(m.sigma_process.xx == 0.0);
  }
  SUBCASE("recovers a known step covariance") {
    Rng rng(5);
    std::normal_distribution<double> step(0.0, 0.1);
    std::vector<Vec2> traj{{0.0, 0.0}};
    for (int i = 0; i < 10000; ++i)
      traj.push_back({traj.back().x + step(rng), traj.back().y + step(rng)});
    const MotionModel m = estimate_process_noise(traj);
    CHECK(m.sigma_process.xx == doctest::Approx(0.01).epsilon(0.10));
    CHECK(m.sigma_process.yy == doctest::Approx(0.01).epsilon(0.10));
  }
  SUBCASE("too short trajectory rejected") {
    CHECK_THROWS_AS(estimate_process_noise({{0, 0}, {1, 1}}), std::invalid_argument);
  }
}

TEST_CASE("gmm_weight") {
  SUBCASE("peak of the standard bivariate density") {
    const MeasurementModel mm = isotropic_model(1, 1.0);
    const double w = gmm_weight({2.0, 3.0}, {{2.0, 3.0}}, mm);
    CHECK(std::abs(w - 1.0 / kTwoPi) <= 1e-12);
  }
  SUBCASE("two coincident peaks add up") {
    const MeasurementModel mm = isotropic_model(2, 1.0);
    const double w = gmm_weight({1.0, 1.0}, {{1.0, 1.0}, {1.0, 1.0}}, mm);
    CHECK(w == doctest::Approx(2.0 / kTwoPi).epsilon(1e-12));
  }
  SUBCASE("matches an independent density summation") {
    Rng rng(6);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> var(0.05, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
      const int k = 1 + trial % 5;
      MeasurementModel mm;
      std::vector<Vec2> z;
      for (int i = 0; i < k; ++i) {
        const double vx = var(rng), vy = var(rng);
        const double rho = 0.5 * u(rng) / 2.0;
        mm.sigmas.sigmas.push_back({vx, rho * std::sqrt(vx * vy), vy});
        z.push_back({u(rng), u(rng)});
      }
      const Vec2 pos{u(rng), u(rng)};

      double expected = 0.0;
      for (int i = 0; i < k; ++i) {
        const Cov2& s = mm.sigmas.sigmas[i];
        const double det = s.xx * s.yy - s.xy * s.xy;
        const double dx = z[i].x - pos.x;
        const double dy = z[i].y - pos.y;
        const double q = (s.yy * dx * dx - 2.0 * s.xy * dx * dy + s.xx * dy * dy) / det;
        expected += std::exp(-0.5 * q) / (kTwoPi * std::sqrt(det));
      }
      CHECK(gmm_weight(pos, z, mm) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("strictly positive and translation invariant") {
    const MeasurementModel mm = isotropic_model(2, 0.3);
    Rng rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 30; ++trial) {
      const Vec2 pos{u(rng), u(rng)};
      std::vector<Vec2> z{{u(rng), u(rng)}, {u(rng), u(rng)}};
      const double w = gmm_weight(pos, z, mm);
      CHECK(w > 0.0);
      const Vec2 shift{u(rng), u(rng)};
      std::vector<Vec2> z_shifted{z[0] + shift, z[1] + shift};
      CHECK(gmm_weight(pos + shift, z_shifted, mm) == doctest::Approx(w).epsilon(1e-12));
    }
  }
  SUBCASE("size mismatch rejected") {
    const MeasurementModel mm = isotropic_model(2, 1.0);
    CHECK_THROWS_AS(gmm_weight({0, 0}, {{0, 0}}, mm), std::invalid_argument);
  }
}

TEST_CASE("resampling_wheel") {
  SUBCASE("all weight on one particle duplicates it") {
    std::vector<Particle> particles{{{1.0, 2.0}, 0.0}, {{3.0, 4.0}, 0.7}, {{5.0, 6.0}, 0.0}};
    Rng rng(8);
    const auto out = resampling_wheel(particles, rng);
    REQUIRE(out.size() == 3);
    for (const auto& p : out) {
      CHECK(p.position.x == 3.0);
      CHECK(p.weight == doctest::Approx(1.0 / 3.0));
    }
  }
  SUBCASE("equal weights select uniformly within 3 sigma") {
    std::vector<Particle> particles;
    for (int i = 0; i < 10; ++i)
      particles.push_back({{static_cast<double>(i), 0.0}, 0.1});
    Rng rng(9);
    std::map<int, int> counts;
    const int rounds = 10000;  // 10 draws each -> 1e5 selections
    for (int r = 0; r < rounds; ++r)
      for (const auto& p : resampling_wheel(particles, rng))
        ++counts[static_cast<int>(p.position.x)];
    const double expected = 10000.0;
    const double sigma = std::sqrt(100000.0 * 0.1 * 0.9);
    for (const auto& [idx, c] : counts) {
      INFO("index ", idx, " count ", c);
      CHECK(std::abs(c - expected) <= 3.0 * sigma);
    }
  }
  SUBCASE("0.9/0.1 weights select proportionally within 3 sigma") {
    std::vector<Particle> particles{{{0.0, 0.0}, 0.9}, {{1.0, 0.0}, 0.1}};
    Rng rng(10);
    long heavy = 0, total = 0;
    for (int r = 0; r < 50000; ++r)
      for (const auto& p : resampling_wheel(particles, rng)) {
        heavy += p.position.x == 0.0 ? 1 : 0;
        ++total;
      }
    const double sigma = std::sqrt(static_cast<double>(total) * 0.9 * 0.1);
    CHECK(std::abs(static_cast<double>(heavy) - 0.9 * total) <= 3.0 * sigma);
  }
  SUBCASE("all-zero weights rejected") {
    std::vector<Particle> particles{{{0.0, 0.0}, 0.0}, {{1.0, 0.0}, 0.0}};
    Rng rng(11);
    CHECK_THROWS_AS(resampling_wheel(particles, rng), std::invalid_argument);
  }
}

TEST_CASE("update") {
  SUBCASE("zero noise and matching measurement is a fixed point") {
    const MeasurementModel mm = isotropic_model(1, 1.0);
    const MotionModel motion{{0.0, 0.0}, Cov2{}};
    FilterState state;
    state.particles.assign(5, {{2.5, 2.5}, 0.2});
    Rng rng(12);
    const FilterState next = update(state, {{2.5, 2.5}}, motion, mm, rng);
    REQUIRE(next.size() == 5);
    for (const auto& p : next.particles) {
      CHECK(p.position.x == 2.5);
      CHECK(p.position.y == 2.5);
      CHECK(p.weight == doctest::Approx(0.2));
    }
  }
  SUBCASE("particle count invariant over many updates") {
    const ArenaBounds arena{0.0, 5.0, 0.0, 5.0};
    const MeasurementModel mm = isotropic_model(1, 0.5);
    const MotionModel motion{{0.0, 0.0}, Cov2::isotropic(0.01)};
    Rng rng(13);
    FilterState state = init_particles(10, arena, rng);
    for (int t = 0; t < 1000; ++t) {
      state = update(state, {{2.5, 2.5}}, motion, mm, rng);
      CHECK(state.size() == 10);
    }
    CHECK(state.t == 1000);
    for (const auto& p : state.particles) CHECK(p.weight == doctest::Approx(0.1));
  }
  SUBCASE("deterministic per seed") {
    const ArenaBounds arena{0.0, 5.0, 0.0, 5.0};
    const MeasurementModel mm = isotropic_model(1, 0.5);
    const MotionModel motion{{0.0, 0.0}, Cov2::isotropic(0.01)};
    Rng a(14), b(14);
    FilterState sa = init_particles(20, arena, a);
    FilterState sb = init_particles(20, arena, b);
    sa = update(sa, {{1.0, 1.0}}, motion, mm, a);
    sb = update(sb, {{1.0, 1.0}}, motion, mm, b);
    for (int i = 0; i < 20; ++i) {
      CHECK(sa.particles[i].position.x == sb.particles[i].position.x);
      CHECK(sa.particles[i].position.y == sb.particles[i].position.y);
    }
  }
}

TEST_CASE("map_estimate") {
  const MotionModel motion{{0.0, 0.0}, Cov2::isotropic(0.01)};
  SUBCASE("single particle returns its position") {
    FilterState state;
    state.particles = {{{1.5, 2.5}, 1.0}};
    const MeasurementModel mm = isotropic_model(1, 0.5);
    const Vec2 est = map_estimate(state, {{0.0, 0.0}}, motion, mm, state);
    CHECK(est.x == 1.5);
    CHECK(est.y == 2.5);
  }
  SUBCASE("identical particles return the shared position") {
    FilterState state;
    state.particles.assign(8, {{3.0, 1.0}, 0.125});
    const MeasurementModel mm = isotropic_model(1, 0.5);
    const Vec2 est = map_estimate(state, {{4.0, 1.0}}, motion, mm, state);
    CHECK(est.x == 3.0);
    CHECK(est.y == 1.0);
  }
  SUBCASE("measurement-supported mode wins, matching direct evaluation") {
    // Two clusters; measurement sits at the second one.
    FilterState prev;
    for (int i = 0; i < 10; ++i) prev.particles.push_back({{1.0 + 0.01 * i, 1.0}, 0.1});
    for (int i = 0; i < 10; ++i) prev.particles.push_back({{4.0 + 0.01 * i, 4.0}, 0.1});
    FilterState state = prev;
    const MeasurementModel mm = isotropic_model(1, 0.3);
    const std::vector<Vec2> z{{4.05, 4.0}};
    const Vec2 est = map_estimate(state, z, motion, mm, prev);
    CHECK(est.x > 3.0);

    // Independent re-evaluation of the scoring rule.
    double best_score = -1.0;
    Vec2 best{};
    for (const auto& p : state.particles) {
      const double lik = gmm_weight(p.position, z, mm);
      double prior = 0.0;
      for (const auto& q : prev.particles)
        prior += q.weight * gmm_weight(p.position, {q.position + motion.mean_step},
                                       MeasurementModel{{{motion.sigma_process}}});
      const double score = lik * prior;
      if (score > best_score) {
        best_score = score;
        best = p.position;
      }
    }
    CHECK(est.x == best.x);
    CHECK(est.y == best.y);
  }
}

TEST_CASE("uncertainty") {
  SUBCASE("identical particles have zero spread") {
    FilterState state;
    state.particles.assign(6, {{2.0, 2.0}, 1.0 / 6});
    const Vec2 u = uncertainty(state);
    CHECK(u.x == 0.0);
    CHECK(u.y == 0.0);
  }
  SUBCASE("two-point set uses the N-1 denominator") {
    FilterState state;
    state.particles = {{{-1.0, 0.0}, 0.5}, {{1.0, 0.0}, 0.5}};
    const Vec2 u = uncertainty(state);
    CHECK(u.x == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(u.y == 0.0);
  }
  SUBCASE("uniform cloud matches the uniform moment") {
    Rng rng(15);
    const FilterState state = init_particles(10000, ArenaBounds{0.0, 5.0, 0.0, 5.0}, rng);
    const Vec2 u = uncertainty(state);
    CHECK(u.x == doctest::Approx(5.0 / std::sqrt(12.0)).epsilon(0.10));
    CHECK(u.y == doctest::Approx(5.0 / std::sqrt(12.0)).epsilon(0.10));
  }
  SUBCASE("single particle reports zero") {
    FilterState state;
    state.particles = {{{1.0, 1.0}, 1.0}};
    const Vec2 u = uncertainty(state);
    CHECK(u.x == 0.0);
    CHECK(u.y == 0.0);
  }
}

TEST_CASE("landing_trigger") {
  const LandingZone zone{{2.0, 2.0}, 0.6, 0.6, 0.6};
  SUBCASE("inside with converged spread") {
    CHECK(landing_trigger({2.0, 2.0}, {0.5, 0.5}, zone));
  }
  SUBCASE("just outside the radius") {
    CHECK_FALSE(landing_trigger({2.61, 2.0}, {0.1, 0.1}, zone));
    CHECK(landing_trigger({2.6, 2.0}, {0.1, 0.1}, zone));
  }
  SUBCASE("safety criterion dominates") {
    CHECK_FALSE(landing_trigger({2.0, 2.0}, {0.7, 0.1}, zone));
    CHECK_FALSE(landing_trigger({2.0, 2.0}, {0.1, 0.6}, zone));
  }
}

TEST_CASE("unimodal tracking converges") {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto errors = run_tracking(100 + seed, 100, 50, 0.1, 0.05, 0.03);
    double avg = 0.0;
    int n = 0;
    for (std::size_t t = 20; t < errors.size(); ++t) {
      avg += errors[t];
      ++n;
    }
    avg /= n;
    if (avg < 0.3) ++good;
  }
  CHECK(good >= 9);
}

TEST_CASE("kidnapped robot recovers") {
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto errors =
        run_tracking(200 + seed, 120, 50, 0.25, 0.2, 0.02, 60, Vec2{4.0, 4.0});
    bool ok = false;
    for (int t = 61; t < 111 && t < static_cast<int>(errors.size()); ++t)
      if (errors[t] < 0.5) {
        ok = true;
        break;
      }
    if (ok) ++recovered;
  }
  CHECK(recovered >= 9);
}
