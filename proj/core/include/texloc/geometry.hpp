#pragma once

#include <cmath>
#include <stdexcept>

namespace texloc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double norm() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Symmetric 2x2 matrix, used for position covariances (units m^2).
struct Cov2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  static Cov2 identity() { return {1.0, 0.0, 1.0}; }
  static Cov2 diagonal(double a, double b) { return {a, 0.0, b}; }
  static Cov2 isotropic(double v) { return {v, 0.0, v}; }

  double det() const { return xx * yy - xy * xy; }
  double trace() const { return xx + yy; }

  double min_eigenvalue() const {
    const double mean = 0.5 * trace();
    const double disc = std::sqrt(std::max(0.0, mean * mean - det()));
    return mean - disc;
  }

  bool symmetric_psd(double tol = 1e-9) const {
    return std::isfinite(xx) && std::isfinite(xy) && std::isfinite(yy) &&
           min_eigenvalue() >= -tol;
  }

  Cov2 operator+(const Cov2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
  Cov2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }

  /// Adds eps to the diagonal only when the matrix is too close to singular
  /// to invert; a well-conditioned covariance passes through untouched.
  Cov2 regularized(double eps = 1e-6) const {
    if (min_eigenvalue() >= eps) return *this;
    return {xx + eps, xy, yy + eps};
  }

  /// Symmetric square root; negative eigenvalues (numerical noise) clamp to
  /// zero, so a zero matrix maps to a zero factor.
  Cov2 psd_sqrt() const {
    const double mean = 0.5 * trace();
    const double disc = std::sqrt(std::max(0.0, mean * mean - det()));
    const double l1 = std::max(0.0, mean + disc);
    const double l2 = std::max(0.0, mean - disc);
    if (std::abs(xy) < 1e-300) {
      return {std::sqrt(std::max(0.0, xx)), 0.0, std::sqrt(std::max(0.0, yy))};
    }
    // Eigenvector for l1 is (xy, l1 - xx).
    double vx = xy;
    double vy = l1 - xx;
    const double n = std::hypot(vx, vy);
    vx /= n;
    vy /= n;
    const double s1 = std::sqrt(l1);
    const double s2 = std::sqrt(l2);
    // sqrt = s1 * v v^T + s2 * w w^T with w = (-vy, vx)
    return {s1 * vx * vx + s2 * vy * vy, (s1 - s2) * vx * vy,
            s1 * vy * vy + s2 * vx * vx};
  }

  /// A * v for the symmetric matrix.
  Vec2 apply(const Vec2& v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
};

/// Normalized bivariate Gaussian density N(p; mu, sigma). The covariance is
/// regularized only if it is near-singular.
inline double bivariate_normal_pdf(const Vec2& p, const Vec2& mu, const Cov2& sigma) {
  const Cov2 s = sigma.regularized();
  const double det = s.det();
  if (det <= 0.0) throw std::invalid_argument("bivariate_normal_pdf: covariance not positive definite");
  const Vec2 d = p - mu;
  const double q = (d.x * (s.yy * d.x - s.xy * d.y) + d.y * (s.xx * d.y - s.xy * d.x)) / det;
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::exp(-0.5 * q) / (two_pi * std::sqrt(det));
}

struct ArenaBounds {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool contains(const Vec2& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  ArenaBounds shrunk(double margin_x, double margin_y) const {
    return {x_min + margin_x, x_max - margin_x, y_min + margin_y, y_max - margin_y};
  }
  void validate() const {
    if (!(x_min < x_max) || !(y_min < y_max))
      throw std::invalid_argument("ArenaBounds: min must be strictly below max");
  }
};

}  // namespace texloc
