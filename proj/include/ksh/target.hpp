#pragma once

#include "ksh/common.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace ksh {

// Target-space geometry. Two concrete instances behind one interface:
// the unit sphere S^n (n = 1,2,3; the curvature-1 model) and Euclidean R^n
// (the flat model, used as the CAT(0) regression oracle). All operations
// reduce to {distance, geodesic_point, membership}.

enum class TargetKind { sphere, euclidean };

class Target {
 public:
  Target(TargetKind kind, int dim) : kind_(kind), dim_(dim) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("target dim must be 1..3");
  }

  static Target sphere(int dim) { return Target(TargetKind::sphere, dim); }
  static Target euclidean(int dim) { return Target(TargetKind::euclidean, dim); }

  TargetKind kind() const { return kind_; }
  bool is_sphere() const { return kind_ == TargetKind::sphere; }
  int dim() const { return dim_; }
  /// Coordinate length of a point (sphere points live in R^{dim+1}).
  int ambient_dim() const { return is_sphere() ? dim_ + 1 : dim_; }

  bool operator==(const Target& o) const { return kind_ == o.kind_ && dim_ == o.dim_; }

  /// Unit-norm enforcement for sphere points; tolerance 1e-12 after rescale.
  Vec canonical(const Vec& p) const {
    check_point(p);
    if (!is_sphere()) return p;
    const double n = p.norm();
    if (!(n > 1e-8))
      throw std::invalid_argument("sphere point has (near-)zero norm");
    return p / n;
  }

  static bool identical(const Vec& p, const Vec& q) {
    if (p.size() != q.size()) return false;
    for (int i = 0; i < p.size(); ++i)
      if (p[i] != q[i]) return false;
    return true;
  }

  double distance(const Vec& p, const Vec& q) const {
    check_point(p);
    check_point(q);
    if (identical(p, q)) return 0.0;
    if (!is_sphere()) return (p - q).norm();
    // chord form resolves tiny separations (acos of the dot product floors
    // at sqrt(eps)); fall back to acos only near the antipode
    const double chord = (p - q).norm();
    if (chord <= 1.9) return 2.0 * std::asin(std::min(1.0, 0.5 * chord));
    return std::acos(std::clamp(p.dot(q), -1.0, 1.0));
  }

  /// Point at parameter t on the unique geodesic from p to q.
  /// Sphere: numerically stable slerp with a small-angle linear fallback.
  /// Antipodal sphere inputs are rejected (no unique geodesic at d = pi).
  Vec geodesic_point(const Vec& p, const Vec& q, double t) const {
    check_point(p);
    check_point(q);
    if (t == 0.0 || identical(p, q)) return p;
    if (t == 1.0) return q;
    if (!is_sphere()) return p + t * (q - p);
    const double theta = distance(p, q);
    if (theta >= kPi - 1e-9)
      throw std::domain_error("geodesic_point: antipodal endpoints (d >= pi)");
    if (theta < 1e-8) {
      Vec m = p + t * (q - p);
      return m / m.norm();
    }
    const double s = std::sin(theta);
    Vec m = (std::sin((1.0 - t) * theta) / s) * p + (std::sin(t * theta) / s) * q;
    return m / m.norm();
  }

  Vec midpoint(const Vec& p, const Vec& q) const { return geodesic_point(p, q, 0.5); }

  /// Sphere log map: tangent vector at base pointing to p with |v| = d(base,p).
  Vec log_map(const Vec& base, const Vec& p) const {
    if (!is_sphere()) return p - base;
    const double c = std::clamp(base.dot(p), -1.0, 1.0);
    const double theta = distance(base, p);
    Vec perp = p - c * base;
    const double n = perp.norm();
    if (n < 1e-14) {
      if (theta > 1.0) throw std::domain_error("log_map: antipodal input");
      return Vec::Zero(p.size());
    }
    return (theta / n) * perp;
  }

  Vec exp_map(const Vec& base, const Vec& v) const {
    if (!is_sphere()) return base + v;
    const double n = v.norm();
    if (n < 1e-14) return base;
    Vec out = std::cos(n) * base + (std::sin(n) / n) * v;
    return out / out.norm();
  }

  /// Lipschitz constant of the contraction toward a common geodesic origin,
  /// valid for geodesics of length <= l. Sphere derivation: the map
  /// x -> G^{x,p}_t on B_l(p) has differential with radial singular value
  /// t <= 1 and tangential value sin(t s)/sin(s) <= s/sin(s) <= l/sin(l)
  /// for s <= l < pi, hence d(gamma_t, eta_t) <= (l/sin l) d(gamma_1, eta_1).
  double contraction_constant(double l) const {
    if (!is_sphere()) return 1.0;
    if (!(l > 0.0 && l < kPi))
      throw std::domain_error("contraction_constant: need l in (0, pi)");
    return l / std::sin(l);
  }

 private:
  void check_point(const Vec& p) const {
    if (p.size() != ambient_dim())
      throw std::invalid_argument("point dimension mismatch");
  }

  TargetKind kind_;
  int dim_;
};

/// Closed ball B_rho(center); sphere targets require rho < pi/2 strictly.
struct RegularBall {
  Vec center;
  double rho = 0.0;

  static RegularBall make(const Target& target, Vec center, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("ball radius must be positive");
    if (target.is_sphere() && !(rho < kPi / 2.0))
      throw std::invalid_argument("regular ball needs rho < pi/2");
    RegularBall b;
    b.center = target.canonical(std::move(center));
    b.rho = rho;
    return b;
  }

  bool contains(const Target& target, const Vec& p, double slack = 1e-9) const {
    return target.distance(p, center) <= rho + slack;
  }
};

/// Solves sin((1-eta) dd) / sin(dd) = cos(d/2) for eta in [0,1].
/// Closed form on the principal arcsin branch, valid since
/// (1-eta) dd <= dd < pi/2; the dd -> 0 limit is 1 - cos(d/2).
inline double eta_solve(double dd, double d) {
  if (!(dd >= 0.0 && dd < kPi / 2.0))
    throw std::domain_error("eta_solve: need 0 <= dd < pi/2");
  if (!(d >= 0.0 && d <= kPi)) throw std::domain_error("eta_solve: need 0 <= d <= pi");
  if (d == 0.0) return 0.0;  // cos(0) = 1 forces (1-eta) dd = dd
  const double c = std::cos(0.5 * d);
  if (dd < 1e-8) return std::clamp(1.0 - c, 0.0, 1.0);
  const double z = std::min(1.0, c * std::sin(dd));
  return std::clamp(1.0 - std::asin(z) / dd, 0.0, 1.0);
}

struct CorrectedMidpoint {
  Vec point;   // m_eta
  double d;    // d_Y(p, q)
  double dd;   // d_Y(m, center)
  double eta;
};

/// Midpoint of p and q pulled toward the ball center by eta solving
/// sin((1-eta) dd)/sin(dd) = cos(d/2). Euclidean targets use eta = 0
/// (flat limit: every cosine correction collapses to 1).
inline CorrectedMidpoint corrected_midpoint(const Target& target, const Vec& p,
                                            const Vec& q, const RegularBall& ball) {
  if (!ball.contains(target, p) || !ball.contains(target, q))
    throw std::domain_error("corrected_midpoint: endpoints must lie in the ball");
  CorrectedMidpoint out;
  const Vec m = target.midpoint(p, q);
  out.d = target.distance(p, q);
  out.dd = target.distance(m, ball.center);
  out.eta = target.is_sphere() ? eta_solve(out.dd, out.d) : 0.0;
  out.point = target.geodesic_point(m, ball.center, out.eta);
  return out;
}

inline Vec radial_contraction(const Target& target, const Vec& p,
                              const RegularBall& ball, double t) {
  if (!ball.contains(target, p))
    throw std::domain_error("radial_contraction: point outside ball");
  return target.geodesic_point(p, ball.center, t);
}

/// Comparison distance in the curvature-1 model: for a triangle with side
/// lengths (d(p,q), d(q,r), d(p,r)) and x at parameter t along q->r, the
/// spherical law of cosines gives d(p_bar, x_bar). Used by the model-space
/// equality sanity check.
inline double sphere_comparison_distance(double d_pq, double d_qr, double d_pr,
                                         double t) {
  if (d_qr < 1e-14) return d_pq;
  const double denom = std::sin(d_pq) * std::sin(d_qr);
  double cos_angle_q = 1.0;
  if (denom > 1e-300)
    cos_angle_q =
        std::clamp((std::cos(d_pr) - std::cos(d_pq) * std::cos(d_qr)) / denom, -1.0, 1.0);
  const double a = t * d_qr;
  const double c =
      std::cos(d_pq) * std::cos(a) + std::sin(d_pq) * std::sin(a) * cos_angle_q;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace ksh
