#pragma once

#include "ksh/domain.hpp"
#include "ksh/target.hpp"

#include <utility>
#include <vector>

namespace ksh {

// A map u: points -> target values inside a regular ball. Exterior values are
// the boundary trace and are frozen: the only mutation path writes interior
// ids. Every value is validated against the ball on construction (sphere
// values are renormalized first).
class MapState {
 public:
  MapState(DomainPtr domain, Target target, RegularBall ball, std::vector<Vec> values)
      : domain_(std::move(domain)),
        target_(target),
        ball_(std::move(ball)),
        values_(std::move(values)) {
    if (!domain_) throw std::invalid_argument("MapState: null domain");
    if (static_cast<int>(values_.size()) != domain_->size())
      throw std::invalid_argument("MapState: values must cover every point");
    for (auto& v : values_) {
      v = target_.canonical(v);
      if (!ball_.contains(target_, v))
        throw std::invalid_argument("MapState: value outside the regular ball");
    }
  }

  const PointCloudSpace& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  const Target& target() const { return target_; }
  const RegularBall& ball() const { return ball_; }
  const Vec& value(int i) const { return values_[static_cast<std::size_t>(i)]; }
  const std::vector<Vec>& values() const { return values_; }

  void set_interior_value(int i, Vec v) {
    if (!domain_->is_interior(i))
      throw std::invalid_argument("MapState: exterior values are frozen");
    v = target_.canonical(std::move(v));
    if (!ball_.contains(target_, v))
      throw std::invalid_argument("MapState: value outside the regular ball");
    values_[static_cast<std::size_t>(i)] = std::move(v);
  }

  bool same_domain(const MapState& o) const { return domain_.get() == o.domain_.get(); }
  bool same_target(const MapState& o) const {
    return target_ == o.target_ && (ball_.center - o.ball_.center).norm() == 0.0 &&
           ball_.rho == o.ball_.rho;
  }

  /// Bitwise equality of the frozen exterior values.
  bool same_trace(const MapState& o) const {
    if (!same_domain(o)) return false;
    for (int e : domain_->exterior_ids()) {
      const Vec& a = value(e);
      const Vec& b = o.value(e);
      if (a.size() != b.size()) return false;
      for (int k = 0; k < a.size(); ++k)
        if (a[k] != b[k]) return false;
    }
    return true;
  }

  static MapState constant(DomainPtr domain, const Target& target, RegularBall ball,
                           const Vec& v) {
    const int n = domain->size();
    return MapState(std::move(domain), target, std::move(ball),
                    std::vector<Vec>(static_cast<std::size_t>(n), v));
  }

 private:
  DomainPtr domain_;
  Target target_;
  RegularBall ball_;
  std::vector<Vec> values_;
};

/// Wraps per-point reals as a map into 1D Euclidean space; the ball is sized
/// to cover the data (any finite radius is regular in the flat target).
inline MapState make_real_map(DomainPtr domain, const std::vector<double>& values,
                              double min_radius = 1.0) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  const Target target = Target::euclidean(1);
  RegularBall ball = RegularBall::make(target, Vec::Zero(1), std::max(min_radius, 2.0 * m));
  std::vector<Vec> vec(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    vec[i] = Vec(1);
    vec[i][0] = values[i];
  }
  return MapState(std::move(domain), target, std::move(ball), std::move(vec));
}

/// Pointwise d_Y(u(x), v(x)) as a real-valued map; the exterior values are the
/// trace distances, inherited from the operands.
inline MapState distance_map(const MapState& u, const MapState& v) {
  if (!u.same_domain(v) || !u.same_target(v))
    throw std::invalid_argument("distance_map: domain/target mismatch");
  const int n = u.domain().size();
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) d[i] = u.target().distance(u.value(i), v.value(i));
  return make_real_map(u.domain_ptr(), d, std::max(1.0, kPi));
}

/// Interior-weighted L2 distance between two maps in the same trace class.
inline double l2_distance(const MapState& u, const MapState& v) {
  if (!u.same_domain(v) || !u.same_target(v))
    throw std::invalid_argument("l2_distance: domain/target mismatch");
  std::vector<double> terms;
  terms.reserve(u.domain().interior_ids().size());
  for (int x : u.domain().interior_ids()) {
    const double d = u.target().distance(u.value(x), v.value(x));
    terms.push_back(u.domain().weight(x) * d * d);
  }
  return std::sqrt(pairwise_sum(terms));
}

// ---------------------------------------------------------------------------
// Smooth random ball-valued maps for property sweeps: a low-frequency Fourier
// tangent field at the ball center pushed through exp, clamped radially into
// a fraction of the ball. The analytic Lipschitz bound of the tangent field
// is recorded (exp at the sphere center is metrically contracting, and the
// radial clamp is c_rho-Lipschitz).
// ---------------------------------------------------------------------------

struct SmoothMapParams {
  int n_modes = 4;
  double amplitude = 0.5;    // max tangent norm, split across modes
  double max_freq = 2.0;     // spatial frequency scale (radians per unit)
  double clamp_fraction = 0.95;
  std::uint64_t seed = 1;
};

struct RandomMap {
  MapState map;
  double lipschitz_bound = 0.0;
};

inline RandomMap random_smooth_map(DomainPtr domain, const Target& target,
                                   const RegularBall& ball, const SmoothMapParams& params) {
  if (!domain->has_coords())
    throw std::invalid_argument("random_smooth_map: needs a coordinate domain");
  const int sdim = domain->coord_dim();
  const int tdim = target.dim();

  // Orthonormal tangent basis at the ball center.
  std::vector<Vec> basis;
  if (target.is_sphere()) {
    Eigen::MatrixXd a(target.ambient_dim(), tdim + 1);
    a.col(0) = Eigen::VectorXd(ball.center);
    Rng brng(params.seed ^ 0xBA515ULL);
    for (int k = 1; k <= tdim; ++k) a.col(k) = brng.gaussian_vector(target.ambient_dim());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(target.ambient_dim(), tdim + 1);
    for (int k = 1; k <= tdim; ++k) basis.push_back(Vec(q.col(k)));
  } else {
    for (int k = 0; k < tdim; ++k) {
      Vec e = Vec::Zero(tdim);
      e[k] = 1.0;
      basis.push_back(e);
    }
  }

  Rng rng(params.seed);
  struct Mode {
    Eigen::VectorXd omega;
    double phase;
    Vec dir;
    double amp;
  };
  std::vector<Mode> modes(params.n_modes);
  double lip = 0.0;
  for (auto& m : modes) {
    m.omega = Eigen::VectorXd(sdim);
    for (int d = 0; d < sdim; ++d) m.omega[d] = rng.uniform(-params.max_freq, params.max_freq) * kPi;
    m.phase = rng.uniform(0.0, 2.0 * kPi);
    Vec dir = Vec::Zero(target.ambient_dim());
    for (const auto& b : basis) dir += rng.normal() * b;
    if (dir.norm() < 1e-12) dir = basis.front();
    m.dir = dir / dir.norm();
    m.amp = params.amplitude / params.n_modes;
    lip += m.amp * m.omega.norm();
  }

  const double rmax = params.clamp_fraction * ball.rho;
  const int n = domain->size();
  std::vector<Vec> values(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto c = domain->point_coords(i);
    Vec tangent = Vec::Zero(target.ambient_dim());
    for (const auto& m : modes) {
      double arg = m.phase;
      for (int d = 0; d < sdim; ++d) arg += m.omega[d] * c[d];
      tangent += (m.amp * std::sin(arg)) * m.dir;
    }
    Vec v = target.exp_map(ball.center, tangent);
    const double dist = target.distance(v, ball.center);
    if (dist > rmax) v = target.geodesic_point(v, ball.center, 1.0 - rmax / dist);
    values[static_cast<std::size_t>(i)] = v;
  }
  if (target.is_sphere()) lip *= ball.rho / std::sin(ball.rho);  // radial clamp distortion
  return RandomMap{MapState(std::move(domain), target, ball, std::move(values)), lip};
}

/// A pair (u, v) sharing the exterior trace (v's exterior values are
/// overwritten with u's trace).
inline std::pair<RandomMap, RandomMap> random_smooth_pair(DomainPtr domain,
                                                          const Target& target,
                                                          const RegularBall& ball,
                                                          SmoothMapParams params) {
  RandomMap u = random_smooth_map(domain, target, ball, params);
  params.seed ^= 0xC0FFEEULL;
  RandomMap v = random_smooth_map(domain, target, ball, params);
  std::vector<Vec> vals = v.map.values();
  for (int e : domain->exterior_ids()) vals[static_cast<std::size_t>(e)] = u.map.value(e);
  v.map = MapState(domain, target, ball, std::move(vals));
  return {std::move(u), std::move(v)};
}

}  // namespace ksh
