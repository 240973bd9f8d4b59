#pragma once

#include "ksh/map_state.hpp"

#include <memory>

namespace ksh::bench {

/// Path graph with n_interior middle nodes and `collar_depth` frozen nodes on
/// each end (depth 2 keeps every coefficient touching an unknown uniform for
/// ball radius up to 2 edges). Unit weights, unit edge lengths by default.
inline DomainPtr chain_domain(int n_interior, double edge_len = 1.0, int collar_depth = 2) {
  const int n = n_interior + 2 * collar_depth;
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1, edge_len);
  std::vector<int> interior;
  for (int i = collar_depth; i < collar_depth + n_interior; ++i) interior.push_back(i);
  return std::make_shared<PointCloudSpace>(
      PointCloudSpace::build_graph_domain(edges, interior, std::vector<double>(n, 1.0)));
}

/// Boundary values for the chain from two explicit endpoints: left collar
/// nodes carry p, right collar nodes carry q, interior starts at the center.
inline MapState chain_trace_points(DomainPtr domain, const Target& target,
                                   const RegularBall& ball, const Vec& p, const Vec& q) {
  const auto& dom = *domain;
  std::vector<Vec> values(static_cast<std::size_t>(dom.size()), ball.center);
  const int n = dom.size();
  for (int i = 0; i < n; ++i) {
    if (dom.is_interior(i)) continue;
    values[static_cast<std::size_t>(i)] = (i < n / 2) ? p : q;
  }
  return MapState(std::move(domain), target, ball, std::move(values));
}

/// Boundary values for the chain: two points at the requested geodesic
/// separation, symmetric about the ball center along a fixed tangent
/// direction. Interior values start at the center.
inline MapState chain_trace(DomainPtr domain, const Target& target, const RegularBall& ball,
                            double separation) {
  if (!(separation >= 0.0)) throw std::invalid_argument("chain_trace: separation >= 0");
  if (target.is_sphere() && !(separation / 2.0 <= ball.rho))
    throw std::invalid_argument("chain_trace: endpoints would leave the ball");
  Vec e = Vec::Zero(target.ambient_dim());
  e[0] = 1.0;
  if (target.is_sphere()) e -= e.dot(ball.center) * ball.center;
  if (e.norm() < 1e-12) {
    e = Vec::Zero(target.ambient_dim());
    e[1] = 1.0;
    if (target.is_sphere()) e -= e.dot(ball.center) * ball.center;
  }
  e /= e.norm();
  const Vec p = target.exp_map(ball.center, (separation / 2.0) * e);
  const Vec q = target.exp_map(ball.center, (-separation / 2.0) * e);
  return chain_trace_points(std::move(domain), target, ball, p, q);
}

/// Equispaced geodesic interpolation between the two trace values of a chain:
/// the 1D oracle for the Dirichlet benchmark. Returns the expected interior
/// values in interior-id order.
inline std::vector<Vec> equispaced_slerp(const Target& target, const Vec& p, const Vec& q,
                                         int n_interior, int collar_depth = 2) {
  // n_interior+1 free gaps plus the two trace-adjacent gaps -> parameter
  // step 1/(n_interior+1) between the innermost frozen nodes.
  std::vector<Vec> vals;
  const int gaps = n_interior + 1;
  for (int k = 1; k <= n_interior; ++k)
    vals.push_back(target.geodesic_point(p, q, static_cast<double>(k) / gaps));
  (void)collar_depth;
  return vals;
}

/// Smooth nonconstant boundary data on a coordinate domain: a fixed
/// low-frequency tangent field at the ball center (deterministic in seed),
/// exterior values only; interior starts at the center.
inline MapState smooth_trace(DomainPtr domain, const Target& target, const RegularBall& ball,
                             double amplitude, std::uint64_t seed) {
  SmoothMapParams params;
  params.amplitude = amplitude;
  params.seed = seed;
  params.n_modes = 3;
  params.max_freq = 1.0;
  RandomMap field = random_smooth_map(domain, target, ball, params);
  std::vector<Vec> values(static_cast<std::size_t>(domain->size()), ball.center);
  for (int e : domain->exterior_ids()) values[static_cast<std::size_t>(e)] = field.map.value(e);
  return MapState(std::move(domain), target, ball, std::move(values));
}

}  // namespace ksh::bench
