#pragma once

#include "ksh/map_state.hpp"

#include <optional>
#include <vector>

namespace ksh {

// Korevaar-Schoen approximate energy at scale r, its exclusion-set variant,
// totals, and the r->0 density extrapolation. ks_at is zero whenever the
// r-ball is not contained in the interior region; this case split is the
// reported functional everywhere (the solver's objective is separate, see
// solver.hpp).

inline double ks_at(const MapState& u, double r, int x) {
  const auto& dom = u.domain();
  if (!dom.ball_inside_interior(x, r)) return 0.0;
  const BallIndex b = dom.ball(x, r);
  const Vec& ux = u.value(x);
  double s = 0.0;
  for (int y : b.members) {
    const double d = u.target().distance(ux, u.value(y));
    s += dom.weight(y) * d * d;
  }
  return std::sqrt(s / (b.mass * r * r));
}

struct EnergyReport {
  double r = 0.0;
  std::vector<double> per_point_ks;              // indexed by point id; 0 off-interior
  double total = 0.0;                            // sum_x interior w(x) ks(x)^2
  std::vector<double> excluded_mass_fraction;    // 0 for the plain energy
};

namespace detail {

template <typename PointKs>
EnergyReport assemble_energy_report(const PointCloudSpace& dom, double r, PointKs&& point_ks) {
  EnergyReport rep;
  rep.r = r;
  const int n = dom.size();
  rep.per_point_ks.assign(static_cast<std::size_t>(n), 0.0);
  rep.excluded_mass_fraction.assign(static_cast<std::size_t>(n), 0.0);
  const auto& ids = dom.interior_ids();
  parallel_for(ids.size(), [&](std::size_t k) {
    const int x = ids[k];
    auto [ks, excl] = point_ks(x);
    rep.per_point_ks[static_cast<std::size_t>(x)] = ks;
    rep.excluded_mass_fraction[static_cast<std::size_t>(x)] = excl;
  });
  std::vector<double> terms(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const double ks = rep.per_point_ks[static_cast<std::size_t>(ids[k])];
    terms[k] = dom.weight(ids[k]) * ks * ks;
  }
  rep.total = pairwise_sum(terms);
  return rep;
}

}  // namespace detail

inline EnergyReport total_energy(const MapState& u, double r) {
  return detail::assemble_energy_report(
      u.domain(), r, [&](int x) { return std::pair<double, double>(ks_at(u, r, x), 0.0); });
}

/// Ids y whose v- or w-displacement from x reaches alpha.
struct ExclusionSet {
  int x = -1;
  double alpha = 0.0;
  std::vector<int> excluded;
};

inline ExclusionSet exclusion_set(const MapState& v, const MapState& w, double alpha, int x) {
  if (!(alpha > 0.0)) throw std::invalid_argument("exclusion_set: alpha must be positive");
  if (!v.same_domain(w)) throw std::invalid_argument("exclusion_set: domain mismatch");
  ExclusionSet out;
  out.x = x;
  out.alpha = alpha;
  const Vec& vx = v.value(x);
  const Vec& wx = w.value(x);
  for (int y = 0; y < v.domain().size(); ++y) {
    if (v.target().distance(vx, v.value(y)) >= alpha ||
        w.target().distance(wx, w.value(y)) >= alpha)
      out.excluded.push_back(y);
  }
  return out;
}

namespace detail {

inline std::pair<double, double> ks_modified_point(const MapState& u, const MapState& v,
                                                   const MapState& w, double alpha, double r,
                                                   int x) {
  const auto& dom = u.domain();
  if (!dom.ball_inside_interior(x, r)) return {0.0, 0.0};
  const BallIndex b = dom.ball(x, r);
  const Vec& ux = u.value(x);
  const Vec& vx = v.value(x);
  const Vec& wx = w.value(x);
  double s = 0.0, removed = 0.0;
  for (int y : b.members) {
    if (v.target().distance(vx, v.value(y)) >= alpha ||
        w.target().distance(wx, w.value(y)) >= alpha) {
      removed += dom.weight(y);
      continue;
    }
    const double d = u.target().distance(ux, u.value(y));
    s += dom.weight(y) * d * d;
  }
  // Normalization keeps the full ball mass, as in the unmodified energy.
  return {std::sqrt(s / (b.mass * r * r)), removed / b.mass};
}

}  // namespace detail

inline double ks_modified_at(const MapState& u, const MapState& v, const MapState& w,
                             double alpha, double r, int x) {
  if (!(alpha > 0.0) || !(r > 0.0))
    throw std::invalid_argument("ks_modified_at: alpha and r must be positive");
  if (!u.same_domain(v) || !u.same_domain(w))
    throw std::invalid_argument("ks_modified_at: domain mismatch");
  return detail::ks_modified_point(u, v, w, alpha, r, x).first;
}

inline EnergyReport total_energy_modified(const MapState& u, const MapState& v,
                                          const MapState& w, double alpha, double r) {
  if (!u.same_domain(v) || !u.same_domain(w))
    throw std::invalid_argument("total_energy_modified: domain mismatch");
  return detail::assemble_energy_report(u.domain(), r, [&](int x) {
    return detail::ks_modified_point(u, v, w, alpha, r, x);
  });
}

// ---------------------------------------------------------------------------
// Energy-density estimation: per-point linear extrapolation of ks over an
// r-sweep to r = 0, restricted to points whose largest-r ball stays interior.
// ---------------------------------------------------------------------------

struct DensityEstimate {
  std::vector<double> r_values;
  std::vector<double> estimate;   // by point id; meaningful where valid
  std::vector<double> residual;   // rms residual of the per-point line fit
  std::vector<uint8_t> valid;
};

inline DensityEstimate density_estimate(const MapState& u, std::vector<double> r_values) {
  if (r_values.size() < 2)
    throw std::invalid_argument("density_estimate: need at least two scales");
  for (std::size_t i = 1; i < r_values.size(); ++i)
    if (!(r_values[i] < r_values[i - 1]))
      throw std::invalid_argument("density_estimate: r values must decrease");
  const auto& dom = u.domain();
  const int n = dom.size();
  DensityEstimate out;
  out.r_values = r_values;
  out.estimate.assign(static_cast<std::size_t>(n), 0.0);
  out.residual.assign(static_cast<std::size_t>(n), 0.0);
  out.valid.assign(static_cast<std::size_t>(n), 0);
  const double r_max = r_values.front();
  const auto& ids = dom.interior_ids();
  parallel_for(ids.size(), [&](std::size_t k) {
    const int x = ids[k];
    if (!dom.ball_inside_interior(x, r_max)) return;
    std::vector<double> ks(r_values.size());
    std::size_t usable = 0;
    for (std::size_t i = 0; i < r_values.size(); ++i) {
      if (!dom.ball_inside_interior(x, r_values[i])) break;
      ks[i] = ks_at(u, r_values[i], x);
      ++usable;
    }
    if (usable < 2) return;
    const LineFit fit = fit_line(std::span(r_values.data(), usable), std::span(ks.data(), usable));
    out.estimate[static_cast<std::size_t>(x)] = fit.intercept;
    out.residual[static_cast<std::size_t>(x)] = fit.rms_residual;
    out.valid[static_cast<std::size_t>(x)] = 1;
  });
  return out;
}

struct ConsistencyResult {
  double c_d_estimate = 0.0;
  double reference = 0.0;   // (d+2)^{-1/2}
  int points_used = 0;
};

/// For a real-valued map sampled from a C^1 function on a Euclidean grid,
/// estimates the dimensional constant relating the energy density to |Du|
/// (central differences), alongside the analytic reference (d+2)^{-1/2}.
inline ConsistencyResult consistency_check(const MapState& u, std::vector<double> r_values) {
  const auto& dom = u.domain();
  if (u.target().kind() != TargetKind::euclidean || u.target().dim() != 1)
    throw std::invalid_argument("consistency_check: target must be 1D Euclidean");
  if (!dom.grid_info())
    throw std::invalid_argument("consistency_check: domain must be a grid");
  const GridInfo& g = *dom.grid_info();
  const DensityEstimate dens = density_estimate(u, r_values);
  const auto bulk = dom.bulk_points(2.0 * r_values.front());

  std::vector<double> ratios;
  for (int x : bulk) {
    if (!dens.valid[static_cast<std::size_t>(x)]) continue;
    auto idx = g.unflatten(x);
    double grad2 = 0.0;
    bool ok = true;
    for (int a = 0; a < g.dim && ok; ++a) {
      if (idx[a] == 0 || idx[a] == g.npts[a] - 1) {
        ok = false;
        break;
      }
      auto up = idx, dn = idx;
      ++up[a];
      --dn[a];
      const double df =
          (u.value(g.flatten(up))[0] - u.value(g.flatten(dn))[0]) / (2.0 * g.spacing[a]);
      grad2 += df * df;
    }
    if (!ok) continue;
    const double grad = std::sqrt(grad2);
    if (grad < 1e-8) continue;
    ratios.push_back(dens.estimate[static_cast<std::size_t>(x)] / grad);
  }
  if (ratios.empty()) throw std::invalid_argument("consistency_check: no usable points");
  ConsistencyResult res;
  res.points_used = static_cast<int>(ratios.size());
  res.c_d_estimate = median(ratios);
  res.reference = 1.0 / std::sqrt(static_cast<double>(g.dim) + 2.0);
  return res;
}

}  // namespace ksh
