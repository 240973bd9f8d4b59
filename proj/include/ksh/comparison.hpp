#pragma once

#include "ksh/energy.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ksh {

// Signed defects (LHS - RHS, Cub term excluded) of the CAT(1) comparison
// estimates and the energy inequalities built from them. Defects are
// reported signed; only the positive part is ever bounded, the estimates
// being one-sided inequalities up to cubic error.

struct DefectReport {
  std::string kind;
  double scale = 0.0;   // max of the variables inside the estimate's Cub(...)
  double defect = 0.0;
  std::vector<Vec> config;
  std::array<double, 2> params{0.0, 0.0};  // (t, s) for the two-parameter estimate
};

/// Quadrilateral midpoint estimate: geodesics g and h, perimeter < 2pi.
/// defect = k(d_g) d^2(mid_g, mid_h) + (Delta/2)^2 - (d^2(g0,h0)+d^2(g1,h1))/2
/// with k = cos^2(d_g/2) on the sphere and k = 1 in the flat model.
inline DefectReport estimate_I_defect(const Target& target, const Vec& g0, const Vec& g1,
                                      const Vec& h0, const Vec& h1) {
  const double d_g0h0 = target.distance(g0, h0);
  const double d_h0h1 = target.distance(h0, h1);
  const double d_h1g1 = target.distance(h1, g1);
  const double d_g1g0 = target.distance(g1, g0);
  if (target.is_sphere() && !(d_g0h0 + d_h0h1 + d_h1g1 + d_g1g0 < 2.0 * kPi))
    throw std::domain_error("estimate_I_defect: perimeter must be < 2*pi");

  const Vec mg = target.midpoint(g0, g1);
  const Vec mh = target.midpoint(h0, h1);
  const double d_mm = target.distance(mg, mh);
  const double delta = d_h0h1 - d_g1g0;
  const double d_g1h1 = target.distance(g1, h1);
  const double coef = target.is_sphere() ? std::pow(std::cos(0.5 * d_g1g0), 2) : 1.0;

  DefectReport rep;
  rep.kind = "estimateI";
  rep.defect = coef * d_mm * d_mm + 0.25 * delta * delta -
               0.5 * (d_g0h0 * d_g0h0 + d_g1h1 * d_g1h1);
  rep.scale = std::max({d_g0h0, d_g1h1, std::abs(delta), d_mm});
  rep.config = {g0, g1, h0, h1};
  return rep;
}

/// Common-endpoint estimate: gamma from g0 to g1, eta from h0 to h1 := g1.
/// Flat model replaces the sine ratio by its linear limit (1-t)^2.
inline DefectReport estimate_II_defect(const Target& target, const Vec& g0, const Vec& g1,
                                       const Vec& h0, double t, double s) {
  const Vec& h1 = g1;
  const double L = target.distance(g0, g1);
  const double B = target.distance(h0, h1);
  const double C = target.distance(g0, h0);
  if (target.is_sphere()) {
    if (!(C + B + L < 2.0 * kPi))
      throw std::domain_error("estimate_II_defect: perimeter must be < 2*pi");
    if (!(L > 0.0 && L < kPi))
      throw std::domain_error("estimate_II_defect: need d(g0,g1) in (0, pi)");
  } else if (!(L > 0.0)) {
    throw std::domain_error("estimate_II_defect: need d(g0,g1) > 0");
  }
  if (!(t >= 0.0 && t <= 1.0 && s >= 0.0 && s <= 1.0))
    throw std::domain_error("estimate_II_defect: parameters must lie in [0,1]");

  const double delta = B - L;
  const Vec gt = target.geodesic_point(g0, g1, t);
  const Vec es = target.geodesic_point(h0, h1, s);
  const double d_ts = target.distance(gt, es);
  const double ratio = target.is_sphere()
                           ? std::pow(std::sin((1.0 - t) * L) / std::sin(L), 2)
                           : (1.0 - t) * (1.0 - t);
  const double rhs = ratio * (C * C - delta * delta) + (1.0 - t) * (1.0 - t) * delta * delta +
                     L * L * (s - t) * (s - t) - 2.0 * (1.0 - t) * (s - t) * L * delta;

  DefectReport rep;
  rep.kind = "estimateII";
  rep.defect = d_ts * d_ts - rhs;
  rep.scale = std::max({std::abs(s - t), C, std::abs(delta), d_ts});
  rep.config = {g0, g1, h0};
  rep.params = {t, s};
  return rep;
}

// ---------------------------------------------------------------------------
// Pointwise energy-inequality defects (ks in place of the energy density)
// ---------------------------------------------------------------------------

struct PointwiseDefects {
  std::string kind;
  double r = 0.0;
  std::vector<double> defect;   // by point id, 0 off-interior
  double max_positive = 0.0;
  double weighted_mean = 0.0;   // mass-weighted over interior
};

namespace detail {

inline PointwiseDefects summarize_defects(const PointCloudSpace& dom, std::string kind,
                                          double r, std::vector<double> defect) {
  PointwiseDefects out;
  out.kind = std::move(kind);
  out.r = r;
  out.defect = std::move(defect);
  std::vector<double> weighted;
  double wsum = 0.0;
  for (int x : dom.interior_ids()) {
    const double d = out.defect[static_cast<std::size_t>(x)];
    out.max_positive = std::max(out.max_positive, d);
    weighted.push_back(dom.weight(x) * d);
    wsum += dom.weight(x);
  }
  out.max_positive = std::max(out.max_positive, 0.0);
  out.weighted_mean = pairwise_sum(weighted) / wsum;
  return out;
}

}  // namespace detail

/// Per-point defect of the midpoint energy estimate:
/// cos^2(d/2) ks^2[m] + ks^2[d]/4 - (ks^2[u] + ks^2[v])/2  (flat: cos -> 1).
inline PointwiseDefects midpoint_energy_defect(const MapState& u, const MapState& v,
                                               double r) {
  if (!u.same_domain(v) || !u.same_target(v))
    throw std::invalid_argument("midpoint_energy_defect: domain/target mismatch");
  const auto& dom = u.domain();
  const Target& target = u.target();
  const int n = dom.size();

  std::vector<Vec> mid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) mid[static_cast<std::size_t>(i)] = target.midpoint(u.value(i), v.value(i));
  const MapState m(u.domain_ptr(), target, u.ball(), std::move(mid));
  const MapState d = distance_map(u, v);

  std::vector<double> defect(static_cast<std::size_t>(n), 0.0);
  const auto& ids = dom.interior_ids();
  parallel_for(ids.size(), [&](std::size_t k) {
    const int x = ids[k];
    const double ks_m = ks_at(m, r, x);
    const double ks_d = ks_at(d, r, x);
    const double ks_u = ks_at(u, r, x);
    const double ks_v = ks_at(v, r, x);
    const double dx = d.value(x)[0];
    const double coef = target.is_sphere() ? std::pow(std::cos(0.5 * dx), 2) : 1.0;
    defect[static_cast<std::size_t>(x)] =
        coef * ks_m * ks_m + 0.25 * ks_d * ks_d - 0.5 * (ks_u * ks_u + ks_v * ks_v);
  });
  return detail::summarize_defects(dom, "midpoint_energy", r, std::move(defect));
}

/// Per-point defect of the radial-contraction estimate for u_eta = G^{u,o}_eta:
/// ks^2[u_eta] - sin^2((1-eta) dd)/sin^2(dd) (ks^2[u] - ks^2[dd]) - ks^2[(1-eta) dd].
inline PointwiseDefects radial_energy_defect(const MapState& u, const MapState& eta,
                                             double r) {
  if (!u.same_domain(eta))
    throw std::invalid_argument("radial_energy_defect: domain mismatch");
  if (eta.target().kind() != TargetKind::euclidean || eta.target().dim() != 1)
    throw std::invalid_argument("radial_energy_defect: eta must be a real-valued map");
  const auto& dom = u.domain();
  const Target& target = u.target();
  const int n = dom.size();
  for (int i = 0; i < n; ++i) {
    const double e = eta.value(i)[0];
    if (!(e >= 0.0 && e <= 1.0))
      throw std::invalid_argument("radial_energy_defect: eta values must lie in [0,1]");
  }

  std::vector<Vec> contracted(static_cast<std::size_t>(n));
  std::vector<double> dd_vals(static_cast<std::size_t>(n)), xd_vals(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double e = eta.value(i)[0];
    contracted[static_cast<std::size_t>(i)] =
        target.geodesic_point(u.value(i), u.ball().center, e);
    dd_vals[static_cast<std::size_t>(i)] = target.distance(u.value(i), u.ball().center);
    xd_vals[static_cast<std::size_t>(i)] = (1.0 - e) * dd_vals[static_cast<std::size_t>(i)];
  }
  const MapState u_eta(u.domain_ptr(), target, u.ball(), std::move(contracted));
  const MapState dd = make_real_map(u.domain_ptr(), dd_vals, std::max(1.0, kPi));
  const MapState xd = make_real_map(u.domain_ptr(), xd_vals, std::max(1.0, kPi));

  std::vector<double> defect(static_cast<std::size_t>(n), 0.0);
  const auto& ids = dom.interior_ids();
  parallel_for(ids.size(), [&](std::size_t k) {
    const int x = ids[k];
    const double ks_ue = ks_at(u_eta, r, x);
    const double ks_u = ks_at(u, r, x);
    const double ks_dd = ks_at(dd, r, x);
    const double ks_xd = ks_at(xd, r, x);
    const double xi = 1.0 - eta.value(x)[0];
    const double dx = dd_vals[static_cast<std::size_t>(x)];
    double ratio;
    if (!target.is_sphere() || dx < 1e-8) {
      ratio = xi * xi;
    } else {
      const double q = std::sin(xi * dx) / std::sin(dx);
      ratio = q * q;
    }
    // grouped so the eta == 0 and eta == 1 cases cancel exactly
    defect[static_cast<std::size_t>(x)] =
        (ks_ue * ks_ue - ratio * ks_u * ks_u) + (ratio * ks_dd * ks_dd - ks_xd * ks_xd);
  });
  return detail::summarize_defects(dom, "radial_energy", r, std::move(defect));
}

// ---------------------------------------------------------------------------
// Convexity of the energy along corrected midpoints
// ---------------------------------------------------------------------------

struct ConvexityReport {
  double r = 0.0;
  double e_m_eta = 0.0;   // E_r of the corrected-midpoint map
  double e_tan = 0.0;     // E_r of tan(d/2)/cos(dd)  (flat: d/2)
  double e_u = 0.0;
  double e_v = 0.0;
  double defect_total = 0.0;  // e_m_eta + cos^8(rho) e_tan - (e_u + e_v)/2
};

inline ConvexityReport convexity_defect(const MapState& u, const MapState& v, double r) {
  if (!u.same_domain(v) || !u.same_target(v))
    throw std::invalid_argument("convexity_defect: domain/target mismatch");
  if (!u.same_trace(v))
    throw std::invalid_argument("convexity_defect: maps must share the boundary trace");
  const auto& dom = u.domain();
  const Target& target = u.target();
  const RegularBall& ball = u.ball();
  const int n = dom.size();

  std::vector<Vec> m_eta(static_cast<std::size_t>(n));
  std::vector<double> tan_vals(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const CorrectedMidpoint cm = corrected_midpoint(target, u.value(i), v.value(i), ball);
    m_eta[static_cast<std::size_t>(i)] = cm.point;
    tan_vals[static_cast<std::size_t>(i)] =
        target.is_sphere() ? std::tan(0.5 * cm.d) / std::cos(cm.dd) : 0.5 * cm.d;
  }
  const MapState m_eta_map(u.domain_ptr(), target, ball, std::move(m_eta));
  const MapState tan_map = make_real_map(u.domain_ptr(), tan_vals);

  ConvexityReport rep;
  rep.r = r;
  rep.e_m_eta = total_energy(m_eta_map, r).total;
  rep.e_tan = total_energy(tan_map, r).total;
  rep.e_u = total_energy(u, r).total;
  rep.e_v = total_energy(v, r).total;
  const double coef = target.is_sphere() ? std::pow(std::cos(ball.rho), 8) : 1.0;
  rep.defect_total = (rep.e_m_eta + coef * rep.e_tan) - 0.5 * (rep.e_u + rep.e_v);
  return rep;
}

// ---------------------------------------------------------------------------
// Cauchy functional from the minimizing-sequence argument
// ---------------------------------------------------------------------------

struct CauchyResult {
  double functional = 0.0;  // sum_x w(x) (tan(d/2)/cos dd)^2
  double l2 = 0.0;          // plain interior-weighted L2 distance
  bool closing_bound_holds = false;  // l2^2 <= 4 * functional
};

inline CauchyResult cauchy_functional(const MapState& u, const MapState& v) {
  if (!u.same_domain(v) || !u.same_target(v))
    throw std::invalid_argument("cauchy_functional: domain/target mismatch");
  if (!u.same_trace(v))
    throw std::invalid_argument("cauchy_functional: maps must share the boundary trace");
  const auto& dom = u.domain();
  const Target& target = u.target();
  std::vector<double> terms, l2_terms;
  for (int x : dom.interior_ids()) {
    const double d = target.distance(u.value(x), v.value(x));
    double val;
    if (target.is_sphere()) {
      const Vec mid = target.midpoint(u.value(x), v.value(x));
      const double dd = target.distance(mid, u.ball().center);
      val = std::tan(0.5 * d) / std::cos(dd);
    } else {
      val = 0.5 * d;
    }
    terms.push_back(dom.weight(x) * val * val);
    l2_terms.push_back(dom.weight(x) * d * d);
  }
  CauchyResult res;
  res.functional = pairwise_sum(terms);
  const double l2sq = pairwise_sum(l2_terms);
  res.l2 = std::sqrt(l2sq);
  res.closing_bound_holds = l2sq <= 4.0 * res.functional * (1.0 + 1e-12) + 1e-300;
  return res;
}

// ---------------------------------------------------------------------------
// Monte-Carlo cubic-scaling study for the two comparison estimates.
// Each record draws from its own RNG stream, so batches are reproducible
// under any scheduling.
// ---------------------------------------------------------------------------

enum class EstimateKind { I, II };

struct ScalingConfig {
  int samples_per_scale = 100;
  std::uint64_t seed = 20240401;
  std::vector<double> scales{1e-1, 3.1622776601683794e-2, 1e-2, 3.1622776601683795e-3, 1e-3};
  double geodesic_lo = 0.3;
  double geodesic_hi = 2.9;
};

struct ScalePoint {
  double scale = 0.0;
  double p95_positive = 0.0;
  double max_positive = 0.0;
  int positive_count = 0;
};

struct ScalingStudy {
  EstimateKind kind = EstimateKind::I;
  std::vector<ScalePoint> points;
  std::optional<double> slope;  // log-log fit over scales with positive p95
};

namespace detail {

inline Vec random_sphere_point(Rng& rng, int ambient) {
  Vec v(ambient);
  double n = 0.0;
  do {
    for (int i = 0; i < ambient; ++i) v[i] = rng.normal();
    n = v.norm();
  } while (n < 1e-6);
  return v / n;
}

inline Vec random_tangent(Rng& rng, const Target& target, const Vec& base, double len) {
  Vec v(base.size());
  for (int i = 0; i < base.size(); ++i) v[i] = rng.normal();
  if (target.is_sphere()) v -= v.dot(base) * base;
  const double n = v.norm();
  if (n < 1e-12) {
    Vec e = Vec::Zero(base.size());
    e[0] = 1.0;
    return len * e;
  }
  return (len / n) * v;
}

inline double estimate_sample_defect(EstimateKind kind, const Target& target, Rng& rng,
                                     double scale, double glo, double ghi) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vec g0(target.ambient_dim());
    if (target.is_sphere()) {
      g0 = random_sphere_point(rng, target.ambient_dim());
    } else {
      for (int i = 0; i < g0.size(); ++i) g0[i] = rng.normal();
    }
    const double len = rng.uniform(glo, ghi);
    const Vec g1 = target.exp_map(g0, random_tangent(rng, target, g0, len));
    if (kind == EstimateKind::I) {
      const Vec h0 = target.exp_map(g0, random_tangent(rng, target, g0, scale * rng.uniform()));
      const Vec h1 = target.exp_map(g1, random_tangent(rng, target, g1, scale * rng.uniform()));
      if (target.is_sphere()) {
        const double per = target.distance(g0, h0) + target.distance(h0, h1) +
                           target.distance(h1, g1) + target.distance(g1, g0);
        if (!(per < 2.0 * kPi)) continue;
      }
      return estimate_I_defect(target, g0, g1, h0, h1).defect;
    }
    const Vec h0 = target.exp_map(g0, random_tangent(rng, target, g0, scale * rng.uniform()));
    const double t = rng.uniform();
    const double s = std::clamp(t + scale * rng.uniform(-1.0, 1.0), 0.0, 1.0);
    if (target.is_sphere()) {
      const double per =
          target.distance(g0, h0) + target.distance(h0, g1) + target.distance(g1, g0);
      if (!(per < 2.0 * kPi)) continue;
    }
    return estimate_II_defect(target, g0, g1, h0, t, s).defect;
  }
  throw std::runtime_error("estimate scaling: could not draw an admissible configuration");
}

}  // namespace detail

inline ScalingStudy run_estimate_scaling(EstimateKind kind, const Target& target,
                                         const ScalingConfig& cfg) {
  ScalingStudy study;
  study.kind = kind;
  const std::uint64_t kind_salt = (kind == EstimateKind::I) ? 0x1ULL : 0x2ULL;
  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    const double s = cfg.scales[si];
    std::vector<double> defects(cfg.samples_per_scale);
    parallel_for(defects.size(), [&](std::size_t i) {
      Rng rng = Rng::for_record(cfg.seed ^ (kind_salt << 56),
                                si * static_cast<std::size_t>(cfg.samples_per_scale) + i);
      defects[i] = std::max(
          0.0, detail::estimate_sample_defect(kind, target, rng, s, cfg.geodesic_lo,
                                              std::min(cfg.geodesic_hi, kPi - 2.0 * s)));
    });
    ScalePoint pt;
    pt.scale = s;
    pt.p95_positive = percentile(defects, 95.0);
    pt.max_positive = *std::max_element(defects.begin(), defects.end());
    pt.positive_count = static_cast<int>(std::count_if(
        defects.begin(), defects.end(), [](double d) { return d > 0.0; }));
    study.points.push_back(pt);
  }
  std::vector<double> lx, ly;
  for (const auto& pt : study.points) {
    if (pt.p95_positive > 0.0) {
      lx.push_back(std::log(pt.scale));
      ly.push_back(std::log(pt.p95_positive));
    }
  }
  if (lx.size() >= 2) study.slope = fit_line(lx, ly).slope;
  return study;
}

}  // namespace ksh
