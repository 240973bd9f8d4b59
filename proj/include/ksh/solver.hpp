#pragma once

#include "ksh/comparison.hpp"

#include <numeric>
#include <string>
#include <vector>

namespace ksh {

// Monotone relaxation for the Dirichlet problem: Gauss-Seidel sweeps of
// local weighted barycenters on the boundary-coupled discrete energy
//
//   E_D(u) = sum_{x in X} w_x / (r^2 m(B_r(x))) sum_{y in B_r(x)} w_y d_Y^2(u_x, u_y),
//
// with exterior values frozen to the boundary trace. Exterior ball members
// supply the Dirichlet coupling; with collar depth >= r the pair
// coefficients are uniform in the bulk, so the 1D chain minimizer is the
// equispaced geodesic. The case-split KS functional (energy.hpp) is reported
// alongside and is not the optimization objective.

struct SolverConfig {
  double r = 0.1;
  int max_sweeps = 2000;
  double energy_tol = 0.0;        // relative per-sweep decrease threshold
  double move_tol = 1e-11;        // max pointwise geodesic move threshold
  std::vector<int> sweep_order;   // empty -> interior ids in ascending order
  int barycenter_max_iter = 60;
  double barycenter_tol = 1e-13;
  std::uint64_t seed = 0;
  bool jacobi = false;

  void validate() const {
    if (!(r > 0.0)) throw std::invalid_argument("SolverConfig: r must be positive");
    if (!(move_tol > 0.0) || !(barycenter_tol > 0.0) || energy_tol < 0.0)
      throw std::invalid_argument("SolverConfig: tolerances must be positive");
    if (max_sweeps < 1 || barycenter_max_iter < 1)
      throw std::invalid_argument("SolverConfig: iteration budgets must be >= 1");
  }
};

struct SolveResult {
  MapState map;
  std::vector<double> energy_trace;      // objective after each sweep
  std::vector<double> cauchy_trace;      // cauchy functional between sweep iterates
  std::vector<int> projection_events;    // ball projections per sweep
  bool converged = false;
  int sweeps_used = 0;
  double final_max_move = 0.0;
};

class DirichletProblem {
 public:
  DirichletProblem(DomainPtr domain, double r) : domain_(std::move(domain)), r_(r) {
    if (!(r > 0.0)) throw std::invalid_argument("DirichletProblem: r must be positive");
    build_pairs();
  }

  const PointCloudSpace& domain() const { return *domain_; }
  double r() const { return r_; }

  /// Objective value; fixed pair order and pairwise reduction keep this
  /// bit-identical run to run.
  double energy(const MapState& u) const {
    check_map(u);
    std::vector<double> terms(pair_i_.size());
    const auto m = static_cast<std::size_t>(pair_i_.size());
    parallel_for(m, [&](std::size_t k) {
      const double d = u.target().distance(u.value(pair_i_[k]), u.value(pair_j_[k]));
      terms[k] = pair_c_[k] * d * d;
    });
    return pairwise_sum(terms);
  }

  /// Part of the objective depending on u(x): sum_y c(x,y) d^2(p, u(y)).
  double local_objective(int x, const Vec& p, const MapState& u) const {
    check_map(u);
    double s = 0.0;
    for (int k = adj_start_[x]; k < adj_start_[x + 1]; ++k)
      s += adj_coef_[k] * std::pow(u.target().distance(p, u.value(adj_nbr_[k])), 2);
    return s;
  }

  int neighbor_count(int x) const { return adj_start_[x + 1] - adj_start_[x]; }

  /// Approximate minimizer of the local objective over the regular ball.
  /// Euclidean targets: exact weighted mean in one step. Sphere targets:
  /// iterated tangent-space averaging at the current point. Results exiting
  /// the ball are pulled back radially and the event is counted.
  Vec local_barycenter(int x, const MapState& u, const SolverConfig& cfg,
                       int* projected = nullptr) const {
    const Target& target = u.target();
    const RegularBall& ball = u.ball();
    if (neighbor_count(x) == 0) return u.value(x);

    Vec p = u.value(x);
    if (!target.is_sphere()) {
      Vec acc = Vec::Zero(target.ambient_dim());
      double wsum = 0.0;
      for (int k = adj_start_[x]; k < adj_start_[x + 1]; ++k) {
        acc += adj_coef_[k] * u.value(adj_nbr_[k]);
        wsum += adj_coef_[k];
      }
      p = acc / wsum;
    } else {
      for (int it = 0; it < cfg.barycenter_max_iter; ++it) {
        Vec g = Vec::Zero(target.ambient_dim());
        double wsum = 0.0;
        for (int k = adj_start_[x]; k < adj_start_[x + 1]; ++k) {
          g += adj_coef_[k] * target.log_map(p, u.value(adj_nbr_[k]));
          wsum += adj_coef_[k];
        }
        g /= wsum;
        const double step = g.norm();
        p = target.exp_map(p, g);
        if (step <= cfg.barycenter_tol) break;
      }
    }
    const double dist = target.distance(p, ball.center);
    if (dist > ball.rho) {
      p = target.geodesic_point(p, ball.center, 1.0 - ball.rho / dist);
      if (projected) ++*projected;
    }
    return p;
  }

  SolveResult solve(const MapState& u0, const SolverConfig& cfg) const {
    cfg.validate();
    check_map(u0);
    std::vector<int> order = cfg.sweep_order;
    if (order.empty()) order = domain_->interior_ids();
    for (int x : order)
      if (!domain_->is_interior(x))
        throw std::invalid_argument("solve: sweep order must list interior ids");

    SolveResult res{u0, {}, {}, {}, false, 0, 0.0};
    double prev_energy = energy(res.map);
    MapState prev = res.map;

    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      int projections = 0;
      double max_move = 0.0;
      if (cfg.jacobi) {
        std::vector<Vec> updated(order.size());
        for (std::size_t k = 0; k < order.size(); ++k)
          updated[k] = local_barycenter(order[k], res.map, cfg, &projections);
        for (std::size_t k = 0; k < order.size(); ++k) {
          max_move = std::max(
              max_move, res.map.target().distance(res.map.value(order[k]), updated[k]));
          res.map.set_interior_value(order[k], updated[k]);
        }
      } else {
        for (int x : order) {
          Vec p = local_barycenter(x, res.map, cfg, &projections);
          max_move = std::max(max_move, res.map.target().distance(res.map.value(x), p));
          res.map.set_interior_value(x, std::move(p));
        }
      }
      const double e = energy(res.map);
      res.energy_trace.push_back(e);
      res.cauchy_trace.push_back(cauchy_functional(prev, res.map).functional);
      res.projection_events.push_back(projections);
      res.sweeps_used = sweep + 1;
      res.final_max_move = max_move;

      const double rel_decrease = (prev_energy - e) / std::max(prev_energy, 1e-300);
      prev_energy = e;
      prev = res.map;
      if (rel_decrease < cfg.energy_tol + 1e-300 && max_move < cfg.move_tol) {
        res.converged = true;
        break;
      }
    }
    return res;
  }

 private:
  void check_map(const MapState& u) const {
    if (&u.domain() != domain_.get())
      throw std::invalid_argument("DirichletProblem: map built on a different domain");
  }

  void build_pairs() {
    const int n = domain_->size();
    std::vector<std::tuple<int, int, double>> raw;
    for (int x = 0; x < n; ++x) {
      const BallIndex b = domain_->ball(x, r_);
      const double scale = domain_->weight(x) / (r_ * r_ * b.mass);
      for (int y : b.members) {
        if (y == x) continue;
        raw.emplace_back(std::min(x, y), std::max(x, y), scale * domain_->weight(y));
      }
    }
    std::sort(raw.begin(), raw.end(),
              [](const auto& a, const auto& b) {
                return std::tie(std::get<0>(a), std::get<1>(a)) <
                       std::tie(std::get<0>(b), std::get<1>(b));
              });
    for (const auto& [i, j, c] : raw) {
      if (!pair_i_.empty() && pair_i_.back() == i && pair_j_.back() == j) {
        pair_c_.back() += c;
      } else {
        pair_i_.push_back(i);
        pair_j_.push_back(j);
        pair_c_.push_back(c);
      }
    }
    // adjacency over interior unknowns
    std::vector<int> degree(n, 0);
    for (std::size_t k = 0; k < pair_i_.size(); ++k) {
      if (domain_->is_interior(pair_i_[k])) ++degree[pair_i_[k]];
      if (domain_->is_interior(pair_j_[k])) ++degree[pair_j_[k]];
    }
    adj_start_.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) adj_start_[i + 1] = adj_start_[i] + degree[i];
    adj_nbr_.resize(adj_start_[n]);
    adj_coef_.resize(adj_start_[n]);
    std::vector<int> cursor(adj_start_.begin(), adj_start_.end() - 1);
    for (std::size_t k = 0; k < pair_i_.size(); ++k) {
      const int i = pair_i_[k], j = pair_j_[k];
      const double c = pair_c_[k];
      if (domain_->is_interior(i)) {
        adj_nbr_[cursor[i]] = j;
        adj_coef_[cursor[i]++] = c;
      }
      if (domain_->is_interior(j)) {
        adj_nbr_[cursor[j]] = i;
        adj_coef_[cursor[j]++] = c;
      }
    }
  }

  DomainPtr domain_;
  double r_;
  std::vector<int> pair_i_, pair_j_;
  std::vector<double> pair_c_;
  std::vector<int> adj_start_, adj_nbr_;
  std::vector<double> adj_coef_;
};

// ---------------------------------------------------------------------------
// Initializers and diagnostics
// ---------------------------------------------------------------------------

enum class InitMode { center, nearest };

/// Feasible initializer: interior values at the ball center, or copied from
/// the nearest exterior point (ties broken by smallest id).
inline MapState geodesic_init(const MapState& trace, InitMode mode) {
  std::vector<Vec> values = trace.values();
  const auto& dom = trace.domain();
  for (int x : dom.interior_ids()) {
    if (mode == InitMode::center) {
      values[static_cast<std::size_t>(x)] = trace.ball().center;
    } else {
      double best = std::numeric_limits<double>::infinity();
      int best_id = -1;
      for (int e : dom.exterior_ids()) {
        const double d = dom.distance(x, e);
        if (d < best) {
          best = d;
          best_id = e;
        }
      }
      values[static_cast<std::size_t>(x)] = trace.value(best_id);
    }
  }
  return MapState(trace.domain_ptr(), trace.target(), trace.ball(), std::move(values));
}

struct MultistartReport {
  std::vector<SolveResult> runs;
  Eigen::MatrixXd pairwise_l2;
  Eigen::MatrixXd pairwise_cauchy;
  double max_l2 = 0.0;
  double max_cauchy = 0.0;
  bool all_converged = true;
  bool closing_bound_all = true;  // l2^2 <= 4 functional on every pair
};

/// Runs solve from seeded random ball-valued initializations sharing the
/// trace of `trace`, and reports every pairwise distance of the results.
inline MultistartReport multistart_uniqueness(const MapState& trace,
                                              const DirichletProblem& problem,
                                              SolverConfig cfg, int n_starts,
                                              double perturbation) {
  if (n_starts < 2) throw std::invalid_argument("multistart_uniqueness: need >= 2 starts");
  MultistartReport rep;
  const auto& dom = trace.domain();
  const Target& target = trace.target();
  const RegularBall& ball = trace.ball();
  for (int i = 0; i < n_starts; ++i) {
    std::vector<Vec> values = trace.values();
    Rng rng = Rng::for_record(cfg.seed, static_cast<std::uint64_t>(i));
    const double cap = std::min(perturbation, 0.95 * ball.rho);
    for (int x : dom.interior_ids()) {
      Vec tangent(target.ambient_dim());
      for (int k = 0; k < tangent.size(); ++k) tangent[k] = rng.normal();
      if (target.is_sphere()) tangent -= tangent.dot(ball.center) * ball.center;
      const double norm = tangent.norm();
      const double len = cap * rng.uniform();
      values[static_cast<std::size_t>(x)] =
          norm < 1e-14 ? ball.center : target.exp_map(ball.center, (len / norm) * tangent);
    }
    MapState u0(trace.domain_ptr(), target, ball, std::move(values));
    if (!u0.same_trace(trace)) throw std::logic_error("multistart: trace mismatch");
    rep.runs.push_back(problem.solve(u0, cfg));
    rep.all_converged = rep.all_converged && rep.runs.back().converged;
  }
  rep.pairwise_l2 = Eigen::MatrixXd::Zero(n_starts, n_starts);
  rep.pairwise_cauchy = Eigen::MatrixXd::Zero(n_starts, n_starts);
  for (int i = 0; i < n_starts; ++i) {
    for (int j = i + 1; j < n_starts; ++j) {
      const double d = l2_distance(rep.runs[i].map, rep.runs[j].map);
      const CauchyResult c = cauchy_functional(rep.runs[i].map, rep.runs[j].map);
      rep.pairwise_l2(i, j) = rep.pairwise_l2(j, i) = d;
      rep.pairwise_cauchy(i, j) = rep.pairwise_cauchy(j, i) = c.functional;
      rep.max_l2 = std::max(rep.max_l2, d);
      rep.max_cauchy = std::max(rep.max_cauchy, c.functional);
      rep.closing_bound_all = rep.closing_bound_all && c.closing_bound_holds;
    }
  }
  return rep;
}

/// Empirical Poincare constant under Dirichlet boundary at scale r:
/// (sum w f^2) / (sum w ks[f]^2) for f vanishing on the exterior.
inline double dirichlet_poincare_diagnostic(const MapState& f, double r) {
  if (f.target().kind() != TargetKind::euclidean || f.target().dim() != 1)
    throw std::invalid_argument("dirichlet_poincare_diagnostic: f must be real-valued");
  const auto& dom = f.domain();
  for (int e : dom.exterior_ids())
    if (f.value(e)[0] != 0.0)
      throw std::invalid_argument("dirichlet_poincare_diagnostic: f must vanish on the exterior");
  std::vector<double> num_terms, den_terms;
  for (int x : dom.interior_ids()) {
    const double v = f.value(x)[0];
    num_terms.push_back(dom.weight(x) * v * v);
    const double ks = ks_at(f, r, x);
    den_terms.push_back(dom.weight(x) * ks * ks);
  }
  const double num = pairwise_sum(num_terms);
  const double den = pairwise_sum(den_terms);
  if (den <= 0.0) {
    if (num > 0.0)
      throw std::domain_error(
          "dirichlet_poincare_diagnostic: zero energy with nonzero f (interior disconnected at this scale)");
    throw std::domain_error("dirichlet_poincare_diagnostic: f is identically zero");
  }
  return num / den;
}

}  // namespace ksh
