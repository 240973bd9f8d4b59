// Command-line front end: domain/trace generation, energy evaluation, the
// Dirichlet solver, r-sweeps, and the inequality verification harness.
// Exit codes: 0 success, 2 input/validation failure, 3 verification
// assertion failure.

#include "ksh/energy.hpp"
#include "ksh/generators.hpp"
#include "ksh/io_json.hpp"
#include "ksh/solver.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using ksh::io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitAssertion = 3;

std::vector<double> parse_double_list(const std::string& csv, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ksh::io::ValidationError(what + ": expected comma-separated numbers");
    }
  }
  if (out.empty()) throw ksh::io::ValidationError(what + ": empty list");
  return out;
}

std::vector<std::array<double, 2>> parse_box(const std::string& spec, int dim) {
  std::vector<std::array<double, 2>> box;
  std::stringstream ss(spec);
  std::string axis;
  while (std::getline(ss, axis, ';')) {
    const auto vals = parse_double_list(axis, "--box");
    if (vals.size() != 2) throw ksh::io::ValidationError("--box: each axis needs lo,hi");
    box.push_back({vals[0], vals[1]});
  }
  if (static_cast<int>(box.size()) == 1 && dim > 1)
    box.assign(static_cast<std::size_t>(dim), box[0]);
  if (static_cast<int>(box.size()) != dim)
    throw ksh::io::ValidationError("--box: axis count must match --dim");
  return box;
}

void emit_report(const json& report, const std::string& out_path) {
  const std::string text = ksh::io::dump_json(report);
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_path);
    f << text;
    std::cout << ksh::io::dump_json(report.at("manifest"));
  } else {
    std::cout << text;
  }
}

ksh::DomainPtr load_domain(const std::string& path) {
  return std::make_shared<ksh::PointCloudSpace>(
      ksh::io::domain_from_json(ksh::io::read_json_file(path)));
}

ksh::MapState load_trace(const std::string& trace_path, const ksh::DomainPtr& domain,
                         const ksh::Target& target, const ksh::RegularBall& ball) {
  json j = ksh::io::read_json_file(trace_path);
  json mapj;
  mapj["target"] = ksh::io::target_to_json(target, ball);
  mapj["values"] = ksh::io::require(j, "values", "");
  return ksh::io::map_from_json(mapj, domain);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Korevaar-Schoen energies, regular-ball Dirichlet solver, and "
               "CAT(1) inequality verification"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags (--threads, --format) after subcommands

  int threads = 0;
  app.add_option("--threads", threads, "worker cap (results are thread-count invariant)");
  std::string format = "json";
  app.add_option("--format", format, "output format (json)");

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate domain/trace benchmark inputs");
  gen->require_subcommand(1);

  auto* gen_grid = gen->add_subcommand("grid", "uniform grid with exterior collar");
  int g_dim = 2, g_n = 32;
  std::string g_box = "0,1", g_out = "domain.json";
  double g_collar = 0.2;
  bool g_with_trace = false;
  std::string g_trace_out = "trace.json", g_ttype = "sphere";
  int g_tdim = 2;
  double g_rho = 1.2, g_amp = 0.5;
  std::uint64_t g_seed = 7;
  gen_grid->add_option("--dim", g_dim, "source dimension 1..3");
  gen_grid->add_option("--n", g_n, "interior points per side");
  gen_grid->add_option("--box", g_box, "interior box, e.g. \"0,1;0,1\"");
  gen_grid->add_option("--collar", g_collar, "exterior collar width");
  gen_grid->add_option("--out", g_out, "domain output file");
  gen_grid->add_flag("--with-trace", g_with_trace, "also write a smooth boundary trace");
  gen_grid->add_option("--trace-out", g_trace_out, "trace output file");
  gen_grid->add_option("--target", g_ttype, "trace target type: sphere|euclidean");
  gen_grid->add_option("--tdim", g_tdim, "target dimension");
  gen_grid->add_option("--rho", g_rho, "regular-ball radius");
  gen_grid->add_option("--amplitude", g_amp, "trace amplitude");
  gen_grid->add_option("--seed", g_seed, "trace seed");

  auto* gen_chain = gen->add_subcommand("chain", "1D chain Dirichlet benchmark");
  int c_n = 64;
  double c_sep = 1.6, c_rho = 1.2, c_edge = 1.0;
  std::vector<std::string> c_boundary;
  std::string c_out = "domain.json", c_trace_out = "trace.json", c_target_out = "target.json";
  gen_chain->add_option("--n", c_n, "interior chain nodes");
  gen_chain->add_option("--separation", c_sep, "geodesic distance of the boundary values");
  gen_chain->add_option("--boundary", c_boundary,
                        "explicit boundary points as two \"x,y,z\" coordinate lists")
      ->expected(2);
  gen_chain->add_option("--rho", c_rho, "regular-ball radius");
  gen_chain->add_option("--edge", c_edge, "edge length");
  gen_chain->add_option("--out", c_out, "domain output file");
  gen_chain->add_option("--trace-out", c_trace_out, "trace output file");
  gen_chain->add_option("--target-out", c_target_out, "target descriptor output file");

  auto* gen_graph = gen->add_subcommand("graph", "domain from a weighted edge list");
  std::string gr_edges, gr_out = "domain.json";
  gen_graph->add_option("--edges", gr_edges, "edge-list JSON {edges, weights, interior}")
      ->required();
  gen_graph->add_option("--out", gr_out, "domain output file");

  auto* gen_cloud = gen->add_subcommand("cloud", "domain from a CSV coordinate list");
  std::string cl_csv, cl_box, cl_out = "domain.json";
  double cl_weight = 1.0;
  gen_cloud->add_option("--points-csv", cl_csv, "CSV file, one point per line")->required();
  gen_cloud->add_option("--interior-box", cl_box, "axis box labeling interior points")
      ->required();
  gen_cloud->add_option("--weight", cl_weight, "uniform per-point mass");
  gen_cloud->add_option("--out", cl_out, "domain output file");

  // ---- energy ----
  auto* energy = app.add_subcommand("energy", "approximate energy of a map");
  std::string e_map, e_out;
  std::vector<std::string> e_modified;
  double e_r = 0.1, e_alpha = 0.0;
  energy->add_option("--map", e_map, "map file")->required();
  energy->add_option("--r", e_r, "energy scale")->required();
  energy->add_option("--modified", e_modified, "v and w maps for the exclusion-set energy")
      ->expected(1, 2);
  energy->add_option("--alpha", e_alpha, "exclusion threshold");
  energy->add_option("--out", e_out, "report output file");

  // ---- solve ----
  auto* solve = app.add_subcommand("solve", "minimize the Dirichlet energy");
  std::string s_domain, s_target, s_trace, s_out = "result.json", s_init = "center";
  double s_r = 0.1, s_move_tol = 1e-11, s_energy_tol = 0.0;
  int s_max_sweeps = 20000;
  std::uint64_t s_seed = 7;
  solve->add_option("--domain", s_domain)->required();
  solve->add_option("--target", s_target)->required();
  solve->add_option("--trace", s_trace)->required();
  solve->add_option("--r", s_r)->required();
  solve->add_option("--init", s_init, "center|nearest");
  solve->add_option("--seed", s_seed);
  solve->add_option("--max-sweeps", s_max_sweeps);
  solve->add_option("--move-tol", s_move_tol);
  solve->add_option("--energy-tol", s_energy_tol);
  solve->add_option("--out", s_out);

  // ---- multistart ----
  auto* multi = app.add_subcommand("multistart", "uniqueness probe from random starts");
  std::string m_domain, m_target, m_trace, m_out;
  double m_r = 0.1, m_perturb = 0.5;
  int m_starts = 4, m_max_sweeps = 20000;
  std::uint64_t m_seed = 7;
  multi->add_option("--domain", m_domain)->required();
  multi->add_option("--target", m_target)->required();
  multi->add_option("--trace", m_trace)->required();
  multi->add_option("--r", m_r)->required();
  multi->add_option("--starts", m_starts);
  multi->add_option("--perturb", m_perturb);
  multi->add_option("--seed", m_seed);
  multi->add_option("--max-sweeps", m_max_sweeps);
  multi->add_option("--out", m_out);

  // ---- sweep-r ----
  auto* sweep = app.add_subcommand("sweep-r", "energy-density estimation over an r-sweep");
  std::string w_map, w_rvals = "0.2,0.1,0.05", w_out;
  sweep->add_option("--map", w_map)->required();
  sweep->add_option("--r-values", w_rvals, "decreasing comma list");
  sweep->add_option("--out", w_out);

  // ---- verify ----
  auto* verify = app.add_subcommand("verify", "inequality certification harness");
  verify->require_subcommand(1);
  std::vector<std::string> kinds{"estimateI", "estimateII", "midpoint", "radial", "convexity"};
  int v_samples = 100, v_n = 32, v_pairs = 4;
  std::uint64_t v_seed = 20240401;
  std::string v_scales, v_rsweep = "0.2,0.1,0.05", v_out;
  double v_rho = 1.2;
  for (const auto& k : kinds) {
    auto* sub = verify->add_subcommand(k);
    sub->add_option("--samples", v_samples, "configurations per scale");
    sub->add_option("--seed", v_seed);
    sub->add_option("--scales", v_scales, "comma list of configuration scales");
    sub->add_option("--r-sweep", v_rsweep, "comma list of energy scales");
    sub->add_option("--n", v_n, "grid points per side for map-level checks");
    sub->add_option("--pairs", v_pairs, "random map pairs for map-level checks");
    sub->add_option("--rho", v_rho, "regular-ball radius");
    sub->add_option("--out", v_out);
  }

  CLI11_PARSE(app, argc, argv);

  if (threads <= 0) {
    if (const char* env = std::getenv("KSH_THREADS")) threads = std::atoi(env);
  }
  ksh::set_thread_budget(threads > 0 ? threads : 1);
  if (format != "json") {
    std::cerr << "unsupported --format: " << format << "\n";
    return kExitValidation;
  }

  try {
    // ---------------- gen ----------------
    if (gen->parsed()) {
      if (gen_grid->parsed()) {
        auto domain = ksh::PointCloudSpace::build_grid_domain(
            g_dim, g_n, parse_box(g_box, g_dim), g_collar);
        json dj = ksh::io::domain_to_json(domain);
        json cfg{{"dim", g_dim}, {"n", g_n},      {"box", g_box},
                 {"collar", g_collar}, {"out", g_out}};
        dj["manifest"] = ksh::io::make_manifest("gen grid", cfg, {}, g_seed);
        ksh::io::write_json_file(g_out, dj);
        std::cout << ksh::io::dump_json(dj["manifest"]);
        if (g_with_trace) {
          auto dptr = std::make_shared<ksh::PointCloudSpace>(std::move(domain));
          ksh::Target target = g_ttype == "sphere" ? ksh::Target::sphere(g_tdim)
                                                   : ksh::Target::euclidean(g_tdim);
          ksh::Vec center = ksh::Vec::Zero(target.ambient_dim());
          center[target.ambient_dim() - 1] = 1.0;
          if (!target.is_sphere()) center.setZero();
          auto ball = ksh::RegularBall::make(target, center, g_rho);
          auto trace = ksh::bench::smooth_trace(dptr, target, ball, g_amp, g_seed);
          json tj = ksh::io::map_to_json(trace, g_out);
          tj["manifest"] = ksh::io::make_manifest("gen grid --with-trace", cfg, {g_out}, g_seed);
          ksh::io::write_json_file(g_trace_out, tj);
        }
        return kExitOk;
      }
      if (gen_chain->parsed()) {
        auto domain = ksh::bench::chain_domain(c_n, c_edge);
        ksh::Target target = ksh::Target::sphere(2);
        ksh::Vec center(3);
        center << 0.0, 0.0, 1.0;
        auto ball = ksh::RegularBall::make(target, center, c_rho);
        auto make_point = [&](const std::string& spec) {
          const auto vals = parse_double_list(spec, "--boundary");
          if (vals.size() != 3)
            throw ksh::io::ValidationError("--boundary: sphere points need 3 coordinates");
          ksh::Vec v(3);
          v << vals[0], vals[1], vals[2];
          return target.canonical(v);
        };
        auto trace = c_boundary.empty()
                         ? ksh::bench::chain_trace(domain, target, ball, c_sep)
                         : ksh::bench::chain_trace_points(domain, target, ball,
                                                          make_point(c_boundary[0]),
                                                          make_point(c_boundary[1]));
        json cfg{{"n", c_n}, {"separation", c_sep}, {"rho", c_rho}, {"edge", c_edge}};
        json dj = ksh::io::domain_to_json(*domain);
        dj["manifest"] = ksh::io::make_manifest("gen chain", cfg, {}, 0);
        ksh::io::write_json_file(c_out, dj);
        json tj = ksh::io::map_to_json(trace, c_out);
        tj["manifest"] = dj["manifest"];
        ksh::io::write_json_file(c_trace_out, tj);
        json gj = ksh::io::target_to_json(target, ball);
        gj["manifest"] = dj["manifest"];
        ksh::io::write_json_file(c_target_out, gj);
        std::cout << ksh::io::dump_json(dj["manifest"]);
        return kExitOk;
      }
      if (gen_cloud->parsed()) {
        auto [dim, coords] = ksh::io::read_csv_points(cl_csv);
        const auto box = parse_box(cl_box, dim);
        if (!(cl_weight > 0.0))
          throw ksh::io::ValidationError("--weight must be positive");
        const auto n = coords.size() / static_cast<std::size_t>(dim);
        std::vector<uint8_t> labels(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
          bool inside = true;
          for (int a = 0; a < dim; ++a) {
            const double c = coords[i * static_cast<std::size_t>(dim) + a];
            if (c < box[a][0] || c > box[a][1]) inside = false;
          }
          labels[i] = inside ? 1 : 0;
        }
        auto domain = ksh::PointCloudSpace::from_coords(
            dim, std::move(coords), std::vector<double>(n, cl_weight), std::move(labels));
        json dj = ksh::io::domain_to_json(domain);
        dj["manifest"] = ksh::io::make_manifest(
            "gen cloud", json{{"points_csv", cl_csv}, {"weight", cl_weight}, {"box", cl_box}},
            {cl_csv}, 0);
        ksh::io::write_json_file(cl_out, dj);
        std::cout << ksh::io::dump_json(dj["manifest"]);
        return kExitOk;
      }
      // graph
      json ej = ksh::io::read_json_file(gr_edges);
      const auto& earr = ksh::io::require(ej, "edges", "");
      std::vector<std::tuple<int, int, double>> edges;
      for (std::size_t i = 0; i < earr.size(); ++i) {
        const auto row = ksh::io::number_array(earr[i], "/edges/" + std::to_string(i));
        if (row.size() != 3)
          throw ksh::io::ValidationError("/edges/" + std::to_string(i) + ": need [i, j, length]");
        edges.emplace_back(static_cast<int>(row[0]), static_cast<int>(row[1]), row[2]);
      }
      auto weights = ksh::io::number_array(ksh::io::require(ej, "weights", ""), "/weights");
      std::vector<int> interior;
      for (const auto& v : ksh::io::require(ej, "interior", ""))
        interior.push_back(v.get<int>());
      auto domain = ksh::PointCloudSpace::build_graph_domain(edges, interior, weights);
      json dj = ksh::io::domain_to_json(domain);
      dj["manifest"] = ksh::io::make_manifest("gen graph", json{{"edges", gr_edges}},
                                              {gr_edges}, 0);
      ksh::io::write_json_file(gr_out, dj);
      std::cout << ksh::io::dump_json(dj["manifest"]);
      return kExitOk;
    }

    // ---------------- energy ----------------
    if (energy->parsed()) {
      ksh::MapState u = ksh::io::load_map(e_map);
      json rep;
      std::vector<fs::path> inputs{e_map};
      if (!e_modified.empty()) {
        if (!(e_alpha > 0.0))
          throw ksh::io::ValidationError("--alpha must be positive with --modified");
        ksh::MapState v = ksh::io::map_from_json(ksh::io::read_json_file(e_modified[0]),
                                                 u.domain_ptr());
        ksh::MapState w = e_modified.size() > 1
                              ? ksh::io::map_from_json(
                                    ksh::io::read_json_file(e_modified[1]), u.domain_ptr())
                              : v;
        rep = ksh::io::energy_report_to_json(ksh::total_energy_modified(u, v, w, e_alpha, e_r));
        for (const auto& m : e_modified) inputs.emplace_back(m);
      } else {
        rep = ksh::io::energy_report_to_json(ksh::total_energy(u, e_r));
      }
      rep["manifest"] = ksh::io::make_manifest(
          "energy", json{{"r", e_r}, {"alpha", e_alpha}, {"map", e_map}}, inputs, 0);
      emit_report(rep, e_out);
      return kExitOk;
    }

    // ---------------- solve / multistart ----------------
    if (solve->parsed() || multi->parsed()) {
      const std::string dpath = solve->parsed() ? s_domain : m_domain;
      const std::string tpath = solve->parsed() ? s_target : m_target;
      const std::string bpath = solve->parsed() ? s_trace : m_trace;
      auto domain = load_domain(dpath);
      auto [target, ball] = ksh::io::target_from_json(ksh::io::read_json_file(tpath));
      ksh::MapState trace = load_trace(bpath, domain, target, ball);
      ksh::SolverConfig cfg;
      cfg.r = solve->parsed() ? s_r : m_r;
      cfg.max_sweeps = solve->parsed() ? s_max_sweeps : m_max_sweeps;
      cfg.move_tol = s_move_tol;
      cfg.energy_tol = s_energy_tol;
      cfg.seed = solve->parsed() ? s_seed : m_seed;
      ksh::DirichletProblem problem(domain, cfg.r);

      if (solve->parsed()) {
        ksh::MapState u0 = ksh::geodesic_init(
            trace, s_init == "nearest" ? ksh::InitMode::nearest : ksh::InitMode::center);
        ksh::SolveResult res = problem.solve(u0, cfg);
        json rj = ksh::io::solve_result_to_json(res, dpath);
        rj["final_ks_energy"] = ksh::io::energy_report_to_json(
            ksh::total_energy(res.map, cfg.r));
        rj["manifest"] = ksh::io::make_manifest(
            "solve",
            json{{"r", cfg.r}, {"init", s_init}, {"seed", cfg.seed},
                 {"max_sweeps", cfg.max_sweeps}, {"move_tol", cfg.move_tol},
                 {"energy_tol", cfg.energy_tol}},
            {dpath, tpath, bpath}, cfg.seed);
        emit_report(rj, s_out);
        return kExitOk;
      }

      ksh::MultistartReport rep =
          ksh::multistart_uniqueness(trace, problem, cfg, m_starts, m_perturb);
      json rj;
      rj["max_l2"] = rep.max_l2;
      rj["max_cauchy"] = rep.max_cauchy;
      rj["all_converged"] = rep.all_converged;
      rj["closing_bound_all"] = rep.closing_bound_all;
      json l2 = json::array(), ch = json::array();
      for (int i = 0; i < rep.pairwise_l2.rows(); ++i) {
        json row = json::array(), crow = json::array();
        for (int j = 0; j < rep.pairwise_l2.cols(); ++j) {
          row.push_back(rep.pairwise_l2(i, j));
          crow.push_back(rep.pairwise_cauchy(i, j));
        }
        l2.push_back(std::move(row));
        ch.push_back(std::move(crow));
      }
      rj["pairwise_l2"] = std::move(l2);
      rj["pairwise_cauchy"] = std::move(ch);
      rj["manifest"] = ksh::io::make_manifest(
          "multistart",
          json{{"r", cfg.r}, {"starts", m_starts}, {"perturb", m_perturb}, {"seed", m_seed}},
          {dpath, tpath, bpath}, m_seed);
      emit_report(rj, m_out);
      return kExitOk;
    }

    // ---------------- sweep-r ----------------
    if (sweep->parsed()) {
      ksh::MapState u = ksh::io::load_map(w_map);
      auto rvals = parse_double_list(w_rvals, "--r-values");
      ksh::DensityEstimate de = ksh::density_estimate(u, rvals);
      const auto bulk = u.domain().bulk_points(2.0 * rvals.front());
      std::vector<double> bulk_est;
      for (int x : bulk)
        if (de.valid[static_cast<std::size_t>(x)])
          bulk_est.push_back(de.estimate[static_cast<std::size_t>(x)]);
      json rj;
      rj["r_values"] = de.r_values;
      rj["estimate"] = de.estimate;
      rj["residual"] = de.residual;
      rj["valid"] = de.valid;
      rj["bulk_median"] = bulk_est.empty() ? json(nullptr) : json(ksh::median(bulk_est));
      rj["manifest"] = ksh::io::make_manifest(
          "sweep-r", json{{"map", w_map}, {"r_values", w_rvals}}, {w_map}, 0);
      emit_report(rj, w_out);
      return kExitOk;
    }

    // ---------------- verify ----------------
    if (verify->parsed()) {
      const std::string kind = verify->get_subcommands().front()->get_name();
      bool ok = true;
      json rj;
      rj["kind"] = kind;
      if (kind == "estimateI" || kind == "estimateII") {
        ksh::ScalingConfig cfg;
        cfg.samples_per_scale = v_samples;
        cfg.seed = v_seed;
        if (!v_scales.empty()) cfg.scales = parse_double_list(v_scales, "--scales");
        const ksh::EstimateKind ek =
            kind == "estimateI" ? ksh::EstimateKind::I : ksh::EstimateKind::II;
        auto sphere = ksh::run_estimate_scaling(ek, ksh::Target::sphere(2), cfg);
        auto flat = ksh::run_estimate_scaling(ek, ksh::Target::euclidean(3), cfg);
        rj["sphere"] = ksh::io::scaling_study_to_json(sphere);
        rj["euclidean"] = ksh::io::scaling_study_to_json(flat);
        if (sphere.slope && *sphere.slope < 2.8) ok = false;
        if (ek == ksh::EstimateKind::I) {
          double flat_max = 0.0;
          for (const auto& pt : flat.points) flat_max = std::max(flat_max, pt.max_positive);
          rj["euclidean_max_positive"] = flat_max;
          if (flat_max > 1e-12) ok = false;
        } else if (flat.slope && *flat.slope < 2.8) {
          ok = false;
        }
      } else {
        const auto rvals = parse_double_list(v_rsweep, "--r-sweep");
        auto domain = std::make_shared<ksh::PointCloudSpace>(
            ksh::PointCloudSpace::build_grid_domain(
                2, v_n, {{0.0, 1.0}, {0.0, 1.0}}, rvals.front() * 1.25));
        ksh::Target target = ksh::Target::sphere(2);
        ksh::Vec center(3);
        center << 0.0, 0.0, 1.0;
        auto ball = ksh::RegularBall::make(target, center, v_rho);
        json table = json::array();
        for (int pair = 0; pair < v_pairs; ++pair) {
          ksh::SmoothMapParams params;
          params.seed = v_seed + static_cast<std::uint64_t>(pair) * 1000;
          params.amplitude = 0.6;
          auto [u, v] = ksh::random_smooth_pair(domain, target, ball, params);
          json row;
          row["pair"] = pair;
          json per_r = json::array();
          double prev = std::numeric_limits<double>::infinity();
          for (double r : rvals) {
            double value = 0.0, budget = 0.0;
            if (kind == "midpoint") {
              value = ksh::midpoint_energy_defect(u.map, v.map, r).max_positive;
            } else if (kind == "radial") {
              std::vector<double> eta_vals(static_cast<std::size_t>(domain->size()));
              for (int i = 0; i < domain->size(); ++i) {
                auto c = domain->point_coords(i);
                eta_vals[static_cast<std::size_t>(i)] =
                    0.5 + 0.4 * std::sin(2.0 * ksh::kPi * c[0] + 0.3);
              }
              auto eta = ksh::make_real_map(domain, eta_vals);
              value = ksh::radial_energy_defect(u.map, eta, r).max_positive;
            } else {
              auto rep = ksh::convexity_defect(u.map, v.map, r);
              value = std::max(rep.defect_total, 0.0);
              budget = 0.5 * (rep.e_u + rep.e_v);
            }
            json cell{{"r", r}, {"max_positive", value}};
            if (kind == "convexity") cell["mean_energy"] = budget;
            per_r.push_back(std::move(cell));
            if (value > prev * (1.0 + 1e-12)) ok = false;
            prev = value;
            if (kind == "convexity" && r == rvals.back() && budget > 0.0 &&
                value > 0.1 * budget)
              ok = false;
          }
          row["defects"] = std::move(per_r);
          table.push_back(std::move(row));
        }
        rj["pairs"] = std::move(table);
      }
      rj["pass"] = ok;
      rj["manifest"] = ksh::io::make_manifest(
          "verify " + kind,
          json{{"samples", v_samples}, {"seed", v_seed}, {"r_sweep", v_rsweep}, {"n", v_n}},
          {}, v_seed);
      emit_report(rj, v_out);
      return ok ? kExitOk : kExitAssertion;
    }
  } catch (const ksh::io::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
