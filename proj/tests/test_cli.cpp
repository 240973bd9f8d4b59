// End-to-end checks of the ksharm binary: exit-code contract, byte-identical
// reruns, and the documented subcommand surfaces.

#include "ksh/io_json.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ksharm_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd " + cwd.string() + " && " + KSHARM_BINARY + " " + args +
                          " > cli_stdout.txt 2> cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("gen chain writes a solvable benchmark and is byte-deterministic") {
  TempDir dir;
  REQUIRE(run("gen chain --n 8 --separation 1.2", dir.path) == 0);
  REQUIRE(fs::exists(dir.path / "domain.json"));
  REQUIRE(fs::exists(dir.path / "trace.json"));
  REQUIRE(fs::exists(dir.path / "target.json"));
  const std::string d1 = slurp(dir.path / "domain.json");
  const std::string t1 = slurp(dir.path / "trace.json");
  REQUIRE(run("gen chain --n 8 --separation 1.2", dir.path) == 0);
  CHECK(slurp(dir.path / "domain.json") == d1);
  CHECK(slurp(dir.path / "trace.json") == t1);

  SECTION("solve runs and reports convergence") {
    REQUIRE(run("solve --domain domain.json --target target.json --trace trace.json "
                "--r 1.5 --max-sweeps 20000 --out result.json",
                dir.path) == 0);
    auto j = ksh::io::read_json_file(dir.path / "result.json");
    CHECK(j.at("converged").get<bool>());
    CHECK(j.at("map").at("values").size() == 12);  // 8 interior + 4 collar
    CHECK(j.contains("manifest"));
    CHECK(j.at("manifest").at("tool_version").get<std::string>() == ksh::io::kToolVersion);
  }
  SECTION("solve accepts the nearest-boundary initializer") {
    REQUIRE(run("solve --domain domain.json --target target.json --trace trace.json "
                "--r 1.5 --init nearest --max-sweeps 20000 --out near.json",
                dir.path) == 0);
    auto j = ksh::io::read_json_file(dir.path / "near.json");
    CHECK(j.at("converged").get<bool>());
  }
  SECTION("multistart reports pairwise distances") {
    REQUIRE(run("multistart --domain domain.json --target target.json --trace trace.json "
                "--r 1.5 --starts 2 --perturb 0.4 --seed 3 --out ms.json",
                dir.path) == 0);
    auto j = ksh::io::read_json_file(dir.path / "ms.json");
    CHECK(j.at("all_converged").get<bool>());
    CHECK(j.at("max_l2").get<double>() <= 1e-5);
    CHECK(j.at("closing_bound_all").get<bool>());
  }
}

TEST_CASE("gen grid and energy on a constant map") {
  TempDir dir;
  REQUIRE(run("gen grid --dim 1 --n 9 --box 0,1 --collar 0.3 --out dom.json", dir.path) == 0);
  auto domain = std::make_shared<ksh::PointCloudSpace>(
      ksh::io::domain_from_json(ksh::io::read_json_file(dir.path / "dom.json")));
  CHECK(domain->interior_ids().size() == 9);

  // constant map file by hand
  ksh::Target t = ksh::Target::euclidean(1);
  auto ball = ksh::RegularBall::make(t, ksh::Vec::Zero(1), 2.0);
  auto u = ksh::MapState::constant(domain, t, ball, ksh::Vec::Ones(1));
  ksh::io::write_json_file(dir.path / "map.json", ksh::io::map_to_json(u, "dom.json"));

  REQUIRE(run("energy --map map.json --r 0.2 --out report.json", dir.path) == 0);
  auto rep = ksh::io::read_json_file(dir.path / "report.json");
  CHECK(rep.at("total").get<double>() == 0.0);

  SECTION("modified energy needs a positive alpha") {
    CHECK(run("energy --map map.json --r 0.2 --modified map.json", dir.path) == 2);
  }
}

TEST_CASE("sweep-r emits per-point estimates") {
  TempDir dir;
  REQUIRE(run("gen grid --dim 1 --n 41 --box 0,1 --collar 0.3 --out dom.json", dir.path) == 0);
  auto domain = std::make_shared<ksh::PointCloudSpace>(
      ksh::io::domain_from_json(ksh::io::read_json_file(dir.path / "dom.json")));
  std::vector<double> vals(static_cast<std::size_t>(domain->size()));
  for (int i = 0; i < domain->size(); ++i) vals[static_cast<std::size_t>(i)] = 0.8 * domain->point_coords(i)[0];
  auto u = ksh::make_real_map(domain, vals, 5.0);
  ksh::io::write_json_file(dir.path / "map.json", ksh::io::map_to_json(u, "dom.json"));
  REQUIRE(run("sweep-r --map map.json --r-values 0.2,0.14,0.1 --out sw.json", dir.path) == 0);
  auto j = ksh::io::read_json_file(dir.path / "sw.json");
  CHECK(j.at("bulk_median").is_number());
  CHECK(j.at("estimate").size() == static_cast<std::size_t>(domain->size()));
}

TEST_CASE("verify subcommands honor the exit-code contract") {
  TempDir dir;
  CHECK(run("verify estimateI --samples 40 --seed 2", dir.path) == 0);
  CHECK(run("verify estimateII --samples 40 --seed 2", dir.path) == 0);
  // midpoint check on a small grid; assertion failures would exit 3
  CHECK(run("verify midpoint --n 12 --pairs 1 --r-sweep 0.3,0.2 --seed 5", dir.path) == 0);
}

TEST_CASE("gen graph builds from an edge list and gen chain accepts explicit boundary") {
  TempDir dir;
  {
    std::ofstream f(dir.path / "edges.json");
    f << R"({"edges": [[0,1,1.0],[1,2,1.0],[2,3,1.0]], "weights": [1,1,1,1], "interior": [1,2]})";
  }
  REQUIRE(run("gen graph --edges edges.json --out g.json", dir.path) == 0);
  auto dom = ksh::io::domain_from_json(ksh::io::read_json_file(dir.path / "g.json"));
  CHECK(dom.size() == 4);
  CHECK(dom.distance(0, 3) == 3.0);

  REQUIRE(run("gen chain --n 4 --boundary 0.6,0,0.8 0,0.6,0.8", dir.path) == 0);
  auto trace = ksh::io::read_json_file(dir.path / "trace.json");
  CHECK(trace.at("values")[0][0].get<double>() == Catch::Approx(0.6).margin(1e-12));
}

TEST_CASE("gen cloud ingests CSV coordinates") {
  TempDir dir;
  {
    std::ofstream f(dir.path / "pts.csv");
    f << "0.1,0.2\n0.5,0.5\n0.9,0.4\n1.4,0.5\n-0.3,0.1\n";
  }
  REQUIRE(run("gen cloud --points-csv pts.csv --interior-box \"0,1;0,1\" --weight 0.2 "
              "--out cloud.json",
              dir.path) == 0);
  auto dom = ksh::io::domain_from_json(ksh::io::read_json_file(dir.path / "cloud.json"));
  CHECK(dom.size() == 5);
  CHECK(dom.interior_ids() == std::vector<int>{0, 1, 2});
  CHECK(dom.weight(0) == 0.2);
}

TEST_CASE("thread budget does not change output bytes") {
  TempDir dir;
  REQUIRE(run("gen grid --dim 1 --n 21 --box 0,1 --collar 0.3 --out dom.json", dir.path) == 0);
  auto domain = std::make_shared<ksh::PointCloudSpace>(
      ksh::io::domain_from_json(ksh::io::read_json_file(dir.path / "dom.json")));
  std::vector<double> vals(static_cast<std::size_t>(domain->size()));
  for (int i = 0; i < domain->size(); ++i)
    vals[static_cast<std::size_t>(i)] = std::sin(3.0 * domain->point_coords(i)[0]);
  auto u = ksh::make_real_map(domain, vals, 5.0);
  ksh::io::write_json_file(dir.path / "map.json", ksh::io::map_to_json(u, "dom.json"));
  REQUIRE(run("energy --map map.json --r 0.2 --threads 1 --out a.json", dir.path) == 0);
  REQUIRE(run("energy --map map.json --r 0.2 --threads 4 --out b.json", dir.path) == 0);
  CHECK(slurp(dir.path / "a.json") == slurp(dir.path / "b.json"));
}

TEST_CASE("invalid inputs exit with code 2") {
  TempDir dir;
  {
    std::ofstream f(dir.path / "broken.json");
    f << "{\"values\": [1,2,";
  }
  CHECK(run("energy --map broken.json --r 0.1", dir.path) == 2);
  CHECK(run("gen grid --dim 1 --n 9 --box 0.3,0.3 --collar 0.1", dir.path) == 2);
  CHECK(run("solve --domain missing.json --target missing.json --trace missing.json --r 0.1",
            dir.path) == 2);
}
