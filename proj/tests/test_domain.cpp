#include "ksh/domain.hpp"
#include "ksh/io_json.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace ksh;

TEST_CASE("1D grid with collar matches the hand construction") {
  auto s = PointCloudSpace::build_grid_domain(1, 3, {{0.0, 1.0}}, 0.5);
  REQUIRE(s.size() == 5);
  std::vector<double> expected{-0.5, 0.0, 0.5, 1.0, 1.5};
  for (int i = 0; i < 5; ++i) {
    CHECK(s.point_coords(i)[0] == Catch::Approx(expected[i]).margin(1e-15));
    CHECK(s.weight(i) == Catch::Approx(0.5).epsilon(1e-15));
  }
  CHECK(!s.is_interior(0));
  CHECK(s.is_interior(1));
  CHECK(s.is_interior(3));
  CHECK(!s.is_interior(4));
  CHECK(s.audit().violations == 0);
}

TEST_CASE("2D grid interior count and cell-volume weights") {
  auto s = PointCloudSpace::build_grid_domain(2, 100, {{0.0, 1.0}, {0.0, 1.0}}, 0.1);
  CHECK(s.interior_ids().size() == 100 * 100);
  const double h = 1.0 / 99.0;
  CHECK(s.weight(0) == Catch::Approx(h * h).epsilon(1e-15));
  CHECK(s.audit().violations == 0);
}

TEST_CASE("zero-volume box is rejected") {
  CHECK_THROWS_AS(PointCloudSpace::build_grid_domain(1, 3, {{0.3, 0.3}}, 0.5),
                  std::invalid_argument);
}

TEST_CASE("graph domains use shortest-path metric") {
  SECTION("path a-b-c") {
    auto s = PointCloudSpace::build_graph_domain({{0, 1, 1.0}, {1, 2, 1.0}}, {1},
                                                 {1.0, 1.0, 1.0});
    CHECK(s.distance(0, 2) == Catch::Approx(2.0));
  }
  SECTION("unit triangle") {
    auto s = PointCloudSpace::build_graph_domain({{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}},
                                                 {0}, {1.0, 1.0, 1.0});
    CHECK(s.distance(0, 1) == 1.0);
    CHECK(s.distance(1, 2) == 1.0);
    CHECK(s.distance(0, 2) == 1.0);
  }
  SECTION("star K_{1,3}: leaves at distance 2") {
    auto s = PointCloudSpace::build_graph_domain(
        {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}}, {1, 2, 3}, {1.0, 1.0, 1.0, 1.0});
    CHECK(s.distance(1, 2) == Catch::Approx(2.0));
    CHECK(s.distance(2, 3) == Catch::Approx(2.0));
  }
  SECTION("disconnected graph is rejected") {
    CHECK_THROWS_AS(PointCloudSpace::build_graph_domain({{0, 1, 1.0}}, {0},
                                                        {1.0, 1.0, 1.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("ball membership on a 2D grid") {
  auto s = PointCloudSpace::build_grid_domain(2, 21, {{0.0, 1.0}, {0.0, 1.0}}, 0.2);
  const double h = 1.0 / 20.0;
  const GridInfo& g = *s.grid_info();
  // center point of the grid
  std::array<int, 3> mid{g.npts[0] / 2, g.npts[1] / 2, 0};
  const int x = g.flatten(mid);

  SECTION("r between h and h*sqrt(2) captures the 4 axis neighbors") {
    auto b = s.ball(x, 1.2 * h);
    CHECK(b.members.size() == 5);
    CHECK(std::find(b.members.begin(), b.members.end(), x) != b.members.end());
    CHECK(b.mass == Catch::Approx(5.0 * h * h));
    CHECK(std::is_sorted(b.members.begin(), b.members.end()));
  }
  SECTION("r = 1.5h additionally captures the diagonals at h*sqrt(2)") {
    CHECK(s.ball(x, 1.5 * h).members.size() == 9);
  }
  SECTION("tiny radius keeps only the center") {
    auto b = s.ball(x, h / 10.0);
    CHECK(b.members == std::vector<int>{x});
  }
  SECTION("radius beyond the diameter captures everything") {
    auto b = s.ball(x, 10.0);
    CHECK(static_cast<int>(b.members.size()) == s.size());
  }
}

TEST_CASE("ball_inside_interior follows the two-part test") {
  auto s = PointCloudSpace::build_grid_domain(1, 3, {{0.0, 1.0}}, 0.5);
  const int exterior = 0;
  const int center = 2;  // x = 0.5
  CHECK_FALSE(s.ball_inside_interior(exterior, 0.25));
  CHECK(s.ball_inside_interior(center, 0.25));
  // nearest exterior points sit at -0.5 and 1.5, distance 1.0 >= 0.75
  CHECK(s.ball_inside_interior(center, 0.75));
  CHECK_FALSE(s.ball_inside_interior(center, 1.25));
}

TEST_CASE("dense and euclidean ball queries agree") {
  auto grid = PointCloudSpace::build_grid_domain(2, 9, {{0.0, 1.0}, {0.0, 1.0}}, 0.3);
  const int n = grid.size();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = grid.distance(i, j);
  std::vector<uint8_t> labels(grid.interior_flags());
  auto dense = PointCloudSpace::from_dense(m, grid.weights(), labels);
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int x = static_cast<int>(rng.integer(static_cast<std::uint64_t>(n)));
    const double r = rng.uniform(0.05, 0.8);
    CHECK(grid.ball(x, r).members == dense.ball(x, r).members);
    CHECK(grid.ball_inside_interior(x, r) == dense.ball_inside_interior(x, r));
  }
}

TEST_CASE("grid ball mass converges to the continuum volume like h/r") {
  // fit C on an r-sweep at a coarse grid, then check the bound on a finer one
  const double kQuarterArea = kPi;  // unit-disc area factor
  auto mass_error = [&](int n, double r) {
    auto s = PointCloudSpace::build_grid_domain(2, n, {{0.0, 1.0}, {0.0, 1.0}}, 0.45);
    const GridInfo& g = *s.grid_info();
    std::array<int, 3> mid{g.npts[0] / 2, g.npts[1] / 2, 0};
    const double mass = s.ball(g.flatten(mid), r).mass;
    return std::abs(mass / (kQuarterArea * r * r) - 1.0);
  };
  const int n_coarse = 41, n_fine = 81;
  const double h_coarse = 1.0 / (n_coarse - 1), h_fine = 1.0 / (n_fine - 1);
  double C = 0.0;
  for (double r : {0.12, 0.17, 0.23, 0.31, 0.41})
    C = std::max(C, mass_error(n_coarse, r) * r / h_coarse);
  for (double r : {0.12, 0.17, 0.23, 0.31, 0.41})
    CHECK(mass_error(n_fine, r) <= 1.5 * C * h_fine / r);  // headroom for shell fluctuation
}

TEST_CASE("domain serialization round-trips bit-exactly") {
  SECTION("euclidean grid") {
    auto s = PointCloudSpace::build_grid_domain(2, 7, {{0.0, 1.0}, {-0.5, 0.5}}, 0.37);
    auto j = io::domain_to_json(s);
    auto parsed = io::json::parse(io::dump_json(j));
    auto t = io::domain_from_json(parsed);
    REQUIRE(t.size() == s.size());
    for (int i = 0; i < s.size(); ++i) {
      CHECK(t.weight(i) == s.weight(i));
      CHECK(t.is_interior(i) == s.is_interior(i));
      for (int d = 0; d < s.coord_dim(); ++d)
        CHECK(t.point_coords(i)[d] == s.point_coords(i)[d]);
    }
    REQUIRE(t.grid_info());
    CHECK(t.grid_info()->spacing[0] == s.grid_info()->spacing[0]);
  }
  SECTION("dense graph metric") {
    auto s = PointCloudSpace::build_graph_domain(
        {{0, 1, 0.7}, {1, 2, 1.3}, {2, 3, 0.9}, {0, 3, 2.2}}, {1, 2},
        {1.0, 2.0, 1.5, 0.5});
    auto t = io::domain_from_json(io::json::parse(io::dump_json(io::domain_to_json(s))));
    for (int i = 0; i < s.size(); ++i)
      for (int j = 0; j < s.size(); ++j) CHECK(t.distance(i, j) == s.distance(i, j));
  }
}

TEST_CASE("explicit metric violating the triangle inequality is rejected") {
  Eigen::MatrixXd m(3, 3);
  m << 0, 1, 5, 1, 0, 1, 5, 1, 0;  // d(0,2)=5 > 1+1
  CHECK_THROWS_AS(PointCloudSpace::from_dense(m, {1.0, 1.0, 1.0}, {1, 1, 0}),
                  std::invalid_argument);
}

TEST_CASE("weights must be positive and exterior nonempty") {
  CHECK_THROWS_AS(PointCloudSpace::from_coords(1, {0.0, 1.0}, {1.0, -1.0}, {1, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PointCloudSpace::from_coords(1, {0.0, 1.0}, {1.0, 1.0}, {1, 1}),
                  std::invalid_argument);
}
