#include "dualreg/cloud.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

using namespace dualreg;

namespace {

// Exhaustive median of positive nearest-neighbor distances.
double resolution_oracle(const std::vector<Point3>& pts) {
  std::vector<double> nn;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double d = (pts[i] - pts[j]).norm();
      if (d > 0.0) best = std::min(best, d);
    }
    if (std::isfinite(best)) nn.push_back(best);
  }
  std::sort(nn.begin(), nn.end());
  const std::size_t m = nn.size();
  return m % 2 ? nn[m / 2] : 0.5 * (nn[m / 2 - 1] + nn[m / 2]);
}

OrientedPointCloud with_up_normals(std::vector<Point3> pts) {
  OrientedPointCloud c;
  c.points = std::move(pts);
  c.normals.assign(c.points.size(), Vector3::UnitZ());
  return c;
}

}  // namespace

TEST_SUITE("cloud") {
  TEST_CASE("cloud_resolution examples") {
    CHECK(cloud_resolution(std::vector<Point3>{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}) == 1.0);
    CHECK(cloud_resolution(std::vector<Point3>{{0, 0, 0}, {5, 0, 0}}) == 5.0);
    CHECK(cloud_resolution(std::vector<Point3>{{0, 0, 0}, {1, 0, 0}, {3, 0, 0}}) == 1.0);
    CHECK_THROWS_AS(cloud_resolution(std::vector<Point3>{{1, 1, 1}}), DegenerateInput);
    CHECK_THROWS_AS(cloud_resolution(std::vector<Point3>{{1, 1, 1}, {1, 1, 1}}), DegenerateInput);
  }

  TEST_CASE("cloud_resolution matches exhaustive oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Point3> pts;
      const int n = 2 + trial * 7;
      for (int i = 0; i < n; ++i) pts.push_back(testing::random_point(rng));
      pts.push_back(pts.front());  // a duplicate must be skipped
      CHECK(cloud_resolution(pts) == doctest::Approx(resolution_oracle(pts)).epsilon(1e-12));
    }
  }

  TEST_CASE("voxel_downsample examples") {
    const auto one = voxel_downsample(with_up_normals({{0.3, 0.4, 0.5}}), 1.0);
    REQUIRE(one.size() == 1);
    CHECK(one.points[0] == Point3(0.3, 0.4, 0.5));

    const auto two = voxel_downsample(with_up_normals({{0.1, 0, 0}, {0.3, 0, 0}}), 1.0);
    REQUIRE(two.size() == 1);
    CHECK((two.points[0] - Point3(0.2, 0, 0)).norm() < 1e-15);
    CHECK(two.normals[0] == Vector3::UnitZ());

    std::vector<Point3> corners;
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y)
        for (int z = 0; z < 2; ++z) corners.emplace_back(x, y, z);
    const auto cube = voxel_downsample(with_up_normals(corners), 0.5);
    REQUIRE(cube.size() == 8);
    for (const auto& p : corners) {
      CHECK(std::count(cube.points.begin(), cube.points.end(), p) == 1);
    }
  }

  TEST_CASE("voxel_downsample matches floor-division grouping") {
    std::mt19937_64 rng(22);
    OrientedPointCloud c;
    for (int i = 0; i < 500; ++i) {
      c.points.push_back(testing::random_point(rng, 2.0));
      c.normals.push_back(testing::random_unit(rng));
    }
    const double voxel = 0.37;
    std::map<std::tuple<long, long, long>, std::pair<Point3, int>> cells;
    for (const auto& p : c.points) {
      auto key = std::make_tuple(static_cast<long>(std::floor(p.x() / voxel)),
                                 static_cast<long>(std::floor(p.y() / voxel)),
                                 static_cast<long>(std::floor(p.z() / voxel)));
      // Eigen vectors start uninitialized, so seed each cell explicitly.
      auto& cell = cells.try_emplace(key, Point3::Zero(), 0).first->second;
      cell.first += p;
      ++cell.second;
    }
    const auto ds = voxel_downsample(c, voxel);
    REQUIRE(ds.size() == cells.size());
    REQUIRE(ds.has_normals());
    std::size_t i = 0;
    for (const auto& [key, cell] : cells) {
      CHECK((ds.points[i] - cell.first / cell.second).norm() < 1e-12);
      CHECK(ds.normals[i].norm() == doctest::Approx(1.0));
      ++i;
    }
  }

  TEST_CASE("estimate_normals: plane") {
    std::mt19937_64 rng(23);
    std::vector<Point3> pts;
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 200; ++i) pts.emplace_back(u(rng), u(rng), 0.0);
    for (int k : {3, 8, 20}) {
      const auto c = estimate_normals(pts, k, Point3(0, 0, 5));
      for (const auto& n : c.normals) {
        CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((n - Vector3::UnitZ()).norm() < 1e-6);
      }
    }
  }

  TEST_CASE("estimate_normals: sphere normals are radial") {
    std::mt19937_64 rng(24);
    const double radius = 50.0;
    std::vector<Point3> pts;
    // Dense enough that an 8-neighborhood spans a small arc.
    for (int i = 0; i < 20000; ++i) pts.push_back(radius * testing::random_unit(rng));
    const auto c = estimate_normals(pts, 8);
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      // Viewpoint is the center, so normals point inward.
      const double cosang = c.normals[i].dot(-pts[i].normalized());
      worst = std::max(worst, testing::deg(std::acos(std::clamp(cosang, -1.0, 1.0))));
    }
    CHECK(worst < 5.0);
  }

  TEST_CASE("estimate_normals: collinear points give a deterministic orthogonal normal") {
    const std::vector<Point3> line{{0, 0, 0}, {1, 1, 0}, {2, 2, 0}};
    const auto a = estimate_normals(line, 3);
    const auto b = estimate_normals(line, 3);
    const Vector3 dir = Vector3(1, 1, 0).normalized();
    for (std::size_t i = 0; i < line.size(); ++i) {
      CHECK(a.normals[i].norm() == doctest::Approx(1.0));
      CHECK(std::abs(a.normals[i].dot(dir)) < 1e-9);
      CHECK(a.normals[i] == b.normals[i]);
    }
  }
}
