#include "dualreg/cloud.hpp"
#include "dualreg/dual_space.hpp"
#include "dualreg/metrics.hpp"
#include "dualreg/synth.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace dualreg;

namespace {

std::vector<Point3> random_cloud(std::mt19937_64& rng, std::size_t n, double half = 1.0) {
  std::vector<Point3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(testing::random_point(rng, half));
  return pts;
}

std::vector<std::size_t> union_oracle(const std::vector<Point3>& anchors,
                                      const std::vector<Point3>& cloud, double beta) {
  std::set<std::size_t> hit;
  for (const auto& a : anchors)
    for (std::size_t i = 0; i < cloud.size(); ++i)
      if ((cloud[i] - a).norm() < beta) hit.insert(i);
  return {hit.begin(), hit.end()};
}

struct DenseScene {
  RegistrationJob job;
  std::vector<Point3> src_anchor, tgt_anchor;
  std::vector<Point3> src_ds, tgt_ds;
};

DenseScene dense_scene(std::uint64_t seed, double noise) {
  SynthSpec spec;
  spec.n_points = 4000;
  spec.noise_sigma = noise;
  spec.inlier_ratio = 1.0;
  spec.n_correspondences = 60;
  spec.seed = seed;
  DenseScene d;
  d.job = synth_scene(spec);
  for (const auto& c : d.job.correspondences) {
    d.src_anchor.push_back(d.job.source.points[c.source_index]);
    d.tgt_anchor.push_back(d.job.target.points[c.target_index]);
  }
  d.src_ds = voxel_downsample(d.job.source, 0.1).points;
  d.tgt_ds = voxel_downsample(d.job.target, 0.1).points;
  return d;
}

PipelineConfig dual_config() {
  PipelineConfig cfg;
  cfg.tau = cfg.delta = cfg.voxel_size = 0.1;
  cfg.beta = 1.0;
  return cfg;
}

}  // namespace

TEST_SUITE("dual_space") {
  TEST_CASE("build_proxies: single anchor with a huge radius covers both clouds") {
    std::mt19937_64 rng(71);
    const auto src = random_cloud(rng, 100);
    const auto tgt = random_cloud(rng, 80);
    const std::vector<Point3> a{{0, 0, 0}};
    const auto p = build_proxies(a, a, src, tgt, 100.0);
    CHECK(p.source_proxy == src);
    CHECK(p.target_proxy == tgt);
    CHECK(p.source_cloud_indices.size() == 100);
  }

  TEST_CASE("build_proxies: disjoint and overlapping neighborhoods") {
    std::mt19937_64 rng(72);
    const auto cloud = random_cloud(rng, 2000, 2.0);
    const std::vector<Point3> far{{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}};
    const auto p = build_proxies(far, far, cloud, cloud, 0.6);
    const auto a0 = union_oracle({far[0]}, cloud, 0.6);
    const auto a1 = union_oracle({far[1]}, cloud, 0.6);
    CHECK(p.source_proxy.size() == a0.size() + a1.size());

    const std::vector<Point3> near{{0, 0, 0}, {0.3, 0.1, 0}, {0.2, -0.4, 0.3}};
    const auto q = build_proxies(near, near, cloud, cloud, 0.5);
    CHECK(q.source_cloud_indices == union_oracle(near, cloud, 0.5));
    CHECK(q.target_cloud_indices == union_oracle(near, cloud, 0.5));

    CHECK_THROWS_WITH_AS(build_proxies(std::vector<Point3>{{50, 50, 50}},
                                       std::vector<Point3>{{50, 50, 50}}, cloud, cloud, 0.5),
                         doctest::Contains("no proxy support"), DegenerateInput);
  }

  TEST_CASE("build_proxies: per-patch mode keeps each anchor's own neighborhood") {
    std::mt19937_64 rng(73);
    const auto cloud = random_cloud(rng, 1000);
    const std::vector<Point3> anchors{{-0.5, 0, 0}, {0.5, 0, 0}};
    const auto p = build_proxies(anchors, anchors, cloud, cloud, 0.4, ProxyAssignment::kPerPatch);
    REQUIRE(p.patches.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto expected = union_oracle({anchors[k]}, cloud, 0.4);
      REQUIRE(p.patches[k].source.size() == expected.size());
      for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(p.source_cloud_indices[p.patches[k].source[i]] == expected[i]);
      }
    }
    // Identity: every source proxy point finds itself within its patch.
    for (const auto& m : assign_closest(RigidTransform::identity(), p)) {
      CHECK(p.source_proxy[m.source] == p.target_proxy[m.target]);
    }
  }

  TEST_CASE("compute_sigma") {
    const std::vector<Point3> src(5, Point3::Zero());
    std::vector<Point3> tgt;
    for (double r : {0.3, 0.6, 0.9, 1.2, 1.5}) tgt.emplace_back(r, 0, 0);
    const std::vector<double> equal(5, 0.5);
    CHECK(compute_sigma(src, tgt, equal, RigidTransform::identity(), 0.4, 0.1) ==
          doctest::Approx(0.2));
    CHECK(compute_sigma(src, tgt, equal, RigidTransform::identity(), 1.0, 0.1) ==
          doctest::Approx(0.5));

    // Highest probabilities first: anchors 4 and 3.
    const std::vector<double> ranked{0.1, 0.2, 0.3, 0.8, 0.9};
    CHECK(compute_sigma(src, tgt, ranked, RigidTransform::identity(), 0.4, 0.1) ==
          doctest::Approx(0.5));

    CHECK(compute_sigma(src, src, equal, RigidTransform::identity(), 0.4, 0.1) == sigma_floor(0.1));
    CHECK(sigma_floor(0.1) == doctest::Approx(0.001));
    CHECK(sigma_floor(0.0) == 1e-6);
  }

  TEST_CASE("robust_weight") {
    CHECK(robust_weight(0.0, 0.3) == 1.0);
    CHECK(robust_weight(0.3, 0.3) == doctest::Approx(std::exp(-0.5)));
    CHECK(robust_weight(0.9, 0.3) == doctest::Approx(std::exp(-4.5)));
    CHECK(robust_weight(0.9, 0.3) > 0.0);
  }

  TEST_CASE("assign_closest") {
    std::mt19937_64 rng(74);
    const auto cloud = random_cloud(rng, 400);
    const std::vector<Point3> a{{0, 0, 0}};
    const auto p = build_proxies(a, a, cloud, cloud, 10.0);
    for (const auto& m : assign_closest(RigidTransform::identity(), p)) {
      CHECK((p.source_proxy[m.source] - p.target_proxy[m.target]).norm() == 0.0);
    }

    const auto tgt = random_cloud(rng, 300);
    const auto q = build_proxies(a, a, cloud, tgt, 10.0);
    const RigidTransform t = testing::random_rigid(rng, 0.3);
    const auto matches = assign_closest(t, q);
    REQUIRE(matches.size() == q.source_proxy.size());
    for (const auto& m : matches) {
      const Point3 x = t.apply(q.source_proxy[m.source]);
      std::size_t best = 0;
      for (std::size_t j = 1; j < q.target_proxy.size(); ++j) {
        if ((q.target_proxy[j] - x).norm() < (q.target_proxy[best] - x).norm()) best = j;
      }
      CHECK(m.target == best);
    }

    const std::vector<Point3> lump(50, Point3(0.1, 0.2, 0.3));
    const auto r = build_proxies(a, a, cloud, lump, 10.0);
    for (const auto& m : assign_closest(t, r)) CHECK(m.target == 0);
  }

  TEST_CASE("dual_objective") {
    std::mt19937_64 rng(75);
    const auto s = testing::rigid_scene(rng, 30, 0);
    std::vector<Point3> tgt_cloud;
    for (const auto& p : s.source.points) tgt_cloud.push_back(s.gt.apply(p));
    const std::vector<Point3> anchor{s.source.points[0]};
    const std::vector<Point3> anchor_t{tgt_cloud[0]};
    const auto p = build_proxies(anchor, anchor_t, s.source.points, tgt_cloud, 10.0);
    const auto m = assign_closest(s.gt, p);
    const std::vector<double> ones_a(1, 1.0), ones_p(m.size(), 1.0);
    CHECK(dual_objective(s.gt, anchor, anchor_t, ones_a, p, m, ones_p, 0.05) < 1e-20);

    // Random instance against a straight summation.
    const RigidTransform t = testing::random_rigid(rng);
    std::vector<Point3> sa, ta;
    std::vector<double> wa;
    std::uniform_real_distribution<double> w(0, 1);
    for (int i = 0; i < 7; ++i) {
      sa.push_back(testing::random_point(rng));
      ta.push_back(testing::random_point(rng));
      wa.push_back(w(rng));
    }
    const auto pm = assign_closest(t, p);
    std::vector<double> wp;
    for (std::size_t i = 0; i < pm.size(); ++i) wp.push_back(w(rng));
    double anchor_sum = 0.0, proxy_sum = 0.0;
    for (std::size_t j = 0; j < sa.size(); ++j) {
      const Point3 d = t.rotation() * sa[j] + t.translation() - ta[j];
      anchor_sum += wa[j] * d.dot(d);
    }
    for (std::size_t i = 0; i < pm.size(); ++i) {
      const Point3 d = t.rotation() * p.source_proxy[pm[i].source] + t.translation() -
                       p.target_proxy[pm[i].target];
      proxy_sum += wp[i] * d.dot(d);
    }
    const double lambda = 0.7;
    const double expected = lambda / sa.size() * anchor_sum + proxy_sum / pm.size();
    CHECK(dual_objective(t, sa, ta, wa, p, pm, wp, lambda) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(dual_objective(t, sa, ta, wa, p, pm, wp, 0.0) ==
          doctest::Approx(proxy_sum / pm.size()).epsilon(1e-12));
  }

  TEST_CASE("solve_dual_space: ground truth is a fixed point on noise-free data") {
    const auto d = dense_scene(3, 0.0);
    const RigidTransform gt = *d.job.ground_truth;
    // Noise-free with identical sampling: use the raw clouds as proxies.
    std::vector<Point3> tgt_exact;
    for (const auto& p : d.job.source.points) tgt_exact.push_back(gt.apply(p));
    const auto proxies = build_proxies(d.src_anchor, d.tgt_anchor, d.job.source.points, tgt_exact, 0.5);
    const auto res = solve_dual_space(d.src_anchor, d.tgt_anchor, gt, proxies, 0.01, dual_config());
    CHECK(res.trace.size() <= 2);
    CHECK(res.converged);
    CHECK(transform_distance(res.transform, gt) < 1e-9);
  }

  TEST_CASE("solve_dual_space: a perturbed start moves toward ground truth") {
    for (std::uint64_t seed : {5u, 6u, 7u}) {
      const auto d = dense_scene(seed, 0.005);
      const RigidTransform gt = *d.job.ground_truth;
      const RigidTransform init =
          compose(RigidTransform::from_axis_angle(Vector3(1, 2, 3).normalized(), testing::rad(3.0),
                                                  Vector3(0.05, 0, 0)),
                  gt);
      const auto proxies = build_proxies(d.src_anchor, d.tgt_anchor, d.src_ds, d.tgt_ds, 1.0);
      std::vector<double> probs(d.src_anchor.size(), 0.9);
      const double sigma = compute_sigma(d.src_anchor, d.tgt_anchor, probs, init, 0.4, 0.1);
      const auto res = solve_dual_space(d.src_anchor, d.tgt_anchor, init, proxies, sigma, dual_config());
      CHECK(rotation_error_deg(res.transform, gt) < rotation_error_deg(init, gt));
      CHECK(translation_error(res.transform, gt) < translation_error(init, gt));
      // Closed-form minimizer; slack only for floating-point rounding.
      for (const auto& step : res.trace) {
        CHECK(step.objective_after <= step.objective_before * (1.0 + 1e-12));
      }
    }
  }

  TEST_CASE("solve_dual_space: zero iterations returns init; bad sigma throws") {
    const auto d = dense_scene(8, 0.005);
    const auto proxies = build_proxies(d.src_anchor, d.tgt_anchor, d.src_ds, d.tgt_ds, 1.0);
    PipelineConfig cfg = dual_config();
    cfg.max_dual_iters = 0;
    std::mt19937_64 rng(76);
    const RigidTransform init = testing::random_rigid(rng);
    const auto res = solve_dual_space(d.src_anchor, d.tgt_anchor, init, proxies, 0.05, cfg);
    CHECK(res.transform == init);
    CHECK(res.trace.empty());
    CHECK_THROWS_AS(solve_dual_space(d.src_anchor, d.tgt_anchor, init, proxies, 0.0, dual_config()),
                    Error);
  }
}
