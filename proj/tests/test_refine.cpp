#include "dualreg/refine.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace dualreg;

namespace {

PipelineConfig refine_config(double gamma) {
  PipelineConfig cfg;
  cfg.gamma = gamma;
  cfg.tau = cfg.delta = cfg.beta = cfg.voxel_size = 1.0;
  return cfg;
}

// Probability that item `target` appears in a sequential weighted triple,
// by enumerating every ordered triple.
double inclusion_probability(const std::vector<double>& w, std::size_t target) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double p = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) {
    const double pa = w[a] / total;
    for (std::size_t b = 0; b < w.size(); ++b) {
      if (b == a) continue;
      const double pb = w[b] / (total - w[a]);
      for (std::size_t c = 0; c < w.size(); ++c) {
        if (c == a || c == b) continue;
        const double pc = w[c] / (total - w[a] - w[b]);
        if (a == target || b == target || c == target) p += pa * pb * pc;
      }
    }
  }
  return p;
}

}  // namespace

TEST_SUITE("refine") {
  TEST_CASE("sample_triple: three items give the only triple") {
    Rng rng(1);
    const std::vector<double> p{1, 1, 1};
    for (int i = 0; i < 20; ++i) {
      auto t = sample_triple(p, rng);
      std::sort(t.begin(), t.end());
      CHECK(t == std::array<std::size_t, 3>{0, 1, 2});
    }
    CHECK_THROWS_AS(sample_triple(std::vector<double>{1, 1}, rng), DegenerateInput);
  }

  TEST_CASE("sample_triple: Monte-Carlo frequency matches sequential-draw analysis") {
    const std::vector<double> p{0.99, 0.99, 0.99, 0.01};
    Rng rng(2);
    int hits = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const auto t = sample_triple(p, rng);
      CHECK((t[0] != t[1] && t[1] != t[2] && t[0] != t[2]));
      hits += (t[0] == 3 || t[1] == 3 || t[2] == 3);
    }
    const double freq = static_cast<double>(hits) / draws;
    CHECK(freq < 0.03);
    const double analytic = inclusion_probability(p, 3);
    CHECK(std::abs(freq - analytic) < 4.0 * std::sqrt(analytic * (1 - analytic) / draws) + 1e-3);

    const std::vector<double> q{0.1, 0.5, 0.9, 0.3, 0.7, 0.2};
    std::vector<int> count(q.size(), 0);
    for (int i = 0; i < draws; ++i) {
      for (std::size_t k : sample_triple(q, rng)) ++count[k];
    }
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double a = inclusion_probability(q, k);
      const double f = static_cast<double>(count[k]) / draws;
      CHECK(std::abs(f - a) < 4.0 * std::sqrt(a * (1 - a) / draws) + 1e-3);
    }
  }

  TEST_CASE("sample_triple: fixed seed, fixed triple; zero weights avoided") {
    const std::vector<double> p{0.2, 0.4, 0.6, 0.8, 0.3};
    Rng a(9), b(9);
    CHECK(sample_triple(p, a) == sample_triple(p, b));

    const std::vector<double> z{0.0, 1.0, 0.0, 1.0, 1.0};
    Rng r(4);
    for (int i = 0; i < 200; ++i) {
      for (std::size_t k : sample_triple(z, r)) CHECK((k == 1 || k == 3 || k == 4));
    }
  }

  TEST_CASE("evaluate_hypothesis") {
    std::mt19937_64 rng(61);
    auto s = testing::rigid_scene(rng, 20, 20);
    const CorrespondenceGeometry g(s.corr, s.source, s.target);
    std::vector<std::size_t> first(20);
    std::iota(first.begin(), first.end(), 0);
    CHECK(evaluate_hypothesis(s.gt, g, 0.01) == first);

    // Residual exactly gamma is excluded.
    OrientedPointCloud src, tgt;
    src.points = {{0, 0, 0}, {1, 0, 0}};
    tgt.points = {{0.25, 0, 0}, {1.5, 0, 0}};
    src.normals = tgt.normals = {Vector3::UnitZ(), Vector3::UnitZ()};
    const CorrespondenceGeometry h({{0, 0}, {1, 1}}, src, tgt);
    CHECK(evaluate_hypothesis(RigidTransform::identity(), h, 0.25).empty());
    CHECK(evaluate_hypothesis(RigidTransform::identity(), h, 0.5) == std::vector<std::size_t>{0});

    // Brute-force residual filter on a noisy mix under a perturbed transform.
    const auto mix = testing::rigid_scene(rng, 50, 50, 0.05);
    const CorrespondenceGeometry gm(mix.corr, mix.source, mix.target);
    const RigidTransform off = compose(testing::rot_z(2.0, {0.01, 0, 0}), mix.gt);
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < mix.corr.size(); ++i) {
      const auto& c = mix.corr[i];
      if ((off.apply(mix.source.points[c.source_index]) - mix.target.points[c.target_index]).norm() < 0.1)
        expected.push_back(i);
    }
    CHECK(evaluate_hypothesis(off, gm, 0.1) == expected);
  }

  TEST_CASE("update_probabilities: odds arithmetic and clamping") {
    std::vector<double> p{0.5, 0.5, 0.99, 0.01, 0.5};
    const std::vector<std::size_t> inliers{0, 2};
    update_probabilities(p, inliers);
    CHECK(p[0] == doctest::Approx(2.0 / 3.0));
    CHECK(p[1] == doctest::Approx(1.0 / 3.0));
    CHECK(p[2] == 0.99);
    CHECK(p[3] == 0.01);
    CHECK(p[4] == doctest::Approx(1.0 / 3.0));

    std::vector<double> q(3, 0.5);
    for (int i = 0; i < 50; ++i) update_probabilities(q, std::vector<std::size_t>{1});
    CHECK(q[0] == kMinInlierProb);
    CHECK(q[1] == kMaxInlierProb);
  }

  TEST_CASE("run_refinement: noise-free all-inlier set") {
    std::mt19937_64 rng(62);
    const auto s = testing::rigid_scene(rng, 30, 0);
    Rng r(5);
    const auto res = run_refinement(s.corr, s.source, s.target, refine_config(0.01), r);
    CHECK(res.iterations == 1);
    CHECK(res.state.max_iters == 1);
    CHECK(transform_distance(res.state.best_transform, s.gt) < 1e-6);
    CHECK(res.state.best_inliers.size() == 30);
  }

  TEST_CASE("run_refinement: half inliers gives the cubic bound 35") {
    std::mt19937_64 rng(63);
    const auto s = testing::rigid_scene(rng, 40, 40);
    Rng r(6);
    const auto res = run_refinement(s.corr, s.source, s.target, refine_config(0.01), r);
    CHECK(res.state.best_inliers.size() == 40);
    CHECK(res.state.max_iters == 35);
    CHECK(res.iterations <= 35);
    CHECK(transform_distance(res.state.best_transform, s.gt) < 1e-6);
    for (std::size_t k = 1; k < res.best_count_trace.size(); ++k) {
      CHECK(res.best_count_trace[k] >= res.best_count_trace[k - 1]);
    }
    for (double p : res.state.probs) CHECK((p >= kMinInlierProb && p <= kMaxInlierProb));
  }

  TEST_CASE("run_refinement: determinism and degenerate input") {
    std::mt19937_64 rng(64);
    const auto s = testing::rigid_scene(rng, 20, 30, 0.01);
    Rng a(8), b(8);
    const auto ra = run_refinement(s.corr, s.source, s.target, refine_config(0.05), a);
    const auto rb = run_refinement(s.corr, s.source, s.target, refine_config(0.05), b);
    CHECK(ra.state.best_inliers == rb.state.best_inliers);
    CHECK(ra.state.probs == rb.state.probs);
    CHECK(ra.state.best_transform == rb.state.best_transform);

    Rng c(1);
    const CorrespondenceSet two(s.corr.begin(), s.corr.begin() + 2);
    CHECK_THROWS_AS(run_refinement(two, s.source, s.target, refine_config(0.05), c), DegenerateInput);

    // Collinear sources never admit a solve.
    OrientedPointCloud line;
    for (int i = 0; i < 5; ++i) {
      line.points.emplace_back(i, 0, 0);
      line.normals.push_back(Vector3::UnitZ());
    }
    PipelineConfig cfg = refine_config(0.05);
    cfg.refine_max_iters = 50;
    const CorrespondenceSet all{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
    CHECK_THROWS_AS(run_refinement(all, line, line, cfg, c), DegenerateInput);
  }
}
