#include <thread>

#include "helpers.hpp"
#include "zoflow/optimizer.hpp"

using namespace zoflow;
using zt::vec;

TEST_CASE("zero field gives the identity map") {
  const auto f = zt::identity_flow(3);
  const Vec u = vec({0.3, -1.0, 2.5});
  const auto run = run_flow(f, u);
  CHECK(run.z_final == u);
  CHECK(run.trajectory.size() == 11);
  CHECK(run.trajectory.front() == u);
  CHECK(run.trajectory.back() == run.z_final);
}

TEST_CASE("scalar affine flow telescopes to (1 + a dt)^T") {
  const auto f = zt::scalar_flow(1.0, 10);
  const Vec u = vec({1.0});
  CHECK(f(u)[0] == doctest::Approx(0.3486784401).epsilon(1e-13));
  CHECK(std::abs(f(u)[0] - 0.34867844) <= 1e-8);
  const Vec w = vec({-2.5});
  CHECK(f(w)[0] == doctest::Approx(std::pow(0.9, 10) * -2.5).epsilon(1e-13));
}

TEST_CASE("NFE accounting and determinism") {
  const auto f = zt::bundled_flow(10);
  const Vec u = vec({0.2, -0.4});
  f.reset_nfe();
  const auto a = run_flow(f, u);
  CHECK(f.nfe() == 10);
  const Vec b = f(u);
  CHECK(f.nfe() == 20);
  for (int k = 0; k < 3; ++k) (void)f(u);
  CHECK(f.nfe() == 50);
  CHECK(a.z_final == b);
  CHECK(run_flow(f, u).trajectory == a.trajectory);
}

TEST_CASE("run_flow matches f and the per-step composition") {
  const auto f = zt::bundled_flow(7);
  const Vec u = vec({1.1, 0.3});
  const auto run = run_flow(f, u);
  Vec z = u;
  const auto& s = std::get<FlowSchedule>(f.schedule());
  for (std::size_t k = 0; k < s.num_steps; ++k) {
    z = flow_step(f.backend(), z, s.t_grid[k], f.condition(), s.delta_t);
    CHECK(run.trajectory[k + 1] == z);
  }
  CHECK(f(u) == run.z_final);
}

TEST_CASE("affine closure on random pairs") {
  const auto field = random_symmetric_affine(4, -1.0, 2.0, 3);
  const auto f = zt::affine_flow(field.A, 10);
  const Mat step = Mat::Identity(4, 4) + field.A * -0.1;
  Mat M = Mat::Identity(4, 4);
  for (int k = 0; k < 10; ++k) M = step * M;
  CHECK((affine_flow_map(field, make_uniform_schedule(10)).M - M).cwiseAbs().maxCoeff() <= 1e-12);
  Rng rng = make_rng(1, Stream::kAux);
  for (int i = 0; i < 100; ++i) {
    const Vec u1 = standard_normal(rng, 4), u2 = standard_normal(rng, 4);
    CHECK(zt::max_abs((f(u1) - f(u2)) - M * (u1 - u2)) <= 1e-10);
  }
}

TEST_CASE("affine map with offset") {
  AffineField field{(Mat(2, 2) << 0.5, 0.1, 0.1, -0.3).finished(), vec({0.2, -0.7})};
  const auto sched = make_uniform_schedule(8);
  const BlackBoxFlow f(make_backend(BackendKind::kAffine, 2), sched, make_affine_condition("a", field.A, field.b));
  const auto map = affine_flow_map(field, sched);
  const Vec u = vec({1.0, 2.0});
  CHECK(zt::max_abs(f(u) - (map.M * u + map.offset)) <= 1e-12);
}

TEST_CASE("naive inversion") {
  SUBCASE("exact for the zero field") {
    const auto f = zt::identity_flow(2);
    const Vec z = vec({0.7, -0.2});
    CHECK(invert_naive(f, f(z)) == z);
  }
  SUBCASE("first-order error for a scalar affine field") {
    // Forward steps multiply by (1 + a dt), naive inverse steps by (1 - a dt), so
    // f(invert(z0)) = (1 - a^2 dt^2)^T z0 and the error is at most a^2 |dt| |z0|.
    const double a = 1.0;
    const Vec z0 = vec({1.3});
    double prev = 1e9;
    for (std::size_t T : {10u, 20u, 40u, 80u}) {
      const auto f = zt::scalar_flow(a, T);
      const double dt = 1.0 / static_cast<double>(T);
      f.reset_nfe();
      const Vec inv = invert_naive(f, z0);
      CHECK(f.nfe() == T);
      const double err = std::abs(f(inv)[0] - z0[0]);
      CHECK(err == doctest::Approx(std::abs(1.0 - std::pow(1 - a * a * dt * dt, T)) * 1.3).epsilon(1e-10));
      CHECK(err <= a * a * dt * 1.3);
      CHECK(err < prev);
      prev = err;
    }
  }
  SUBCASE("FlowOpt beats naive inversion on the mixture after ten iterations") {
    const auto f = zt::bundled_flow(10);
    int wins = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng = make_rng(s, Stream::kTruth);
      const Vec y = f(standard_normal(rng, 2));
      const Vec z_naive = invert_naive(f, y);
      const double naive_err = (f(z_naive) - y).norm();
      const auto tr = flowopt_run(f, y, {0.2, 10, std::nullopt, 1.0}, z_naive);
      wins += tr.residual_norms.back() < naive_err;
    }
    CHECK(wins == 20);
  }
}

TEST_CASE("mixture flow pushes noise to the single-Gaussian target") {
  const Vec mu = vec({1.0, -2.0});
  const double sigma = 0.5;
  const GaussianMixture g({1.0}, {mu}, {sigma * sigma * Mat::Identity(2, 2)});
  const auto f = zt::mixture_flow(g, 200);
  Rng rng = make_rng(21, Stream::kAux);
  const int n = 10'000;
  Vec mean = Vec::Zero(2);
  for (int i = 0; i < n; ++i) mean += f(standard_normal(rng, 2));
  mean /= n;
  CHECK(zt::max_abs(mean - mu) <= 4.0 * sigma / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("DDIM chain pushes noise to the single-Gaussian target") {
  const Vec mu = vec({1.0, -2.0});
  const double sigma = 0.5;
  const GaussianMixture g({1.0}, {mu}, {sigma * sigma * Mat::Identity(2, 2)});
  const BlackBoxFlow f(make_backend(BackendKind::kDdimNoisePred, 2), make_cosine_ddim_schedule(200, 1e-4),
                       make_mixture_condition("g", g));
  CHECK(f.is_ddim());
  CHECK(f.stopgrad_scale() == doctest::Approx(100.0).epsilon(1e-12));
  Rng rng = make_rng(22, Stream::kAux);
  const int n = 10'000;
  Vec mean = Vec::Zero(2);
  for (int i = 0; i < n; ++i) mean += f(standard_normal(rng, 2));
  mean /= n;
  CHECK(zt::max_abs(mean - mu) <= 4.0 * sigma / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("BlackBoxFlow construction checks") {
  const auto mix = make_mixture_condition("m", bundled_source_mixture());
  CHECK_THROWS_AS(BlackBoxFlow(make_backend(BackendKind::kDdimNoisePred, 2), make_uniform_schedule(5), mix),
                  InvalidArgument);
  CHECK_THROWS_AS(BlackBoxFlow(make_backend(BackendKind::kGaussianMixture, 2), DdimSchedule({1.0, 0.5}), mix),
                  InvalidArgument);
  CHECK_THROWS_AS(BlackBoxFlow(make_backend(BackendKind::kGaussianMixture, 3), make_uniform_schedule(5), mix),
                  InvalidArgument);
  CHECK_THROWS_AS(BlackBoxFlow(make_backend(BackendKind::kAffine, 2), make_uniform_schedule(5), mix),
                  InvalidArgument);
  const auto f = zt::bundled_flow(5);
  CHECK_THROWS_AS(f(vec({1.0, 2.0, 3.0})), InvalidArgument);
}

TEST_CASE("with_condition swaps the condition and resets the counter") {
  const auto f = zt::bundled_flow(5);
  (void)f(vec({0.0, 0.0}));
  const auto g = f.with_condition(make_mixture_condition("tar", bundled_target_mixture()));
  CHECK(g.nfe() == 0);
  CHECK(g.condition().tag == "tar");
  CHECK(g(vec({0.1, 0.1})) != f(vec({0.1, 0.1})));
  const BlackBoxFlow copy(f);
  CHECK(copy.nfe() == f.nfe());
}

TEST_CASE("concurrent evaluation shares one counter") {
  const auto f = zt::bundled_flow(10);
  f.reset_nfe();
  const Vec u = vec({0.5, 0.5});
  const Vec expected = run_flow(BlackBoxFlow(f), u).z_final;
  std::vector<std::jthread> pool;
  std::vector<int> ok(4, 1);
  for (int w = 0; w < 4; ++w) {
    pool.emplace_back([&, w] {
      for (int i = 0; i < 25; ++i) ok[w] &= f(u) == expected;
    });
  }
  pool.clear();
  CHECK(std::all_of(ok.begin(), ok.end(), [](int v) { return v == 1; }));
  CHECK(f.nfe() == 4 * 25 * 10);
}
