#include "helpers.hpp"
#include "zoflow/bound.hpp"

using namespace zoflow;
using zt::vec;

namespace {

/// Single Euler step with dt = -1: f(u) = (I - A) u, so M = I - A.
BlackBoxFlow linear_map(const Mat& M) { return zt::affine_flow(Mat::Identity(M.rows(), M.cols()) - M, 1); }

}  // namespace

TEST_CASE("pairwise ratio examples") {
  SUBCASE("identity flow") {
    const auto f = zt::identity_flow(3);
    Rng rng = make_rng(0, Stream::kAux);
    for (int i = 0; i < 10; ++i) {
      const auto r = pairwise_ratio(f, standard_normal(rng, 3), standard_normal(rng, 3));
      CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(r.cosine == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  SUBCASE("scalar m = 0.5") {
    const auto f = linear_map(Mat::Constant(1, 1, 0.5));
    const auto r = pairwise_ratio(f, vec({0.3}), vec({-1.7}));
    CHECK(r.ratio == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.cosine == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("eigendirection of diag(1, 4)") {
    const auto f = linear_map(vec({1.0, 4.0}).asDiagonal());
    const auto r = pairwise_ratio(f, vec({0.2, 1.0}), vec({0.2, 0.0}));
    CHECK(r.ratio == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("degenerate and coincident pairs") {
    const auto collapse = linear_map(Mat::Zero(2, 2));
    CHECK_THROWS_AS(pairwise_ratio(collapse, vec({1.0, 0.0}), vec({0.0, 1.0})), DegeneratePair);
    const auto f = zt::identity_flow(2);
    CHECK_THROWS_AS(pairwise_ratio(f, vec({1.0, 0.0}), vec({1.0, 0.0})), InvalidArgument);
  }
  SUBCASE("scale invariance for linear maps") {
    const auto field = random_symmetric_affine(3, -0.5, 1.5, 4);
    const auto f = zt::affine_flow(field.A, 10);
    Rng rng = make_rng(2, Stream::kAux);
    const Vec u1 = standard_normal(rng, 3), u2 = standard_normal(rng, 3), shift = standard_normal(rng, 3);
    const double base = pairwise_ratio(f, u1, u2).ratio;
    for (double c : {-3.0, 0.01, 7.0}) {
      CHECK(pairwise_ratio(f, c * u1 + shift, c * u2 + shift).ratio == doctest::Approx(base).epsilon(1e-10));
    }
  }
  SUBCASE("NFE cost is two passes") {
    const auto f = zt::bundled_flow(10);
    f.reset_nfe();
    (void)pairwise_ratio(f, vec({0.1, 0.2}), vec({0.3, -0.4}));
    CHECK(f.nfe() == 20);
  }
}

TEST_CASE("identity flow bound is exactly two") {
  const auto f = zt::identity_flow(2);
  for (std::uint64_t seed : {0u, 1u, 17u}) {
    BoundConfig cfg;
    cfg.seed = seed;
    cfg.num_realizations = 50;
    const auto est = estimate_bound_mc(f, cfg);
    CHECK(est.bound == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(est.suggested_eta == doctest::Approx(1.8).epsilon(1e-12));
    CHECK(est.suggested_eta < 2.0 * est.global_min);
    CHECK(est.beta_min == doctest::Approx(1.0).epsilon(1e-12));
  }
  BoundConfig cfg;
  cfg.alpha_grid = {0.3};
  cfg.num_realizations = 10;
  CHECK(estimate_bound_mc(f, cfg).bound == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("affine_bound_exact examples") {
  CHECK(affine_bound_exact(Mat::Identity(3, 3)) == doctest::Approx(2.0));
  CHECK(affine_bound_exact(vec({0.5, 2.0}).asDiagonal()) == doctest::Approx(1.0));
  CHECK(std::abs(affine_bound_exact(Mat::Constant(1, 1, 0.34867844)) - 5.7360) <= 1e-4);
  CHECK_THROWS_AS(affine_bound_exact((Mat(2, 2) << 1, 0.5, 0, 1).finished()), InvalidArgument);
  CHECK_THROWS_AS(affine_bound_exact(vec({1.0, -1.0}).asDiagonal()), InvalidArgument);
}

TEST_CASE("affine d = 8 estimate approaches the exact bound from above") {
  const auto field = random_symmetric_affine(8, -0.5, 1.5, 7);
  const auto sched = make_uniform_schedule(10);
  const auto f = zt::affine_flow(field.A, 10);
  const Mat M = affine_flow_map(field, sched).M;
  const double exact = affine_bound_exact(M);
  Eigen::SelfAdjointEigenSolver<Mat> es(M);
  const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();

  BoundConfig cfg;
  cfg.alpha_grid = {0.0, 0.5, 0.9, 0.99};
  cfg.num_realizations = 2500;
  cfg.keep_samples = true;
  const auto est = estimate_bound_mc(f, cfg);
  CHECK(est.bound >= exact * (1 - 1e-12));
  CHECK(est.bound <= 1.05 * exact);
  for (const auto& s : est.samples) {
    CHECK(s.ratio >= 1.0 / lmax - 1e-12);
    CHECK(s.ratio <= 1.0 / lmin + 1e-12);
  }
}

TEST_CASE("estimate is deterministic and independent of worker count") {
  const auto f = zt::bundled_flow(10);
  BoundConfig cfg;
  cfg.num_realizations = 200;
  cfg.seed = 42;
  const auto a = estimate_bound_mc(f, cfg);
  const auto b = estimate_bound_mc(f, cfg);
  cfg.jobs = 3;
  const auto c = estimate_bound_mc(f, cfg);
  for (const auto* e : {&b, &c}) {
    CHECK(e->global_min == a.global_min);
    CHECK(e->beta_min == a.beta_min);
    CHECK(e->max_ratio == a.max_ratio);
    for (std::size_t i = 0; i < a.per_alpha_min.size(); ++i) {
      CHECK(e->per_alpha_min[i].min_ratio == a.per_alpha_min[i].min_ratio);
    }
  }
  CHECK(a.nfe == 2 * 10 * 200 * cfg.alpha_grid.size());
}

TEST_CASE("global minimum is non-increasing in the number of realizations") {
  const auto f = zt::bundled_flow(10);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n : {10u, 50u, 200u, 800u}) {
    BoundConfig cfg;
    cfg.num_realizations = n;
    const auto est = estimate_bound_mc(f, cfg);
    CHECK(est.global_min <= prev);
    prev = est.global_min;
  }
}

TEST_CASE("bundled mixture attains its minimum ratio at the largest alpha") {
  const auto f = zt::bundled_flow(10);
  BoundConfig cfg;
  cfg.alpha_grid = {0.5, 0.9, 0.99, 0.999};
  cfg.num_realizations = 2000;
  const auto est = estimate_bound_mc(f, cfg);
  CHECK(est.beta_min > 0.0);
  CHECK(est.per_alpha_min.back().min_ratio == est.global_min);
}

TEST_CASE("non-positive cosine violates the assumption") {
  // f(u) = -u
  const auto f = linear_map(-Mat::Identity(2, 2));
  BoundConfig cfg;
  cfg.num_realizations = 20;
  try {
    (void)estimate_bound_mc(f, cfg);
    FAIL("expected BoundAssumptionError");
  } catch (const BoundAssumptionError& e) {
    CHECK(e.estimate().beta_min <= 0.0);
    CHECK(e.estimate().suggested_eta == 0.0);
  }
}

TEST_CASE("estimator preconditions") {
  const auto f = zt::identity_flow(2);
  BoundConfig cfg;
  cfg.num_realizations = 0;
  CHECK_THROWS_AS(estimate_bound_mc(f, cfg), InvalidArgument);
  cfg.num_realizations = 5;
  cfg.alpha_grid = {0.5, 1.0};
  CHECK_THROWS_AS(estimate_bound_mc(f, cfg), InvalidArgument);
}

TEST_CASE("conditions are cycled over realizations") {
  const auto f = zt::bundled_flow(10);
  BoundConfig cfg;
  cfg.num_realizations = 6;
  cfg.keep_samples = true;
  cfg.conditions = {make_mixture_condition("src", bundled_source_mixture()),
                    make_mixture_condition("tar", bundled_target_mixture())};
  const auto est = estimate_bound_mc(f, cfg);
  for (std::size_t i = 0; i < est.samples.size(); ++i) CHECK(est.samples[i].condition_index == (i % 6) % 2);
}

TEST_CASE("pair samples follow the interpolation") {
  const auto f = zt::bundled_flow(5);
  BoundConfig cfg;
  cfg.num_realizations = 5;
  cfg.keep_samples = true;
  const auto est = estimate_bound_mc(f, cfg);
  for (const auto& s : est.samples) {
    CHECK(zt::max_abs(s.u2 - (std::sqrt(s.alpha) * s.u1 + std::sqrt(1 - s.alpha) * s.eps)) == 0.0);
  }
}

TEST_CASE("proof interval") {
  SUBCASE("identity flow") {
    const auto p = proof_interval(1.0, 1.0, 1.0, 1e-6);
    CHECK(std::abs(p.eta2_bar - 2.0) <= 1e-6);
    CHECK(std::abs(p.eta1_bar) <= 1e-6);
    const auto q = proof_interval(1.0, 1.0, 1.0, 1.0);
    CHECK(q.eta1_bar == q.eta2_bar);
    CHECK(q.eta1_bar == 1.0);
  }
  SUBCASE("kappa above beta squared is rejected") {
    CHECK_THROWS_AS(proof_interval(1.0, 2.0, 0.5, 0.3), InvalidArgument);
  }
  SUBCASE("kappa to zero recovers the bound on diag(1, 4)") {
    const auto f = linear_map(vec({1.0, 4.0}).asDiagonal());
    BoundConfig cfg;
    cfg.num_realizations = 2000;
    cfg.keep_samples = true;
    const auto est = estimate_bound_mc(f, cfg);
    double prev = 0.0;
    for (double kappa : {1e-2, 1e-4, 1e-6}) {
      const auto p = proof_interval(std::span<const PairSample>(est.samples), kappa);
      CHECK(p.eta2_bar > prev);
      CHECK(p.eta2_bar <= est.bound);
      CHECK(p.eta1_bar >= 0.0);
      prev = p.eta2_bar;
      const auto viaest = proof_interval(est, kappa);
      CHECK(viaest.eta2_bar == p.eta2_bar);
    }
    CHECK(std::abs(prev - est.bound) <= 1e-5 * est.bound);
    CHECK(std::abs(prev - 0.5) <= 0.05 * 0.5);
  }
}
