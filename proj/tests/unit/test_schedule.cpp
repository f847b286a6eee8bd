#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "zoflow/schedule.hpp"

using namespace zoflow;

TEST_CASE("uniform schedule grid arithmetic") {
  const auto s = make_uniform_schedule(10, 1.0);
  CHECK(s.num_steps == 10);
  REQUIRE(s.t_grid.size() == 11);
  CHECK(s.delta_t == doctest::Approx(-0.1).epsilon(1e-14));
  for (std::size_t k = 0; k <= 10; ++k) {
    CHECK(std::abs(s.t_grid[k] - (1.0 - 0.1 * static_cast<double>(k))) <= 1e-12);
  }
  for (std::size_t k = 0; k < 10; ++k) CHECK(std::abs(s.t_grid[k + 1] - s.t_grid[k] - s.delta_t) <= 1e-12);
  CHECK(s.t_grid.front() == 1.0);
  CHECK(s.t_grid.back() == 0.0);
}

TEST_CASE("single-step schedule") {
  const auto s = make_uniform_schedule(1, 1.0);
  CHECK(s.t_grid == std::vector<double>{1.0, 0.0});
  CHECK(s.delta_t == -1.0);
}

TEST_CASE("t_start below one emulates a truncated grid") {
  const auto s = make_uniform_schedule(15, 13.0 / 15.0);
  CHECK(s.num_steps == 15);
  CHECK(std::abs(s.t_start() - 13.0 / 15.0) <= 1e-12);
  CHECK(std::abs(s.delta_t + 13.0 / 225.0) <= 1e-15);
  CHECK(s.t_grid.back() == 0.0);

  // n_max = 13 of T = 15: same start, the original step size, NFE per pass = n_max.
  const auto tr = make_truncated_schedule(15, 13);
  CHECK(tr.num_steps == 13);
  CHECK(std::abs(tr.t_start() - 13.0 / 15.0) <= 1e-12);
  CHECK(std::abs(tr.delta_t + 1.0 / 15.0) <= 1e-15);
  for (std::size_t k = 0; k < 13; ++k) CHECK(std::abs(tr.t_grid[k + 1] - tr.t_grid[k] - tr.delta_t) <= 1e-12);
  CHECK(tr.t_grid.back() == 0.0);
}

TEST_CASE("schedule preconditions") {
  CHECK_THROWS_AS(make_uniform_schedule(0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_uniform_schedule(5, 0.0), InvalidArgument);
  CHECK_THROWS_AS(make_uniform_schedule(5, 1.5), InvalidArgument);
  CHECK_THROWS_AS(make_truncated_schedule(10, 11), InvalidArgument);
  CHECK_THROWS_AS(make_truncated_schedule(10, 0), InvalidArgument);
}

TEST_CASE("DDIM schedule validation") {
  CHECK_NOTHROW(DdimSchedule({1.0, 0.5, 0.25}));
  CHECK_NOTHROW(DdimSchedule({1.0, 1.0}));
  CHECK_THROWS_AS(DdimSchedule({1.0}), InvalidArgument);
  CHECK_THROWS_AS(DdimSchedule({0.9, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(DdimSchedule({1.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(DdimSchedule({1.0, 0.3, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(DdimSchedule({1.0, 1.2}), InvalidArgument);
}

TEST_CASE("ddim_delta closed-form examples") {
  CHECK(ddim_delta(DdimSchedule({1.0, 0.5, 0.25})) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ddim_delta(DdimSchedule({1.0, 1.0, 1.0})) == 1.0);
}

TEST_CASE("ddim_delta telescoping on random schedules") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(1e-4, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(51);
    for (auto& x : a) x = u(rng);
    std::sort(a.begin(), a.end(), std::greater<>());
    a[0] = 1.0;
    const DdimSchedule s(a);
    const double closed = 1.0 / std::sqrt(a.back());
    CHECK(std::abs(ddim_delta_product(s) - closed) <= 1e-12 * std::max(1.0, closed));
    CHECK(ddim_delta(s) == closed);
  }
}

TEST_CASE("corrupted schedule fails the telescoping check") {
  const auto bad = DdimSchedule::unchecked({0.9, 0.6, 0.3});
  CHECK_THROWS_AS(ddim_delta(bad), InvalidArgument);
}

TEST_CASE("DDIM step coefficients") {
  SUBCASE("equal alphas give the identity") {
    const DdimSchedule s({1.0, 1.0});
    const auto c = ddim_coefficients(s, 1);
    CHECK(c.state_coef == 1.0);
    CHECK(c.noise_coef == 0.0);
  }
  SUBCASE("ratio four scales by two") {
    const DdimSchedule s({1.0, 0.25});
    CHECK(ddim_coefficients(s, 1).state_coef == 2.0);
  }
  SUBCASE("noise coefficient matches the unrearranged step") {
    // z_prev = sqrt(a_prev) * x0_hat + sqrt(1 - a_prev) * eps, x0_hat = (z - sqrt(1 - a) eps) / sqrt(a).
    const DdimSchedule s({1.0, 0.8, 0.3});
    const double ap = 0.8, a = 0.3, z = 0.7, eps = -1.3;
    const double x0 = (z - std::sqrt(1 - a) * eps) / std::sqrt(a);
    const double expected = std::sqrt(ap) * x0 + std::sqrt(1 - ap) * eps;
    const auto c = ddim_coefficients(s, 2);
    CHECK(c.state_coef * z + c.noise_coef * eps == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("index range") {
    const DdimSchedule s({1.0, 0.5});
    CHECK_THROWS_AS(ddim_coefficients(s, 0), InvalidArgument);
    CHECK_THROWS_AS(ddim_coefficients(s, 2), InvalidArgument);
  }
}

TEST_CASE("cosine DDIM schedule endpoints") {
  const auto s = make_cosine_ddim_schedule(50, 1e-4);
  CHECK(s.num_steps() == 50);
  CHECK(s.alpha(0) == 1.0);
  CHECK(s.alpha(50) == 1e-4);
  CHECK(ddim_delta(s) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK_THROWS_AS(make_cosine_ddim_schedule(0), InvalidArgument);
  CHECK_THROWS_AS(make_cosine_ddim_schedule(10, 1.0), InvalidArgument);
}
