#include "zoflow/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zoflow/errors.hpp"

namespace zoflow {

FlowSchedule make_uniform_schedule(std::size_t steps, double t_start) {
  if (steps == 0) throw InvalidArgument("make_uniform_schedule: steps must be >= 1");
  if (!(t_start > 0.0 && t_start <= 1.0)) {
    throw InvalidArgument("make_uniform_schedule: t_start must lie in (0, 1]");
  }
  FlowSchedule s;
  s.num_steps = steps;
  s.delta_t = -t_start / static_cast<double>(steps);
  s.t_grid.resize(steps + 1);
  const double n = static_cast<double>(steps);
  for (std::size_t k = 0; k <= steps; ++k) {
    s.t_grid[k] = t_start * (n - static_cast<double>(k)) / n;
  }
  return s;
}

FlowSchedule make_truncated_schedule(std::size_t total_steps, std::size_t n_max) {
  if (total_steps == 0 || n_max == 0 || n_max > total_steps) {
    throw InvalidArgument("make_truncated_schedule: need 1 <= n_max <= total_steps");
  }
  FlowSchedule s;
  s.num_steps = n_max;
  const double total = static_cast<double>(total_steps);
  s.delta_t = -1.0 / total;
  s.t_grid.resize(n_max + 1);
  for (std::size_t k = 0; k <= n_max; ++k) {
    s.t_grid[k] = static_cast<double>(n_max - k) / total;
  }
  return s;
}

DdimSchedule::DdimSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
  if (alpha_bar_.size() < 2) throw InvalidArgument("DdimSchedule: need at least two entries");
  if (alpha_bar_.front() != 1.0) throw InvalidArgument("DdimSchedule: alpha_bar[0] must equal 1");
  for (std::size_t i = 0; i < alpha_bar_.size(); ++i) {
    const double a = alpha_bar_[i];
    if (!(a > 0.0 && a <= 1.0)) {
      throw InvalidArgument("DdimSchedule: alpha_bar[" + std::to_string(i) + "] outside (0, 1]");
    }
    if (i > 0 && a > alpha_bar_[i - 1]) {
      throw InvalidArgument("DdimSchedule: alpha_bar must be non-increasing toward the noise end");
    }
  }
}

DdimSchedule DdimSchedule::unchecked(std::vector<double> alpha_bar) {
  return DdimSchedule(std::move(alpha_bar), NoCheck{});
}

DdimSchedule make_cosine_ddim_schedule(std::size_t steps, double alpha_min) {
  if (steps == 0) throw InvalidArgument("make_cosine_ddim_schedule: steps must be >= 1");
  if (!(alpha_min > 0.0 && alpha_min < 1.0)) {
    throw InvalidArgument("make_cosine_ddim_schedule: alpha_min must lie in (0, 1)");
  }
  const double theta_max = std::acos(std::sqrt(alpha_min));
  std::vector<double> a(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double c = std::cos(theta_max * static_cast<double>(i) / static_cast<double>(steps));
    a[i] = c * c;
  }
  a.front() = 1.0;
  a.back() = alpha_min;
  return DdimSchedule(std::move(a));
}

DdimCoefficients ddim_coefficients(const DdimSchedule& sched, std::size_t index) {
  if (index < 1 || index > sched.num_steps()) {
    throw InvalidArgument("ddim step index " + std::to_string(index) + " outside [1, " +
                          std::to_string(sched.num_steps()) + "]");
  }
  const double a_prev = sched.alpha(index - 1);
  const double a_cur = sched.alpha(index);
  const double sqrt_prev = std::sqrt(a_prev);
  const double sqrt_cur = std::sqrt(a_cur);
  return {sqrt_prev / sqrt_cur,
          std::sqrt(1.0 - a_prev) - sqrt_prev * std::sqrt(1.0 - a_cur) / sqrt_cur};
}

double ddim_delta_product(const DdimSchedule& sched) {
  double prod = 1.0;
  const auto& a = sched.alpha_bar();
  for (std::size_t t = 1; t < a.size(); ++t) prod *= std::sqrt(a[t - 1] / a[t]);
  return prod;
}

double ddim_delta(const DdimSchedule& sched) {
  const double prod = ddim_delta_product(sched);
  const double closed = 1.0 / std::sqrt(sched.alpha_bar().back());
  if (!(std::abs(prod - closed) <= 1e-12 * std::max(1.0, closed))) {
    throw InvalidArgument("ddim_delta: telescoped product " + std::to_string(prod) +
                          " disagrees with 1/sqrt(alpha_T) = " + std::to_string(closed));
  }
  return closed;
}

}  // namespace zoflow
