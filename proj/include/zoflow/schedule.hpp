#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace zoflow {

/// Uniform time grid for the discretized flow ODE, running from t_start
/// down to 0. Step k moves from t_grid[k] to t_grid[k + 1].
struct FlowSchedule {
  std::vector<double> t_grid;
  double delta_t = 0.0;  // negative
  std::size_t num_steps = 0;

  double t_start() const { return t_grid.front(); }
};

/// T steps from t_start to 0, delta_t = -t_start / T.
FlowSchedule make_uniform_schedule(std::size_t steps, double t_start = 1.0);

/// The last n_max steps of a total_steps uniform grid on [0, 1]:
/// t_start = n_max / total_steps and delta_t = -1 / total_steps.
FlowSchedule make_truncated_schedule(std::size_t total_steps, std::size_t n_max);

/// Cumulative signal coefficients of a DDIM chain. alpha_bar[0] = 1 is the
/// data end; alpha_bar[T] is the noise end. Values are non-increasing in
/// the index and lie in (0, 1].
class DdimSchedule {
 public:
  explicit DdimSchedule(std::vector<double> alpha_bar);

  /// Skips validation. Only for exercising failure paths.
  static DdimSchedule unchecked(std::vector<double> alpha_bar);

  const std::vector<double>& alpha_bar() const { return alpha_bar_; }
  std::size_t num_steps() const { return alpha_bar_.size() - 1; }
  double alpha(std::size_t index) const { return alpha_bar_.at(index); }

 private:
  struct NoCheck {};
  DdimSchedule(std::vector<double> alpha_bar, NoCheck) : alpha_bar_(std::move(alpha_bar)) {}
  std::vector<double> alpha_bar_;
};

/// alpha_bar[i] = cos^2(theta_i) with theta linear in i, pinned so that
/// alpha_bar[0] = 1 and alpha_bar[T] = alpha_min.
DdimSchedule make_cosine_ddim_schedule(std::size_t steps, double alpha_min = 1e-4);

/// Coefficients of the rearranged DDIM step for index t in [1, T]:
/// z_{t-1} = state_coef * z_t + noise_coef * eps_hat(z_t).
struct DdimCoefficients {
  double state_coef;
  double noise_coef;
};
DdimCoefficients ddim_coefficients(const DdimSchedule& sched, std::size_t index);

/// Product of the per-step state coefficients. Evaluated both as the
/// explicit product and as 1/sqrt(alpha_bar[T]); throws InvalidArgument if
/// they disagree by more than 1e-12 (relative to max(1, delta)).
double ddim_delta(const DdimSchedule& sched);

/// The explicit product alone, without the consistency check.
double ddim_delta_product(const DdimSchedule& sched);

}  // namespace zoflow
