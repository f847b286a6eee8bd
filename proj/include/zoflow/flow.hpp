#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "zoflow/backend.hpp"
#include "zoflow/schedule.hpp"

namespace zoflow {

/// Every step of a sampling chain has the form
///   z_next = state_coef * z + output_coef * g(z, eval_at)
/// where g is the backend output (velocity or noise prediction). Euler flow
/// steps have state_coef = 1 and output_coef = delta_t.
struct ChainStep {
  double state_coef;
  double output_coef;
  double eval_at;          // time (flow) or alpha_bar (DDIM) of the forward evaluation
  double inverse_eval_at;  // where naive inversion evaluates g at the step's output state
};

struct FlowRun {
  Vec z_final;
  std::vector<Vec> trajectory;  // num_steps + 1 states
  std::vector<Vec> outputs;     // backend output used at each step
};

/// The unrolled sampler z_0 = f(z_start, c) as a black box that counts its
/// backend evaluations. Evaluation is const and thread-safe; the NFE
/// counter is atomic. Copies start from the source's count but are
/// otherwise independent.
class BlackBoxFlow {
 public:
  using Schedule = std::variant<FlowSchedule, DdimSchedule>;

  BlackBoxFlow(std::shared_ptr<const VelocityBackend> backend, FlowSchedule schedule, Condition condition);
  BlackBoxFlow(std::shared_ptr<const VelocityBackend> backend, DdimSchedule schedule, Condition condition);

  BlackBoxFlow(const BlackBoxFlow& other);
  BlackBoxFlow& operator=(const BlackBoxFlow& other);

  Eigen::Index dim() const { return backend_->dim(); }
  std::size_t num_steps() const { return steps_.size(); }
  bool is_ddim() const { return std::holds_alternative<DdimSchedule>(schedule_); }

  const VelocityBackend& backend() const { return *backend_; }
  std::shared_ptr<const VelocityBackend> backend_ptr() const { return backend_; }
  const Schedule& schedule() const { return schedule_; }
  const Condition& condition() const { return condition_; }
  const ChainStep& step_info(std::size_t k) const { return steps_.at(k); }

  /// Same backend and schedule under another condition, with a zeroed counter.
  BlackBoxFlow with_condition(Condition condition) const;

  /// Backend output at (z, s) under this flow's condition. Counts one NFE.
  Vec evaluate(const Vec& z, double s) const;

  /// Chain step k (0-based from the start of the chain). Counts one NFE.
  Vec step(std::size_t k, const Vec& z) const;

  /// f(z). Counts num_steps NFEs.
  Vec operator()(const Vec& z) const;

  /// Product of the state coefficients: 1 for flows, 1/sqrt(alpha_T) for DDIM.
  double stopgrad_scale() const;

  std::uint64_t nfe() const { return nfe_.load(std::memory_order_relaxed); }
  void reset_nfe() const { nfe_.store(0, std::memory_order_relaxed); }

 private:
  void validate_condition() const;

  std::shared_ptr<const VelocityBackend> backend_;
  Schedule schedule_;
  Condition condition_;
  std::vector<ChainStep> steps_;
  mutable std::atomic<std::uint64_t> nfe_{0};
};

/// Forward pass with the full trajectory.
FlowRun run_flow(const BlackBoxFlow& flow, const Vec& z_start);

/// Runs the chain backwards with each step's output evaluated at the
/// current (lower-noise) state. Exact for the zero field. Counts num_steps NFEs.
Vec invert_naive(const BlackBoxFlow& flow, const Vec& z0);

/// For an affine field on an Euler schedule, f(u) = M u + offset.
struct AffineMap {
  Mat M;
  Vec offset;
};
AffineMap affine_flow_map(const AffineField& field, const FlowSchedule& schedule);

}  // namespace zoflow
