#include "zoflow/flow.hpp"

#include <string>

namespace zoflow {
namespace {

std::vector<ChainStep> build_steps(const FlowSchedule& s) {
  std::vector<ChainStep> steps;
  steps.reserve(s.num_steps);
  for (std::size_t k = 0; k < s.num_steps; ++k) {
    steps.push_back({1.0, s.delta_t, s.t_grid[k], s.t_grid[k + 1]});
  }
  return steps;
}

std::vector<ChainStep> build_steps(const DdimSchedule& s) {
  std::vector<ChainStep> steps;
  steps.reserve(s.num_steps());
  for (std::size_t index = s.num_steps(); index >= 1; --index) {
    const auto c = ddim_coefficients(s, index);
    steps.push_back({c.state_coef, c.noise_coef, s.alpha(index), s.alpha(index)});
  }
  return steps;
}

}  // namespace

BlackBoxFlow::BlackBoxFlow(std::shared_ptr<const VelocityBackend> backend, FlowSchedule schedule,
                           Condition condition)
    : backend_(std::move(backend)), schedule_(std::move(schedule)), condition_(std::move(condition)) {
  if (!backend_) throw InvalidArgument("BlackBoxFlow: null backend");
  if (backend_->kind() == BackendKind::kDdimNoisePred) {
    throw InvalidArgument("BlackBoxFlow: a noise-prediction backend needs a DDIM schedule");
  }
  const auto& s = std::get<FlowSchedule>(schedule_);
  if (s.num_steps == 0 || s.t_grid.size() != s.num_steps + 1) {
    throw InvalidArgument("BlackBoxFlow: malformed flow schedule");
  }
  steps_ = build_steps(s);
  validate_condition();
}

BlackBoxFlow::BlackBoxFlow(std::shared_ptr<const VelocityBackend> backend, DdimSchedule schedule,
                           Condition condition)
    : backend_(std::move(backend)), schedule_(std::move(schedule)), condition_(std::move(condition)) {
  if (!backend_) throw InvalidArgument("BlackBoxFlow: null backend");
  if (backend_->kind() != BackendKind::kDdimNoisePred) {
    throw InvalidArgument("BlackBoxFlow: a DDIM schedule needs a noise-prediction backend");
  }
  steps_ = build_steps(std::get<DdimSchedule>(schedule_));
  validate_condition();
}

BlackBoxFlow::BlackBoxFlow(const BlackBoxFlow& other)
    : backend_(other.backend_),
      schedule_(other.schedule_),
      condition_(other.condition_),
      steps_(other.steps_),
      nfe_(other.nfe()) {}

BlackBoxFlow& BlackBoxFlow::operator=(const BlackBoxFlow& other) {
  if (this != &other) {
    backend_ = other.backend_;
    schedule_ = other.schedule_;
    condition_ = other.condition_;
    steps_ = other.steps_;
    nfe_.store(other.nfe(), std::memory_order_relaxed);
  }
  return *this;
}

void BlackBoxFlow::validate_condition() const {
  // A probe evaluation catches payload/backend mismatches at construction.
  backend_->evaluate(Vec::Zero(backend_->dim()), steps_.front().eval_at, condition_);
}

BlackBoxFlow BlackBoxFlow::with_condition(Condition condition) const {
  BlackBoxFlow out(*this);
  out.condition_ = std::move(condition);
  out.validate_condition();
  out.reset_nfe();
  return out;
}

Vec BlackBoxFlow::evaluate(const Vec& z, double s) const {
  nfe_.fetch_add(1, std::memory_order_relaxed);
  return backend_->evaluate(z, s, condition_);
}

Vec BlackBoxFlow::step(std::size_t k, const Vec& z) const {
  nfe_.fetch_add(1, std::memory_order_relaxed);
  if (const auto* fs = std::get_if<FlowSchedule>(&schedule_)) {
    return flow_step(*backend_, z, fs->t_grid.at(k), condition_, fs->delta_t);
  }
  const auto& ds = std::get<DdimSchedule>(schedule_);
  return ddim_step(*backend_, z, ds.num_steps() - k, ds, condition_);
}

Vec BlackBoxFlow::operator()(const Vec& z) const {
  require_dim(z, dim(), "BlackBoxFlow input");
  Vec cur = z;
  for (std::size_t k = 0; k < steps_.size(); ++k) cur = step(k, cur);
  return cur;
}

double BlackBoxFlow::stopgrad_scale() const {
  double s = 1.0;
  for (const auto& st : steps_) s *= st.state_coef;
  return s;
}

FlowRun run_flow(const BlackBoxFlow& flow, const Vec& z_start) {
  require_dim(z_start, flow.dim(), "run_flow start");
  FlowRun run;
  run.trajectory.reserve(flow.num_steps() + 1);
  run.outputs.reserve(flow.num_steps());
  run.trajectory.push_back(z_start);
  Vec cur = z_start;
  for (std::size_t k = 0; k < flow.num_steps(); ++k) {
    const ChainStep& st = flow.step_info(k);
    Vec g = flow.evaluate(cur, st.eval_at);
    // Same arithmetic as BlackBoxFlow::step so both paths agree bit-for-bit.
    if (flow.is_ddim()) {
      cur = st.state_coef * cur + st.output_coef * g;
    } else {
      cur = cur + g * st.output_coef;
    }
    run.outputs.push_back(std::move(g));
    run.trajectory.push_back(cur);
  }
  run.z_final = cur;
  return run;
}

Vec invert_naive(const BlackBoxFlow& flow, const Vec& z0) {
  require_dim(z0, flow.dim(), "invert_naive input");
  Vec cur = z0;
  for (std::size_t k = flow.num_steps(); k-- > 0;) {
    const ChainStep& st = flow.step_info(k);
    const Vec g = flow.evaluate(cur, st.inverse_eval_at);
    cur = (cur - st.output_coef * g) / st.state_coef;
  }
  return cur;
}

AffineMap affine_flow_map(const AffineField& field, const FlowSchedule& schedule) {
  const Eigen::Index d = field.b.size();
  const Mat step = Mat::Identity(d, d) + field.A * schedule.delta_t;
  AffineMap m{Mat::Identity(d, d), Vec::Zero(d)};
  for (std::size_t k = 0; k < schedule.num_steps; ++k) {
    m.M = step * m.M;
    m.offset = step * m.offset + field.b * schedule.delta_t;
  }
  return m;
}

}  // namespace zoflow
