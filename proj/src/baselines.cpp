#include "zoflow/baselines.hpp"

#include <cmath>
#include <string>

namespace zoflow {

Vec invert_fixed_point(const BlackBoxFlow& flow, const Vec& z0, const FixedPointInversionConfig& cfg) {
  if (cfg.refine_iters < 1) throw InvalidArgument("invert_fixed_point: refine_iters must be >= 1");
  require_dim(z0, flow.dim(), "invert_fixed_point input");
  Vec lo = z0;
  for (std::size_t k = flow.num_steps(); k-- > 0;) {
    const ChainStep& st = flow.step_info(k);
    const Vec g0 = flow.evaluate(lo, st.inverse_eval_at);
    Vec hi = (lo - st.output_coef * g0) / st.state_coef;
    for (std::size_t j = 1; j < cfg.refine_iters; ++j) {
      const Vec g = flow.evaluate(hi, st.eval_at);
      hi = (lo - st.output_coef * g) / st.state_coef;
    }
    lo = std::move(hi);
  }
  return lo;
}

void JacobianGDConfig::validate() const {
  if (!(eta > 0.0)) throw InvalidArgument("JacobianGDConfig: eta must be positive");
  if (max_iters < 1) throw InvalidArgument("JacobianGDConfig: max_iters must be >= 1");
  if (!(fd_step > 0.0)) throw InvalidArgument("JacobianGDConfig: fd_step must be positive");
}

OptTrace jacobian_gd(const BlackBoxFlow& flow, const Vec& y, const JacobianGDConfig& cfg, const Vec& z_init) {
  cfg.validate();
  if (flow.dim() > kJacobianGDMaxDim) {
    throw InvalidArgument("jacobian_gd: dimension " + std::to_string(flow.dim()) + " exceeds the cap of 8");
  }
  require_dim(y, flow.dim(), "target");
  require_dim(z_init, flow.dim(), "initial iterate");

  auto loss = [&](const Vec& z) { return 0.5 * (flow(z) - y).squaredNorm(); };

  OptTrace tr;
  Vec z = z_init;
  const std::uint64_t per_pass = flow.num_steps();
  for (std::size_t i = 0;; ++i) {
    Vec out = flow(z);
    tr.nfe_total += per_pass;
    tr.residual_norms.push_back((out - y).norm());
    tr.iterates.push_back(z);
    tr.outputs.push_back(std::move(out));

    const double res = tr.residual_norms.back();
    if (!z.allFinite() || !std::isfinite(res) ||
        (tr.residual_norms.front() > 0.0 && res > kDivergenceFactor * tr.residual_norms.front())) {
      throw DivergenceError("jacobian_gd diverged at iteration " + std::to_string(i), tr);
    }
    if (i == cfg.max_iters) break;

    Vec grad(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      Vec up = z, down = z;
      up[j] += cfg.fd_step;
      down[j] -= cfg.fd_step;
      grad[j] = (loss(up) - loss(down)) / (2.0 * cfg.fd_step);
    }
    tr.nfe_total += 2 * static_cast<std::uint64_t>(z.size()) * per_pass;
    z = z - cfg.eta * grad;
  }
  return tr;
}

}  // namespace zoflow
