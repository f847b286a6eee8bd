#include "zoflow/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace zoflow {

void OptConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("OptConfig: eta must be positive");
  if (max_iters < 1) throw InvalidArgument("OptConfig: max_iters must be >= 1");
  if (!(delta_scale > 0.0) || !std::isfinite(delta_scale)) {
    throw InvalidArgument("OptConfig: delta_scale must be positive");
  }
  if (stop_tol && !(*stop_tol >= 0.0)) throw InvalidArgument("OptConfig: stop_tol must be nonnegative");
}

namespace {

void check_divergence(const OptTrace& tr) {
  const Vec& z = tr.iterates.back();
  const Vec& out = tr.outputs.back();
  const double res = tr.residual_norms.back();
  const double res0 = tr.residual_norms.front();
  const std::size_t i = tr.iterates.size() - 1;
  if (!z.allFinite() || !out.allFinite() || !std::isfinite(res)) {
    throw DivergenceError("non-finite value at iteration " + std::to_string(i), tr);
  }
  if (res0 > 0.0 && res > kDivergenceFactor * res0) {
    throw DivergenceError("residual grew beyond 1e6 x initial at iteration " + std::to_string(i), tr);
  }
}

template <class Gradient>
OptTrace zero_order_loop(const BlackBoxFlow& flow, const Vec& y, const OptConfig& cfg, const Vec& z_init,
                         Gradient&& gradient) {
  cfg.validate();
  require_dim(y, flow.dim(), "target");
  require_dim(z_init, flow.dim(), "initial iterate");

  const double step = cfg.eta * cfg.delta_scale;
  OptTrace tr;
  tr.iterates.reserve(cfg.max_iters + 1);
  tr.outputs.reserve(cfg.max_iters + 1);
  tr.residual_norms.reserve(cfg.max_iters + 1);

  Vec z = z_init;
  for (std::size_t i = 0;; ++i) {
    Vec out = flow(z);
    tr.nfe_total += flow.num_steps();
    tr.residual_norms.push_back((out - y).norm());
    tr.iterates.push_back(z);
    tr.outputs.push_back(std::move(out));
    check_divergence(tr);

    if (i == cfg.max_iters) break;
    if (cfg.stop_tol && tr.residual_norms.back() <= *cfg.stop_tol) {
      tr.stopped_early_at = i;
      break;
    }
    z = z - step * gradient(tr.outputs.back(), y);
  }
  return tr;
}

}  // namespace

OptTrace flowopt_run(const BlackBoxFlow& flow, const Vec& y, const OptConfig& cfg, const Vec& z_init) {
  return zero_order_loop(flow, y, cfg, z_init, [](const Vec& out, const Vec& target) { return Vec(out - target); });
}

OptTrace flowopt_general(const BlackBoxFlow& flow, const Vec& y, const OptConfig& cfg, const Vec& z_init,
                         const LossSpec& loss) {
  return zero_order_loop(flow, y, cfg, z_init,
                         [&loss](const Vec& out, const Vec& target) { return loss.gradient(out, target); });
}

double stopgrad_equivalence_check(const BlackBoxFlow& flow, const Vec& z, const Vec& y) {
  require_dim(y, flow.dim(), "target");
  const FlowRun run = run_flow(flow, z);

  auto frozen = [&](Vec u) {
    for (std::size_t k = 0; k < flow.num_steps(); ++k) {
      const ChainStep& st = flow.step_info(k);
      u = st.state_coef * u + st.output_coef * run.outputs[k];
    }
    return u;
  };
  auto loss = [&](const Vec& u) { return 0.5 * (frozen(u) - y).squaredNorm(); };

  const double h = 1e-4 * (1.0 + z.cwiseAbs().maxCoeff());
  const Vec expected = flow.stopgrad_scale() * (run.z_final - y);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Vec up = z, down = z;
    up[i] += h;
    down[i] -= h;
    const double fd = (loss(up) - loss(down)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - expected[i]));
  }
  return worst;
}

Selection early_stop_select(const OptTrace& trace, const StopCriterion& criterion) {
  if (trace.empty()) throw InvalidArgument("early_stop_select: empty trace");
  const std::size_t last = trace.iterates.size() - 1;
  std::size_t pick = last;
  if (const auto* thr = std::get_if<ResidualThreshold>(&criterion)) {
    for (std::size_t i = 0; i <= last; ++i) {
      if (trace.residual_norms[i] <= thr->value) {
        pick = i;
        break;
      }
    }
  } else {
    pick = std::min(std::get<IterationIndex>(criterion).value, last);
  }
  return {pick, trace.iterates[pick], trace.outputs[pick]};
}

}  // namespace zoflow
