#pragma once

#include <cstddef>

#include "zoflow/optimizer.hpp"

namespace zoflow {

struct FixedPointInversionConfig {
  std::size_t refine_iters = 1;  // backend evaluations per inverted step, warm start included
};

/// Per-step inversion that solves z_hi = (z_lo - c * g(z_hi)) / a by
/// fixed-point iteration, warm-started from the naive estimate. With
/// refine_iters = 1 this is exactly invert_naive. NFE = num_steps * refine_iters.
Vec invert_fixed_point(const BlackBoxFlow& flow, const Vec& z0, const FixedPointInversionConfig& cfg);

struct JacobianGDConfig {
  double eta = 0.0;
  std::size_t max_iters = 1;
  double fd_step = 1e-5;

  void validate() const;
};

inline constexpr Eigen::Index kJacobianGDMaxDim = 8;

/// Gradient descent on 1/2 ||f(z) - y||^2 with the gradient taken by
/// central differences through the whole chain: (2d + 1) passes per
/// iteration. Restricted to d <= 8.
OptTrace jacobian_gd(const BlackBoxFlow& flow, const Vec& y, const JacobianGDConfig& cfg, const Vec& z_init);

}  // namespace zoflow
