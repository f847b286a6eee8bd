#pragma once

#include <cstdint>

#include "zoflow/backend.hpp"
#include "zoflow/mixture.hpp"

namespace zoflow {

/// The default two-dimensional editing pair: two three-component mixtures
/// that share one component. configs/mixture_*.json carry the same values.
GaussianMixture bundled_source_mixture();
GaussianMixture bundled_target_mixture();

/// Symmetric affine field A = Q diag(a) Q^T with a spaced evenly in
/// [a_lo, a_hi] and Q a seeded random rotation. On an Euler schedule with
/// 1 + a*delta_t > 0 the effective map is symmetric positive definite.
AffineField random_symmetric_affine(Eigen::Index dim, double a_lo, double a_hi, std::uint64_t seed);

}  // namespace zoflow
