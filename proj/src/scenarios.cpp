#include "zoflow/scenarios.hpp"

#include "zoflow/rng.hpp"

namespace zoflow {
namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Mat m2(double a, double b, double c) { return (Mat(2, 2) << a, b, b, c).finished(); }

}  // namespace

GaussianMixture bundled_source_mixture() {
  return GaussianMixture({0.35, 0.35, 0.3}, {v2(-1.5, 0.5), v2(1.5, 0.8), v2(0.0, -1.5)},
                         {m2(0.35, 0.0, 0.35), m2(0.4, 0.1, 0.3), m2(0.3, 0.0, 0.3)});
}

GaussianMixture bundled_target_mixture() {
  return GaussianMixture({0.35, 0.35, 0.3}, {v2(-1.2, 2.0), v2(2.0, -0.2), v2(0.0, -1.5)},
                         {m2(0.35, 0.0, 0.35), m2(0.3, -0.05, 0.4), m2(0.3, 0.0, 0.3)});
}

AffineField random_symmetric_affine(Eigen::Index dim, double a_lo, double a_hi, std::uint64_t seed) {
  if (dim < 1) throw InvalidArgument("random_symmetric_affine: dim must be positive");
  Rng rng = make_rng(seed, Stream::kAux);
  Mat g(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) g.col(j) = standard_normal(rng, dim);
  const Mat q = Eigen::HouseholderQR<Mat>(g).householderQ();
  Vec a(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    a[i] = dim == 1 ? a_lo : a_lo + (a_hi - a_lo) * static_cast<double>(i) / static_cast<double>(dim - 1);
  }
  Mat A = q * a.asDiagonal() * q.transpose();
  A = 0.5 * (A + A.transpose());
  return {A, Vec::Zero(dim)};
}

}  // namespace zoflow
