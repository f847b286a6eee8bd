#pragma once

#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>

#include "zoflow/backend.hpp"
#include "zoflow/flow.hpp"
#include "zoflow/rng.hpp"
#include "zoflow/scenarios.hpp"

namespace zt {

using zoflow::Mat;
using zoflow::Vec;

inline std::string source_path(const std::string& rel) { return std::string(ZOFLOW_SOURCE_DIR) + "/" + rel; }

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

/// f(u) = (1 + a*dt)^T u on a uniform Euler schedule.
inline zoflow::BlackBoxFlow affine_flow(const Mat& A, std::size_t steps, double t_start = 1.0) {
  const auto dim = A.rows();
  return zoflow::BlackBoxFlow(zoflow::make_backend(zoflow::BackendKind::kAffine, dim),
                              zoflow::make_uniform_schedule(steps, t_start),
                              zoflow::make_affine_condition("affine", A, Vec::Zero(dim)));
}

inline zoflow::BlackBoxFlow scalar_flow(double a, std::size_t steps) {
  return affine_flow(Mat::Constant(1, 1, a), steps);
}

inline zoflow::BlackBoxFlow identity_flow(Eigen::Index dim, std::size_t steps = 10) {
  return affine_flow(Mat::Zero(dim, dim), steps);
}

inline zoflow::BlackBoxFlow mixture_flow(const zoflow::GaussianMixture& g, std::size_t steps, std::string tag = "src") {
  return zoflow::BlackBoxFlow(zoflow::make_backend(zoflow::BackendKind::kGaussianMixture, g.dim()),
                              zoflow::make_uniform_schedule(steps), zoflow::make_mixture_condition(tag, g));
}

inline zoflow::BlackBoxFlow bundled_flow(std::size_t steps = 10) {
  return mixture_flow(zoflow::bundled_source_mixture(), steps);
}

/// Noise predictor that always returns zero. Accepts any condition.
class ZeroNoiseBackend final : public zoflow::VelocityBackend {
 public:
  using VelocityBackend::VelocityBackend;
  zoflow::BackendKind kind() const override { return zoflow::BackendKind::kDdimNoisePred; }

 protected:
  Vec evaluate_unchecked(const Vec& z, double, const zoflow::Condition&) const override {
    return Vec::Zero(z.size());
  }
  bool accepts(const zoflow::Condition&) const override { return true; }
};

inline double max_abs(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace zt
