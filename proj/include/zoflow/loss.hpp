#pragma once

#include <string_view>

#include "zoflow/linalg.hpp"

namespace zoflow {

enum class LossKind { kSquaredL2, kWeightedSquaredL2, kHuber };

/// Loss on the sampler output. Only the gradient with respect to the
/// output is used by the zero-order update; the Jacobian of f never is.
class LossSpec {
 public:
  static LossSpec squared_l2();
  static LossSpec weighted_squared_l2(Vec weights);
  static LossSpec huber(double threshold);

  LossKind kind() const { return kind_; }
  double value(const Vec& out, const Vec& target) const;
  Vec gradient(const Vec& out, const Vec& target) const;

 private:
  LossSpec(LossKind kind, Vec weights, double threshold)
      : kind_(kind), weights_(std::move(weights)), threshold_(threshold) {}

  LossKind kind_;
  Vec weights_;
  double threshold_ = 0.0;
};

LossSpec parse_loss(std::string_view name, Eigen::Index dim);

}  // namespace zoflow
