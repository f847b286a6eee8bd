#include "zoflow/loss.hpp"

#include <cmath>
#include <string>

namespace zoflow {

LossSpec LossSpec::squared_l2() { return LossSpec(LossKind::kSquaredL2, Vec(), 0.0); }

LossSpec LossSpec::weighted_squared_l2(Vec weights) {
  if (weights.size() == 0 || !(weights.array() >= 0.0).all() || !weights.allFinite()) {
    throw InvalidArgument("weighted loss: weights must be finite and nonnegative");
  }
  return LossSpec(LossKind::kWeightedSquaredL2, std::move(weights), 0.0);
}

LossSpec LossSpec::huber(double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("huber loss: threshold must be positive");
  return LossSpec(LossKind::kHuber, Vec(), threshold);
}

double LossSpec::value(const Vec& out, const Vec& target) const {
  const Vec r = out - target;
  switch (kind_) {
    case LossKind::kSquaredL2: return 0.5 * r.squaredNorm();
    case LossKind::kWeightedSquaredL2:
      require_dim(r, weights_.size(), "weighted loss residual");
      return 0.5 * (weights_.array() * r.array().square()).sum();
    case LossKind::kHuber: {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double a = std::abs(r[i]);
        acc += a <= threshold_ ? 0.5 * a * a : threshold_ * (a - 0.5 * threshold_);
      }
      return acc;
    }
  }
  return 0.0;
}

Vec LossSpec::gradient(const Vec& out, const Vec& target) const {
  switch (kind_) {
    case LossKind::kSquaredL2: return out - target;
    case LossKind::kWeightedSquaredL2: {
      const Vec r = out - target;
      require_dim(r, weights_.size(), "weighted loss residual");
      return weights_.cwiseProduct(r);
    }
    case LossKind::kHuber: {
      Vec g = out - target;
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (std::abs(g[i]) > threshold_) g[i] = g[i] > 0 ? threshold_ : -threshold_;
      }
      return g;
    }
  }
  return Vec();
}

LossSpec parse_loss(std::string_view name, Eigen::Index dim) {
  if (name == "squared-l2") return LossSpec::squared_l2();
  if (name == "weighted-squared-l2") return LossSpec::weighted_squared_l2(Vec::Ones(dim));
  if (name == "huber") return LossSpec::huber(1.0);
  throw InvalidArgument("unknown loss '" + std::string(name) + "'");
}

}  // namespace zoflow
