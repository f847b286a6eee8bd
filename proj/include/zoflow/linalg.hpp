#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string_view>

#include "zoflow/errors.hpp"

namespace zoflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double rmse(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::sqrt(static_cast<double>(a.size()));
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void require_dim(const Vec& v, Eigen::Index dim, std::string_view what) {
  if (v.size() != dim) {
    throw InvalidArgument(std::string(what) + ": expected dimension " + std::to_string(dim) +
                          ", got " + std::to_string(v.size()));
  }
}

}  // namespace zoflow
