#pragma once

#include <vector>

#include "zoflow/linalg.hpp"
#include "zoflow/rng.hpp"

namespace zoflow {

/// Gaussian mixture sum_k w_k N(mu_k, Sigma_k) with each covariance stored
/// in eigen-form, so that the noisy marginals a*x0 + b*eps can be handled
/// without refactorizing on every query.
class GaussianMixture {
 public:
  /// Throws InvalidArgument on non-positive or non-normalized weights,
  /// dimension mismatches, or covariances that are not symmetric positive
  /// definite.
  GaussianMixture(std::vector<double> weights, std::vector<Vec> means, std::vector<Mat> covariances);

  Eigen::Index dim() const { return dim_; }
  std::size_t num_components() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Vec>& means() const { return means_; }
  const std::vector<Mat>& covariances() const { return covariances_; }

  Vec mean() const;
  Mat covariance() const;
  double log_density(const Vec& x) const;
  Vec sample(Rng& rng) const;

  /// Posterior expectations for z = a*x0 + b*eps, x0 ~ mixture, eps ~ N(0, I).
  struct Posterior {
    Vec x0;
    Vec eps;
  };
  Posterior posterior(const Vec& z, double a, double b) const;

 private:
  struct Component {
    Mat basis;   // eigenvectors of Sigma_k
    Vec eigval;  // eigenvalues of Sigma_k
  };

  Eigen::Index dim_;
  std::vector<double> weights_;
  std::vector<Vec> means_;
  std::vector<Mat> covariances_;
  std::vector<Component> eig_;
};

}  // namespace zoflow
