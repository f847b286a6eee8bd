#include "zoflow/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace zoflow {

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Vec> means,
                                 std::vector<Mat> covariances)
    : weights_(std::move(weights)), means_(std::move(means)), covariances_(std::move(covariances)) {
  if (weights_.empty()) throw InvalidArgument("GaussianMixture: no components");
  if (means_.size() != weights_.size() || covariances_.size() != weights_.size()) {
    throw InvalidArgument("GaussianMixture: weights, means and covariances differ in length");
  }
  dim_ = means_.front().size();
  if (dim_ < 1) throw InvalidArgument("GaussianMixture: zero-dimensional means");

  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw InvalidArgument("GaussianMixture: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("GaussianMixture: weights sum to " + std::to_string(total) + ", not 1");
  }

  eig_.reserve(weights_.size());
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    const Mat& cov = covariances_[k];
    require_dim(means_[k], dim_, "GaussianMixture mean");
    if (cov.rows() != dim_ || cov.cols() != dim_) {
      throw InvalidArgument("GaussianMixture: covariance " + std::to_string(k) + " has wrong shape");
    }
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw InvalidArgument("GaussianMixture: covariance " + std::to_string(k) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0)) {
      throw InvalidArgument("GaussianMixture: covariance " + std::to_string(k) +
                            " is not positive definite");
    }
    eig_.push_back({es.eigenvectors(), es.eigenvalues()});
  }
}

Vec GaussianMixture::mean() const {
  Vec m = Vec::Zero(dim_);
  for (std::size_t k = 0; k < weights_.size(); ++k) m += weights_[k] * means_[k];
  return m;
}

Mat GaussianMixture::covariance() const {
  const Vec m = mean();
  Mat c = Mat::Zero(dim_, dim_);
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    const Vec dm = means_[k] - m;
    c += weights_[k] * (covariances_[k] + dm * dm.transpose());
  }
  return c;
}

double GaussianMixture::log_density(const Vec& x) const {
  require_dim(x, dim_, "GaussianMixture::log_density");
  const double log2pi = std::log(2.0 * std::numbers::pi);
  std::vector<double> terms(weights_.size());
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    const Vec w = eig_[k].basis.transpose() * (x - means_[k]);
    const double quad = (w.array().square() / eig_[k].eigval.array()).sum();
    const double logdet = eig_[k].eigval.array().log().sum();
    terms[k] = std::log(weights_[k]) - 0.5 * (quad + logdet + static_cast<double>(dim_) * log2pi);
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - mx);
  return mx + std::log(acc);
}

Vec GaussianMixture::sample(Rng& rng) const {
  std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
  const std::size_t k = pick(rng);
  const Vec e = standard_normal(rng, dim_);
  return means_[k] + eig_[k].basis * (eig_[k].eigval.array().sqrt() * e.array()).matrix();
}

GaussianMixture::Posterior GaussianMixture::posterior(const Vec& z, double a, double b) const {
  require_dim(z, dim_, "GaussianMixture::posterior");
  const std::size_t n = weights_.size();
  std::vector<double> log_resp(n);
  std::vector<Vec> x0_k(n), eps_k(n);

  // Component k: z ~ N(a mu_k, a^2 Sigma_k + b^2 I), diagonal in Sigma_k's eigenbasis.
  for (std::size_t k = 0; k < n; ++k) {
    const Component& c = eig_[k];
    const Vec s = (a * a) * c.eigval.array() + b * b;
    const Vec w = c.basis.transpose() * (z - a * means_[k]);
    const Vec w_over_s = w.array() / s.array();
    const double quad = w.dot(w_over_s);
    log_resp[k] = std::log(weights_[k]) - 0.5 * (quad + s.array().log().sum());
    eps_k[k] = b * (c.basis * w_over_s);
    x0_k[k] = means_[k] + a * (c.basis * (c.eigval.array() * w_over_s.array()).matrix());
  }

  const double mx = *std::max_element(log_resp.begin(), log_resp.end());
  double norm = 0.0;
  for (double& l : log_resp) {
    l = std::exp(l - mx);
    norm += l;
  }
  Posterior out{Vec::Zero(dim_), Vec::Zero(dim_)};
  for (std::size_t k = 0; k < n; ++k) {
    const double r = log_resp[k] / norm;
    out.x0 += r * x0_k[k];
    out.eps += r * eps_k[k];
  }
  return out;
}

}  // namespace zoflow
