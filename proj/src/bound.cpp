#include "zoflow/bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "zoflow/parallel.hpp"
#include "zoflow/rng.hpp"

namespace zoflow {

PairwiseResult pairwise_ratio(const BlackBoxFlow& flow, const Vec& u1, const Vec& u2) {
  require_dim(u1, flow.dim(), "pairwise_ratio u1");
  require_dim(u2, flow.dim(), "pairwise_ratio u2");
  const Vec du = u1 - u2;
  const double du_norm = du.norm();
  if (du_norm == 0.0) throw InvalidArgument("pairwise_ratio: u1 and u2 coincide");
  const Vec df = flow(u1) - flow(u2);
  const double df_norm = df.norm();
  if (!(df_norm >= kDegeneratePairThreshold)) {
    throw DegeneratePair("pairwise_ratio: ||f(u1) - f(u2)|| below threshold");
  }
  const double inner = du.dot(df);
  return {inner / (df_norm * df_norm), inner / (du_norm * df_norm)};
}

namespace {

struct Draw {
  PairSample sample;
  std::size_t retries = 0;
};

Draw draw_pair(const BlackBoxFlow& flow, double alpha, std::size_t alpha_index, std::size_t realization,
               std::uint64_t seed, std::size_t condition_index) {
  Rng rng = make_rng(seed, Stream::kMonteCarlo, {alpha_index, realization});
  const double a = std::sqrt(alpha);
  const double b = std::sqrt(1.0 - alpha);
  for (std::size_t attempt = 0; attempt <= kMaxDegenerateRetries; ++attempt) {
    Vec u1 = standard_normal(rng, flow.dim());
    Vec eps = standard_normal(rng, flow.dim());
    Vec u2 = a * u1 + b * eps;
    if (u1 == u2) continue;
    try {
      const auto pr = pairwise_ratio(flow, u1, u2);
      return {PairSample{std::move(u1), std::move(u2), std::move(eps), alpha, pr.ratio, pr.cosine,
                         condition_index},
              attempt};
    } catch (const DegeneratePair&) {
    }
  }
  throw DegeneratePair("estimate_bound_mc: more than 100 degenerate draws at alpha = " +
                       std::to_string(alpha));
}

}  // namespace

BoundEstimate estimate_bound_mc(const BlackBoxFlow& flow, const BoundConfig& cfg) {
  if (cfg.num_realizations < 1) throw InvalidArgument("estimate_bound_mc: need at least one realization");
  if (cfg.alpha_grid.empty()) throw InvalidArgument("estimate_bound_mc: empty alpha grid");
  for (double a : cfg.alpha_grid) {
    if (!(a >= 0.0 && a < 1.0)) throw InvalidArgument("estimate_bound_mc: alpha values must lie in [0, 1)");
  }
  if (!(cfg.safety_factor > 0.0 && cfg.safety_factor < 1.0)) {
    throw InvalidArgument("estimate_bound_mc: safety factor must lie in (0, 1)");
  }

  std::vector<BlackBoxFlow> flows;
  if (cfg.conditions.empty()) {
    flows.push_back(flow.with_condition(flow.condition()));
  } else {
    for (const auto& c : cfg.conditions) flows.push_back(flow.with_condition(c));
  }

  const std::size_t n_alpha = cfg.alpha_grid.size();
  const std::size_t n_real = cfg.num_realizations;
  const std::size_t total = n_alpha * n_real;
  std::vector<Draw> draws(total);

  parallel_for(total, cfg.jobs, [&](std::size_t idx) {
    const std::size_t ai = idx / n_real;
    const std::size_t r = idx % n_real;
    const std::size_t ci = r % flows.size();
    draws[idx] = draw_pair(flows[ci], cfg.alpha_grid[ai], ai, r, cfg.seed, ci);
  });

  BoundEstimate est;
  est.num_realizations = n_real;
  est.seed = cfg.seed;
  est.global_min = std::numeric_limits<double>::infinity();
  est.beta_min = std::numeric_limits<double>::infinity();
  est.max_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t ai = 0; ai < n_alpha; ++ai) {
    double amin = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < n_real; ++r) {
      const Draw& d = draws[ai * n_real + r];
      amin = std::min(amin, d.sample.ratio);
      est.beta_min = std::min(est.beta_min, d.sample.cosine);
      est.max_ratio = std::max(est.max_ratio, d.sample.ratio);
      est.degenerate_resamples += d.retries;
    }
    est.per_alpha_min.push_back({cfg.alpha_grid[ai], amin});
    est.global_min = std::min(est.global_min, amin);
  }
  for (const auto& f : flows) est.nfe += f.nfe();
  if (cfg.keep_samples) {
    est.samples.reserve(total);
    for (auto& d : draws) est.samples.push_back(std::move(d.sample));
  }
  est.bound = 2.0 * est.global_min;

  if (!(est.beta_min > 0.0)) {
    throw BoundAssumptionError("minimum pairwise cosine " + std::to_string(est.beta_min) +
                                   " is not positive; the step-size bound does not apply",
                               std::move(est));
  }
  est.suggested_eta = cfg.safety_factor * est.bound;
  return est;
}

double affine_bound_exact(const Mat& M) {
  if (M.rows() != M.cols() || M.rows() == 0) throw InvalidArgument("affine_bound_exact: M must be square");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("affine_bound_exact: M is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0)) {
    throw InvalidArgument("affine_bound_exact: M is not positive definite");
  }
  return 2.0 / es.eigenvalues().maxCoeff();
}

ProofInterval proof_interval(double inf_ratio, double sup_ratio, double beta, double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw InvalidArgument("proof_interval: kappa must lie in (0, 1]");
  if (!(beta > 0.0)) throw AssumptionViolated("proof_interval: beta must be positive");
  const double q = kappa / (beta * beta);
  if (q > 1.0) throw InvalidArgument("proof_interval: kappa / beta^2 exceeds 1");
  const double root = std::sqrt(1.0 - q);
  return {sup_ratio * (1.0 - root), inf_ratio * (1.0 + root)};
}

ProofInterval proof_interval(const BoundEstimate& estimate, double kappa) {
  return proof_interval(estimate.global_min, estimate.max_ratio, estimate.beta_min, kappa);
}

ProofInterval proof_interval(std::span<const PairSample> samples, double kappa) {
  if (samples.empty()) throw InvalidArgument("proof_interval: no samples");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double beta = lo;
  for (const auto& s : samples) {
    lo = std::min(lo, s.ratio);
    hi = std::max(hi, s.ratio);
    beta = std::min(beta, s.cosine);
  }
  return proof_interval(lo, hi, beta, kappa);
}

}  // namespace zoflow
