#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zoflow/errors.hpp"
#include "zoflow/flow.hpp"

namespace zoflow {

struct PairwiseResult {
  double ratio;   // <u1-u2, f(u1)-f(u2)> / ||f(u1)-f(u2)||^2
  double cosine;  // <u1-u2, f(u1)-f(u2)> / (||u1-u2|| ||f(u1)-f(u2)||)
};

inline constexpr double kDegeneratePairThreshold = 1e-12;
inline constexpr std::size_t kMaxDegenerateRetries = 100;

/// Evaluates f at both points (2 * num_steps NFEs). Throws DegeneratePair
/// when ||f(u1) - f(u2)|| < 1e-12, InvalidArgument when u1 == u2.
PairwiseResult pairwise_ratio(const BlackBoxFlow& flow, const Vec& u1, const Vec& u2);

/// One Monte-Carlo draw u2 = sqrt(alpha) u1 + sqrt(1 - alpha) eps.
struct PairSample {
  Vec u1;
  Vec u2;
  Vec eps;
  double alpha = 0.0;
  double ratio = 0.0;
  double cosine = 0.0;
  std::size_t condition_index = 0;
};

struct BoundConfig {
  std::size_t num_realizations = 2000;
  std::vector<double> alpha_grid{0.0, 0.5, 0.9, 0.99, 0.999, 0.9999};
  std::uint64_t seed = 0;
  double safety_factor = 0.9;
  /// Cycled over realizations; empty means the flow's own condition.
  std::vector<Condition> conditions;
  std::size_t jobs = 1;
  bool keep_samples = false;
};

struct AlphaMin {
  double alpha;
  double min_ratio;
};

struct BoundEstimate {
  std::vector<AlphaMin> per_alpha_min;  // in alpha_grid order
  double global_min = 0.0;              // min ratio over all pairs
  double bound = 0.0;                   // 2 * global_min: eta must stay below this
  double suggested_eta = 0.0;           // safety_factor * bound
  double beta_min = 0.0;                // min cosine
  double max_ratio = 0.0;               // sup of the sampled ratios
  std::size_t num_realizations = 0;
  std::uint64_t seed = 0;
  std::size_t degenerate_resamples = 0;
  std::uint64_t nfe = 0;
  std::vector<PairSample> samples;      // only with keep_samples
};

/// The positivity assumption failed; the estimate is kept for diagnostics
/// but carries no suggested step size.
class BoundAssumptionError : public AssumptionViolated {
 public:
  BoundAssumptionError(const std::string& what, BoundEstimate estimate)
      : AssumptionViolated(what), estimate_(std::move(estimate)) {}
  const BoundEstimate& estimate() const { return estimate_; }

 private:
  BoundEstimate estimate_;
};

/// Deterministic given (flow, config): the draw for (alpha index i,
/// realization r) comes from its own sub-stream of the seed, and minima are
/// reduced in index order regardless of the number of jobs.
BoundEstimate estimate_bound_mc(const BlackBoxFlow& flow, const BoundConfig& cfg);

/// 2 / lambda_max(M) for symmetric positive definite M, the exact value of
/// 2 inf <u, Mu> / ||Mu||^2 over directions u.
double affine_bound_exact(const Mat& M);

struct ProofInterval {
  double eta1_bar;
  double eta2_bar;
};

/// Conservative interval (eta1_bar, eta2_bar) guaranteeing contraction
/// factor sqrt(1 - kappa):
///   eta2_bar = inf_ratio * (1 + sqrt(1 - kappa / beta^2))
///   eta1_bar = sup_ratio * (1 - sqrt(1 - kappa / beta^2))
ProofInterval proof_interval(const BoundEstimate& estimate, double kappa);
ProofInterval proof_interval(std::span<const PairSample> samples, double kappa);
ProofInterval proof_interval(double inf_ratio, double sup_ratio, double beta, double kappa);

}  // namespace zoflow
