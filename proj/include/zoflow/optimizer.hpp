#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "zoflow/flow.hpp"
#include "zoflow/loss.hpp"

namespace zoflow {

struct OptConfig {
  double eta = 0.0;
  std::size_t max_iters = 1;
  std::optional<double> stop_tol;  // disabled by default: all max_iters run
  double delta_scale = 1.0;        // 1/sqrt(alpha_T) for DDIM chains

  void validate() const;
};

/// Every iterate, its sampled output and residual. Entry i holds z^(i),
/// f(z^(i)) and ||f(z^(i)) - y||; the last entry is the final sample.
struct OptTrace {
  std::vector<Vec> iterates;
  std::vector<Vec> outputs;
  std::vector<double> residual_norms;
  std::uint64_t nfe_total = 0;
  std::optional<std::size_t> stopped_early_at;

  std::size_t iterations_run() const { return iterates.empty() ? 0 : iterates.size() - 1; }
  bool empty() const { return iterates.empty(); }
};

/// Thrown when an iterate or output becomes non-finite, or the residual
/// exceeds 1e6 times the initial residual. Carries everything up to and
/// including the offending entry.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, OptTrace partial)
      : std::runtime_error(what), trace_(std::move(partial)) {}
  const OptTrace& trace() const { return trace_; }

 private:
  OptTrace trace_;
};

inline constexpr double kDivergenceFactor = 1e6;

/// Zero-order fixed-point iterations z <- z - eta * delta_scale * (f(z) - y).
OptTrace flowopt_run(const BlackBoxFlow& flow, const Vec& y, const OptConfig& cfg, const Vec& z_init);

/// Same loop with the residual replaced by the loss gradient at f(z).
OptTrace flowopt_general(const BlackBoxFlow& flow, const Vec& y, const OptConfig& cfg, const Vec& z_init,
                         const LossSpec& loss);

/// Central finite-difference gradient of 1/2 ||F(z) - y||^2, where F replays
/// the chain with every backend output frozen at its forward value, compared
/// against stopgrad_scale * (f(z) - y). Returns the max absolute deviation.
double stopgrad_equivalence_check(const BlackBoxFlow& flow, const Vec& z, const Vec& y);

struct ResidualThreshold {
  double value;
};
struct IterationIndex {
  std::size_t value;
};
using StopCriterion = std::variant<ResidualThreshold, IterationIndex>;

struct Selection {
  std::size_t index;
  Vec iterate;
  Vec output;
};

/// First entry meeting the criterion, else the last entry.
Selection early_stop_select(const OptTrace& trace, const StopCriterion& criterion);

}  // namespace zoflow
