#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zoflow/bound.hpp"
#include "zoflow/codec.hpp"
#include "zoflow/flow.hpp"
#include "zoflow/optimizer.hpp"

namespace zoflow {

enum class Task { kInversion, kDirectEdit, kSweep, kBound };
enum class InitKind { kRandom, kNaiveOde };
enum class Method { kFlowOpt, kNaive, kFixedPoint, kJacobianGD };

std::string_view to_string(Task t);
std::string_view to_string(InitKind k);
std::string_view to_string(Method m);
Task parse_task(std::string_view s);
InitKind parse_init(std::string_view s);
Method parse_method(std::string_view s);

struct CodecSpec {
  Eigen::Index pixel_dim = 0;
  std::uint64_t seed = 0;
  double residual_scale = 0.5;  // size of the off-subspace component of each signal
};

struct ExperimentConfig {
  Task task = Task::kInversion;
  std::vector<Method> methods{Method::kFlowOpt};
  std::vector<double> etas;             // absolute step sizes
  std::vector<double> eta_multipliers;  // relative to the estimated bound; used when etas is empty
  std::vector<std::size_t> iterations{10};
  std::vector<InitKind> inits{InitKind::kNaiveOde};
  std::vector<std::uint64_t> seeds{0};
  std::size_t refine_iters = 1;
  double tolerance = 1e-6;        // converged when the final residual is below this
  double rmse_threshold = 1e-4;   // for iterations-to-threshold statistics
  std::size_t sweep_iterations = 200;
  std::optional<CodecSpec> codec;
  std::size_t jobs = 1;
  bool keep_traces = false;

  void validate() const;
};

/// A fully resolved experiment description.
struct Scenario {
  int schema_version = 1;
  std::shared_ptr<const VelocityBackend> backend;
  BlackBoxFlow::Schedule schedule;
  std::map<std::string, Condition> conditions;
  std::string source;
  std::string target;
  BoundConfig bound;
  std::vector<std::string> bound_conditions;
  ExperimentConfig experiment;

  BlackBoxFlow make_flow(const std::string& condition_name) const;
  BlackBoxFlow source_flow() const { return make_flow(source); }
  BlackBoxFlow target_flow() const { return make_flow(target); }
  /// Bound config with condition names resolved.
  BoundConfig resolved_bound() const;
  std::size_t num_steps() const;
};

struct EditMetrics {
  double source_similarity;  // RMSE between the edited output and the source sample
  double target_adherence;   // log-density of the edited output under the target mixture
};

struct ResultRow {
  Task task = Task::kInversion;
  Method method = Method::kFlowOpt;
  std::optional<InitKind> init;
  std::uint64_t seed = 0;
  double eta = 0.0;
  std::size_t iterations = 0;  // N
  std::size_t steps = 0;       // chain length used by this method
  std::uint64_t nfe = 0;
  double rmse = 0.0;
  std::optional<double> floor_rmse;
  std::string status;  // converged | diverged | not-converged | done
  std::optional<EditMetrics> edit;
  std::optional<std::size_t> iters_to_threshold;
  std::optional<OptTrace> trace;
};

struct SweepCurve {
  double eta;
  std::uint64_t seed;
  std::vector<double> residuals;
  std::string status;
};

struct ContractCheck {
  std::string name;
  bool passed;
  std::string detail;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<SweepCurve> curves;
  std::vector<ContractCheck> checks;
  std::optional<BoundEstimate> bound;

  bool all_checks_passed() const;
};

/// FlowOpt NFE accounting: T for initialization, N*T for optimization and
/// T for the final sample.
inline std::uint64_t flowopt_nfe_budget(std::size_t steps, std::size_t iterations) {
  return static_cast<std::uint64_t>(steps) * (iterations + 2);
}

ResultTable run_inversion_experiment(const Scenario& sc);
ResultTable run_editing_experiment(const Scenario& sc);
ResultTable run_step_size_sweep(const Scenario& sc);
ResultTable run_bound_experiment(const Scenario& sc);
ResultTable run_experiment(const Scenario& sc);

EditMetrics edit_metrics(const Vec& edited, const Vec& source, const Condition& target);

struct SummaryRow {
  Task task;
  Method method;
  std::optional<InitKind> init;
  double eta;
  std::size_t iterations;
  std::size_t count;
  double rmse_mean;
  double rmse_stderr;
  double nfe_mean;
  double convergence_rate;
  std::optional<double> source_similarity_mean;
  std::optional<double> target_adherence_mean;
};

/// Groups rows by (task, method, init, eta, N) in a fixed order.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// Chain of the same kind with a different number of steps: same t_start
/// for flows, same alpha_T for DDIM.
BlackBoxFlow::Schedule rescale_schedule(const BlackBoxFlow::Schedule& s, std::size_t steps);

}  // namespace zoflow
