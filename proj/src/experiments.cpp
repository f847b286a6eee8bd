#include "zoflow/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "zoflow/baselines.hpp"
#include "zoflow/parallel.hpp"
#include "zoflow/rng.hpp"

namespace zoflow {

std::string_view to_string(Task t) {
  switch (t) {
    case Task::kInversion: return "inversion";
    case Task::kDirectEdit: return "direct-edit";
    case Task::kSweep: return "sweep";
    case Task::kBound: return "bound";
  }
  return "unknown";
}

std::string_view to_string(InitKind k) { return k == InitKind::kRandom ? "random" : "naive-ode"; }

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kFlowOpt: return "flowopt";
    case Method::kNaive: return "naive";
    case Method::kFixedPoint: return "fixed-point";
    case Method::kJacobianGD: return "jacobian-gd";
  }
  return "unknown";
}

Task parse_task(std::string_view s) {
  for (Task t : {Task::kInversion, Task::kDirectEdit, Task::kSweep, Task::kBound}) {
    if (s == to_string(t)) return t;
  }
  throw InvalidArgument("unknown task '" + std::string(s) + "'");
}

InitKind parse_init(std::string_view s) {
  if (s == "random") return InitKind::kRandom;
  if (s == "naive-ode") return InitKind::kNaiveOde;
  throw InvalidArgument("unknown init '" + std::string(s) + "'");
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::kFlowOpt, Method::kNaive, Method::kFixedPoint, Method::kJacobianGD}) {
    if (s == to_string(m)) return m;
  }
  throw InvalidArgument("unknown method '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw InvalidArgument("experiment: seeds must be nonempty");
  if (methods.empty()) throw InvalidArgument("experiment: methods must be nonempty");
  if (inits.empty()) throw InvalidArgument("experiment: inits must be nonempty");
  for (double e : etas) {
    if (!(e > 0.0) || !std::isfinite(e)) throw InvalidArgument("experiment: every eta must be positive");
  }
  for (double m : eta_multipliers) {
    if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("experiment: eta multipliers must be positive");
  }
  if (refine_iters < 1) throw InvalidArgument("experiment: refine_iters must be >= 1");
  if (!(tolerance > 0.0)) throw InvalidArgument("experiment: tolerance must be positive");
  if (sweep_iterations < 1) throw InvalidArgument("experiment: sweep_iterations must be >= 1");
}

BlackBoxFlow Scenario::make_flow(const std::string& condition_name) const {
  const auto it = conditions.find(condition_name);
  if (it == conditions.end()) throw InvalidArgument("unknown condition '" + condition_name + "'");
  return std::visit([&](const auto& s) { return BlackBoxFlow(backend, s, it->second); }, schedule);
}

BoundConfig Scenario::resolved_bound() const {
  BoundConfig cfg = bound;
  cfg.conditions.clear();
  for (const auto& name : bound_conditions) {
    const auto it = conditions.find(name);
    if (it == conditions.end()) throw InvalidArgument("bound: unknown condition '" + name + "'");
    cfg.conditions.push_back(it->second);
  }
  return cfg;
}

std::size_t Scenario::num_steps() const {
  return std::visit(
      [](const auto& s) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, FlowSchedule>) {
          return s.num_steps;
        } else {
          return s.num_steps();
        }
      },
      schedule);
}

bool ResultTable::all_checks_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ContractCheck& c) { return c.passed; });
}

BlackBoxFlow::Schedule rescale_schedule(const BlackBoxFlow::Schedule& s, std::size_t steps) {
  if (const auto* fs = std::get_if<FlowSchedule>(&s)) return make_uniform_schedule(steps, fs->t_start());
  const auto& ds = std::get<DdimSchedule>(s);
  return make_cosine_ddim_schedule(steps, ds.alpha_bar().back());
}

EditMetrics edit_metrics(const Vec& edited, const Vec& source, const Condition& target) {
  const auto* gmm = std::get_if<std::shared_ptr<const GaussianMixture>>(&target.payload);
  if (!gmm) throw InvalidArgument("edit metrics need a mixture target condition");
  return {rmse(edited, source), (*gmm)->log_density(edited)};
}

namespace {

double stopgrad_scale_of(const Scenario& sc) {
  if (const auto* ds = std::get_if<DdimSchedule>(&sc.schedule)) return ddim_delta(*ds);
  return 1.0;
}

/// Absolute step sizes, estimating the bound once when only multipliers
/// are configured. The bound limits the plain update, so for DDIM chains
/// the configured eta is divided by the delta scale.
std::vector<double> resolve_etas(const Scenario& sc, ResultTable& table) {
  const auto& ex = sc.experiment;
  if (!ex.etas.empty()) return ex.etas;
  if (ex.eta_multipliers.empty()) throw InvalidArgument("experiment: provide eta or eta_multipliers");
  BoundConfig bcfg = sc.resolved_bound();
  bcfg.jobs = std::max(bcfg.jobs, ex.jobs);
  table.bound = estimate_bound_mc(sc.source_flow(), bcfg);
  const double scale = stopgrad_scale_of(sc);
  std::vector<double> etas;
  for (double m : ex.eta_multipliers) etas.push_back(m * table.bound->bound / scale);
  return etas;
}

struct Target {
  Vec latent;                // what the optimizer must hit
  std::optional<Vec> pixel;  // pre-codec signal when a codec is configured
  std::optional<double> floor;
};

Target make_target(const BlackBoxFlow& src, const std::optional<LinearCodec>& codec, double residual_scale,
                   std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::kTruth);
  const Vec z_true = standard_normal(rng, src.dim());
  Vec y = src(z_true);
  if (!codec) return {std::move(y), std::nullopt, std::nullopt};
  const Vec noise = standard_normal(rng, codec->pixel_dim());
  const Vec on_manifold = codec->decode(y);
  const Vec x = on_manifold + residual_scale * (noise - codec_roundtrip(*codec, noise));
  return {codec->encode(x), x, codec->floor_rmse(x)};
}

Vec initial_iterate(InitKind init, const BlackBoxFlow& inverse_flow, const Vec& y, std::uint64_t seed) {
  if (init == InitKind::kNaiveOde) return invert_naive(inverse_flow, y);
  Rng rng = make_rng(seed, Stream::kInit);
  return standard_normal(rng, inverse_flow.dim());
}

double score(const Target& t, const std::optional<LinearCodec>& codec, const Vec& recon) {
  if (codec) return rmse(codec->decode(recon), *t.pixel);
  return rmse(recon, t.latent);
}

std::optional<std::size_t> first_below(const OptTrace& tr, const Vec& y, double threshold) {
  for (std::size_t i = 0; i < tr.outputs.size(); ++i) {
    if (rmse(tr.outputs[i], y) <= threshold) return i;
  }
  return std::nullopt;
}

/// flowopt_run, converting divergence into a flagged partial trace.
std::pair<OptTrace, bool> run_guarded(const BlackBoxFlow& flow, const Vec& y, const OptConfig& cfg,
                                      const Vec& z0) {
  try {
    return {flowopt_run(flow, y, cfg, z0), false};
  } catch (const DivergenceError& e) {
    return {e.trace(), true};
  }
}

std::string classify(const OptTrace& tr, bool diverged, double tol) {
  if (diverged || tr.residual_norms.back() > tr.residual_norms.front()) return "diverged";
  return tr.residual_norms.back() < tol ? "converged" : "not-converged";
}

void add_nfe_check(ResultTable& table) {
  std::size_t checked = 0;
  std::string bad;
  for (const auto& r : table.rows) {
    if (r.method != Method::kFlowOpt || r.status == "diverged") continue;
    ++checked;
    if (r.nfe != flowopt_nfe_budget(r.steps, r.iterations)) {
      bad += " seed=" + std::to_string(r.seed) + ",N=" + std::to_string(r.iterations);
    }
  }
  table.checks.push_back({"nfe-accounting", bad.empty(),
                          bad.empty() ? std::to_string(checked) + " FlowOpt rows equal T(N+2)"
                                      : "mismatch at" + bad});
}

void add_floor_check(ResultTable& table) {
  std::string bad;
  std::size_t checked = 0;
  for (const auto& r : table.rows) {
    if (!r.floor_rmse || !std::isfinite(r.rmse)) continue;
    ++checked;
    if (r.rmse < *r.floor_rmse - 1e-10) bad += " seed=" + std::to_string(r.seed) + "/" + std::string(to_string(r.method));
  }
  if (checked > 0) {
    table.checks.push_back({"codec-floor", bad.empty(),
                            bad.empty() ? std::to_string(checked) + " rows at or above the codec floor"
                                        : "below floor at" + bad});
  }
}

struct RowJob {
  std::uint64_t seed;
  std::size_t iterations;
  Method method;
  std::optional<InitKind> init;
  double eta;
};

}  // namespace

ResultTable run_inversion_experiment(const Scenario& sc) {
  const auto& ex = sc.experiment;
  ex.validate();
  ResultTable table;

  const BlackBoxFlow src = sc.source_flow();
  std::optional<LinearCodec> codec;
  if (ex.codec) codec = LinearCodec::random(ex.codec->pixel_dim, src.dim(), ex.codec->seed);

  const bool needs_eta = std::any_of(ex.methods.begin(), ex.methods.end(), [](Method m) {
    return m == Method::kFlowOpt || m == Method::kJacobianGD;
  });
  const std::vector<double> etas = needs_eta ? resolve_etas(sc, table) : std::vector<double>{};
  const double delta_scale = stopgrad_scale_of(sc);
  const std::size_t T = src.num_steps();

  std::vector<RowJob> jobs;
  for (auto seed : ex.seeds) {
    for (auto n : ex.iterations) {
      for (auto m : ex.methods) {
        if (m == Method::kFlowOpt || m == Method::kJacobianGD) {
          for (auto init : ex.inits) {
            for (double eta : etas) jobs.push_back({seed, n, m, init, eta});
          }
        } else {
          jobs.push_back({seed, n, m, std::nullopt, 0.0});
        }
      }
    }
  }

  table.rows.resize(jobs.size());
  parallel_for(jobs.size(), ex.jobs, [&](std::size_t idx) {
    const RowJob& job = jobs[idx];
    const BlackBoxFlow flow(src);
    const Target tgt = make_target(flow, codec, ex.codec ? ex.codec->residual_scale : 0.0, job.seed);
    const std::uint64_t budget = flowopt_nfe_budget(T, job.iterations);

    ResultRow row;
    row.task = Task::kInversion;
    row.method = job.method;
    row.init = job.init;
    row.seed = job.seed;
    row.eta = job.eta;
    row.iterations = job.iterations;
    row.floor_rmse = tgt.floor;

    switch (job.method) {
      case Method::kFlowOpt: {
        flow.reset_nfe();
        const Vec z0 = initial_iterate(*job.init, flow, tgt.latent, job.seed);
        const std::uint64_t init_nfe = flow.nfe();
        if (*job.init == InitKind::kNaiveOde && init_nfe != T) {
          throw std::logic_error("naive initialization used an unexpected number of NFEs");
        }
        OptConfig cfg{job.eta, job.iterations, std::nullopt, delta_scale};
        auto [tr, diverged] = run_guarded(flow, tgt.latent, cfg, z0);
        row.steps = T;
        // Initialization is charged T regardless of the init kind.
        row.nfe = T + tr.nfe_total;
        row.rmse = score(tgt, codec, tr.outputs.back());
        row.status = classify(tr, diverged, ex.tolerance);
        row.iters_to_threshold = first_below(tr, tgt.latent, ex.rmse_threshold);
        if (ex.keep_traces) row.trace = std::move(tr);
        break;
      }
      case Method::kNaive:
      case Method::kFixedPoint: {
        const std::size_t per_step = job.method == Method::kNaive ? 1 : ex.refine_iters;
        const std::size_t steps = std::max<std::size_t>(1, budget / (per_step + 1));
        const BlackBoxFlow inv = std::visit(
            [&](const auto& s) { return BlackBoxFlow(sc.backend, s, flow.condition()); },
            rescale_schedule(sc.schedule, steps));
        const Vec z = job.method == Method::kNaive ? invert_naive(inv, tgt.latent)
                                                   : invert_fixed_point(inv, tgt.latent, {per_step});
        const Vec recon = inv(z);
        row.steps = steps;
        row.nfe = inv.nfe();
        row.rmse = score(tgt, codec, recon);
        row.status = "done";
        break;
      }
      case Method::kJacobianGD: {
        const Vec z0 = initial_iterate(*job.init, flow, tgt.latent, job.seed);
        JacobianGDConfig cfg{job.eta, job.iterations, 1e-5};
        OptTrace tr;
        bool diverged = false;
        try {
          tr = jacobian_gd(flow, tgt.latent, cfg, z0);
        } catch (const DivergenceError& e) {
          tr = e.trace();
          diverged = true;
        }
        row.steps = T;
        row.nfe = T + tr.nfe_total;
        row.rmse = score(tgt, codec, tr.outputs.back());
        row.status = classify(tr, diverged, ex.tolerance);
        row.iters_to_threshold = first_below(tr, tgt.latent, ex.rmse_threshold);
        if (ex.keep_traces) row.trace = std::move(tr);
        break;
      }
    }
    table.rows[idx] = std::move(row);
  });

  add_nfe_check(table);
  add_floor_check(table);
  return table;
}

ResultTable run_editing_experiment(const Scenario& sc) {
  const auto& ex = sc.experiment;
  ex.validate();
  if (sc.source == sc.target) {
    throw InvalidArgument("direct editing needs distinct source and target conditions");
  }
  ResultTable table;
  const BlackBoxFlow src = sc.source_flow();
  const BlackBoxFlow tar = sc.target_flow();
  const Condition& tar_cond = tar.condition();
  const std::vector<double> etas = resolve_etas(sc, table);
  const double delta_scale = stopgrad_scale_of(sc);
  const std::size_t T = src.num_steps();

  std::vector<RowJob> jobs;
  for (auto seed : ex.seeds) {
    for (auto n : ex.iterations) {
      for (auto init : ex.inits) {
        for (double eta : etas) jobs.push_back({seed, n, Method::kFlowOpt, init, eta});
      }
    }
  }

  table.rows.resize(jobs.size());
  parallel_for(jobs.size(), ex.jobs, [&](std::size_t idx) {
    const RowJob& job = jobs[idx];
    const BlackBoxFlow fsrc(src);
    const BlackBoxFlow ftar(tar);
    fsrc.reset_nfe();
    ftar.reset_nfe();

    Rng rng = make_rng(job.seed, Stream::kTruth);
    const Vec z_src = standard_normal(rng, fsrc.dim());
    const Vec y = fsrc(z_src);
    fsrc.reset_nfe();
    const Vec z0 = initial_iterate(*job.init, fsrc, y, job.seed);

    ResultRow row;
    row.task = Task::kDirectEdit;
    row.method = Method::kFlowOpt;
    row.init = job.init;
    row.seed = job.seed;
    row.eta = job.eta;
    row.iterations = job.iterations;
    row.steps = T;

    Vec edited;
    if (job.iterations == 0) {
      edited = ftar(z0);
      row.nfe = T + ftar.nfe();
      row.status = "done";
    } else {
      OptConfig cfg{job.eta, job.iterations, std::nullopt, delta_scale};
      auto [tr, diverged] = run_guarded(ftar, y, cfg, z0);
      edited = tr.outputs.back();
      row.nfe = T + tr.nfe_total;
      row.status = diverged ? "diverged" : "done";
      if (ex.keep_traces) row.trace = std::move(tr);
    }
    row.rmse = rmse(edited, y);
    row.edit = edit_metrics(edited, y, tar_cond);
    table.rows[idx] = std::move(row);
  });

  add_nfe_check(table);
  return table;
}

ResultTable run_step_size_sweep(const Scenario& sc) {
  const auto& ex = sc.experiment;
  ex.validate();
  ResultTable table;
  const BlackBoxFlow src = sc.source_flow();
  const std::vector<double> etas = resolve_etas(sc, table);
  const double delta_scale = stopgrad_scale_of(sc);
  const std::size_t T = src.num_steps();
  const InitKind init = ex.inits.front();

  struct SweepJob {
    double eta;
    std::uint64_t seed;
  };
  std::vector<SweepJob> jobs;
  for (double eta : etas) {
    for (auto seed : ex.seeds) jobs.push_back({eta, seed});
  }

  table.rows.resize(jobs.size());
  table.curves.resize(jobs.size());
  parallel_for(jobs.size(), ex.jobs, [&](std::size_t idx) {
    const auto& job = jobs[idx];
    const BlackBoxFlow flow(src);
    const Target tgt = make_target(flow, std::nullopt, 0.0, job.seed);
    const Vec z0 = initial_iterate(init, flow, tgt.latent, job.seed);
    OptConfig cfg{job.eta, ex.sweep_iterations, std::nullopt, delta_scale};
    auto [tr, diverged] = run_guarded(flow, tgt.latent, cfg, z0);

    ResultRow row;
    row.task = Task::kSweep;
    row.method = Method::kFlowOpt;
    row.init = init;
    row.seed = job.seed;
    row.eta = job.eta;
    row.iterations = tr.iterations_run();
    row.steps = T;
    row.nfe = T + tr.nfe_total;
    row.rmse = rmse(tr.outputs.back(), tgt.latent);
    row.status = classify(tr, diverged, ex.tolerance);
    table.curves[idx] = {job.eta, job.seed, tr.residual_norms, row.status};
    if (ex.keep_traces) row.trace = std::move(tr);
    table.rows[idx] = std::move(row);
  });

  add_nfe_check(table);
  return table;
}

ResultTable run_bound_experiment(const Scenario& sc) {
  ResultTable table;
  BoundConfig cfg = sc.resolved_bound();
  cfg.jobs = std::max(cfg.jobs, sc.experiment.jobs);
  table.bound = estimate_bound_mc(sc.source_flow(), cfg);
  return table;
}

ResultTable run_experiment(const Scenario& sc) {
  switch (sc.experiment.task) {
    case Task::kInversion: return run_inversion_experiment(sc);
    case Task::kDirectEdit: return run_editing_experiment(sc);
    case Task::kSweep: return run_step_size_sweep(sc);
    case Task::kBound: return run_bound_experiment(sc);
  }
  throw InvalidArgument("unknown task");
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw InvalidArgument("summarize: no rows");
  using Key = std::tuple<int, int, int, double, std::size_t>;
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    const int init = r.init ? static_cast<int>(*r.init) : -1;
    groups[{static_cast<int>(r.task), static_cast<int>(r.method), init, r.eta, r.iterations}].push_back(&r);
  }

  std::vector<SummaryRow> out;
  out.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    const auto* first = members.front();
    const double n = static_cast<double>(members.size());
    double sum = 0.0, nfe = 0.0, conv = 0.0;
    for (const auto* r : members) {
      sum += r->rmse;
      nfe += static_cast<double>(r->nfe);
      conv += r->status == "converged" ? 1.0 : 0.0;
    }
    const double mean = sum / n;
    double var = 0.0;
    for (const auto* r : members) var += (r->rmse - mean) * (r->rmse - mean);
    const double stderr_ = members.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;

    SummaryRow s{first->task, first->method, first->init, first->eta, first->iterations, members.size(),
                 mean, stderr_, nfe / n, conv / n, std::nullopt, std::nullopt};
    if (first->edit) {
      double ss = 0.0, ta = 0.0;
      for (const auto* r : members) {
        ss += r->edit->source_similarity;
        ta += r->edit->target_adherence;
      }
      s.source_similarity_mean = ss / n;
      s.target_adherence_mean = ta / n;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace zoflow
