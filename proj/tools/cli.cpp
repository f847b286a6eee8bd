#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "zoflow/baselines.hpp"
#include "zoflow/bound.hpp"
#include "zoflow/config.hpp"
#include "zoflow/experiments.hpp"
#include "zoflow/io.hpp"
#include "zoflow/optimizer.hpp"
#include "zoflow/rng.hpp"
#include "zoflow/scenarios.hpp"

namespace zoflow::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  bool quiet = false;
};

fs::path resolve_out(const Common& c, std::string_view command) {
  if (!c.out.empty()) return c.out;
  fs::path root = "zoflow-out";
  if (const char* env = std::getenv("ZOFLOW_OUTPUT_ROOT"); env && *env) root = env;
  const std::string stem = c.config.empty() ? std::string("selftest") : fs::path(c.config).stem().string();
  return root / (stem + "-" + std::string(command));
}

void apply_overrides(Scenario& sc, const Common& c) {
  if (c.seed) {
    for (std::size_t i = 0; i < sc.experiment.seeds.size(); ++i) sc.experiment.seeds[i] = *c.seed + i;
    sc.bound.seed = *c.seed;
  }
  sc.experiment.jobs = c.jobs;
  sc.bound.jobs = c.jobs;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void print_bound(const BoundEstimate& est, std::ostream& out) {
  out << "bound (2 x min ratio): " << fmt(est.bound) << "\n"
      << "suggested eta: " << fmt(est.suggested_eta) << "\n"
      << "beta_min: " << fmt(est.beta_min) << ", realizations per alpha: " << est.num_realizations
      << ", seed: " << est.seed << "\n";
}

void write_bound(const fs::path& dir, const BoundEstimate& est) {
  write_file_atomic(dir / "bound.json", bound_to_json(est).dump(2) + "\n");
  write_file_atomic(dir / "alpha_curve.csv", bound_alpha_csv(est));
}

int cmd_bound(const Common& c, std::ostream& out, std::ostream& err) {
  Scenario sc = load_scenario(c.config);
  apply_overrides(sc, c);
  const fs::path dir = resolve_out(c, "bound");
  try {
    const auto est = estimate_bound_mc(sc.source_flow(), sc.resolved_bound());
    write_bound(dir, est);
    print_bound(est, out);
    if (!c.quiet) out << "wrote " << (dir / "bound.json").string() << "\n";
    return kOk;
  } catch (const BoundAssumptionError& e) {
    write_bound(dir, e.estimate());
    err << "assumption violated: " << e.what() << "\n";
    return kAssumption;
  }
}

int cmd_experiment(const Common& c, std::optional<Task> forced, std::string_view name, std::ostream& out,
                   std::ostream& err) {
  Scenario sc = load_scenario(c.config);
  apply_overrides(sc, c);
  if (forced) sc.experiment.task = *forced;
  if (sc.experiment.task != Task::kSweep) sc.experiment.keep_traces = true;
  const fs::path dir = resolve_out(c, name);

  ResultTable table;
  try {
    table = run_experiment(sc);
  } catch (const BoundAssumptionError& e) {
    write_bound(dir, e.estimate());
    err << "assumption violated: " << e.what() << "\n";
    return kAssumption;
  }

  if (table.bound) {
    write_bound(dir, *table.bound);
    if (!c.quiet) print_bound(*table.bound, out);
  }
  if (!table.rows.empty()) {
    const auto summary = summarize(table.rows);
    write_file_atomic(dir / "rows.csv", rows_to_csv(table.rows));
    write_file_atomic(dir / "summary.csv", summary_to_csv(summary));
    write_file_atomic(dir / "summary.json", summary_to_json(table, summary).dump(2) + "\n");
    for (const auto& s : summary) {
      out << to_string(s.method);
      if (s.init) out << " init=" << to_string(*s.init);
      out << " eta=" << fmt(s.eta) << " N=" << s.iterations << ": rmse " << fmt(s.rmse_mean) << " +- "
          << fmt(s.rmse_stderr) << ", nfe " << fmt(s.nfe_mean) << ", converged "
          << fmt(100.0 * s.convergence_rate) << "%";
      if (s.source_similarity_mean) {
        out << ", source_similarity " << fmt(*s.source_similarity_mean) << ", target_adherence "
            << fmt(*s.target_adherence_mean);
      }
      out << "\n";
    }
  }
  if (!table.curves.empty()) write_file_atomic(dir / "convergence.csv", curves_to_csv(table.curves));

  bool diverged = false;
  if (sc.experiment.task != Task::kSweep) {
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& r = table.rows[i];
      if (r.status != "diverged") continue;
      diverged = true;
      if (r.trace) {
        const std::string stem = "trace_" + std::to_string(i);
        write_file_atomic(dir / "traces" / (stem + ".csv"), trace_to_csv(*r.trace, true));
        const OptConfig cfg{r.eta, std::max<std::size_t>(r.iterations, 1), std::nullopt, 1.0};
        write_file_atomic(dir / "traces" / (stem + ".json"), trace_to_json(*r.trace, cfg, r.steps).dump(2) + "\n");
      }
    }
  }
  for (const auto& chk : table.checks) {
    if (!c.quiet || !chk.passed) out << "check " << chk.name << ": " << (chk.passed ? "ok" : "FAILED") << " (" << chk.detail << ")\n";
  }
  if (!c.quiet) out << "wrote " << dir.string() << "\n";
  if (diverged) {
    err << "divergence detected; partial traces saved under " << (dir / "traces").string() << "\n";
    return kDivergence;
  }
  return table.all_checks_passed() ? kOk : kContract;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Fn>
SelftestResult timed(const std::string& name, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto [ok, detail] = fn();
    return {name, ok, detail, seconds_since(t0)};
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what(), seconds_since(t0)};
  }
}

BlackBoxFlow affine_d8_flow() {
  const auto field = random_symmetric_affine(8, -0.5, 1.5, 7);
  return BlackBoxFlow(make_backend(BackendKind::kAffine, 8), make_uniform_schedule(10),
                      make_affine_condition("affine-d8", field.A, field.b));
}

BlackBoxFlow bundled_mixture_flow() {
  return BlackBoxFlow(make_backend(BackendKind::kGaussianMixture, 2), make_uniform_schedule(10),
                      make_mixture_condition("src", bundled_source_mixture()));
}

}  // namespace

std::vector<SelftestResult> run_selftest(const SelftestOptions& opts, std::ostream& log) {
  std::vector<SelftestResult> results;
  std::optional<BoundEstimate> affine_est;
  std::optional<BoundEstimate> mixture_est;

  results.push_back(timed("affine-bound-tightness-d8", [&] {
    const BlackBoxFlow flow = affine_d8_flow();
    const auto& field = std::get<AffineField>(flow.condition().payload);
    const double oracle = affine_bound_exact(affine_flow_map(field, std::get<FlowSchedule>(flow.schedule())).M);
    BoundConfig cfg;
    cfg.alpha_grid = {0.0, 0.5, 0.9, 0.99};
    cfg.num_realizations = 2500;
    affine_est = estimate_bound_mc(flow, cfg);
    const double rel = affine_est->bound / oracle - 1.0;
    const bool ok = rel >= -1e-9 && rel <= 0.05;
    return std::pair{ok, "estimate " + fmt(affine_est->bound) + " vs oracle " + fmt(oracle) + " (+" +
                             fmt(100.0 * rel) + "%)"};
  }));

  results.push_back(timed("ddim-telescoping", [&] {
    Rng rng = make_rng(11, Stream::kAux);
    std::uniform_real_distribution<double> u(1e-3, 1.0);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
      std::vector<double> ab(51);
      for (auto& a : ab) a = u(rng);
      std::sort(ab.begin(), ab.end(), std::greater<>());
      ab[0] = 1.0;
      const DdimSchedule sched(ab);
      const double d = ddim_delta(sched);
      worst = std::max(worst, std::abs(ddim_delta_product(sched) - d) / std::max(1.0, d));
    }
    if (opts.corrupt_alpha_schedule) {
      const auto bad = DdimSchedule::unchecked({0.9, 0.6, 0.3, 0.25});
      (void)ddim_delta(bad);
    }
    return std::pair{worst <= 1e-12, "max relative deviation " + fmt(worst) + " over 100 schedules"};
  }));

  results.push_back(timed("stopgrad-equivalence", [&] {
    const auto field = random_symmetric_affine(4, -0.5, 1.5, 3);
    const BlackBoxFlow affine(make_backend(BackendKind::kAffine, 4), make_uniform_schedule(10),
                              make_affine_condition("affine-d4", field.A, field.b));
    const BlackBoxFlow mixture = bundled_mixture_flow();
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      Rng rng = make_rng(s, Stream::kAux);
      const Vec za = standard_normal(rng, 4), ya = standard_normal(rng, 4);
      const Vec zm = standard_normal(rng, 2), ym = standard_normal(rng, 2);
      worst = std::max(worst, stopgrad_equivalence_check(affine, za, ya));
      worst = std::max(worst, stopgrad_equivalence_check(mixture, zm, ym));
    }
    return std::pair{worst <= 1e-6, "max deviation " + fmt(worst)};
  }));

  results.push_back(timed("fixed-point-uniqueness", [&] {
    const BlackBoxFlow flow = bundled_mixture_flow();
    BoundConfig cfg;
    cfg.num_realizations = 500;
    mixture_est = estimate_bound_mc(flow, cfg);
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      Rng truth = make_rng(s, Stream::kTruth);
      const Vec y = flow(standard_normal(truth, 2));
      Rng init = make_rng(s, Stream::kInit);
      const Vec a = standard_normal(init, 2), b = standard_normal(init, 2);
      const OptConfig oc{mixture_est->suggested_eta, 2000, 1e-11, 1.0};
      const auto ta = flowopt_run(flow, y, oc, a);
      const auto tb = flowopt_run(flow, y, oc, b);
      worst = std::max(worst, (ta.iterates.back() - tb.iterates.back()).norm());
    }
    return std::pair{worst <= 1e-6, "max distance between limits " + fmt(worst)};
  }));

  if (opts.out) {
    results.push_back(timed("write-artifacts", [&] {
      if (!affine_est || !mixture_est) return std::pair{false, std::string("bound estimates unavailable")};
      const BlackBoxFlow flow = affine_d8_flow();
      std::vector<SweepCurve> curves;
      Rng truth = make_rng(0, Stream::kTruth);
      const Vec y = flow(standard_normal(truth, 8));
      const Vec z0 = invert_naive(flow, y);
      for (double m : {0.9, 5.0}) {
        const double eta = m * affine_est->bound;
        OptTrace tr;
        bool diverged = false;
        try {
          tr = flowopt_run(flow, y, {eta, 200, std::nullopt, 1.0}, z0);
        } catch (const DivergenceError& e) {
          tr = e.trace();
          diverged = true;
        }
        const bool grew = tr.residual_norms.back() > tr.residual_norms.front();
        const std::string status =
            diverged || grew ? "diverged" : (tr.residual_norms.back() < 1e-6 ? "converged" : "not-converged");
        curves.push_back({eta, 0, tr.residual_norms, status});
      }
      write_file_atomic(*opts.out / "convergence.csv", curves_to_csv(curves));
      write_file_atomic(*opts.out / "alpha_curve.csv", bound_alpha_csv(*mixture_est));
      const bool ok = curves[0].status == "converged" && curves[1].status == "diverged";
      return std::pair{ok, "sweep statuses " + curves[0].status + "/" + curves[1].status};
    }));
  }

  for (const auto& r : results) {
    if (opts.quiet && r.passed) continue;
    log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " [" << fmt(r.seconds) << " s]\n";
  }
  return results;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-order optimization through black-box flow samplers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "zoflow 0.1.0");

  Common common;
  bool corrupt = false;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config,-c", common.config, "Scenario file (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out,-o", common.out, "Output directory (default: $ZOFLOW_OUTPUT_ROOT/<config>-<command>)");
    sub->add_option("--seed", common.seed, "Override the master seed");
    sub->add_option("--jobs,-j", common.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet,-q", common.quiet, "Only print results");
  };

  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by the config");
  auto* bound_cmd = app.add_subcommand("bound", "Estimate the step-size bound");
  auto* sweep_cmd = app.add_subcommand("sweep", "Step-size sweep");
  auto* invert_cmd = app.add_subcommand("invert", "Inversion experiment");
  auto* edit_cmd = app.add_subcommand("edit", "Direct-editing experiment");
  auto* self_cmd = app.add_subcommand("selftest", "Fast invariant suite");
  for (auto* s : {run_cmd, bound_cmd, sweep_cmd, invert_cmd, edit_cmd}) add_common(s, true);
  add_common(self_cmd, false);
  self_cmd->add_flag("--inject-corrupt-schedule", corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*self_cmd) {
      SelftestOptions opts;
      opts.quiet = common.quiet;
      opts.corrupt_alpha_schedule = corrupt;
      if (!common.out.empty() || std::getenv("ZOFLOW_OUTPUT_ROOT")) opts.out = resolve_out(common, "selftest");
      const auto results = run_selftest(opts, out);
      const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
      if (!ok) err << "selftest failed\n";
      return ok ? kOk : kContract;
    }
    if (*bound_cmd) return cmd_bound(common, out, err);
    if (*run_cmd) return cmd_experiment(common, std::nullopt, "run", out, err);
    if (*sweep_cmd) return cmd_experiment(common, Task::kSweep, "sweep", out, err);
    if (*invert_cmd) return cmd_experiment(common, Task::kInversion, "invert", out, err);
    if (*edit_cmd) return cmd_experiment(common, Task::kDirectEdit, "edit", out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kConfig;
  } catch (const AssumptionViolated& e) {
    err << "assumption violated: " << e.what() << "\n";
    return kAssumption;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace zoflow::cli
