#include "zoflow/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace zoflow {

using nlohmann::json;

namespace {

// Shortest representation that round-trips, so CSVs are reproducible bit-for-bit.
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <class T>
std::string opt(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_floating_point_v<T>) {
    return num(*v);
  } else {
    return std::to_string(*v);
  }
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string csv_header_comment(std::string_view kind) {
  return "# zoflow-csv schema=" + std::to_string(kCsvSchemaVersion) + " kind=" + std::string(kind) + "\n";
}

std::string trace_to_csv(const OptTrace& trace, bool with_states) {
  std::ostringstream os;
  os << csv_header_comment("trace") << "iteration,residual";
  const Eigen::Index d = trace.iterates.empty() ? 0 : trace.iterates.front().size();
  if (with_states) {
    for (Eigen::Index j = 0; j < d; ++j) os << ",z" << j;
    for (Eigen::Index j = 0; j < d; ++j) os << ",out" << j;
  }
  os << '\n';
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    os << i << ',' << num(trace.residual_norms[i]);
    if (with_states) {
      for (Eigen::Index j = 0; j < d; ++j) os << ',' << num(trace.iterates[i][j]);
      for (Eigen::Index j = 0; j < d; ++j) os << ',' << num(trace.outputs[i][j]);
    }
    os << '\n';
  }
  return os.str();
}

json trace_to_json(const OptTrace& trace, const OptConfig& cfg, std::size_t num_steps) {
  json j;
  j["config"] = {{"eta", cfg.eta},
                 {"max_iters", cfg.max_iters},
                 {"stop_tol", cfg.stop_tol ? json(*cfg.stop_tol) : json(nullptr)},
                 {"delta_scale", cfg.delta_scale}};
  j["num_steps"] = num_steps;
  j["nfe_total"] = trace.nfe_total;
  j["iterations_run"] = trace.iterations_run();
  j["stopped_early_at"] = trace.stopped_early_at ? json(*trace.stopped_early_at) : json(nullptr);
  json iters = json::array(), outs = json::array(), res = json::array();
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    iters.push_back(vec_json(trace.iterates[i]));
    outs.push_back(vec_json(trace.outputs[i]));
    res.push_back(nullable(trace.residual_norms[i]));
  }
  j["iterates"] = std::move(iters);
  j["outputs"] = std::move(outs);
  j["residual_norms"] = std::move(res);
  return j;
}

json bound_to_json(const BoundEstimate& est) {
  json per = json::array();
  for (const auto& a : est.per_alpha_min) per.push_back({{"alpha", a.alpha}, {"min_ratio", a.min_ratio}});
  return {{"schema_version", kCsvSchemaVersion},
          {"per_alpha_min", per},
          {"global_min", est.global_min},
          {"bound", est.bound},
          {"suggested_eta", est.beta_min > 0.0 ? json(est.suggested_eta) : json(nullptr)},
          {"beta_min", est.beta_min},
          {"max_ratio", est.max_ratio},
          {"num_realizations", est.num_realizations},
          {"seed", est.seed},
          {"degenerate_resamples", est.degenerate_resamples},
          {"nfe", est.nfe}};
}

std::string bound_alpha_csv(const BoundEstimate& est) {
  std::ostringstream os;
  os << csv_header_comment("alpha-curve") << "alpha,min_ratio,min_bound\n";
  for (const auto& a : est.per_alpha_min) {
    os << num(a.alpha) << ',' << num(a.min_ratio) << ',' << num(2.0 * a.min_ratio) << '\n';
  }
  return os.str();
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << csv_header_comment("rows")
     << "task,method,init,seed,eta,iterations,steps,nfe,rmse,floor_rmse,status,source_similarity,"
        "target_adherence,iters_to_threshold\n";
  for (const auto& r : rows) {
    os << to_string(r.task) << ',' << to_string(r.method) << ',' << (r.init ? to_string(*r.init) : "") << ','
       << r.seed << ',' << num(r.eta) << ',' << r.iterations << ',' << r.steps << ',' << r.nfe << ','
       << num(r.rmse) << ',' << opt(r.floor_rmse) << ',' << r.status << ','
       << (r.edit ? num(r.edit->source_similarity) : "") << ','
       << (r.edit ? num(r.edit->target_adherence) : "") << ',' << opt(r.iters_to_threshold) << '\n';
  }
  return os.str();
}

std::string curves_to_csv(const std::vector<SweepCurve>& curves) {
  std::ostringstream os;
  os << csv_header_comment("convergence") << "eta,seed,iteration,residual,status\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.residuals.size(); ++i) {
      os << num(c.eta) << ',' << c.seed << ',' << i << ',' << num(c.residuals[i]) << ',' << c.status << '\n';
    }
  }
  return os.str();
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << csv_header_comment("summary")
     << "task,method,init,eta,iterations,count,rmse_mean,rmse_stderr,nfe_mean,convergence_rate,"
        "source_similarity_mean,target_adherence_mean\n";
  for (const auto& s : rows) {
    os << to_string(s.task) << ',' << to_string(s.method) << ',' << (s.init ? to_string(*s.init) : "") << ','
       << num(s.eta) << ',' << s.iterations << ',' << s.count << ',' << num(s.rmse_mean) << ','
       << num(s.rmse_stderr) << ',' << num(s.nfe_mean) << ',' << num(s.convergence_rate) << ','
       << opt(s.source_similarity_mean) << ',' << opt(s.target_adherence_mean) << '\n';
  }
  return os.str();
}

json summary_to_json(const ResultTable& table, const std::vector<SummaryRow>& summary) {
  json groups = json::array();
  for (const auto& s : summary) {
    json g = {{"task", to_string(s.task)},
              {"method", to_string(s.method)},
              {"init", s.init ? json(to_string(*s.init)) : json(nullptr)},
              {"eta", s.eta},
              {"iterations", s.iterations},
              {"count", s.count},
              {"rmse_mean", nullable(s.rmse_mean)},
              {"rmse_stderr", nullable(s.rmse_stderr)},
              {"nfe_mean", s.nfe_mean},
              {"convergence_rate", s.convergence_rate}};
    if (s.source_similarity_mean) g["source_similarity_mean"] = *s.source_similarity_mean;
    if (s.target_adherence_mean) g["target_adherence_mean"] = *s.target_adherence_mean;
    groups.push_back(std::move(g));
  }
  json checks = json::array();
  for (const auto& c : table.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  json j = {{"schema_version", kCsvSchemaVersion}, {"groups", groups}, {"checks", checks}};
  if (table.bound) j["bound"] = bound_to_json(*table.bound);
  return j;
}

}  // namespace zoflow
