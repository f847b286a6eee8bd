#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "zoflow/bound.hpp"
#include "zoflow/experiments.hpp"
#include "zoflow/optimizer.hpp"

namespace zoflow {

inline constexpr int kCsvSchemaVersion = 1;

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// First line of every CSV: "# zoflow-csv schema=<v> kind=<kind>".
std::string csv_header_comment(std::string_view kind);

/// iteration,residual[,z0..,out0..]
std::string trace_to_csv(const OptTrace& trace, bool with_states = false);
nlohmann::json trace_to_json(const OptTrace& trace, const OptConfig& cfg, std::size_t num_steps);

nlohmann::json bound_to_json(const BoundEstimate& est);
/// alpha,min_ratio,min_bound
std::string bound_alpha_csv(const BoundEstimate& est);

/// task,method,init,seed,eta,iterations,steps,nfe,rmse,floor_rmse,status,
/// source_similarity,target_adherence,iters_to_threshold
std::string rows_to_csv(const std::vector<ResultRow>& rows);
/// eta,seed,iteration,residual,status
std::string curves_to_csv(const std::vector<SweepCurve>& curves);
/// task,method,init,eta,iterations,count,rmse_mean,rmse_stderr,nfe_mean,convergence_rate,
/// source_similarity_mean,target_adherence_mean
std::string summary_to_csv(const std::vector<SummaryRow>& rows);
nlohmann::json summary_to_json(const ResultTable& table, const std::vector<SummaryRow>& summary);

}  // namespace zoflow
