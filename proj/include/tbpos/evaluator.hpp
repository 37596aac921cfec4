#pragma once

#include "tbpos/estimates.hpp"
#include "tbpos/manifest.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tbpos {

struct EvalThresholds {
  std::vector<double> translation_m = {0.25, 0.5, 1.0};  // strictly increasing
  double rotation_deg = 10.0;
};

struct QueryEvalRow {
  std::string query_id;
  bool has_estimate = false;
  double t_err_m = 0.0;   // meaningful only when has_estimate
  double r_err_deg = 0.0;
  std::vector<bool> pass;  // one flag per translation threshold
};

/// Error statistics over the successes at one threshold pair. successes == 0
/// is the explicit empty marker; the means/medians are unset then.
struct PrecisionStats {
  int successes = 0;
  double mean_t_err_m = 0.0;
  double mean_r_err_deg = 0.0;
  double median_t_err_m = 0.0;
  double median_r_err_deg = 0.0;
};

struct EvalReport {
  int n_queries = 0;
  EvalThresholds thresholds;
  std::vector<int> success_counts;    // per translation threshold
  std::vector<double> success_rates;  // counts / n_queries, full precision
  int failed_count = 0;               // FAILED or absent estimates
  PrecisionStats precision;           // at the tightest threshold
  std::vector<QueryEvalRow> rows;     // manifest order

  std::optional<double> retrieval_rate;  // set when candidates were scored
  int retrieval_hits = 0;
  int retrieval_k = 0;
};

/// Scores estimates against manifest ground truth. A query passes threshold
/// tau iff translation_error <= tau and rotation_error <= rotation_deg (both
/// inclusive); queries with FAILED or missing estimates fail everything.
/// Estimates for unknown query ids and duplicate estimates are errors.
EvalReport evaluate_poses(const QueryManifest& manifest,
                          const std::vector<PoseEstimate>& estimates,
                          const EvalThresholds& thresholds);

/// Fraction of manifest queries whose top-k candidates contain at least one
/// database image from the query's own source scan. Queries absent from the
/// candidates count as misses.
double retrieval_success(const QueryManifest& manifest,
                         const std::vector<CandidateList>& candidates, int k);

/// Statistics over the successes at an arbitrary threshold pair.
PrecisionStats precision_stats(const std::vector<QueryEvalRow>& rows,
                               double translation_m, double rotation_deg);

/// Attaches a retrieval score to a report (stored alongside the pose
/// metrics in both output formats).
void attach_retrieval(EvalReport& report, const QueryManifest& manifest,
                      const std::vector<CandidateList>& candidates, int k);

/// Percentage with one decimal, rounded half-up: 0.295858 -> "29.6%".
std::string format_percent(double fraction);

/// Human-readable results table.
std::string format_report(const EvalReport& report);

/// Writes report.txt (human table), report.kv (key=value, full precision) and
/// report.csv (per-query rows, header `query_id,t_err_m,r_err_deg,pass_...`).
void write_report_files(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace tbpos
