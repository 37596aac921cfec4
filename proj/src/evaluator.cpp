#include "tbpos/evaluator.hpp"

#include "tbpos/errors.hpp"
#include "tbpos/image_id.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace tbpos {

namespace {

void validate_thresholds(const EvalThresholds& thresholds) {
  if (thresholds.translation_m.empty() || !(thresholds.rotation_deg > 0.0)) {
    throw std::invalid_argument("evaluate: need at least one translation threshold and a positive rotation threshold");
  }
  double prev = 0.0;
  for (const double t : thresholds.translation_m) {
    if (!(t > prev)) {
      throw std::invalid_argument("evaluate: translation thresholds must be strictly increasing and positive");
    }
    prev = t;
  }
}

double median_of_sorted(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) {
    return values[n / 2];
  }
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string format_threshold(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", t);
  std::string s = buf;
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EvalReport evaluate_poses(const QueryManifest& manifest,
                          const std::vector<PoseEstimate>& estimates,
                          const EvalThresholds& thresholds) {
  validate_thresholds(thresholds);

  std::unordered_map<std::string, const PoseEstimate*> by_id;
  for (const auto& est : estimates) {
    if (!manifest.find(est.query_id)) {
      throw std::invalid_argument("evaluate: estimate for unknown query '" + est.query_id + "'");
    }
    if (!by_id.emplace(est.query_id, &est).second) {
      throw std::invalid_argument("evaluate: duplicate estimate for query '" + est.query_id + "'");
    }
  }

  EvalReport report;
  report.n_queries = static_cast<int>(manifest.records.size());
  report.thresholds = thresholds;
  report.success_counts.assign(thresholds.translation_m.size(), 0);
  report.rows.reserve(manifest.records.size());

  for (const auto& record : manifest.records) {
    QueryEvalRow row;
    row.query_id = record.query_id;
    row.pass.assign(thresholds.translation_m.size(), false);
    const auto it = by_id.find(record.query_id);
    if (it == by_id.end() || !it->second->pose) {
      ++report.failed_count;
      report.rows.push_back(std::move(row));
      continue;
    }
    row.has_estimate = true;
    row.t_err_m = translation_error(record.gt_pose, *it->second->pose);
    row.r_err_deg = rotation_error(record.gt_pose, *it->second->pose);
    for (std::size_t k = 0; k < thresholds.translation_m.size(); ++k) {
      const bool pass = row.t_err_m <= thresholds.translation_m[k] &&
                        row.r_err_deg <= thresholds.rotation_deg;
      row.pass[k] = pass;
      if (pass) {
        ++report.success_counts[k];
      }
    }
    report.rows.push_back(std::move(row));
  }

  report.success_rates.resize(report.success_counts.size());
  for (std::size_t k = 0; k < report.success_counts.size(); ++k) {
    report.success_rates[k] =
        report.n_queries > 0
            ? static_cast<double>(report.success_counts[k]) / report.n_queries
            : 0.0;
  }
  report.precision =
      precision_stats(report.rows, thresholds.translation_m.front(), thresholds.rotation_deg);
  return report;
}

PrecisionStats precision_stats(const std::vector<QueryEvalRow>& rows,
                               double translation_m, double rotation_deg) {
  PrecisionStats stats;
  std::vector<double> t_errs;
  std::vector<double> r_errs;
  for (const auto& row : rows) {
    if (row.has_estimate && row.t_err_m <= translation_m && row.r_err_deg <= rotation_deg) {
      t_errs.push_back(row.t_err_m);
      r_errs.push_back(row.r_err_deg);
    }
  }
  stats.successes = static_cast<int>(t_errs.size());
  if (stats.successes == 0) {
    return stats;
  }
  double t_sum = 0.0;
  double r_sum = 0.0;
  for (std::size_t i = 0; i < t_errs.size(); ++i) {
    t_sum += t_errs[i];
    r_sum += r_errs[i];
  }
  stats.mean_t_err_m = t_sum / stats.successes;
  stats.mean_r_err_deg = r_sum / stats.successes;
  stats.median_t_err_m = median_of_sorted(t_errs);
  stats.median_r_err_deg = median_of_sorted(r_errs);
  return stats;
}

double retrieval_success(const QueryManifest& manifest,
                         const std::vector<CandidateList>& candidates, int k) {
  if (k < 1) {
    throw std::invalid_argument("retrieval_success: k must be >= 1");
  }
  if (manifest.records.empty()) {
    throw std::invalid_argument("retrieval_success: empty manifest");
  }
  std::unordered_map<std::string, const CandidateList*> by_id;
  for (const auto& list : candidates) {
    if (!manifest.find(list.query_id)) {
      throw std::invalid_argument("retrieval_success: candidates for unknown query '" +
                                  list.query_id + "'");
    }
    if (!by_id.emplace(list.query_id, &list).second) {
      throw std::invalid_argument("retrieval_success: duplicate candidates for query '" +
                                  list.query_id + "'");
    }
  }
  int hits = 0;
  for (const auto& record : manifest.records) {
    const auto it = by_id.find(record.query_id);
    if (it == by_id.end()) {
      continue;  // absent queries are misses
    }
    const auto& ids = it->second->image_ids;
    const std::size_t limit = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < limit; ++r) {
      const auto scan = scan_id_of_image(ids[r]);
      if (scan && *scan == record.scan_id) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(manifest.records.size());
}

void attach_retrieval(EvalReport& report, const QueryManifest& manifest,
                      const std::vector<CandidateList>& candidates, int k) {
  const double rate = retrieval_success(manifest, candidates, k);
  report.retrieval_rate = rate;
  report.retrieval_k = k;
  report.retrieval_hits =
      static_cast<int>(std::llround(rate * manifest.records.size()));
}

std::string format_percent(double fraction) {
  const double tenths = std::floor(fraction * 1000.0 + 0.5);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", tenths / 10.0);
  return buf;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "queries: " << report.n_queries
      << "  estimated: " << report.n_queries - report.failed_count
      << "  failed: " << report.failed_count << "\n";
  out << "threshold        passed   rate\n";
  for (std::size_t k = 0; k < report.thresholds.translation_m.size(); ++k) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-5s m / %g deg  %6d   %s\n",
                  format_threshold(report.thresholds.translation_m[k]).c_str(),
                  report.thresholds.rotation_deg, report.success_counts[k],
                  format_percent(report.success_rates[k]).c_str());
    out << line;
  }
  const auto& p = report.precision;
  if (p.successes > 0) {
    char line[160];
    std::snprintf(line, sizeof(line),
                  "precision at %s m / %g deg over %d successes: "
                  "mean %.4f m / %.4f deg, median %.4f m / %.4f deg\n",
                  format_threshold(report.thresholds.translation_m.front()).c_str(),
                  report.thresholds.rotation_deg, p.successes, p.mean_t_err_m,
                  p.mean_r_err_deg, p.median_t_err_m, p.median_r_err_deg);
    out << line;
  } else {
    out << "precision: no successes at the tightest threshold\n";
  }
  if (report.retrieval_rate) {
    out << "top-" << report.retrieval_k
        << " same-scan retrieval: " << format_percent(*report.retrieval_rate) << " ("
        << report.retrieval_hits << "/" << report.n_queries << ")\n";
  }
  return out.str();
}

void write_report_files(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  {
    std::ofstream txt(dir / "report.txt", std::ios::trunc);
    if (!txt) {
      throw IoError("write_report_files: cannot open report.txt under " + dir.string());
    }
    txt << format_report(report);
  }
  {
    std::ofstream kv(dir / "report.kv", std::ios::trunc);
    if (!kv) {
      throw IoError("write_report_files: cannot open report.kv under " + dir.string());
    }
    kv << "n_queries=" << report.n_queries << '\n';
    kv << "failed=" << report.failed_count << '\n';
    kv << "rotation_threshold_deg=" << format_full(report.thresholds.rotation_deg) << '\n';
    for (std::size_t k = 0; k < report.thresholds.translation_m.size(); ++k) {
      const std::string name = format_threshold(report.thresholds.translation_m[k]);
      kv << "success_count_" << name << "=" << report.success_counts[k] << '\n';
      kv << "success_rate_" << name << "=" << format_full(report.success_rates[k]) << '\n';
    }
    kv << "precision_successes=" << report.precision.successes << '\n';
    if (report.precision.successes > 0) {
      kv << "precision_mean_t_err_m=" << format_full(report.precision.mean_t_err_m) << '\n';
      kv << "precision_mean_r_err_deg=" << format_full(report.precision.mean_r_err_deg) << '\n';
      kv << "precision_median_t_err_m=" << format_full(report.precision.median_t_err_m) << '\n';
      kv << "precision_median_r_err_deg=" << format_full(report.precision.median_r_err_deg)
         << '\n';
    }
    if (report.retrieval_rate) {
      kv << "retrieval_k=" << report.retrieval_k << '\n';
      kv << "retrieval_hits=" << report.retrieval_hits << '\n';
      kv << "retrieval_rate=" << format_full(*report.retrieval_rate) << '\n';
    }
  }
  {
    std::ofstream csv(dir / "report.csv", std::ios::trunc);
    if (!csv) {
      throw IoError("write_report_files: cannot open report.csv under " + dir.string());
    }
    csv << "query_id,t_err_m,r_err_deg";
    for (const double t : report.thresholds.translation_m) {
      csv << ",pass_" << format_threshold(t);
    }
    csv << '\n';
    for (const auto& row : report.rows) {
      csv << row.query_id << ',';
      if (row.has_estimate) {
        csv << format_full(row.t_err_m) << ',' << format_full(row.r_err_deg);
      } else {
        csv << "nan,nan";
      }
      for (const bool pass : row.pass) {
        csv << ',' << (pass ? 1 : 0);
      }
      csv << '\n';
    }
  }
}

}  // namespace tbpos
