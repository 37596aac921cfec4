#include "tbpos/config.hpp"
#include "tbpos/errors.hpp"
#include "tbpos/evaluator.hpp"
#include "tbpos/image_id.hpp"
#include "tbpos/log.hpp"
#include "tbpos/manifest.hpp"
#include "tbpos/ply_io.hpp"
#include "tbpos/query_synth.hpp"
#include "tbpos/registry.hpp"
#include "tbpos/rgbd_io.hpp"
#include "tbpos/slicer.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitRefusedOverwrite = 3;
constexpr int kExitInternalError = 4;

struct GlobalOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 0;
  bool workers_given = false;
  bool force = false;
};

tbpos::RunConfig effective_config(const GlobalOptions& opts) {
  tbpos::RunConfig config;
  if (!opts.config_path.empty()) {
    config = tbpos::load_config_file(opts.config_path);
  }
  if (opts.seed_given) {
    config.master_seed = opts.seed;
  }
  if (opts.workers_given) {
    config.workers = opts.workers;
  }
  return config;
}

void write_config_echo(const tbpos::RunConfig& config, const fs::path& out_dir,
                       const std::string& command) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / ("config." + command + ".txt"), std::ios::trunc);
  if (!out) {
    throw tbpos::IoError("cannot write config echo under " + out_dir.string());
  }
  out << tbpos::render_config(config);
}

int run_slice_db(const std::string& registry_path, const std::string& out_dir,
                 const GlobalOptions& opts) {
  const tbpos::RunConfig config = effective_config(opts);
  const tbpos::ScanRegistry registry = tbpos::load_scan_registry(registry_path);
  if (registry.entries.empty()) {
    throw tbpos::ParseError(registry_path + ": registry lists no scans");
  }

  const fs::path database_dir = fs::path(out_dir) / "database";
  if (fs::exists(database_dir)) {
    if (!opts.force) {
      std::cerr << "refusing to overwrite " << database_dir.string()
                << " (use --force)\n";
      return kExitRefusedOverwrite;
    }
    fs::remove_all(database_dir);
  }
  write_config_echo(config, out_dir, "slice-db");

  std::atomic<int> saturated{0};
  for (const auto& entry : registry.entries) {
    tbpos::PointCloud cloud = tbpos::load_ply(entry.cloud_path);
    cloud.scan_id = entry.scan_id;
    const fs::path scan_dir = database_dir / entry.scan_id;
    fs::create_directories(scan_dir);
    const tbpos::SliceReport report = tbpos::slice_scan(
        cloud, entry.scanner_pose, config.slice,
        [&](tbpos::CutoutResult&& cutout) {
          const auto stats = tbpos::write_rgbd(cutout.image, scan_dir);
          saturated += stats.saturated_depths;
        },
        config.workers);
    std::cout << "scan " << entry.scan_id << ": written=" << report.rendered
              << " skipped=" << report.skipped << " mean_missing=" << std::fixed
              << std::setprecision(4) << report.mean_missing_fraction << '\n';
    std::cout.unsetf(std::ios::fixed);
    for (const auto& skipped_id : report.skipped_ids) {
      tbpos::log_info("skipped cutout " + skipped_id);
    }
  }
  if (saturated > 0) {
    tbpos::log_info("depth saturation warnings: " + std::to_string(saturated.load()));
  }
  return kExitOk;
}

int run_synth_queries(const std::string& registry_path, const std::string& out_dir,
                      int count, const GlobalOptions& opts) {
  if (count <= 0) {
    throw tbpos::ParseError("query count must be positive");
  }
  const tbpos::RunConfig config = effective_config(opts);
  const tbpos::ScanRegistry registry = tbpos::load_scan_registry(registry_path);
  if (registry.entries.empty()) {
    throw tbpos::ParseError(registry_path + ": registry lists no scans");
  }

  const fs::path queries_dir = fs::path(out_dir) / "queries";
  const fs::path manifest_path = fs::path(out_dir) / "manifest.txt";
  if (fs::exists(queries_dir) || fs::exists(manifest_path)) {
    if (!opts.force) {
      std::cerr << "refusing to overwrite " << queries_dir.string() << " / "
                << manifest_path.string() << " (use --force)\n";
      return kExitRefusedOverwrite;
    }
    fs::remove_all(queries_dir);
    fs::remove(manifest_path);
  }
  write_config_echo(config, out_dir, "synth-queries");
  fs::create_directories(queries_dir);

  std::atomic<int> saturated{0};
  const tbpos::SynthesisReport report = tbpos::synthesize_queries(
      registry, count, config.synth, config.master_seed,
      [&](const tbpos::RgbdImage& image) {
        const auto stats = tbpos::write_rgbd(image, queries_dir);
        saturated += stats.saturated_depths;
      },
      config.workers);
  tbpos::write_manifest(report.manifest, manifest_path);
  if (!report.skipped.empty()) {
    std::ofstream append(manifest_path, std::ios::app);
    for (const auto& skip : report.skipped) {
      append << "# skipped query_id=" << skip.query_id << " seed=" << skip.seed << '\n';
    }
  }

  std::cout << "queries written=" << report.written
            << " skipped=" << report.skipped.size() << " occluded=" << report.occluded
            << " flashlit=" << report.flashlit << '\n';
  std::cout << "manifest: " << manifest_path.string() << '\n';
  if (saturated > 0) {
    tbpos::log_info("depth saturation warnings: " + std::to_string(saturated.load()));
  }
  return kExitOk;
}

int run_evaluate(const std::string& manifest_path, const std::string& estimates_path,
                 const std::string& candidates_path, int top_k,
                 const std::string& out_dir, const GlobalOptions& opts) {
  const tbpos::RunConfig config = effective_config(opts);
  const tbpos::QueryManifest manifest = tbpos::read_manifest(manifest_path);
  const auto estimates = tbpos::read_estimates(estimates_path);

  tbpos::EvalReport report = tbpos::evaluate_poses(manifest, estimates, config.eval);
  if (!candidates_path.empty()) {
    const auto candidates = tbpos::read_candidates(candidates_path);
    tbpos::attach_retrieval(report, manifest, candidates, top_k);
  }

  const fs::path out(out_dir);
  if (fs::exists(out / "report.txt") && !opts.force) {
    std::cerr << "refusing to overwrite reports under " << out.string()
              << " (use --force)\n";
    return kExitRefusedOverwrite;
  }
  write_config_echo(config, out, "evaluate");
  tbpos::write_report_files(report, out);
  std::cout << tbpos::format_report(report);
  return kExitOk;
}

int run_stats(const std::string& dataset_dir) {
  const fs::path root(dataset_dir);
  if (!fs::exists(root) || !fs::is_directory(root)) {
    throw tbpos::IoError("dataset directory not found: " + dataset_dir);
  }
  int locations = 0;
  long long database_images = 0;
  const fs::path database_dir = root / "database";
  if (fs::is_directory(database_dir)) {
    for (const auto& scan_entry : fs::directory_iterator(database_dir)) {
      if (!scan_entry.is_directory()) {
        continue;
      }
      ++locations;
      for (const auto& file : fs::directory_iterator(scan_entry.path())) {
        const std::string name = file.path().filename().string();
        if (name.size() > 8 && name.substr(name.size() - 8) == ".rgb.png") {
          ++database_images;
        }
      }
    }
  }
  std::string queries = "n/a";
  const fs::path manifest_path = root / "manifest.txt";
  if (fs::exists(manifest_path)) {
    const tbpos::QueryManifest manifest = tbpos::read_manifest(manifest_path);
    queries = std::to_string(manifest.records.size());
  }
  std::cout << "locations=" << locations << " database=" << database_images
            << " queries=" << queries << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TBPos dataset toolkit: slice laser scans into RGBD databases, "
               "synthesize query images with exact ground truth, and score pose "
               "estimates"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", opts.seed, "master seed for query synthesis")
      ->trigger_on_parse()
      ->each([&](const std::string&) { opts.seed_given = true; });
  app.add_option("--workers", opts.workers, "worker threads (0 = hardware)")
      ->trigger_on_parse()
      ->each([&](const std::string&) { opts.workers_given = true; });
  app.add_flag("--force", opts.force, "overwrite existing outputs");

  std::string registry_path;
  std::string out_dir;
  std::string manifest_path;
  std::string estimates_path;
  std::string candidates_path;
  std::string dataset_dir;
  int query_count = 0;
  int top_k = 10;

  CLI::App* slice = app.add_subcommand(
      "slice-db", "Render the 36-cutout RGBD database for every scan in a registry");
  slice->add_option("registry", registry_path, "scan registry file")->required();
  slice->add_option("out", out_dir, "output dataset directory")->required();
  slice->fallthrough();

  CLI::App* synth = app.add_subcommand(
      "synth-queries", "Synthesize distorted query images with exact ground truth");
  synth->add_option("registry", registry_path, "scan registry file")->required();
  synth->add_option("out", out_dir, "output dataset directory")->required();
  synth->add_option("-n,--count", query_count, "number of queries")->required();
  synth->fallthrough();

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score pose estimates against a query manifest");
  evaluate->add_option("manifest", manifest_path, "query manifest")->required();
  evaluate->add_option("estimates", estimates_path, "pose estimates file")->required();
  evaluate->add_option("--candidates", candidates_path,
                       "ranked retrieval candidates file");
  evaluate->add_option("-k,--top-k", top_k, "retrieval rank cutoff");
  evaluate->add_option("-o,--out", out_dir, "report output directory")
      ->default_val("eval-report");
  evaluate->fallthrough();

  CLI::App* stats = app.add_subcommand("stats", "Print dataset statistics");
  stats->add_option("dataset", dataset_dir, "dataset directory")->required();
  stats->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (slice->parsed()) {
      return run_slice_db(registry_path, out_dir, opts);
    }
    if (synth->parsed()) {
      return run_synth_queries(registry_path, out_dir, query_count, opts);
    }
    if (evaluate->parsed()) {
      return run_evaluate(manifest_path, estimates_path, candidates_path, top_k,
                          out_dir, opts);
    }
    if (stats->parsed()) {
      return run_stats(dataset_dir);
    }
  } catch (const tbpos::ParseError& e) {
    tbpos::log_error(e.what());
    return kExitInputError;
  } catch (const tbpos::IoError& e) {
    tbpos::log_error(e.what());
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    tbpos::log_error(e.what());
    return kExitInputError;
  } catch (const std::exception& e) {
    tbpos::log_error(std::string("internal error: ") + e.what());
    return kExitInternalError;
  }
  return kExitInternalError;
}
