#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace blmol::cli {

struct StagePaths {
  std::string run_dir;

  std::string dataset_json() const { return run_dir + "/dataset.json"; }
  std::string dataset_manifest() const { return run_dir + "/dataset_manifest.json"; }
  std::string samples_csv() const { return run_dir + "/samples.csv"; }
  std::string surrogates_json() const { return run_dir + "/surrogates.json"; }
  std::string fit_report_csv() const { return run_dir + "/fit_report.csv"; }
  std::string archive_csv() const { return run_dir + "/archive.csv"; }
  std::string realized_csv() const { return run_dir + "/realized.csv"; }
  std::string meta_json() const { return run_dir + "/meta.json"; }
};

// Each stage reads its predecessors' artifacts from the run directory and
// never recomputes them. With resume=true a stage whose output already
// carries the current hashes is skipped.
void stage_gen_data(const RunConfig& config, const std::string& run_dir, bool resume);
void stage_sample(const RunConfig& config, const std::string& run_dir, bool resume);
void stage_fit(const RunConfig& config, const std::string& run_dir, bool resume);
void stage_search(const RunConfig& config, const std::string& run_dir, bool resume);
void stage_realize(const RunConfig& config, const std::string& run_dir, bool resume);
/// Full pipeline for the configured variant: direct evaluation loop for
/// random_search, sample+fit+search+realize for the blmol variants.
void stage_baseline(const RunConfig& config, const std::string& run_dir, bool resume);

/// Aggregate realized fronts of several run directories: report.csv (one row
/// per realized solution) and hv_table.csv (per-run hypervolume against the
/// reference point plus per-variant mean/std/median rows). Runs must share
/// the problem hash.
void stage_report(const std::vector<std::string>& run_dirs, const std::vector<double>& ref_point,
                  const std::string& out_dir);

/// Quick internal checks; prints one line per check, returns the failure count.
int run_selftest();

}  // namespace blmol::cli
