#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blmol/graph.hpp"
#include "blmol/nsga2.hpp"
#include "blmol/pipeline.hpp"
#include "blmol/preference_descent.hpp"
#include "blmol/supernet.hpp"
#include "blmol/testbed.hpp"

namespace blmol::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Configuration or input-schema problem; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stage artifact required as input is absent; exit code 3.
class MissingStageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ProblemKind { kTestbed, kSupernetSynth, kSupernetTud };

struct SynthDatasetConfig {
  int graphs = 60;
  int nodes = 20;
  int communities = 3;
  double intra_p = 0.4;
  double inter_p = 0.05;
  double noise = 0.3;
  int lp_per_graph = 10;
};

struct RealizeConfig {
  std::vector<std::vector<double>> targets;  // preference targets in objective space
  int top_k = 0;                             // used when targets is empty
  int repeats = 1;
};

struct RunConfig {
  ProblemKind problem = ProblemKind::kTestbed;
  std::uint64_t seed = 0;
  bool seed_set = false;
  Variant variant = Variant::kBlmol;
  std::string out;
  int jobs = 1;

  int rm = 20;
  int n_samples = 50;    // N_s
  int population = 100;  // N_p
  int generations = 500; // T
  double pc = 1.0;
  double pm = -1.0;  // 1/D
  double eta_c = 20.0;
  double eta_m = 20.0;
  int cv_folds = 5;
  int baseline_budget = 100;

  TrainConfig ll;

  // testbed
  int testbed_genes = 8;
  std::uint64_t testbed_seed = 1;

  // supernet
  SupernetDims supernet;  // feature_dim/classes filled from the dataset
  SynthDatasetConfig synth;
  std::string dataset_path;  // supernet-tud
  int batch_size = 0;

  RealizeConfig realize;
};

/// Parse and validate a config document; unknown keys are rejected with
/// their path. Flags (seed/jobs/out) are applied by the caller afterwards.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Hash of the problem-defining fields (shared across variants and seeds of
/// one problem) and of everything that shapes artifact bytes.
std::string problem_hash(const RunConfig& config);
std::string config_hash(const RunConfig& config);

/// Canonical JSON echo of the resolved config (for meta.json).
std::string config_echo(const RunConfig& config);

struct BuiltProblem {
  BLProblem problem;
  EvolveConfig evolve;
  std::shared_ptr<const MultiTaskDataset> dataset;  // supernet problems
  SupernetDims dims;                                // resolved (with dataset facts)
  std::optional<SyntheticBL> testbed;               // carries the truth oracle
};

/// Instantiate the problem described by the config. For supernet-synth the
/// dataset must already exist in the run directory (gen-data stage); for
/// supernet-tud it is parsed from dataset_path / BLMOL_DATA_DIR.
BuiltProblem build_problem(const RunConfig& config, const std::string& run_dir);

}  // namespace blmol::cli
