#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "blmol/genotype.hpp"
#include "blmol/nsga2.hpp"
#include "blmol/objective.hpp"
#include "blmol/pareto.hpp"
#include "blmol/preference_descent.hpp"
#include "blmol/rng.hpp"
#include "blmol/surrogate.hpp"

namespace blmol {

// One bi-level problem instance: mixed genotype (preference index as the
// last gene), lower-level training oracle per genotype, and upper-level
// evaluators on the validation data.
struct BLProblem {
  std::vector<GeneSpec> genes;
  int pref_gene = -1;  // -1 when the preference is not part of the search
  std::vector<PreferenceVector> prefs;
  FeatureLayout encoding;
  std::vector<std::string> objective_names;
  std::vector<bool> maximize_display;  // true: metric is maximized, stored negated
  TrainConfig ll;
  std::function<std::unique_ptr<LossGradOracle>(const Genotype&, RandomStream)> oracle_factory;
  // Returns displayed metric values (orientation per maximize_display).
  std::function<std::vector<double>(const Genotype&, const std::vector<double>&)> ul_evaluate;
  std::shared_ptr<std::atomic<long>> budget = std::make_shared<std::atomic<long>>(0);

  std::size_t objective_count() const { return objective_names.size(); }
  PreferenceVector preference_of(const Genotype& g) const;
  /// Display metrics -> minimization orientation.
  ObjectiveVector to_minimization(const std::vector<double>& display) const;
  std::vector<double> to_display(const ObjectiveVector& mins) const;
};

enum class Variant { kBlmol, kBlmolI, kBlmolWs, kRandomSearch };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Adjusts the problem and evolve config in place for the baseline variants:
/// frozen preference gene for blmol_i, uniform weighted-sum training plus a
/// preference-free encoding (and frozen gene) for blmol_ws.
void apply_variant(BLProblem& problem, EvolveConfig& evolve, Variant variant);

struct TrainedEval {
  Genotype genome;
  std::vector<double> display;  // UL metrics, display orientation
  ObjectiveVector objectives;   // minimization orientation
  bool ok = false;
  std::string error;
};

/// One true evaluation: build the oracle, train to the genome's preference,
/// evaluate the UL metrics. Increments the problem's budget counter.
TrainedEval train_and_evaluate(const BLProblem& problem, const Genotype& genome,
                               RandomStream rng);

/// Uniform sample of genomes (preference index gene included); duplicates
/// are re-drawn up to 10 times and then accepted.
std::vector<Genotype> sample_pairs(const BLProblem& problem, int n, RandomStream rng);

struct PSMResult {
  SampleTable table;             // one row per valid sample
  std::vector<Genotype> genomes; // aligned with table rows
  SelectionReport selection;     // CV scores and the selected surrogates
};

/// Algorithm-1 pipeline: sample, train each pair (index-parallel map),
/// assemble the table, select a surrogate per objective. Aborts when more
/// than 20% of the trainings fail.
PSMResult build_psm(const BLProblem& problem, int n_samples, int folds, int jobs,
                    RandomStream rng);

/// Surrogate-driven NSGA-II over (genotype, preference). Consumes no true
/// evaluations; the returned archive objectives are surrogate predictions in
/// minimization orientation.
ParetoArchive<Genotype> surrogate_search(const BLProblem& problem,
                                         const std::vector<FittedSurrogate>& surrogates,
                                         const EvolveConfig& evolve, RandomStream rng);

struct RealizedSolution {
  Genotype genome;
  int target = 0;  // which preference target (or rank for top-k)
  int repeat = 0;
  std::vector<double> display;
  ObjectiveVector objectives;
  ObjectiveVector predicted;  // archive prediction for the genome
};

struct RunArtifacts {
  ParetoArchive<Genotype> predicted_archive;
  std::vector<RealizedSolution> realized;
  long true_evaluations = 0;
};

/// Pick the archive member whose min-max-normalized quality profile is
/// closest (Euclidean) to each target direction and retrain it `repeats`
/// times with independent derived seeds.
RunArtifacts realize(const BLProblem& problem, const ParetoArchive<Genotype>& archive,
                     const std::vector<PreferenceVector>& targets, int repeats, int jobs,
                     RandomStream rng);

/// Realize the k most spread archive members (crowding order).
RunArtifacts realize_topk(const BLProblem& problem, const ParetoArchive<Genotype>& archive,
                          int k, int repeats, int jobs, RandomStream rng);

/// True-evaluation random search at the given budget; the archive holds the
/// non-dominated subset of the evaluated genomes under true objectives.
RunArtifacts random_search(const BLProblem& problem, int budget, int jobs, RandomStream rng);

}  // namespace blmol
