#pragma once

#include <functional>
#include <unordered_set>
#include <vector>

#include "blmol/genotype.hpp"
#include "blmol/objective.hpp"
#include "blmol/pareto.hpp"
#include "blmol/rng.hpp"

namespace blmol {

struct EvolveConfig {
  int population = 100;      // N_p, even and >= 4
  int generations = 500;     // T
  double pc = 1.0;           // whole-pair crossover gate
  double pm = -1.0;          // per-gene mutation rate; <0 means 1/D
  double eta_c = 20.0;       // SBX distribution index
  double eta_m = 20.0;       // polynomial mutation distribution index
  std::vector<std::size_t> frozen_genes;  // excluded from crossover and mutation
  int jobs = 1;              // parallelism of the per-generation evaluation map
};

/// SBX crossover in real space, rounded to the nearest integer and clamped
/// to the gene bounds. The whole pair is crossed with probability pc; each
/// gene independently participates with probability 0.5.
std::pair<Genotype, Genotype> sbx_crossover(const Genotype& p1, const Genotype& p2,
                                            const std::vector<GeneSpec>& spec, double eta_c,
                                            double pc, RandomStream& rng);

/// Polynomial mutation, round-and-clamp repair per gene.
Genotype pm_mutation(const Genotype& g, const std::vector<GeneSpec>& spec, double eta_m,
                     double pm, RandomStream& rng);

// Variants that leave a fixed set of genes untouched (preference gene in the
// frozen-preference pipeline variants).
std::pair<Genotype, Genotype> sbx_crossover_frozen(const Genotype& p1, const Genotype& p2,
                                                   const std::vector<GeneSpec>& spec,
                                                   double eta_c, double pc, RandomStream& rng,
                                                   const std::vector<std::size_t>& frozen);
Genotype pm_mutation_frozen(const Genotype& g, const std::vector<GeneSpec>& spec, double eta_m,
                            double pm, RandomStream& rng,
                            const std::vector<std::size_t>& frozen);

struct RankedIndividual {
  std::size_t rank = 0;
  double crowding = 0.0;
};

/// Binary tournament on (rank asc, crowding desc), ties broken by coin flip.
std::size_t binary_tournament(const std::vector<RankedIndividual>& pop, RandomStream& rng);

/// Rank-then-crowding truncation of a merged population down to n_keep.
std::vector<std::size_t> environmental_selection(const std::vector<ObjectiveVector>& merged,
                                                 std::size_t n_keep);

struct Nsga2Result {
  ParetoArchive<Genotype> archive;           // deduplicated non-dominated subset
  std::vector<Genotype> final_population;
  std::vector<ObjectiveVector> final_objectives;
};

/// NSGA-II over a mixed integer genotype. `evaluate` must be deterministic
/// per genotype; per-generation evaluation runs as an index-keyed parallel
/// map, so results do not depend on the number of jobs.
Nsga2Result nsga2_run(const std::function<ObjectiveVector(const Genotype&)>& evaluate,
                      const std::vector<GeneSpec>& spec, const EvolveConfig& config,
                      RandomStream rng);

}  // namespace blmol
