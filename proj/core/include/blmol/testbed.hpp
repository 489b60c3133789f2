#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "blmol/pipeline.hpp"
#include "blmol/preference_descent.hpp"
#include "blmol/rng.hpp"

namespace blmol {

// Convex quadratic multi-objective problem: F_i(w) = 0.5 * scale_i *
// ||w - center_i||^2. Optional box constraint bounds the reachable front
// (disjoint-preference-ray instances).
struct QuadraticMOProblem {
  std::vector<std::vector<double>> centers;  // one per objective, same dim
  std::vector<double> scales;                // defaults to 1
  std::optional<std::pair<std::vector<double>, std::vector<double>>> box;  // lo, hi

  std::size_t dim() const { return centers.empty() ? 0 : centers[0].size(); }
  std::size_t objectives() const { return centers.size(); }
};

std::unique_ptr<LossGradOracle> quad_oracle(QuadraticMOProblem problem);

/// Exact preference-balanced Pareto weight for a two-objective quadratic
/// problem: the point on the segment [c1, c2] where r1 F1 = r2 F2.
std::vector<double> exact_pareto_weight(const QuadraticMOProblem& problem,
                                        const PreferenceVector& r);

// Bi-level problem over quadratics with closed-form truth: binary genes
// toggle per-component offsets on the lower-level centers, and the upper
// level scores the trained weights against shifted validation centers.
struct SyntheticBLConfig {
  int binary_genes = 8;
  int pref_count = 20;     // preference lattice size (two LL objectives)
  std::uint64_t seed = 1;  // shapes the gene-to-center offsets
  int ll_steps = 400;
  double ll_lr = 0.1;
};

struct SyntheticBL {
  BLProblem problem;
  // Closed-form evaluation: exact Pareto weight, no gradient training.
  std::function<std::vector<double>(const Genotype&)> truth;
  std::function<QuadraticMOProblem(const Genotype&)> ll_of;
};

SyntheticBL synthetic_bl(const SyntheticBLConfig& config);

}  // namespace blmol
