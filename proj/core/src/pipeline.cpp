#include "blmol/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "blmol/errors.hpp"
#include "blmol/parallel.hpp"

namespace blmol {

PreferenceVector BLProblem::preference_of(const Genotype& g) const {
  if (pref_gene < 0) {
    // No searched preference: train with the uniform trade-off.
    const std::size_t m = prefs.empty() ? objective_count() : prefs[0].size();
    return PreferenceVector(std::vector<double>(m, 1.0));
  }
  const GeneSpec& gs = genes[static_cast<std::size_t>(pref_gene)];
  const int idx = g.genes[static_cast<std::size_t>(pref_gene)] - gs.low;
  if (idx < 0 || idx >= static_cast<int>(prefs.size()))
    throw ContractError("preference_of: index gene out of range");
  return prefs[static_cast<std::size_t>(idx)];
}

ObjectiveVector BLProblem::to_minimization(const std::vector<double>& display) const {
  std::vector<double> v(display);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (maximize_display[i]) v[i] = -v[i];
  }
  return ObjectiveVector(std::move(v));
}

std::vector<double> BLProblem::to_display(const ObjectiveVector& mins) const {
  std::vector<double> v(mins.values());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (maximize_display[i]) v[i] = -v[i];
  }
  return v;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kBlmol: return "blmol";
    case Variant::kBlmolI: return "blmol_i";
    case Variant::kBlmolWs: return "blmol_ws";
    case Variant::kRandomSearch: return "random_search";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "blmol") return Variant::kBlmol;
  if (name == "blmol_i") return Variant::kBlmolI;
  if (name == "blmol_ws") return Variant::kBlmolWs;
  if (name == "random_search") return Variant::kRandomSearch;
  throw ContractError("unknown variant: " + name);
}

void apply_variant(BLProblem& problem, EvolveConfig& evolve, Variant variant) {
  switch (variant) {
    case Variant::kBlmol:
    case Variant::kRandomSearch:
      return;
    case Variant::kBlmolI:
      // Preference stays a random per-individual draw, excluded from variation.
      if (problem.pref_gene >= 0)
        evolve.frozen_genes.push_back(static_cast<std::size_t>(problem.pref_gene));
      return;
    case Variant::kBlmolWs:
      problem.ll.solver = Solver::kWs;
      problem.encoding = make_feature_layout(problem.genes, 0);
      if (problem.pref_gene >= 0)
        evolve.frozen_genes.push_back(static_cast<std::size_t>(problem.pref_gene));
      return;
  }
}

TrainedEval train_and_evaluate(const BLProblem& problem, const Genotype& genome,
                               RandomStream rng) {
  problem.budget->fetch_add(1);
  TrainedEval out;
  out.genome = genome;
  try {
    auto oracle = problem.oracle_factory(genome, rng.derive("oracle"));
    const PreferenceVector r = problem.preference_of(genome);
    const TrainTrace trace = train_preference(*oracle, r, problem.ll, rng.derive("train"));
    out.display = problem.ul_evaluate(genome, trace.final_weights);
    out.objectives = problem.to_minimization(out.display);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

std::vector<Genotype> sample_pairs(const BLProblem& problem, int n, RandomStream rng) {
  std::vector<Genotype> out;
  std::set<std::vector<int>> seen;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    RandomStream r = rng.derive(static_cast<std::uint64_t>(i));
    Genotype g = sample_genotype(problem.genes, r);
    for (int attempt = 0; attempt < 10 && seen.count(g.genes); ++attempt) {
      g = sample_genotype(problem.genes, r);
    }
    seen.insert(g.genes);
    out.push_back(std::move(g));
  }
  return out;
}

PSMResult build_psm(const BLProblem& problem, int n_samples, int folds, int jobs,
                    RandomStream rng) {
  const std::vector<Genotype> genomes = sample_pairs(problem, n_samples, rng.derive("sample"));
  std::vector<TrainedEval> evals(genomes.size());
  RandomStream train_rng = rng.derive("train");
  parallel_for(genomes.size(), jobs, [&](std::size_t i) {
    evals[i] = train_and_evaluate(problem, genomes[i], train_rng.derive(i));
  });

  PSMResult result;
  result.table.layout = problem.encoding;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (!evals[i].ok) {
      ++failed;
      continue;
    }
    result.table.features.push_back(
        encode_input(genomes[i], problem.genes, problem.prefs, problem.encoding));
    result.table.targets.push_back(evals[i].display);
    result.genomes.push_back(genomes[i]);
  }
  if (failed * 5 > genomes.size()) {
    throw NumericError("build_psm: " + std::to_string(failed) + " of " +
                       std::to_string(genomes.size()) + " trainings failed");
  }

  const std::vector<SurrogateKind> kinds{SurrogateKind::kForest, SurrogateKind::kGpRbf,
                                         SurrogateKind::kKnn};
  result.selection =
      select_best(result.table, kinds, folds, FitHyper{}, rng.derive("select"));
  return result;
}

ParetoArchive<Genotype> surrogate_search(const BLProblem& problem,
                                         const std::vector<FittedSurrogate>& surrogates,
                                         const EvolveConfig& evolve, RandomStream rng) {
  if (surrogates.size() != problem.objective_count())
    throw ContractError("surrogate_search: one surrogate per objective required");
  const auto evaluate = [&](const Genotype& g) {
    const auto features = encode_input(g, problem.genes, problem.prefs, problem.encoding);
    std::vector<double> v(problem.objective_count());
    for (std::size_t i = 0; i < surrogates.size(); ++i) {
      v[i] = surrogates[i].predict(features);
      if (problem.maximize_display[i]) v[i] = -v[i];
    }
    return ObjectiveVector(std::move(v));
  };
  return nsga2_run(evaluate, problem.genes, evolve, rng.derive("nsga2")).archive;
}

namespace {

// Quality profile in [0,1]^m: 1 is the most desirable end of each objective
// over the archive (min-max normalized).
std::vector<std::vector<double>> quality_profiles(const BLProblem& problem,
                                                  const ParetoArchive<Genotype>& archive) {
  const std::size_t m = problem.objective_count();
  const auto& members = archive.members();
  std::vector<double> lo(m, 1e300), hi(m, -1e300);
  for (const auto& mem : members) {
    for (std::size_t j = 0; j < m; ++j) {
      lo[j] = std::min(lo[j], mem.objectives[j]);
      hi[j] = std::max(hi[j], mem.objectives[j]);
    }
  }
  std::vector<std::vector<double>> q(members.size(), std::vector<double>(m, 0.5));
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double range = hi[j] - lo[j];
      if (range <= 0.0) continue;
      // Objectives are minimization-oriented: low value = high quality.
      q[i][j] = (hi[j] - members[i].objectives[j]) / range;
    }
  }
  return q;
}

RunArtifacts realize_members(const BLProblem& problem, const ParetoArchive<Genotype>& archive,
                             const std::vector<std::size_t>& member_of_target, int repeats,
                             int jobs, RandomStream rng) {
  RunArtifacts artifacts;
  artifacts.predicted_archive = archive;
  const long budget_before = problem.budget->load();

  struct Job {
    std::size_t member;
    int target;
    int repeat;
  };
  std::vector<Job> jobs_list;
  for (std::size_t t = 0; t < member_of_target.size(); ++t) {
    for (int rep = 0; rep < repeats; ++rep) {
      jobs_list.push_back(Job{member_of_target[t], static_cast<int>(t), rep});
    }
  }
  std::vector<RealizedSolution> solutions(jobs_list.size());
  RandomStream run_rng = rng.derive("realize");
  parallel_for(jobs_list.size(), jobs, [&](std::size_t i) {
    const Job& job = jobs_list[i];
    const auto& member = archive.members()[job.member];
    RandomStream r = run_rng.derive(static_cast<std::uint64_t>(job.target))
                         .derive(static_cast<std::uint64_t>(job.repeat));
    TrainedEval ev = train_and_evaluate(problem, member.payload, r);
    if (!ev.ok) throw NumericError("realize: training failed: " + ev.error);
    RealizedSolution sol;
    sol.genome = member.payload;
    sol.target = job.target;
    sol.repeat = job.repeat;
    sol.display = ev.display;
    sol.objectives = ev.objectives;
    sol.predicted = member.objectives;
    solutions[i] = std::move(sol);
  });
  artifacts.realized = std::move(solutions);
  artifacts.true_evaluations = problem.budget->load() - budget_before;
  return artifacts;
}

}  // namespace

RunArtifacts realize(const BLProblem& problem, const ParetoArchive<Genotype>& archive,
                     const std::vector<PreferenceVector>& targets, int repeats, int jobs,
                     RandomStream rng) {
  if (archive.empty()) throw ContractError("realize: empty archive");
  const auto q = quality_profiles(problem, archive);
  std::vector<std::size_t> picks;
  for (const PreferenceVector& target : targets) {
    if (target.size() != problem.objective_count())
      throw ContractError("realize: target length mismatch");
    std::size_t best = 0;
    double best_dist = 1e300;
    for (std::size_t i = 0; i < q.size(); ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < q[i].size(); ++j) {
        const double diff = q[i][j] - target[j];
        d += diff * diff;
      }
      if (d < best_dist - 1e-15) {
        best_dist = d;
        best = i;
      }
    }
    picks.push_back(best);
  }
  return realize_members(problem, archive, picks, repeats, jobs, rng);
}

RunArtifacts realize_topk(const BLProblem& problem, const ParetoArchive<Genotype>& archive,
                          int k, int repeats, int jobs, RandomStream rng) {
  if (archive.empty()) throw ContractError("realize: empty archive");
  std::vector<ObjectiveVector> objs;
  for (const auto& m : archive.members()) objs.push_back(m.objectives);
  const auto crowd = crowding_distance(objs);
  std::vector<std::size_t> order(objs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(k)));
  return realize_members(problem, archive, order, repeats, jobs, rng);
}

RunArtifacts random_search(const BLProblem& problem, int budget, int jobs, RandomStream rng) {
  const std::vector<Genotype> genomes = sample_pairs(problem, budget, rng.derive("sample"));
  const long budget_before = problem.budget->load();
  std::vector<TrainedEval> evals(genomes.size());
  RandomStream train_rng = rng.derive("train");
  parallel_for(genomes.size(), jobs, [&](std::size_t i) {
    evals[i] = train_and_evaluate(problem, genomes[i], train_rng.derive(i));
  });

  RunArtifacts artifacts;
  std::set<std::vector<int>> seen;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (!evals[i].ok) continue;
    RealizedSolution sol;
    sol.genome = genomes[i];
    sol.target = static_cast<int>(i);
    sol.repeat = 0;
    sol.display = evals[i].display;
    sol.objectives = evals[i].objectives;
    sol.predicted = evals[i].objectives;
    artifacts.realized.push_back(std::move(sol));
    if (seen.insert(genomes[i].genes).second) {
      artifacts.predicted_archive.insert(genomes[i], evals[i].objectives);
    }
  }
  artifacts.true_evaluations = problem.budget->load() - budget_before;
  return artifacts;
}

}  // namespace blmol
