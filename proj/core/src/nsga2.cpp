#include "blmol/nsga2.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>

#include "blmol/errors.hpp"
#include "blmol/parallel.hpp"

namespace blmol {

namespace {

int round_clamp(double x, const GeneSpec& s) {
  const double r = std::nearbyint(x);
  if (r < s.low) return s.low;
  if (r > s.high) return s.high;
  return static_cast<int>(r);
}

bool is_frozen(const std::vector<std::size_t>& frozen, std::size_t i) {
  return std::find(frozen.begin(), frozen.end(), i) != frozen.end();
}

}  // namespace

std::pair<Genotype, Genotype> sbx_crossover(const Genotype& p1, const Genotype& p2,
                                            const std::vector<GeneSpec>& spec, double eta_c,
                                            double pc, RandomStream& rng) {
  return sbx_crossover_frozen(p1, p2, spec, eta_c, pc, rng, {});
}

std::pair<Genotype, Genotype> sbx_crossover_frozen(const Genotype& p1, const Genotype& p2,
                                                   const std::vector<GeneSpec>& spec,
                                                   double eta_c, double pc, RandomStream& rng,
                                                   const std::vector<std::size_t>& frozen) {
  validate_genotype(p1, spec);
  validate_genotype(p2, spec);
  Genotype c1 = p1, c2 = p2;
  if (rng.next_double() >= pc) return {c1, c2};
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (is_frozen(frozen, i)) continue;
    if (rng.next_double() >= 0.5) continue;
    const double x1 = p1.genes[i];
    const double x2 = p2.genes[i];
    const double u = rng.next_double();
    const double beta = (u < 0.5) ? std::pow(2.0 * u, 1.0 / (eta_c + 1.0))
                                  : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta_c + 1.0));
    const double y1 = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2);
    const double y2 = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2);
    if (rng.next_double() < 0.5) {
      c1.genes[i] = round_clamp(y1, spec[i]);
      c2.genes[i] = round_clamp(y2, spec[i]);
    } else {
      c1.genes[i] = round_clamp(y2, spec[i]);
      c2.genes[i] = round_clamp(y1, spec[i]);
    }
  }
  return {c1, c2};
}

Genotype pm_mutation(const Genotype& g, const std::vector<GeneSpec>& spec, double eta_m,
                     double pm, RandomStream& rng) {
  return pm_mutation_frozen(g, spec, eta_m, pm, rng, {});
}

Genotype pm_mutation_frozen(const Genotype& g, const std::vector<GeneSpec>& spec, double eta_m,
                            double pm, RandomStream& rng,
                            const std::vector<std::size_t>& frozen) {
  validate_genotype(g, spec);
  Genotype out = g;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (is_frozen(frozen, i)) continue;
    if (rng.next_double() >= pm) continue;
    // Perturb on the half-extended interval so small integer ranges (binary
    // gates in particular) keep a nonzero chance of crossing a rounding
    // boundary; eta 20 otherwise concentrates the noise far inside one cell.
    const double lo = spec[i].low - 0.5;
    const double hi = spec[i].high + 0.5;
    const double range = hi - lo;
    if (spec[i].high <= spec[i].low) continue;
    const double x = out.genes[i];
    const double d1 = (x - lo) / range;
    const double d2 = (hi - x) / range;
    const double u = rng.next_double();
    const double mpow = 1.0 / (eta_m + 1.0);
    double delta;
    if (u < 0.5) {
      const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta_m + 1.0);
      delta = std::pow(val, mpow) - 1.0;
    } else {
      const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta_m + 1.0);
      delta = 1.0 - std::pow(val, mpow);
    }
    out.genes[i] = round_clamp(x + delta * range, spec[i]);
  }
  return out;
}

std::size_t binary_tournament(const std::vector<RankedIndividual>& pop, RandomStream& rng) {
  if (pop.empty()) throw ContractError("binary_tournament: empty population");
  const auto a = static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(pop.size()) - 1));
  const auto b = static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(pop.size()) - 1));
  if (pop[a].rank != pop[b].rank) return pop[a].rank < pop[b].rank ? a : b;
  if (pop[a].crowding != pop[b].crowding) return pop[a].crowding > pop[b].crowding ? a : b;
  return rng.next_double() < 0.5 ? a : b;
}

std::vector<std::size_t> environmental_selection(const std::vector<ObjectiveVector>& merged,
                                                 std::size_t n_keep) {
  if (n_keep > merged.size())
    throw ContractError("environmental_selection: n_keep exceeds population");
  const auto fronts = non_dominated_sort(merged);
  std::vector<std::size_t> kept;
  kept.reserve(n_keep);
  for (const auto& front : fronts) {
    if (kept.size() + front.size() <= n_keep) {
      kept.insert(kept.end(), front.begin(), front.end());
      if (kept.size() == n_keep) break;
      continue;
    }
    std::vector<ObjectiveVector> pts;
    pts.reserve(front.size());
    for (std::size_t i : front) pts.push_back(merged[i]);
    const std::vector<double> crowd = crowding_distance(pts);
    // Duplicate objective vectors share one crowding value, so truncation
    // keeps the first copy of each distinct vector ahead of repeats; repeats
    // of one point must not crowd out distinct points.
    std::vector<bool> is_repeat(front.size(), false);
    std::vector<std::vector<double>> seen;
    for (std::size_t k = 0; k < front.size(); ++k) {
      const auto& v = pts[k].values();
      if (std::find(seen.begin(), seen.end(), v) != seen.end()) {
        is_repeat[k] = true;
      } else {
        seen.push_back(v);
      }
    }
    std::vector<std::size_t> order(front.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (is_repeat[a] != is_repeat[b]) return !is_repeat[a];
      return crowd[a] > crowd[b];
    });
    for (std::size_t k = 0; kept.size() < n_keep; ++k) kept.push_back(front[order[k]]);
    break;
  }
  return kept;
}

namespace {

struct RankingInfo {
  std::vector<RankedIndividual> ranked;
};

RankingInfo rank_population(const std::vector<ObjectiveVector>& objectives) {
  RankingInfo info;
  info.ranked.resize(objectives.size());
  const auto fronts = non_dominated_sort(objectives);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    std::vector<ObjectiveVector> pts;
    pts.reserve(fronts[f].size());
    for (std::size_t i : fronts[f]) pts.push_back(objectives[i]);
    const std::vector<double> crowd = crowding_distance(pts);
    for (std::size_t k = 0; k < fronts[f].size(); ++k) {
      info.ranked[fronts[f][k]] = RankedIndividual{f, crowd[k]};
    }
  }
  return info;
}

}  // namespace

Nsga2Result nsga2_run(const std::function<ObjectiveVector(const Genotype&)>& evaluate,
                      const std::vector<GeneSpec>& spec, const EvolveConfig& config,
                      RandomStream rng) {
  if (config.population < 4 || config.population % 2 != 0)
    throw ContractError("nsga2_run: population must be even and >= 4");
  const auto n_pop = static_cast<std::size_t>(config.population);
  const double pm = config.pm < 0.0 ? 1.0 / static_cast<double>(spec.size()) : config.pm;

  const auto evaluate_all = [&](const std::vector<Genotype>& pop,
                                std::vector<ObjectiveVector>& out) {
    out.resize(pop.size());
    std::exception_ptr first_error;
    std::mutex mu;
    parallel_for(pop.size(), config.jobs, [&](std::size_t i) {
      try {
        out[i] = evaluate(pop[i]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) {
          std::string genes = "[";
          for (std::size_t k = 0; k < pop[i].genes.size(); ++k) {
            if (k) genes += ",";
            genes += std::to_string(pop[i].genes[k]);
          }
          genes += "]";
          first_error = std::make_exception_ptr(
              NumericError("nsga2_run: evaluator failed on genotype " + genes + ": " + e.what()));
        }
      }
    });
    if (first_error) std::rethrow_exception(first_error);
  };

  RandomStream init_rng = rng.derive("init");
  std::vector<Genotype> population;
  population.reserve(n_pop);
  for (std::size_t i = 0; i < n_pop; ++i) {
    RandomStream r = init_rng.derive(i);
    population.push_back(sample_genotype(spec, r));
  }
  std::vector<ObjectiveVector> objectives;
  evaluate_all(population, objectives);

  for (int gen = 0; gen < config.generations; ++gen) {
    RandomStream gen_rng = rng.derive("gen").derive(static_cast<std::uint64_t>(gen));
    const RankingInfo info = rank_population(objectives);

    std::vector<Genotype> offspring;
    offspring.reserve(n_pop);
    RandomStream mate_rng = gen_rng.derive("mate");
    while (offspring.size() < n_pop) {
      const std::size_t pa = binary_tournament(info.ranked, mate_rng);
      const std::size_t pb = binary_tournament(info.ranked, mate_rng);
      auto [c1, c2] = sbx_crossover_frozen(population[pa], population[pb], spec, config.eta_c,
                                           config.pc, mate_rng, config.frozen_genes);
      offspring.push_back(
          pm_mutation_frozen(c1, spec, config.eta_m, pm, mate_rng, config.frozen_genes));
      offspring.push_back(
          pm_mutation_frozen(c2, spec, config.eta_m, pm, mate_rng, config.frozen_genes));
    }

    std::vector<ObjectiveVector> off_objectives;
    evaluate_all(offspring, off_objectives);

    std::vector<Genotype> merged = population;
    merged.insert(merged.end(), offspring.begin(), offspring.end());
    std::vector<ObjectiveVector> merged_obj = objectives;
    merged_obj.insert(merged_obj.end(), off_objectives.begin(), off_objectives.end());

    const std::vector<std::size_t> kept = environmental_selection(merged_obj, n_pop);
    std::vector<Genotype> next_pop;
    std::vector<ObjectiveVector> next_obj;
    next_pop.reserve(n_pop);
    next_obj.reserve(n_pop);
    for (std::size_t i : kept) {
      next_pop.push_back(merged[i]);
      next_obj.push_back(merged_obj[i]);
    }
    population = std::move(next_pop);
    objectives = std::move(next_obj);
  }

  Nsga2Result result;
  const auto fronts = non_dominated_sort(objectives);
  if (!fronts.empty()) {
    std::vector<Genotype> seen;
    for (std::size_t i : fronts[0]) {
      if (std::find(seen.begin(), seen.end(), population[i]) != seen.end()) continue;
      seen.push_back(population[i]);
      result.archive.insert(population[i], objectives[i]);
    }
  }
  result.final_population = std::move(population);
  result.final_objectives = std::move(objectives);
  return result;
}

}  // namespace blmol
