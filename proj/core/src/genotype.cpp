#include "blmol/genotype.hpp"

#include <string>

#include "blmol/errors.hpp"

namespace blmol {

void validate_genotype(const Genotype& g, const std::vector<GeneSpec>& spec) {
  if (g.genes.size() != spec.size())
    throw ContractError("genotype: length " + std::to_string(g.genes.size()) +
                        " does not match spec length " + std::to_string(spec.size()));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (g.genes[i] < spec[i].low || g.genes[i] > spec[i].high)
      throw ContractError("genotype: gene " + std::to_string(i) + " value " +
                          std::to_string(g.genes[i]) + " outside [" +
                          std::to_string(spec[i].low) + ", " + std::to_string(spec[i].high) + "]");
  }
}

Genotype sample_genotype(const std::vector<GeneSpec>& spec, RandomStream& rng) {
  Genotype g;
  g.genes.reserve(spec.size());
  for (const GeneSpec& s : spec) {
    g.genes.push_back(static_cast<int>(rng.next_int(s.low, s.high)));
  }
  return g;
}

}  // namespace blmol
