#pragma once

#include <cstddef>
#include <vector>

#include "blmol/rng.hpp"

namespace blmol {

enum class GeneKind {
  kBinary,       // {0, 1} gate
  kCategorical,  // unordered choice, one-hot encoded for surrogates
  kIndex,        // ordinal index into an external table (preference set)
};

struct GeneSpec {
  GeneKind kind = GeneKind::kBinary;
  int low = 0;
  int high = 1;

  int span() const { return high - low + 1; }
};

struct Genotype {
  std::vector<int> genes;

  bool operator==(const Genotype& other) const = default;
};

/// Throws ContractError when a gene is outside its spec bounds or the
/// lengths disagree.
void validate_genotype(const Genotype& g, const std::vector<GeneSpec>& spec);

/// Uniform draw over the gene space.
Genotype sample_genotype(const std::vector<GeneSpec>& spec, RandomStream& rng);

}  // namespace blmol
