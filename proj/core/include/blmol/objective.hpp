#pragma once

#include <cstddef>
#include <vector>

namespace blmol {

// Vector of objective values, minimization orientation throughout the
// library. Metrics that are maximized (accuracy, AUC) are negated before
// they enter any Pareto operation.
class ObjectiveVector {
 public:
  ObjectiveVector() = default;
  explicit ObjectiveVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const ObjectiveVector& other) const = default;

 private:
  std::vector<double> values_;
};

// Strictly positive preference vector, normalized to sum 1 at construction.
class PreferenceVector {
 public:
  PreferenceVector() = default;
  explicit PreferenceVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const PreferenceVector& other) const = default;

 private:
  std::vector<double> values_;
};

// All weight vectors with entries in {0/H, ..., H/H} summing to 1, in
// lexicographic order of the integer compositions. Zero entries are clamped
// to 1e-6 and the vector renormalized, so every member is strictly positive.
// Count is C(H+m-1, m-1).
std::vector<PreferenceVector> simplex_lattice(int m, int H);

}  // namespace blmol
