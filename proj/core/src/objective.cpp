#include "blmol/objective.hpp"

#include <cmath>
#include <string>

#include "blmol/errors.hpp"

namespace blmol {

ObjectiveVector::ObjectiveVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ContractError("ObjectiveVector: empty");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ContractError("ObjectiveVector: non-finite entry");
  }
}

PreferenceVector::PreferenceVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ContractError("PreferenceVector: empty");
  double sum = 0.0;
  for (double v : values_) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ContractError("PreferenceVector: entries must be finite and > 0");
    sum += v;
  }
  for (double& v : values_) v /= sum;
}

namespace {

void compositions(int m, int H, int pos, int left, std::vector<int>& cur,
                  std::vector<PreferenceVector>& out) {
  if (pos == m - 1) {
    cur[pos] = left;
    std::vector<double> v(m);
    for (int i = 0; i < m; ++i) {
      v[i] = static_cast<double>(cur[i]) / H;
      if (v[i] == 0.0) v[i] = 1e-6;
    }
    out.emplace_back(std::move(v));  // ctor renormalizes
    return;
  }
  for (int k = 0; k <= left; ++k) {
    cur[pos] = k;
    compositions(m, H, pos + 1, left - k, cur, out);
  }
}

}  // namespace

std::vector<PreferenceVector> simplex_lattice(int m, int H) {
  if (m < 2) throw ContractError("simplex_lattice: m must be >= 2");
  if (H < 1) throw ContractError("simplex_lattice: H must be >= 1");
  std::vector<PreferenceVector> out;
  std::vector<int> cur(m, 0);
  compositions(m, H, 0, H, cur, out);
  return out;
}

}  // namespace blmol
