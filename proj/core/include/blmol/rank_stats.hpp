#pragma once

#include <vector>

namespace blmol {

/// Kendall rank correlation, tau-b tie correction. Returns 0 when either
/// input is constant (the correlation is undefined there).
double kendall_tau(const std::vector<double>& a, const std::vector<double>& b);

/// Spearman rank correlation with average ranks for ties; 0 for constant
/// input, matching kendall_tau's convention.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Mean squared error.
double mse(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace blmol
