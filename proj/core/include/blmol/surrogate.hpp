#pragma once

#include <string>
#include <utility>
#include <vector>

#include "blmol/genotype.hpp"
#include "blmol/objective.hpp"
#include "blmol/rng.hpp"

namespace blmol {

struct FeatureSegment {
  GeneKind kind = GeneKind::kBinary;
  std::size_t gene = 0;  // source gene index
  int offset = 0;        // first feature column
  int width = 0;         // 1 binary, gene span one-hot, m' preference entries
};

struct FeatureLayout {
  std::vector<FeatureSegment> segments;
  int width = 0;
};

/// Column layout for the surrogate encoding: binary genes copied, categorical
/// genes one-hot over their span, index genes replaced by the referenced
/// preference vector (pref_width = m'), or skipped when pref_width = 0.
FeatureLayout make_feature_layout(const std::vector<GeneSpec>& spec, int pref_width);

std::vector<double> encode_input(const Genotype& g, const std::vector<GeneSpec>& spec,
                                 const std::vector<PreferenceVector>& prefs,
                                 const FeatureLayout& layout);

struct SampleTable {
  FeatureLayout layout;  // optional; fitting only needs the column counts
  std::vector<std::vector<double>> features;
  std::vector<std::vector<double>> targets;

  std::size_t rows() const { return features.size(); }
  int feature_width() const { return features.empty() ? layout.width : static_cast<int>(features[0].size()); }
  int target_count() const { return targets.empty() ? 0 : static_cast<int>(targets[0].size()); }
};

/// Header row f0..f{W-1},y0..y{m-1}, %.17g reals, LF endings.
std::string table_to_csv(const SampleTable& table);
/// Inverse of table_to_csv; leading '#' comment lines are skipped.
SampleTable table_from_csv(const std::string& text);

enum class SurrogateKind { kForest, kGpRbf, kKnn };

const char* surrogate_kind_name(SurrogateKind k);
SurrogateKind surrogate_kind_from_name(const std::string& name);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct ForestModel {
  std::vector<std::vector<TreeNode>> trees;
};

struct GpModel {
  std::vector<std::vector<double>> inputs;
  std::vector<double> alpha;
  double length_scale = 1.0;
  double signal_var = 1.0;
  double mean = 0.0;
};

struct KnnModel {
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;
  int k = 5;
};

struct FitHyper {
  int trees = 100;
  int min_split = 2;  // nodes with at least this many rows may split
  int knn_k = 5;
  double gp_jitter = 1e-8;
  int cv_folds = 5;
};

// One regressor for one upper-level objective.
struct FittedSurrogate {
  SurrogateKind kind = SurrogateKind::kForest;
  int objective = 0;
  int feature_width = 0;
  ForestModel forest;
  GpModel gp;
  KnnModel knn;

  double predict(const std::vector<double>& features) const;
};

/// Rows are canonicalized (lexicographic sort) before fitting, so the model
/// is invariant under row permutation of the table; per-tree streams are
/// keyed by tree index.
FittedSurrogate fit(SurrogateKind kind, const SampleTable& table, int objective,
                    const FitHyper& hyper, RandomStream rng);

/// K-fold cross-validation, fold assignment by shuffled round-robin; returns
/// pooled out-of-fold (kendall_tau, mse).
std::pair<double, double> cross_validate(SurrogateKind kind, const SampleTable& table,
                                         int objective, int folds, const FitHyper& hyper,
                                         RandomStream rng);

struct SelectionScore {
  SurrogateKind kind;
  double ktau = 0.0;
  double mse = 0.0;
  bool selected = false;
};

struct SelectionReport {
  std::vector<std::vector<SelectionScore>> scores;  // [objective][kind]
  std::vector<FittedSurrogate> selected;            // one per objective
};

/// Per objective: max CV KTau, tie-break min CV MSE, then the order of
/// `kinds`; the winner is refit on the full table.
SelectionReport select_best(const SampleTable& table, const std::vector<SurrogateKind>& kinds,
                            int folds, const FitHyper& hyper, RandomStream rng);

}  // namespace blmol
