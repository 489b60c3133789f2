#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "blmol/autodiff.hpp"
#include "blmol/genotype.hpp"
#include "blmol/graph.hpp"
#include "blmol/preference_descent.hpp"
#include "blmol/rng.hpp"

namespace blmol {

enum class FusionOp { kMean = 0, kConcat = 1, kLstm = 2, kMax = 3, kSum = 4, kAtt = 5 };

const char* fusion_name(FusionOp f);

struct SupernetDims {
  int backbone_depth = 3;  // K
  int hidden = 16;
  int feature_dim = 0;
  int node_classes = 0;
  int graph_classes = 0;
  std::vector<Task> tasks;
  int pref_count = 20;  // rm, size of the preference table indexed by the last gene

  int skip_gene_count() const {
    const int k = backbone_depth;
    return k * (k + 1) / 2 + (k + 1);
  }
  int fusion_gene_count() const { return backbone_depth + 1; }
  int genome_length() const { return skip_gene_count() + fusion_gene_count() + 1; }
};

/// Gene layout: per-block input gates (binary), one fusion gene per block
/// (categorical 0..5), one preference index gene (1..rm).
std::vector<GeneSpec> supernet_gene_spec(const SupernetDims& dims);

struct PlanBlock {
  std::vector<int> inputs;  // indices into h^(0..K); block k may read < k
  FusionOp fusion = FusionOp::kMean;
};

struct ParamSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  int offset = 0;
};

// Decoded supernet DAG plus its flat parameter layout.
struct ComputationPlan {
  SupernetDims dims;
  std::vector<PlanBlock> backbone;  // K blocks; block k produces h^(k+1)
  PlanBlock output;                 // reads h^(0..K), produces the embedding
  int pref_index = 1;               // preserved preference gene
  std::vector<int> repaired_skip_genes;
  std::vector<ParamSpec> params;
  int weight_dim = 0;
};

/// Total decode with repair: a block whose gates are all zero reads its
/// immediate predecessor.
ComputationPlan decode(const Genotype& genome, const SupernetDims& dims);

/// Inverse of decode modulo the gate repair.
Genotype encode(const ComputationPlan& plan);

/// Search-space sizes for the skip/fusion genes, reported both as the sum
/// 2^s + 6^f and as the product 2^s * 6^f of the independent gene spaces.
std::pair<unsigned long long, unsigned long long> search_space_counts(int backbone_depth);

/// Glorot-uniform weight matrices, zero biases, one derived stream per
/// parameter so the layout order does not matter.
std::vector<double> init_weights(const ComputationPlan& plan, RandomStream rng);

// Tape-embedded forward pass over a batch of graphs. Label vectors are
// aligned with the logit rows.
struct BatchNodes {
  ad::Tape::Id gc_logits = -1;
  ad::Tape::Id nc_logits = -1;
  ad::Tape::Id lp_logits = -1;
  std::vector<int> gc_labels;
  std::vector<int> nc_labels;
  std::vector<double> lp_labels;
  std::map<Task, ad::Tape::Id> loss;   // per selected task
  std::vector<ad::Tape::Id> param_ids; // layout order
};

BatchNodes forward(ad::Tape& tape, const ComputationPlan& plan, const std::vector<double>& weights,
                   const MultiTaskDataset& data, const std::vector<int>& graph_indices);

/// Loss vector over the batch, ordered by the plan's task list.
std::vector<double> losses(const ComputationPlan& plan, const std::vector<double>& weights,
                           const MultiTaskDataset& data, const std::vector<int>& graph_indices);

/// Losses plus the per-task gradient matrix (one reverse sweep per task).
LossGrad grad(const ComputationPlan& plan, const std::vector<double>& weights,
              const MultiTaskDataset& data, const std::vector<int>& graph_indices);

/// Accuracy for GC/NC, rank AUC (ties at half weight) for LP, over the
/// graphs of one split.
std::map<Task, double> metrics(const ComputationPlan& plan, const std::vector<double>& weights,
                               const MultiTaskDataset& data, Split split);

/// Rank-based AUC with ties counted 1/2.
double rank_auc(const std::vector<double>& scores, const std::vector<double>& labels);

struct BatchConfig {
  int batch_size = 0;  // 0 = full batch
};

// Training oracle over the dataset's train split. The batch sequence is a
// pure function of (stream, step): epoch e reshuffles with the stream
// derived at index e.
std::unique_ptr<LossGradOracle> make_oracle(const ComputationPlan& plan,
                                            std::shared_ptr<const MultiTaskDataset> data,
                                            const BatchConfig& batch, RandomStream stream);

}  // namespace blmol
