#pragma once

#include <string>
#include <utility>
#include <vector>

#include "blmol/autodiff.hpp"
#include "blmol/rng.hpp"

namespace blmol {

enum class Task { kGc = 0, kNc = 1, kLp = 2 };

const char* task_name(Task t);
Task task_from_name(const std::string& name);

struct GraphData {
  int nodes = 0;
  std::vector<std::pair<int, int>> edges;  // undirected, u < v, no self loops
  ad::Matrix features;                     // nodes x feature_dim
  std::vector<int> node_labels;
  int graph_label = 0;
  ad::Matrix norm_adj;  // D^{-1/2} (A + I) D^{-1/2}, cached
};

struct EdgeSample {
  int u = 0;
  int v = 0;
  double label = 0.0;  // 1 = edge, 0 = sampled non-edge
};

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };

struct MultiTaskDataset {
  std::vector<GraphData> graphs;
  std::vector<int> split;                           // per graph, Split as int
  std::vector<std::vector<EdgeSample>> lp_samples;  // per graph
  std::vector<Task> tasks;
  int feature_dim = 0;
  int node_classes = 0;
  int graph_classes = 0;

  std::vector<int> graphs_in(Split s) const;
};

/// Symmetric degree-normalized adjacency with self loops; isolated nodes get
/// self-loop-only normalization.
ad::Matrix normalized_adjacency(int nodes, const std::vector<std::pair<int, int>>& edges);

/// Shuffled 70/10/20 split over graphs.
void assign_splits(MultiTaskDataset& ds, RandomStream rng);

/// Per graph: up to `per_graph` positive edges plus the same number of
/// sampled non-edges.
void build_lp_samples(MultiTaskDataset& ds, int per_graph, RandomStream rng);

struct SynthConfig {
  int n_graphs = 60;
  int nodes_per_graph = 20;
  int communities = 3;
  double intra_p = 0.4;   // edge probability inside a community
  double inter_p = 0.05;  // across communities
  double feature_noise = 0.3;
  int lp_samples_per_graph = 10;
};

/// Stochastic-block-model multi-task dataset. Node labels are the planted
/// communities, the graph label is the majority community, node features are
/// community indicators plus Gaussian noise, and link-prediction samples are
/// held-out per graph. Splits are assigned 70/10/20.
MultiTaskDataset synth_dataset(const SynthConfig& config, RandomStream rng);

/// TUDataset text-format parser. `directory` must contain DS_A.txt,
/// DS_graph_indicator.txt, DS_graph_labels.txt, DS_node_labels.txt and
/// DS_node_attributes.txt where DS is the directory basename. Labels are
/// remapped to contiguous 0-based ids; edges are de-duplicated to undirected.
/// Splits and LP samples are not assigned here.
MultiTaskDataset parse_tudataset(const std::string& directory);

/// Single-document JSON serialization (fixtures, generated datasets).
std::string dataset_to_json(const MultiTaskDataset& ds);
MultiTaskDataset dataset_from_json(const std::string& text);

void save_dataset_json(const MultiTaskDataset& ds, const std::string& path);
MultiTaskDataset load_dataset_json(const std::string& path);

}  // namespace blmol
