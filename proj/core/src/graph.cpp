#include "blmol/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "blmol/errors.hpp"

namespace blmol {

const char* task_name(Task t) {
  switch (t) {
    case Task::kGc: return "gc";
    case Task::kNc: return "nc";
    case Task::kLp: return "lp";
  }
  return "?";
}

Task task_from_name(const std::string& name) {
  if (name == "gc") return Task::kGc;
  if (name == "nc") return Task::kNc;
  if (name == "lp") return Task::kLp;
  throw ContractError("unknown task name: " + name);
}

std::vector<int> MultiTaskDataset::graphs_in(Split s) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == static_cast<int>(s)) out.push_back(static_cast<int>(i));
  }
  return out;
}

ad::Matrix normalized_adjacency(int nodes, const std::vector<std::pair<int, int>>& edges) {
  ad::Matrix a(nodes, nodes);
  for (int i = 0; i < nodes; ++i) a.at(i, i) = 1.0;
  for (const auto& [u, v] : edges) {
    a.at(u, v) = 1.0;
    a.at(v, u) = 1.0;
  }
  std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    double deg = 0.0;
    for (int j = 0; j < nodes; ++j) deg += a.at(i, j);
    inv_sqrt_deg[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
  }
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      a.at(i, j) *= inv_sqrt_deg[static_cast<std::size_t>(i)] * inv_sqrt_deg[static_cast<std::size_t>(j)];
    }
  }
  return a;
}

void assign_splits(MultiTaskDataset& ds, RandomStream rng) {
  const std::size_t n = ds.graphs.size();
  std::vector<std::uint32_t> order;
  rng.shuffle_indices(n, order);
  const std::size_t n_train = static_cast<std::size_t>(0.7 * static_cast<double>(n));
  const std::size_t n_val = static_cast<std::size_t>(0.1 * static_cast<double>(n));
  ds.split.assign(n, static_cast<int>(Split::kTest));
  for (std::size_t k = 0; k < n; ++k) {
    if (k < n_train) {
      ds.split[order[k]] = static_cast<int>(Split::kTrain);
    } else if (k < n_train + n_val) {
      ds.split[order[k]] = static_cast<int>(Split::kVal);
    }
  }
}

void build_lp_samples(MultiTaskDataset& ds, int per_graph, RandomStream rng) {
  ds.lp_samples.assign(ds.graphs.size(), {});
  for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
    const GraphData& g = ds.graphs[gi];
    RandomStream grng = rng.derive(gi);
    std::set<std::pair<int, int>> edge_set(g.edges.begin(), g.edges.end());

    std::vector<std::uint32_t> order;
    grng.shuffle_indices(g.edges.size(), order);
    const int n_pos = std::min<int>(per_graph, static_cast<int>(g.edges.size()));

    std::vector<EdgeSample> negatives;
    std::set<std::pair<int, int>> drawn;
    const long max_attempts = 50L * n_pos + 100;
    for (long attempt = 0; attempt < max_attempts && static_cast<int>(negatives.size()) < n_pos;
         ++attempt) {
      int u = static_cast<int>(grng.next_int(0, g.nodes - 1));
      int v = static_cast<int>(grng.next_int(0, g.nodes - 1));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (edge_set.count({u, v}) || drawn.count({u, v})) continue;
      drawn.insert({u, v});
      negatives.push_back(EdgeSample{u, v, 0.0});
    }
    const int n_keep = std::min<int>(n_pos, static_cast<int>(negatives.size()));
    auto& out = ds.lp_samples[gi];
    for (int k = 0; k < n_keep; ++k) {
      const auto& e = g.edges[order[static_cast<std::size_t>(k)]];
      out.push_back(EdgeSample{e.first, e.second, 1.0});
    }
    out.insert(out.end(), negatives.begin(), negatives.begin() + n_keep);
  }
}

MultiTaskDataset synth_dataset(const SynthConfig& config, RandomStream rng) {
  if (config.communities < 2) throw ContractError("synth_dataset: need >= 2 communities");
  MultiTaskDataset ds;
  ds.tasks = {Task::kGc, Task::kNc, Task::kLp};
  ds.feature_dim = config.communities;
  ds.node_classes = config.communities;
  ds.graph_classes = config.communities;

  for (int gi = 0; gi < config.n_graphs; ++gi) {
    RandomStream grng = rng.derive("graph").derive(static_cast<std::uint64_t>(gi));
    GraphData g;
    g.nodes = config.nodes_per_graph;

    // Planted communities with a per-graph dominant block so the majority
    // label varies across graphs.
    const int dominant = static_cast<int>(grng.next_int(0, config.communities - 1));
    g.node_labels.resize(static_cast<std::size_t>(g.nodes));
    for (int i = 0; i < g.nodes; ++i) {
      if (grng.next_double() < 0.5) {
        g.node_labels[static_cast<std::size_t>(i)] = dominant;
      } else {
        g.node_labels[static_cast<std::size_t>(i)] =
            static_cast<int>(grng.next_int(0, config.communities - 1));
      }
    }
    std::vector<int> counts(static_cast<std::size_t>(config.communities), 0);
    for (int l : g.node_labels) ++counts[static_cast<std::size_t>(l)];
    g.graph_label = static_cast<int>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());

    for (int u = 0; u < g.nodes; ++u) {
      for (int v = u + 1; v < g.nodes; ++v) {
        const bool same = g.node_labels[static_cast<std::size_t>(u)] ==
                          g.node_labels[static_cast<std::size_t>(v)];
        const double p = same ? config.intra_p : config.inter_p;
        if (grng.next_double() < p) g.edges.emplace_back(u, v);
      }
    }

    g.features = ad::Matrix(g.nodes, config.communities);
    for (int i = 0; i < g.nodes; ++i) {
      for (int j = 0; j < config.communities; ++j) {
        const double indicator = (g.node_labels[static_cast<std::size_t>(i)] == j) ? 1.0 : 0.0;
        g.features.at(i, j) = indicator + config.feature_noise * grng.next_normal();
      }
    }
    g.norm_adj = normalized_adjacency(g.nodes, g.edges);
    ds.graphs.push_back(std::move(g));
  }

  assign_splits(ds, rng.derive("split"));
  build_lp_samples(ds, config.lp_samples_per_graph, rng.derive("lp"));
  return ds;
}

namespace {

std::string file_basename(const std::string& directory) {
  std::string d = directory;
  while (!d.empty() && d.back() == '/') d.pop_back();
  const auto pos = d.find_last_of('/');
  return pos == std::string::npos ? d : d.substr(pos + 1);
}

std::vector<std::string> read_lines(const std::string& path, const std::string& short_name,
                                    bool required) {
  std::ifstream in(path);
  if (!in) {
    if (required) throw ParseError(short_name + ": missing (" + path + ")");
    return {};
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

long parse_long(const std::string& s, const std::string& file, std::size_t lineno) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    while (used < s.size() && (s[used] == ' ' || s[used] == '\t')) ++used;
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError(file + ": line " + std::to_string(lineno) + ": not an integer: '" + s + "'");
  }
}

std::vector<int> remap_labels(const std::vector<long>& raw) {
  std::vector<long> uniq(raw);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<int> out;
  out.reserve(raw.size());
  for (long v : raw) {
    out.push_back(static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), v) - uniq.begin()));
  }
  return out;
}

}  // namespace

MultiTaskDataset parse_tudataset(const std::string& directory) {
  const std::string ds_name = file_basename(directory);
  const auto path_of = [&](const std::string& suffix) {
    return directory + "/" + ds_name + "_" + suffix + ".txt";
  };

  const auto indicator_lines = read_lines(path_of("graph_indicator"), "graph_indicator", true);
  if (indicator_lines.empty()) throw ParseError("graph_indicator: empty");
  const auto edge_lines = read_lines(path_of("A"), "A", true);
  const auto graph_label_lines = read_lines(path_of("graph_labels"), "graph_labels", true);
  const auto node_label_lines = read_lines(path_of("node_labels"), "node_labels", true);
  const auto attr_lines = read_lines(path_of("node_attributes"), "node_attributes", true);

  const std::string indicator_file = ds_name + "_graph_indicator.txt";
  const std::size_t n_nodes = indicator_lines.size();
  std::vector<long> node_graph(n_nodes);
  long n_graphs = 0;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    node_graph[i] = parse_long(indicator_lines[i], indicator_file, i + 1);
    if (node_graph[i] < 1) throw ParseError(indicator_file + ": graph ids are 1-based");
    n_graphs = std::max(n_graphs, node_graph[i]);
  }
  if (static_cast<long>(graph_label_lines.size()) != n_graphs)
    throw ParseError(ds_name + "_graph_labels.txt: expected " + std::to_string(n_graphs) +
                     " lines, found " + std::to_string(graph_label_lines.size()));
  if (node_label_lines.size() != n_nodes)
    throw ParseError(ds_name + "_node_labels.txt: expected " + std::to_string(n_nodes) +
                     " lines, found " + std::to_string(node_label_lines.size()));
  if (attr_lines.size() != n_nodes)
    throw ParseError(ds_name + "_node_attributes.txt: expected " + std::to_string(n_nodes) +
                     " lines, found " + std::to_string(attr_lines.size()));

  // Global node id -> (graph, local id); nodes are listed grouped by graph.
  std::vector<int> local_id(n_nodes);
  std::vector<int> nodes_per_graph(static_cast<std::size_t>(n_graphs), 0);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    local_id[i] = nodes_per_graph[static_cast<std::size_t>(node_graph[i] - 1)]++;
  }

  MultiTaskDataset ds;
  ds.tasks = {Task::kGc, Task::kNc, Task::kLp};
  ds.graphs.resize(static_cast<std::size_t>(n_graphs));

  std::vector<long> raw_graph_labels(static_cast<std::size_t>(n_graphs));
  const std::string graph_labels_file = ds_name + "_graph_labels.txt";
  for (long gi = 0; gi < n_graphs; ++gi) {
    raw_graph_labels[static_cast<std::size_t>(gi)] =
        parse_long(graph_label_lines[static_cast<std::size_t>(gi)], graph_labels_file,
                   static_cast<std::size_t>(gi) + 1);
  }
  const std::vector<int> graph_labels = remap_labels(raw_graph_labels);

  std::vector<long> raw_node_labels(n_nodes);
  const std::string node_labels_file = ds_name + "_node_labels.txt";
  for (std::size_t i = 0; i < n_nodes; ++i) {
    raw_node_labels[i] = parse_long(node_label_lines[i], node_labels_file, i + 1);
  }
  const std::vector<int> node_labels = remap_labels(raw_node_labels);

  int attr_width = -1;
  const std::string attr_file = ds_name + "_node_attributes.txt";
  std::vector<std::vector<double>> attrs(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    std::stringstream ss(attr_lines[i]);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        attrs[i].push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ParseError(attr_file + ": line " + std::to_string(i + 1) + ": not a number: '" +
                         tok + "'");
      }
    }
    if (attr_width < 0) attr_width = static_cast<int>(attrs[i].size());
    if (static_cast<int>(attrs[i].size()) != attr_width)
      throw ParseError(attr_file + ": line " + std::to_string(i + 1) + ": ragged attribute row");
  }
  ds.feature_dim = std::max(attr_width, 0);

  for (long gi = 0; gi < n_graphs; ++gi) {
    GraphData& g = ds.graphs[static_cast<std::size_t>(gi)];
    g.nodes = nodes_per_graph[static_cast<std::size_t>(gi)];
    g.graph_label = graph_labels[static_cast<std::size_t>(gi)];
    g.features = ad::Matrix(g.nodes, ds.feature_dim);
    g.node_labels.resize(static_cast<std::size_t>(g.nodes));
  }
  for (std::size_t i = 0; i < n_nodes; ++i) {
    GraphData& g = ds.graphs[static_cast<std::size_t>(node_graph[i] - 1)];
    g.node_labels[static_cast<std::size_t>(local_id[i])] = node_labels[i];
    for (int j = 0; j < ds.feature_dim; ++j) g.features.at(local_id[i], j) = attrs[i][static_cast<std::size_t>(j)];
  }

  const std::string edges_file = ds_name + "_A.txt";
  std::vector<std::set<std::pair<int, int>>> edge_sets(static_cast<std::size_t>(n_graphs));
  for (std::size_t li = 0; li < edge_lines.size(); ++li) {
    if (edge_lines[li].empty()) continue;
    std::stringstream ss(edge_lines[li]);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b)) {
      throw ParseError(edges_file + ": line " + std::to_string(li + 1) + ": expected 'u, v'");
    }
    const long gu = parse_long(a, edges_file, li + 1);
    const long gv = parse_long(b, edges_file, li + 1);
    if (gu < 1 || gu > static_cast<long>(n_nodes) || gv < 1 || gv > static_cast<long>(n_nodes))
      throw ParseError(edges_file + ": line " + std::to_string(li + 1) +
                       ": edge references unknown node");
    if (node_graph[static_cast<std::size_t>(gu - 1)] != node_graph[static_cast<std::size_t>(gv - 1)])
      throw ParseError(edges_file + ": line " + std::to_string(li + 1) +
                       ": edge crosses graph boundaries");
    if (gu == gv) continue;  // self loops dropped
    int u = local_id[static_cast<std::size_t>(gu - 1)];
    int v = local_id[static_cast<std::size_t>(gv - 1)];
    if (u > v) std::swap(u, v);
    edge_sets[static_cast<std::size_t>(node_graph[static_cast<std::size_t>(gu - 1)] - 1)].insert({u, v});
  }
  for (long gi = 0; gi < n_graphs; ++gi) {
    GraphData& g = ds.graphs[static_cast<std::size_t>(gi)];
    g.edges.assign(edge_sets[static_cast<std::size_t>(gi)].begin(),
                   edge_sets[static_cast<std::size_t>(gi)].end());
    g.norm_adj = normalized_adjacency(g.nodes, g.edges);
  }

  int max_node_label = 0, max_graph_label = 0;
  for (const auto& g : ds.graphs) {
    max_graph_label = std::max(max_graph_label, g.graph_label);
    for (int l : g.node_labels) max_node_label = std::max(max_node_label, l);
  }
  ds.node_classes = max_node_label + 1;
  ds.graph_classes = max_graph_label + 1;
  return ds;
}

namespace {

using nlohmann::json;

json matrix_to_json(const ad::Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ad::Matrix matrix_from_json(const json& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
  ad::Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m.at(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

}  // namespace

std::string dataset_to_json(const MultiTaskDataset& ds) {
  json doc;
  doc["feature_dim"] = ds.feature_dim;
  doc["node_classes"] = ds.node_classes;
  doc["graph_classes"] = ds.graph_classes;
  json tasks = json::array();
  for (Task t : ds.tasks) tasks.push_back(task_name(t));
  doc["tasks"] = std::move(tasks);
  doc["splits"] = ds.split;

  json graphs = json::array();
  for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
    const GraphData& g = ds.graphs[gi];
    json jg;
    jg["nodes"] = g.nodes;
    json edges = json::array();
    for (const auto& [u, v] : g.edges) edges.push_back(json::array({u, v}));
    jg["edges"] = std::move(edges);
    jg["features"] = matrix_to_json(g.features);
    jg["node_labels"] = g.node_labels;
    jg["graph_label"] = g.graph_label;
    json lp = json::array();
    if (gi < ds.lp_samples.size()) {
      for (const EdgeSample& e : ds.lp_samples[gi]) lp.push_back(json::array({e.u, e.v, e.label}));
    }
    jg["lp_samples"] = std::move(lp);
    graphs.push_back(std::move(jg));
  }
  doc["graphs"] = std::move(graphs);
  return doc.dump(2) + "\n";
}

MultiTaskDataset dataset_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset json: ") + e.what());
  }
  MultiTaskDataset ds;
  ds.feature_dim = doc.at("feature_dim").get<int>();
  ds.node_classes = doc.at("node_classes").get<int>();
  ds.graph_classes = doc.at("graph_classes").get<int>();
  for (const auto& t : doc.at("tasks")) ds.tasks.push_back(task_from_name(t.get<std::string>()));
  ds.split = doc.at("splits").get<std::vector<int>>();
  for (const auto& jg : doc.at("graphs")) {
    GraphData g;
    g.nodes = jg.at("nodes").get<int>();
    for (const auto& e : jg.at("edges")) {
      g.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    g.features = matrix_from_json(jg.at("features"));
    g.node_labels = jg.at("node_labels").get<std::vector<int>>();
    g.graph_label = jg.at("graph_label").get<int>();
    g.norm_adj = normalized_adjacency(g.nodes, g.edges);
    std::vector<EdgeSample> lp;
    for (const auto& e : jg.at("lp_samples")) {
      lp.push_back(EdgeSample{e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
    }
    ds.lp_samples.push_back(std::move(lp));
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

void save_dataset_json(const MultiTaskDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << dataset_to_json(ds);
}

MultiTaskDataset load_dataset_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return dataset_from_json(ss.str());
}

}  // namespace blmol
