#include "blmol/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "blmol/errors.hpp"
#include "blmol/rank_stats.hpp"

namespace blmol {

FeatureLayout make_feature_layout(const std::vector<GeneSpec>& spec, int pref_width) {
  FeatureLayout layout;
  int offset = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    FeatureSegment seg;
    seg.kind = spec[i].kind;
    seg.gene = i;
    seg.offset = offset;
    switch (spec[i].kind) {
      case GeneKind::kBinary:
        seg.width = 1;
        break;
      case GeneKind::kCategorical:
        seg.width = spec[i].span();
        break;
      case GeneKind::kIndex:
        seg.width = pref_width;  // zero drops the gene from the encoding
        break;
    }
    if (seg.width > 0) {
      layout.segments.push_back(seg);
      offset += seg.width;
    }
  }
  layout.width = offset;
  return layout;
}

std::vector<double> encode_input(const Genotype& g, const std::vector<GeneSpec>& spec,
                                 const std::vector<PreferenceVector>& prefs,
                                 const FeatureLayout& layout) {
  validate_genotype(g, spec);
  std::vector<double> features(static_cast<std::size_t>(layout.width), 0.0);
  for (const FeatureSegment& seg : layout.segments) {
    const int value = g.genes[seg.gene];
    const GeneSpec& gs = spec[seg.gene];
    switch (seg.kind) {
      case GeneKind::kBinary:
        features[static_cast<std::size_t>(seg.offset)] = value;
        break;
      case GeneKind::kCategorical:
        features[static_cast<std::size_t>(seg.offset + value - gs.low)] = 1.0;
        break;
      case GeneKind::kIndex: {
        const auto idx = static_cast<std::size_t>(value - gs.low);
        if (idx >= prefs.size()) throw ContractError("encode_input: preference index out of range");
        const PreferenceVector& r = prefs[idx];
        if (static_cast<int>(r.size()) != seg.width)
          throw ContractError("encode_input: preference width mismatch");
        for (std::size_t j = 0; j < r.size(); ++j) {
          features[static_cast<std::size_t>(seg.offset) + j] = r[j];
        }
        break;
      }
    }
  }
  return features;
}

std::string table_to_csv(const SampleTable& table) {
  std::string out;
  const int w = table.feature_width();
  const int m = table.target_count();
  for (int j = 0; j < w; ++j) {
    if (j) out += ',';
    out += "f" + std::to_string(j);
  }
  for (int j = 0; j < m; ++j) {
    out += ",y" + std::to_string(j);
  }
  out += '\n';
  char buf[64];
  for (std::size_t i = 0; i < table.rows(); ++i) {
    for (int j = 0; j < w; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", table.features[i][static_cast<std::size_t>(j)]);
      if (j) out += ',';
      out += buf;
    }
    for (int j = 0; j < m; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", table.targets[i][static_cast<std::size_t>(j)]);
      out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

SampleTable table_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = line;
    break;
  }
  if (header.empty()) throw ParseError("sample table: missing header");
  int n_features = 0, n_targets = 0;
  {
    std::stringstream hs(header);
    std::string tok;
    while (std::getline(hs, tok, ',')) {
      if (!tok.empty() && tok[0] == 'f') {
        ++n_features;
      } else if (!tok.empty() && tok[0] == 'y') {
        ++n_targets;
      } else {
        throw ParseError("sample table: unexpected header column '" + tok + "'");
      }
    }
  }
  SampleTable table;
  table.layout.width = n_features;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ls, tok, ',')) {
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ParseError("sample table: line " + std::to_string(lineno) + ": not a number: '" +
                         tok + "'");
      }
    }
    if (static_cast<int>(row.size()) != n_features + n_targets)
      throw ParseError("sample table: line " + std::to_string(lineno) + ": expected " +
                       std::to_string(n_features + n_targets) + " columns");
    table.features.emplace_back(row.begin(), row.begin() + n_features);
    table.targets.emplace_back(row.begin() + n_features, row.end());
  }
  return table;
}

const char* surrogate_kind_name(SurrogateKind k) {
  switch (k) {
    case SurrogateKind::kForest: return "forest";
    case SurrogateKind::kGpRbf: return "gp_rbf";
    case SurrogateKind::kKnn: return "knn";
  }
  return "?";
}

SurrogateKind surrogate_kind_from_name(const std::string& name) {
  if (name == "forest") return SurrogateKind::kForest;
  if (name == "gp_rbf") return SurrogateKind::kGpRbf;
  if (name == "knn") return SurrogateKind::kKnn;
  throw ContractError("unknown surrogate kind: " + name);
}

namespace {

struct Rows {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
};

// Canonical row order makes every fit invariant under permutation of the
// incoming table.
Rows canonical_rows(const SampleTable& table, int objective) {
  if (objective < 0 || objective >= table.target_count())
    throw ContractError("surrogate fit: objective index out of range");
  std::vector<std::size_t> order(table.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (table.features[a] != table.features[b]) return table.features[a] < table.features[b];
    return table.targets[a][static_cast<std::size_t>(objective)] <
           table.targets[b][static_cast<std::size_t>(objective)];
  });
  Rows rows;
  rows.x.reserve(order.size());
  rows.y.reserve(order.size());
  for (std::size_t i : order) {
    rows.x.push_back(table.features[i]);
    rows.y.push_back(table.targets[i][static_cast<std::size_t>(objective)]);
  }
  return rows;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// ---- CART regression tree on a bootstrap sample ----

struct TreeBuilder {
  const Rows& rows;
  int features_per_split;
  int min_split;
  RandomStream rng;
  std::vector<TreeNode> nodes;

  int build(std::vector<std::size_t> idx) {
    const int node_id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    double mean = 0.0;
    for (std::size_t i : idx) mean += rows.y[i];
    mean /= static_cast<double>(idx.size());
    nodes[static_cast<std::size_t>(node_id)].value = mean;

    if (static_cast<int>(idx.size()) < min_split) return node_id;
    bool constant_target = true;
    for (std::size_t i : idx) {
      if (rows.y[i] != rows.y[idx[0]]) {
        constant_target = false;
        break;
      }
    }
    if (constant_target) return node_id;

    const int width = static_cast<int>(rows.x[0].size());
    std::vector<int> candidates(static_cast<std::size_t>(width));
    std::iota(candidates.begin(), candidates.end(), 0);
    for (int i = 0; i < features_per_split && i < width; ++i) {
      const auto j = static_cast<std::size_t>(rng.next_int(i, width - 1));
      std::swap(candidates[static_cast<std::size_t>(i)], candidates[j]);
    }
    candidates.resize(static_cast<std::size_t>(std::min(features_per_split, width)));

    double best_score = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<double> values;
    for (int f : candidates) {
      values.clear();
      for (std::size_t i : idx) values.push_back(rows.x[i][static_cast<std::size_t>(f)]);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t v = 0; v + 1 < values.size(); ++v) {
        const double thr = 0.5 * (values[v] + values[v + 1]);
        double sum_l = 0, sum_r = 0, sq_l = 0, sq_r = 0;
        int n_l = 0, n_r = 0;
        for (std::size_t i : idx) {
          const double x = rows.x[i][static_cast<std::size_t>(f)];
          const double y = rows.y[i];
          if (x <= thr) {
            sum_l += y;
            sq_l += y * y;
            ++n_l;
          } else {
            sum_r += y;
            sq_r += y * y;
            ++n_r;
          }
        }
        if (n_l == 0 || n_r == 0) continue;
        const double sse = (sq_l - sum_l * sum_l / n_l) + (sq_r - sum_r * sum_r / n_r);
        if (sse < best_score - 1e-15) {
          best_score = sse;
          best_feature = f;
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
      if (rows.x[i][static_cast<std::size_t>(best_feature)] <= best_threshold) {
        left_idx.push_back(i);
      } else {
        right_idx.push_back(i);
      }
    }
    const int left = build(std::move(left_idx));
    const int right = build(std::move(right_idx));
    nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
    nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    nodes[static_cast<std::size_t>(node_id)].left = left;
    nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }
};

double tree_predict(const std::vector<TreeNode>& tree, const std::vector<double>& x) {
  int node = 0;
  while (tree[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = tree[static_cast<std::size_t>(node)];
    node = (x[static_cast<std::size_t>(n.feature)] <= n.threshold) ? n.left : n.right;
  }
  return tree[static_cast<std::size_t>(node)].value;
}

ForestModel fit_forest(const Rows& rows, const FitHyper& hyper, const RandomStream& rng) {
  ForestModel model;
  const int width = static_cast<int>(rows.x[0].size());
  const int per_split = std::max(1, (width + 2) / 3);  // ceil(width / 3)
  const std::size_t n = rows.x.size();
  model.trees.resize(static_cast<std::size_t>(hyper.trees));
  for (int t = 0; t < hyper.trees; ++t) {
    RandomStream trng = rng.derive("tree").derive(static_cast<std::uint64_t>(t));
    std::vector<std::size_t> boot(n);
    for (std::size_t i = 0; i < n; ++i) {
      boot[i] = static_cast<std::size_t>(trng.next_int(0, static_cast<std::int64_t>(n) - 1));
    }
    TreeBuilder builder{rows, per_split, hyper.min_split, trng.derive("split"), {}};
    builder.build(std::move(boot));
    model.trees[static_cast<std::size_t>(t)] = std::move(builder.nodes);
  }
  return model;
}

// ---- Gaussian process with RBF kernel ----

GpModel fit_gp(const Rows& rows, const FitHyper& hyper) {
  GpModel model;
  model.inputs = rows.x;
  const std::size_t n = rows.x.size();

  model.mean = 0.0;
  for (double y : rows.y) model.mean += y;
  model.mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = rows.y[i] - model.mean;
    var += centered[i] * centered[i];
  }
  var /= static_cast<double>(n);
  model.signal_var = std::max(var, 1e-12);

  // Median heuristic over the nonzero pairwise distances.
  std::vector<double> dists;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::sqrt(sq_dist(rows.x[i], rows.x[j]));
      if (d > 0.0) dists.push_back(d);
    }
  }
  if (dists.empty()) {
    model.length_scale = 1.0;
  } else {
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2),
                     dists.end());
    model.length_scale = dists[dists.size() / 2];
    if (model.length_scale <= 0.0) model.length_scale = 1.0;
  }

  const double ls2 = 2.0 * model.length_scale * model.length_scale;
  double jitter = hyper.gp_jitter;
  for (int attempt = 0; attempt < 4; ++attempt) {
    std::vector<double> chol(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double k = model.signal_var * std::exp(-sq_dist(rows.x[i], rows.x[j]) / ls2);
        if (i == j) k += jitter;
        chol[i * n + j] = k;
      }
    }
    bool ok = true;
    for (std::size_t j = 0; j < n && ok; ++j) {
      double d = chol[j * n + j];
      for (std::size_t k = 0; k < j; ++k) d -= chol[j * n + k] * chol[j * n + k];
      if (d <= 0.0) {
        ok = false;
        break;
      }
      chol[j * n + j] = std::sqrt(d);
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = chol[i * n + j];
        for (std::size_t k = 0; k < j; ++k) s -= chol[i * n + k] * chol[j * n + k];
        chol[i * n + j] = s / chol[j * n + j];
      }
    }
    if (!ok) {
      jitter *= 10.0;
      continue;
    }
    // Solve K alpha = centered via the factor.
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = centered[i];
      for (std::size_t k = 0; k < i; ++k) s -= chol[i * n + k] * z[k];
      z[i] = s / chol[i * n + i];
    }
    model.alpha.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
      double s = z[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= chol[k * n + i] * model.alpha[k];
      model.alpha[i] = s / chol[i * n + i];
    }
    return model;
  }
  throw NumericError("gp fit: kernel matrix not positive definite after jitter escalation");
}

KnnModel fit_knn(const Rows& rows, const FitHyper& hyper) {
  KnnModel model;
  model.inputs = rows.x;
  model.targets = rows.y;
  model.k = std::max(1, std::min<int>(hyper.knn_k, static_cast<int>(rows.x.size())));
  return model;
}

}  // namespace

double FittedSurrogate::predict(const std::vector<double>& features) const {
  if (static_cast<int>(features.size()) != feature_width)
    throw ContractError("surrogate predict: feature width mismatch");
  switch (kind) {
    case SurrogateKind::kForest: {
      double sum = 0.0;
      for (const auto& tree : forest.trees) sum += tree_predict(tree, features);
      return sum / static_cast<double>(forest.trees.size());
    }
    case SurrogateKind::kGpRbf: {
      const double ls2 = 2.0 * gp.length_scale * gp.length_scale;
      double out = gp.mean;
      for (std::size_t i = 0; i < gp.inputs.size(); ++i) {
        out += gp.alpha[i] * gp.signal_var * std::exp(-sq_dist(gp.inputs[i], features) / ls2);
      }
      return out;
    }
    case SurrogateKind::kKnn: {
      std::vector<std::pair<double, std::size_t>> d(knn.inputs.size());
      for (std::size_t i = 0; i < knn.inputs.size(); ++i) {
        d[i] = {sq_dist(knn.inputs[i], features), i};
      }
      std::partial_sort(d.begin(), d.begin() + knn.k, d.end());
      double sum = 0.0;
      for (int i = 0; i < knn.k; ++i) sum += knn.targets[d[static_cast<std::size_t>(i)].second];
      return sum / knn.k;
    }
  }
  throw ContractError("surrogate predict: unknown kind");
}

FittedSurrogate fit(SurrogateKind kind, const SampleTable& table, int objective,
                    const FitHyper& hyper, RandomStream rng) {
  if (table.rows() < 1) throw ContractError("surrogate fit: empty table");
  const Rows rows = canonical_rows(table, objective);

  FittedSurrogate model;
  model.kind = kind;
  model.objective = objective;
  model.feature_width = static_cast<int>(rows.x[0].size());
  switch (kind) {
    case SurrogateKind::kForest:
      model.forest = fit_forest(rows, hyper, rng);
      break;
    case SurrogateKind::kGpRbf:
      model.gp = fit_gp(rows, hyper);
      break;
    case SurrogateKind::kKnn:
      model.knn = fit_knn(rows, hyper);
      break;
  }
  return model;
}

std::pair<double, double> cross_validate(SurrogateKind kind, const SampleTable& table,
                                         int objective, int folds, const FitHyper& hyper,
                                         RandomStream rng) {
  const auto n = table.rows();
  if (folds < 2 || static_cast<std::size_t>(folds) > n)
    throw ContractError("cross_validate: need 2 <= folds <= rows");

  std::vector<std::uint32_t> shuffled;
  rng.derive("folds").shuffle_indices(n, shuffled);
  std::vector<int> fold_of(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    fold_of[shuffled[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
  }

  std::vector<double> predicted(n, 0.0), truth(n, 0.0);
  for (int f = 0; f < folds; ++f) {
    SampleTable train;
    train.layout = table.layout;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] == f) continue;
      train.features.push_back(table.features[i]);
      train.targets.push_back(table.targets[i]);
    }
    const FittedSurrogate model =
        fit(kind, train, objective, hyper, rng.derive("fit").derive(static_cast<std::uint64_t>(f)));
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] != f) continue;
      predicted[i] = model.predict(table.features[i]);
      truth[i] = table.targets[i][static_cast<std::size_t>(objective)];
    }
  }
  return {kendall_tau(truth, predicted), mse(truth, predicted)};
}

SelectionReport select_best(const SampleTable& table, const std::vector<SurrogateKind>& kinds,
                            int folds, const FitHyper& hyper, RandomStream rng) {
  if (kinds.empty()) throw ContractError("select_best: no candidate kinds");
  SelectionReport report;
  const int m = table.target_count();
  report.scores.resize(static_cast<std::size_t>(m));
  for (int obj = 0; obj < m; ++obj) {
    auto& row = report.scores[static_cast<std::size_t>(obj)];
    std::size_t best = 0;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      RandomStream cv_rng = rng.derive("cv")
                                .derive(static_cast<std::uint64_t>(obj))
                                .derive(static_cast<std::uint64_t>(k));
      const auto [ktau, err] = cross_validate(kinds[k], table, obj, folds, hyper, cv_rng);
      row.push_back(SelectionScore{kinds[k], ktau, err, false});
      const SelectionScore& cand = row.back();
      const SelectionScore& incumbent = row[best];
      if (k > 0 && (cand.ktau > incumbent.ktau ||
                    (cand.ktau == incumbent.ktau && cand.mse < incumbent.mse))) {
        best = k;
      }
    }
    row[best].selected = true;
    report.selected.push_back(fit(kinds[best], table, obj, hyper,
                                  rng.derive("final").derive(static_cast<std::uint64_t>(obj))));
  }
  return report;
}

}  // namespace blmol
