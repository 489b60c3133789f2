#include "blmol/supernet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blmol/errors.hpp"

namespace blmol {

const char* fusion_name(FusionOp f) {
  switch (f) {
    case FusionOp::kMean: return "mean";
    case FusionOp::kConcat: return "concat";
    case FusionOp::kLstm: return "lstm";
    case FusionOp::kMax: return "max";
    case FusionOp::kSum: return "sum";
    case FusionOp::kAtt: return "att";
  }
  return "?";
}

std::vector<GeneSpec> supernet_gene_spec(const SupernetDims& dims) {
  std::vector<GeneSpec> spec;
  spec.reserve(static_cast<std::size_t>(dims.genome_length()));
  for (int i = 0; i < dims.skip_gene_count(); ++i) {
    spec.push_back(GeneSpec{GeneKind::kBinary, 0, 1});
  }
  for (int i = 0; i < dims.fusion_gene_count(); ++i) {
    spec.push_back(GeneSpec{GeneKind::kCategorical, 0, 5});
  }
  spec.push_back(GeneSpec{GeneKind::kIndex, 1, dims.pref_count});
  return spec;
}

namespace {

constexpr const char* kLstmGates = "ifgo";

void push_param(std::vector<ParamSpec>& params, int& offset, const std::string& name, int rows,
                int cols) {
  params.push_back(ParamSpec{name, rows, cols, offset});
  offset += rows * cols;
}

void push_fusion_params(std::vector<ParamSpec>& params, int& offset, const std::string& prefix,
                        const PlanBlock& block, int h) {
  const int s = static_cast<int>(block.inputs.size());
  switch (block.fusion) {
    case FusionOp::kConcat:
      push_param(params, offset, prefix + ".fuse.W", s * h, h);
      push_param(params, offset, prefix + ".fuse.b", 1, h);
      break;
    case FusionOp::kLstm:
      for (int g = 0; g < 4; ++g) {
        push_param(params, offset, prefix + ".lstm.Wx" + kLstmGates[g], h, h);
        push_param(params, offset, prefix + ".lstm.Wh" + kLstmGates[g], h, h);
        push_param(params, offset, prefix + ".lstm.b" + kLstmGates[g], 1, h);
      }
      break;
    case FusionOp::kAtt:
      push_param(params, offset, prefix + ".att.W", h, h);
      push_param(params, offset, prefix + ".att.v", h, 1);
      break;
    default:
      break;  // mean, max, sum carry no parameters
  }
}

bool has_task(const SupernetDims& dims, Task t) {
  return std::find(dims.tasks.begin(), dims.tasks.end(), t) != dims.tasks.end();
}

}  // namespace

ComputationPlan decode(const Genotype& genome, const SupernetDims& dims) {
  const auto spec = supernet_gene_spec(dims);
  validate_genotype(genome, spec);

  ComputationPlan plan;
  plan.dims = dims;
  plan.repaired_skip_genes.assign(genome.genes.begin(),
                                  genome.genes.begin() + dims.skip_gene_count());

  const int k_depth = dims.backbone_depth;
  int gate_pos = 0;
  const auto read_block = [&](int candidates) {
    PlanBlock block;
    for (int i = 0; i < candidates; ++i) {
      if (plan.repaired_skip_genes[static_cast<std::size_t>(gate_pos + i)] == 1) {
        block.inputs.push_back(i);
      }
    }
    if (block.inputs.empty()) {
      // Repair: fall back to the immediate predecessor.
      plan.repaired_skip_genes[static_cast<std::size_t>(gate_pos + candidates - 1)] = 1;
      block.inputs.push_back(candidates - 1);
    }
    gate_pos += candidates;
    return block;
  };

  for (int k = 1; k <= k_depth; ++k) plan.backbone.push_back(read_block(k));
  plan.output = read_block(k_depth + 1);

  for (int k = 0; k <= k_depth; ++k) {
    const auto f = static_cast<FusionOp>(genome.genes[static_cast<std::size_t>(dims.skip_gene_count() + k)]);
    if (k < k_depth) {
      plan.backbone[static_cast<std::size_t>(k)].fusion = f;
    } else {
      plan.output.fusion = f;
    }
  }
  plan.pref_index = genome.genes.back();

  // Flat parameter layout.
  const int h = dims.hidden;
  int offset = 0;
  push_param(plan.params, offset, "input.W", dims.feature_dim, h);
  push_param(plan.params, offset, "input.b", 1, h);
  for (int k = 0; k < k_depth; ++k) {
    const std::string prefix = "bb" + std::to_string(k);
    push_fusion_params(plan.params, offset, prefix, plan.backbone[static_cast<std::size_t>(k)], h);
    push_param(plan.params, offset, prefix + ".gcn.W", h, h);
    push_param(plan.params, offset, prefix + ".gcn.b", 1, h);
  }
  push_fusion_params(plan.params, offset, "out", plan.output, h);
  push_param(plan.params, offset, "out.W", h, h);
  push_param(plan.params, offset, "out.b", 1, h);
  if (has_task(dims, Task::kGc)) {
    push_param(plan.params, offset, "gc.W1", h, h);
    push_param(plan.params, offset, "gc.b1", 1, h);
    push_param(plan.params, offset, "gc.W2", h, dims.graph_classes);
    push_param(plan.params, offset, "gc.b2", 1, dims.graph_classes);
  }
  if (has_task(dims, Task::kNc)) {
    push_param(plan.params, offset, "nc.W", h, dims.node_classes);
    push_param(plan.params, offset, "nc.b", 1, dims.node_classes);
  }
  if (has_task(dims, Task::kLp)) {
    push_param(plan.params, offset, "lp.W1", h, h);
    push_param(plan.params, offset, "lp.b1", 1, h);
    push_param(plan.params, offset, "lp.W2", 2 * h, 1);
    push_param(plan.params, offset, "lp.b2", 1, 1);
  }
  plan.weight_dim = offset;
  return plan;
}

Genotype encode(const ComputationPlan& plan) {
  Genotype g;
  g.genes = plan.repaired_skip_genes;
  for (int k = 0; k < plan.dims.backbone_depth; ++k) {
    g.genes.push_back(static_cast<int>(plan.backbone[static_cast<std::size_t>(k)].fusion));
  }
  g.genes.push_back(static_cast<int>(plan.output.fusion));
  g.genes.push_back(plan.pref_index);
  return g;
}

std::pair<unsigned long long, unsigned long long> search_space_counts(int backbone_depth) {
  const int s = backbone_depth * (backbone_depth + 1) / 2 + (backbone_depth + 1);
  const int f = backbone_depth + 1;
  unsigned long long skips = 1ull << s;
  unsigned long long fusions = 1;
  for (int i = 0; i < f; ++i) fusions *= 6ull;
  return {skips + fusions, skips * fusions};
}

std::vector<double> init_weights(const ComputationPlan& plan, RandomStream rng) {
  std::vector<double> w(static_cast<std::size_t>(plan.weight_dim), 0.0);
  for (const ParamSpec& p : plan.params) {
    if (p.rows == 1) continue;  // biases start at zero
    RandomStream prng = rng.derive(p.name);
    const double a = std::sqrt(6.0 / (p.rows + p.cols));
    for (int i = 0; i < p.rows * p.cols; ++i) {
      w[static_cast<std::size_t>(p.offset + i)] = a * (2.0 * prng.next_double() - 1.0);
    }
  }
  return w;
}

namespace {

using ad::Matrix;
using ad::Tape;

struct ParamIndex {
  std::vector<Tape::Id> ids;                 // layout order
  std::map<std::string, Tape::Id> by_name;
  Tape::Id operator()(const std::string& name) const { return by_name.at(name); }
};

ParamIndex bind_params(Tape& tape, const ComputationPlan& plan, const std::vector<double>& w) {
  if (static_cast<int>(w.size()) != plan.weight_dim)
    throw ContractError("supernet: weight vector does not match the plan layout");
  ParamIndex idx;
  for (const ParamSpec& p : plan.params) {
    Matrix m(p.rows, p.cols);
    std::copy(w.begin() + p.offset, w.begin() + p.offset + p.rows * p.cols, m.data.begin());
    const Tape::Id id = tape.param(std::move(m));
    idx.ids.push_back(id);
    idx.by_name[p.name] = id;
  }
  return idx;
}

Tape::Id linear(Tape& tape, Tape::Id x, const ParamIndex& params, const std::string& prefix) {
  return tape.add_row(tape.matmul(x, params(prefix + ".W")), params(prefix + ".b"));
}

Tape::Id fuse(Tape& tape, const std::vector<Tape::Id>& xs, const PlanBlock& block,
              const ParamIndex& params, const std::string& prefix, int rows, int hidden) {
  switch (block.fusion) {
    case FusionOp::kMean: {
      Tape::Id acc = xs[0];
      for (std::size_t i = 1; i < xs.size(); ++i) acc = tape.add(acc, xs[i]);
      return xs.size() > 1 ? tape.scale(acc, 1.0 / static_cast<double>(xs.size())) : acc;
    }
    case FusionOp::kSum: {
      Tape::Id acc = xs[0];
      for (std::size_t i = 1; i < xs.size(); ++i) acc = tape.add(acc, xs[i]);
      return acc;
    }
    case FusionOp::kMax: {
      Tape::Id acc = xs[0];
      for (std::size_t i = 1; i < xs.size(); ++i) acc = tape.emax(acc, xs[i]);
      return acc;
    }
    case FusionOp::kConcat: {
      const Tape::Id cat = tape.concat_cols(xs);
      return tape.add_row(tape.matmul(cat, params(prefix + ".fuse.W")), params(prefix + ".fuse.b"));
    }
    case FusionOp::kLstm: {
      // Single-layer cell scanning the selected inputs in block order; the
      // final hidden state is the fused representation.
      Tape::Id c = tape.input(Matrix(rows, hidden));
      Tape::Id hs = tape.input(Matrix(rows, hidden));
      const auto gate = [&](const char g, Tape::Id x, Tape::Id hprev) {
        Tape::Id z = tape.add_row(tape.matmul(x, params(prefix + ".lstm.Wx" + std::string(1, g))),
                                  params(prefix + ".lstm.b" + std::string(1, g)));
        z = tape.add(z, tape.matmul(hprev, params(prefix + ".lstm.Wh" + std::string(1, g))));
        return z;
      };
      for (Tape::Id x : xs) {
        const Tape::Id zi = tape.sigmoid(gate('i', x, hs));
        const Tape::Id zf = tape.sigmoid(gate('f', x, hs));
        const Tape::Id zg = tape.tanh_op(gate('g', x, hs));
        const Tape::Id zo = tape.sigmoid(gate('o', x, hs));
        c = tape.add(tape.mul(zf, c), tape.mul(zi, zg));
        hs = tape.mul(zo, tape.tanh_op(c));
      }
      return hs;
    }
    case FusionOp::kAtt: {
      // Score s_i = tanh(x_i W) v per node, softmax over the inputs,
      // convex per-node mixture of the inputs.
      std::vector<Tape::Id> scores;
      scores.reserve(xs.size());
      for (Tape::Id x : xs) {
        scores.push_back(tape.matmul(tape.tanh_op(tape.matmul(x, params(prefix + ".att.W"))),
                                     params(prefix + ".att.v")));
      }
      const Tape::Id weights = tape.softmax_rows(tape.concat_cols(scores));
      Tape::Id acc = tape.scale_rows(xs[0], tape.col(weights, 0));
      for (std::size_t i = 1; i < xs.size(); ++i) {
        acc = tape.add(acc, tape.scale_rows(xs[i], tape.col(weights, static_cast<int>(i))));
      }
      return acc;
    }
  }
  throw ContractError("fuse: unknown fusion op");
}

}  // namespace

BatchNodes forward(ad::Tape& tape, const ComputationPlan& plan, const std::vector<double>& weights,
                   const MultiTaskDataset& data, const std::vector<int>& graph_indices) {
  if (graph_indices.empty()) throw ContractError("forward: empty batch");
  const SupernetDims& dims = plan.dims;
  const ParamIndex params = bind_params(tape, plan, weights);

  std::vector<Tape::Id> gc_readouts;
  std::vector<Tape::Id> nc_logits_per_graph;
  std::vector<Tape::Id> lp_logits_per_graph;
  BatchNodes out;
  out.param_ids = params.ids;

  for (int gi : graph_indices) {
    const GraphData& g = data.graphs[static_cast<std::size_t>(gi)];
    const Tape::Id x = tape.input(g.features);
    const Tape::Id adj = tape.input(g.norm_adj);

    std::vector<Tape::Id> reps;
    reps.push_back(tape.relu(linear(tape, x, params, "input")));
    for (int k = 0; k < dims.backbone_depth; ++k) {
      const PlanBlock& block = plan.backbone[static_cast<std::size_t>(k)];
      std::vector<Tape::Id> xs;
      for (int sel : block.inputs) xs.push_back(reps[static_cast<std::size_t>(sel)]);
      const std::string prefix = "bb" + std::to_string(k);
      const Tape::Id fused = fuse(tape, xs, block, params, prefix, g.nodes, dims.hidden);
      const Tape::Id agg = tape.relu(
          tape.add_row(tape.matmul(tape.matmul(adj, fused), params(prefix + ".gcn.W")),
                       params(prefix + ".gcn.b")));
      reps.push_back(agg);
    }
    std::vector<Tape::Id> xs;
    for (int sel : plan.output.inputs) xs.push_back(reps[static_cast<std::size_t>(sel)]);
    const Tape::Id fused = fuse(tape, xs, plan.output, params, "out", g.nodes, dims.hidden);
    const Tape::Id emb = tape.relu(linear(tape, fused, params, "out"));

    if (has_task(dims, Task::kGc)) {
      const Tape::Id pre = tape.relu(tape.add_row(tape.matmul(emb, params("gc.W1")), params("gc.b1")));
      gc_readouts.push_back(tape.mean_rows(pre));
      out.gc_labels.push_back(g.graph_label);
    }
    if (has_task(dims, Task::kNc)) {
      nc_logits_per_graph.push_back(tape.add_row(tape.matmul(emb, params("nc.W")), params("nc.b")));
      out.nc_labels.insert(out.nc_labels.end(), g.node_labels.begin(), g.node_labels.end());
    }
    if (has_task(dims, Task::kLp) && !data.lp_samples[static_cast<std::size_t>(gi)].empty()) {
      const auto& samples = data.lp_samples[static_cast<std::size_t>(gi)];
      const Tape::Id lpe = tape.relu(tape.add_row(tape.matmul(emb, params("lp.W1")), params("lp.b1")));
      std::vector<int> us, vs;
      for (const EdgeSample& e : samples) {
        us.push_back(e.u);
        vs.push_back(e.v);
        out.lp_labels.push_back(e.label);
      }
      const Tape::Id pair =
          tape.concat_cols({tape.gather_rows(lpe, us), tape.gather_rows(lpe, vs)});
      lp_logits_per_graph.push_back(
          tape.add_row(tape.matmul(pair, params("lp.W2")), params("lp.b2")));
    }
  }

  for (Task t : dims.tasks) {
    switch (t) {
      case Task::kGc: {
        const Tape::Id readouts = tape.concat_rows(gc_readouts);
        out.gc_logits = tape.add_row(tape.matmul(readouts, params("gc.W2")), params("gc.b2"));
        out.loss[t] = tape.mse_onehot(tape.softmax_rows(out.gc_logits), out.gc_labels);
        break;
      }
      case Task::kNc: {
        out.nc_logits = tape.concat_rows(nc_logits_per_graph);
        out.loss[t] = tape.nll_logits(out.nc_logits, out.nc_labels);
        break;
      }
      case Task::kLp: {
        if (lp_logits_per_graph.empty()) {
          out.loss[t] = tape.input(Matrix(1, 1));  // no samples in this batch
          break;
        }
        out.lp_logits = tape.concat_rows(lp_logits_per_graph);
        out.loss[t] = tape.bce_logits(out.lp_logits, out.lp_labels);
        break;
      }
    }
  }
  return out;
}

std::vector<double> losses(const ComputationPlan& plan, const std::vector<double>& weights,
                           const MultiTaskDataset& data, const std::vector<int>& graph_indices) {
  ad::Tape tape;
  const BatchNodes nodes = forward(tape, plan, weights, data, graph_indices);
  std::vector<double> f;
  f.reserve(plan.dims.tasks.size());
  for (Task t : plan.dims.tasks) f.push_back(tape.value(nodes.loss.at(t)).at(0, 0));
  return f;
}

LossGrad grad(const ComputationPlan& plan, const std::vector<double>& weights,
              const MultiTaskDataset& data, const std::vector<int>& graph_indices) {
  ad::Tape tape;
  const BatchNodes nodes = forward(tape, plan, weights, data, graph_indices);
  LossGrad lg;
  for (Task t : plan.dims.tasks) {
    const Tape::Id loss_id = nodes.loss.at(t);
    lg.losses.push_back(tape.value(loss_id).at(0, 0));
    tape.backward(loss_id);
    std::vector<double> row(static_cast<std::size_t>(plan.weight_dim), 0.0);
    for (std::size_t p = 0; p < plan.params.size(); ++p) {
      const Matrix& gm = tape.grad(nodes.param_ids[p]);
      std::copy(gm.data.begin(), gm.data.end(), row.begin() + plan.params[p].offset);
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw NumericError(std::string("supernet grad: non-finite gradient for task ") +
                           task_name(t));
      }
    }
    lg.grads.push_back(std::move(row));
  }
  return lg;
}

double rank_auc(const std::vector<double>& scores, const std::vector<double>& labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] > 0.5) {
      pos_rank_sum += rank[k];
      ++pos;
    }
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return 0.5;
  return (pos_rank_sum - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1)) /
         (static_cast<double>(pos) * static_cast<double>(neg));
}

std::map<Task, double> metrics(const ComputationPlan& plan, const std::vector<double>& weights,
                               const MultiTaskDataset& data, Split split) {
  const std::vector<int> graphs = data.graphs_in(split);
  if (graphs.empty()) throw ContractError("metrics: empty split");
  ad::Tape tape;
  const BatchNodes nodes = forward(tape, plan, weights, data, graphs);

  const auto accuracy = [&](Tape::Id logits, const std::vector<int>& labels) {
    const Matrix& z = tape.value(logits);
    int correct = 0;
    for (int r = 0; r < z.rows; ++r) {
      int best = 0;
      for (int c = 1; c < z.cols; ++c) {
        if (z.at(r, c) > z.at(r, best)) best = c;
      }
      if (best == labels[static_cast<std::size_t>(r)]) ++correct;
    }
    return static_cast<double>(correct) / z.rows;
  };

  std::map<Task, double> out;
  for (Task t : plan.dims.tasks) {
    switch (t) {
      case Task::kGc:
        out[t] = accuracy(nodes.gc_logits, nodes.gc_labels);
        break;
      case Task::kNc:
        out[t] = accuracy(nodes.nc_logits, nodes.nc_labels);
        break;
      case Task::kLp: {
        if (nodes.lp_logits < 0) {
          out[t] = 0.5;
          break;
        }
        const Matrix& z = tape.value(nodes.lp_logits);
        std::vector<double> scores(static_cast<std::size_t>(z.rows));
        for (int r = 0; r < z.rows; ++r) scores[static_cast<std::size_t>(r)] = z.at(r, 0);
        out[t] = rank_auc(scores, nodes.lp_labels);
        break;
      }
    }
  }
  return out;
}

namespace {

class SupernetOracle final : public LossGradOracle {
 public:
  SupernetOracle(ComputationPlan plan, std::shared_ptr<const MultiTaskDataset> data,
                 BatchConfig batch, RandomStream stream)
      : plan_(std::move(plan)),
        data_(std::move(data)),
        batch_(batch),
        stream_(std::move(stream)),
        train_(data_->graphs_in(Split::kTrain)) {
    if (train_.empty()) throw ContractError("supernet oracle: empty train split");
    if (batch_.batch_size <= 0 || batch_.batch_size >= static_cast<int>(train_.size())) {
      batches_per_epoch_ = 1;
    } else {
      batches_per_epoch_ =
          (static_cast<int>(train_.size()) + batch_.batch_size - 1) / batch_.batch_size;
    }
  }

  int weight_dim() const override { return plan_.weight_dim; }
  int loss_count() const override { return static_cast<int>(plan_.dims.tasks.size()); }

  LossGrad eval(const std::vector<double>& w, long step) override {
    return grad(plan_, w, *data_, batch_for(step));
  }

  std::vector<double> losses_at(const std::vector<double>& w, long step) override {
    return losses(plan_, w, *data_, batch_for(step));
  }

  std::vector<double> initial_weights(RandomStream& rng) const override {
    return init_weights(plan_, rng);
  }

  int batches_per_epoch() const { return batches_per_epoch_; }

 private:
  std::vector<int> batch_for(long step) const {
    if (batches_per_epoch_ == 1) return train_;
    const long epoch = step / batches_per_epoch_;
    const long pos = step % batches_per_epoch_;
    RandomStream er = stream_.derive("epoch").derive(static_cast<std::uint64_t>(epoch));
    std::vector<std::uint32_t> perm;
    er.shuffle_indices(train_.size(), perm);
    std::vector<int> batch;
    const long begin = pos * batch_.batch_size;
    const long end = std::min<long>(begin + batch_.batch_size, static_cast<long>(train_.size()));
    for (long i = begin; i < end; ++i) batch.push_back(train_[perm[static_cast<std::size_t>(i)]]);
    return batch;
  }

  ComputationPlan plan_;
  std::shared_ptr<const MultiTaskDataset> data_;
  BatchConfig batch_;
  RandomStream stream_;
  std::vector<int> train_;
  int batches_per_epoch_ = 1;
};

}  // namespace

std::unique_ptr<LossGradOracle> make_oracle(const ComputationPlan& plan,
                                            std::shared_ptr<const MultiTaskDataset> data,
                                            const BatchConfig& batch, RandomStream stream) {
  return std::make_unique<SupernetOracle>(plan, std::move(data), batch, std::move(stream));
}

}  // namespace blmol
