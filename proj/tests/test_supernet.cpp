#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "blmol/rng.hpp"
#include "blmol/supernet.hpp"
#include "oracles.hpp"

using namespace blmol;

namespace {

SupernetDims small_dims(std::vector<Task> tasks = {Task::kGc, Task::kNc, Task::kLp}) {
  SupernetDims dims;
  dims.backbone_depth = 3;
  dims.hidden = 8;
  dims.feature_dim = 3;
  dims.node_classes = 3;
  dims.graph_classes = 3;
  dims.tasks = std::move(tasks);
  dims.pref_count = 20;
  return dims;
}

MultiTaskDataset tiny_dataset(int n_graphs = 6, double noise = 0.3) {
  SynthConfig cfg;
  cfg.n_graphs = n_graphs;
  cfg.nodes_per_graph = 8;
  cfg.communities = 3;
  cfg.feature_noise = noise;
  cfg.lp_samples_per_graph = 4;
  return synth_dataset(cfg, derive_stream(71, "tiny"));
}

Genotype chain_genome(int fusion = static_cast<int>(FusionOp::kConcat), int pref = 1) {
  // Gates: block1 [h0], block2 [h0,h1], block3 [h0,h1,h2], output [h0..h3].
  Genotype g;
  g.genes = {1, 0, 1, 0, 0, 1, 0, 0, 0, 1};
  for (int i = 0; i < 4; ++i) g.genes.push_back(fusion);
  g.genes.push_back(pref);
  return g;
}

}  // namespace

TEST_CASE("genome layout facts for a three-layer backbone") {
  const auto dims = small_dims();
  CHECK(dims.skip_gene_count() == 10);
  CHECK(dims.fusion_gene_count() == 4);
  CHECK(dims.genome_length() == 15);
  const auto spec = supernet_gene_spec(dims);
  CHECK(spec.size() == 15);
  CHECK(spec[0].kind == GeneKind::kBinary);
  CHECK(spec[10].kind == GeneKind::kCategorical);
  CHECK(spec[10].high == 5);
  CHECK(spec[14].kind == GeneKind::kIndex);
  CHECK(spec[14].low == 1);
  CHECK(spec[14].high == 20);
}

TEST_CASE("search space counts report both readings") {
  const auto [sum, product] = search_space_counts(3);
  CHECK(sum == 2320ull);  // 2^10 + 6^4
  CHECK(product == 1024ull * 1296ull);
}

TEST_CASE("chain genome decodes to the single-path topology") {
  const auto plan = decode(chain_genome(), small_dims());
  REQUIRE(plan.backbone.size() == 3);
  CHECK(plan.backbone[0].inputs == std::vector<int>{0});
  CHECK(plan.backbone[1].inputs == std::vector<int>{1});
  CHECK(plan.backbone[2].inputs == std::vector<int>{2});
  CHECK(plan.output.inputs == std::vector<int>{3});
  for (const auto& b : plan.backbone) CHECK(b.fusion == FusionOp::kConcat);
}

TEST_CASE("all-ones gates decode to the dense topology") {
  Genotype g;
  g.genes.assign(10, 1);
  for (int i = 0; i < 4; ++i) g.genes.push_back(0);
  g.genes.push_back(3);
  const auto plan = decode(g, small_dims());
  CHECK(plan.backbone[0].inputs == std::vector<int>{0});
  CHECK(plan.backbone[1].inputs == std::vector<int>{0, 1});
  CHECK(plan.backbone[2].inputs == std::vector<int>{0, 1, 2});
  CHECK(plan.output.inputs == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("all-zero gates repair to the chain connectivity") {
  Genotype g;
  g.genes.assign(10, 0);
  for (int i = 0; i < 4; ++i) g.genes.push_back(0);
  g.genes.push_back(5);
  const auto plan = decode(g, small_dims());
  const auto chain = decode(chain_genome(0, 5), small_dims());
  for (int k = 0; k < 3; ++k) CHECK(plan.backbone[k].inputs == chain.backbone[k].inputs);
  CHECK(plan.output.inputs == chain.output.inputs);
}

TEST_CASE("encode-decode round-trips modulo repair") {
  const auto dims = small_dims();
  const auto spec = supernet_gene_spec(dims);
  RandomStream rng = derive_stream(72, "roundtrip");
  int repaired = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    RandomStream r = rng.derive(static_cast<std::uint64_t>(trial));
    const Genotype g = sample_genotype(spec, r);
    const auto plan = decode(g, dims);
    const Genotype back = encode(plan);
    // Fusion and preference genes always survive.
    for (int i = 10; i < 15; ++i) CHECK(back.genes[i] == g.genes[i]);
    // Skip genes survive except gates rewritten by the repair rule, which
    // only ever turns a zero into a one.
    bool changed = false;
    for (int i = 0; i < 10; ++i) {
      if (back.genes[i] != g.genes[i]) {
        changed = true;
        CHECK(g.genes[i] == 0);
        CHECK(back.genes[i] == 1);
      }
    }
    if (changed) ++repaired;
    // Idempotence: a repaired genome re-encodes to itself.
    CHECK(encode(decode(back, dims)) == back);
  }
  CHECK(repaired > 0);
}

TEST_CASE("zero weights give uniform heads and the textbook loss values") {
  const auto dims = small_dims();
  const auto plan = decode(chain_genome(), dims);
  const auto data = tiny_dataset();
  const std::vector<double> w(static_cast<std::size_t>(plan.weight_dim), 0.0);
  const auto f = losses(plan, w, data, {0, 1, 2});
  REQUIRE(f.size() == 3);
  // GC: uniform softmax vs one-hot, summed over classes: (C-1)/C.
  CHECK(f[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // NC: uniform prediction over c classes.
  CHECK(f[1] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  // LP: probability one half everywhere.
  CHECK(f[2] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("single-node graph reduces the GCN layer to a dense layer") {
  const auto adj = normalized_adjacency(1, {});
  CHECK(adj.rows == 1);
  CHECK(adj.at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("node relabeling leaves graph-level outputs invariant") {
  const auto dims = small_dims();
  const auto plan = decode(chain_genome(static_cast<int>(FusionOp::kMean)), dims);
  auto data = tiny_dataset(2);
  RandomStream rng = derive_stream(73, "perm");
  const auto w = init_weights(plan, rng.derive("w"));

  // Permute nodes of graph 0.
  const GraphData& g = data.graphs[0];
  const int n = g.nodes;
  std::vector<std::uint32_t> perm;
  rng.shuffle_indices(static_cast<std::size_t>(n), perm);  // perm[old] = position order
  std::vector<int> new_of_old(n);
  for (int i = 0; i < n; ++i) new_of_old[perm[static_cast<std::size_t>(i)]] = i;

  MultiTaskDataset permuted = data;
  GraphData& pg = permuted.graphs[0];
  for (auto& [u, v] : pg.edges) {
    u = new_of_old[static_cast<std::size_t>(u)];
    v = new_of_old[static_cast<std::size_t>(v)];
    if (u > v) std::swap(u, v);
  }
  std::sort(pg.edges.begin(), pg.edges.end());
  for (int i = 0; i < n; ++i) {
    pg.node_labels[static_cast<std::size_t>(new_of_old[static_cast<std::size_t>(i)])] =
        g.node_labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < data.feature_dim; ++j) {
      pg.features.at(new_of_old[static_cast<std::size_t>(i)], j) = g.features.at(i, j);
    }
  }
  for (auto& e : permuted.lp_samples[0]) {
    e.u = new_of_old[static_cast<std::size_t>(e.u)];
    e.v = new_of_old[static_cast<std::size_t>(e.v)];
  }
  pg.norm_adj = normalized_adjacency(n, pg.edges);

  ad::Tape t1, t2;
  const auto b1 = forward(t1, plan, w, data, {0});
  const auto b2 = forward(t2, plan, w, permuted, {0});

  // GC logits identical.
  for (int c = 0; c < dims.graph_classes; ++c) {
    CHECK(t1.value(b1.gc_logits).at(0, c) ==
          doctest::Approx(t2.value(b2.gc_logits).at(0, c)).epsilon(1e-9));
  }
  // NC logits permuted along with the nodes.
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < dims.node_classes; ++c) {
      CHECK(t1.value(b1.nc_logits).at(i, c) ==
            doctest::Approx(t2.value(b2.nc_logits).at(new_of_old[static_cast<std::size_t>(i)], c))
                .epsilon(1e-9));
    }
  }
  // LP probability of the (relabeled) fixed pair identical.
  for (int s = 0; s < t1.value(b1.lp_logits).rows; ++s) {
    CHECK(t1.value(b1.lp_logits).at(s, 0) ==
          doctest::Approx(t2.value(b2.lp_logits).at(s, 0)).epsilon(1e-9));
  }
}

TEST_CASE("gradients pass finite differences for every fusion op and head") {
  const auto dims = small_dims();
  const auto data = tiny_dataset(5);
  RandomStream rng = derive_stream(74, "fd");
  const std::vector<int> batch{0, 1, 2, 3, 4};

  for (int fop = 0; fop < 6; ++fop) {
    CAPTURE(fop);
    // Multi-input blocks so the fusion op actually fuses.
    Genotype g;
    g.genes.assign(10, 1);
    for (int i = 0; i < 4; ++i) g.genes.push_back(fop);
    g.genes.push_back(1);
    const auto plan = decode(g, dims);
    const auto w = init_weights(plan, rng.derive("w").derive(static_cast<std::uint64_t>(fop)));
    const auto lg = grad(plan, w, data, batch);
    REQUIRE(lg.grads.size() == 3);

    RandomStream coords = rng.derive("coords").derive(static_cast<std::uint64_t>(fop));
    for (std::size_t task = 0; task < 3; ++task) {
      for (int probe = 0; probe < 20; ++probe) {
        const auto k = static_cast<std::size_t>(
            coords.next_int(0, static_cast<std::int64_t>(plan.weight_dim) - 1));
        const double fd = testing::central_difference(
            [&](const std::vector<double>& x) { return losses(plan, x, data, batch)[task]; }, w,
            k, 1e-4);
        CHECK(testing::gradient_rel_error(lg.grads[task][k], fd) < 1e-4);
      }
    }
  }
}

TEST_CASE("duplicating a batch graph changes neither losses nor gradients") {
  const auto dims = small_dims();
  const auto plan = decode(chain_genome(static_cast<int>(FusionOp::kAtt)), dims);
  const auto data = tiny_dataset(3);
  RandomStream rng = derive_stream(75, "dup");
  const auto w = init_weights(plan, rng);

  const auto single = grad(plan, w, data, {1});
  const auto doubled = grad(plan, w, data, {1, 1});
  for (std::size_t t = 0; t < single.losses.size(); ++t) {
    CHECK(single.losses[t] == doctest::Approx(doubled.losses[t]).epsilon(1e-12));
    for (std::size_t k = 0; k < single.grads[t].size(); ++k) {
      CHECK(single.grads[t][k] == doctest::Approx(doubled.grads[t][k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("a task subset produces exactly that many gradient rows") {
  const auto dims = small_dims({Task::kNc});
  Genotype g = chain_genome();
  const auto plan = decode(g, dims);
  const auto data = tiny_dataset(3);
  const auto w = init_weights(plan, derive_stream(76, "nc-only"));
  const auto lg = grad(plan, w, data, {0, 1});
  CHECK(lg.grads.size() == 1);
  CHECK(lg.losses.size() == 1);
}

TEST_CASE("metrics basics") {
  CHECK(rank_auc({0.9, 0.8, 0.1}, {1.0, 1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(rank_auc({0.5, 0.5}, {1.0, 0.0}) == doctest::Approx(0.5));
  CHECK(rank_auc({0.1, 0.9}, {1.0, 0.0}) == doctest::Approx(0.0));
}

TEST_CASE("random node predictions sit in the binomial accuracy band") {
  // 300 balanced 3-class nodes scored by an arbitrary fixed predictor.
  RandomStream rng = derive_stream(77, "nc-band");
  int correct = 0;
  constexpr int n = 300;
  for (int i = 0; i < n; ++i) {
    const int label = i % 3;
    const int pred = static_cast<int>(rng.next_int(0, 2));
    if (pred == label) ++correct;
  }
  const double acc = static_cast<double>(correct) / n;
  CHECK(acc > 0.33 - 0.1);
  CHECK(acc < 0.33 + 0.1);
}

TEST_CASE("synthetic dataset facts") {
  SynthConfig cfg;
  cfg.n_graphs = 60;
  cfg.nodes_per_graph = 12;
  cfg.feature_noise = 0.0;
  auto ds = synth_dataset(cfg, derive_stream(78, "synth"));

  CHECK(ds.graphs_in(Split::kTrain).size() == 42);
  CHECK(ds.graphs_in(Split::kVal).size() == 6);
  CHECK(ds.graphs_in(Split::kTest).size() == 12);

  // Noise-free features reveal the community: a linear probe (argmax of the
  // indicator block) recovers every node label.
  for (const auto& g : ds.graphs) {
    for (int i = 0; i < g.nodes; ++i) {
      int best = 0;
      for (int j = 1; j < ds.feature_dim; ++j) {
        if (g.features.at(i, j) > g.features.at(i, best)) best = j;
      }
      CHECK(best == g.node_labels[static_cast<std::size_t>(i)]);
    }
  }

  // LP negatives are non-edges, positives are edges.
  for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
    std::set<std::pair<int, int>> edges(ds.graphs[gi].edges.begin(), ds.graphs[gi].edges.end());
    for (const auto& e : ds.lp_samples[gi]) {
      const auto key = std::make_pair(std::min(e.u, e.v), std::max(e.u, e.v));
      if (e.label > 0.5) {
        CHECK(edges.count(key) == 1);
      } else {
        CHECK(edges.count(key) == 0);
      }
    }
  }
}

TEST_CASE("equal intra and inter edge rates defeat a community link predictor") {
  SynthConfig cfg;
  cfg.n_graphs = 20;
  cfg.nodes_per_graph = 20;
  cfg.intra_p = 0.15;
  cfg.inter_p = 0.15;
  cfg.lp_samples_per_graph = 12;
  const auto ds = synth_dataset(cfg, derive_stream(79, "null-lp"));

  std::vector<double> scores, labels;
  for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
    const auto& g = ds.graphs[gi];
    for (const auto& e : ds.lp_samples[gi]) {
      scores.push_back(g.node_labels[static_cast<std::size_t>(e.u)] ==
                               g.node_labels[static_cast<std::size_t>(e.v)]
                           ? 1.0
                           : 0.0);
      labels.push_back(e.label);
    }
  }
  CHECK(rank_auc(scores, labels) == doctest::Approx(0.5).epsilon(0.12));
}

TEST_CASE("oracle batches are deterministic and full batch is constant") {
  const auto dims = small_dims();
  const auto plan = decode(chain_genome(), dims);
  auto data = std::make_shared<const MultiTaskDataset>(tiny_dataset(8));
  RandomStream rng = derive_stream(80, "oracle");
  const auto w = init_weights(plan, rng.derive("w"));

  auto o1 = make_oracle(plan, data, BatchConfig{}, derive_stream(81, "batches"));
  auto o2 = make_oracle(plan, data, BatchConfig{}, derive_stream(81, "batches"));
  CHECK(o1->weight_dim() == plan.weight_dim);
  CHECK(o1->loss_count() == 3);

  const auto e1 = o1->eval(w, 0);
  const auto e1b = o1->eval(w, 7);  // full batch: any step sees the same data
  const auto e2 = o2->eval(w, 0);
  CHECK(e1.losses == e1b.losses);
  CHECK(e1.losses == e2.losses);
  CHECK(e1.grads == e2.grads);

  auto mini1 = make_oracle(plan, data, BatchConfig{2}, derive_stream(82, "mini"));
  auto mini2 = make_oracle(plan, data, BatchConfig{2}, derive_stream(82, "mini"));
  for (long step = 0; step < 6; ++step) {
    CHECK(mini1->losses_at(w, step) == mini2->losses_at(w, step));
  }
}
