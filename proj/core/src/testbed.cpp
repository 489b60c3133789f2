#include "blmol/testbed.hpp"

#include <cmath>

#include "blmol/errors.hpp"

namespace blmol {

namespace {

class QuadOracle final : public LossGradOracle {
 public:
  explicit QuadOracle(QuadraticMOProblem problem) : p_(std::move(problem)) {
    if (p_.centers.empty()) throw ContractError("quad_oracle: no centers");
    for (const auto& c : p_.centers) {
      if (c.size() != p_.dim()) throw ContractError("quad_oracle: center dimension mismatch");
    }
    if (p_.scales.empty()) p_.scales.assign(p_.objectives(), 1.0);
    if (p_.scales.size() != p_.objectives())
      throw ContractError("quad_oracle: scales length mismatch");
  }

  int weight_dim() const override { return static_cast<int>(p_.dim()); }
  int loss_count() const override { return static_cast<int>(p_.objectives()); }

  LossGrad eval(const std::vector<double>& w, long /*step*/) override {
    LossGrad lg;
    lg.losses.resize(p_.objectives());
    lg.grads.assign(p_.objectives(), std::vector<double>(p_.dim()));
    for (std::size_t i = 0; i < p_.objectives(); ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < p_.dim(); ++k) {
        const double diff = w[k] - p_.centers[i][k];
        sq += diff * diff;
        lg.grads[i][k] = p_.scales[i] * diff;
      }
      lg.losses[i] = 0.5 * p_.scales[i] * sq;
    }
    return lg;
  }

  std::vector<double> losses_at(const std::vector<double>& w, long /*step*/) override {
    std::vector<double> f(p_.objectives());
    for (std::size_t i = 0; i < p_.objectives(); ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < p_.dim(); ++k) {
        const double diff = w[k] - p_.centers[i][k];
        sq += diff * diff;
      }
      f[i] = 0.5 * p_.scales[i] * sq;
    }
    return f;
  }

  std::vector<double> project(std::vector<double> w) const override {
    if (!p_.box) return w;
    const auto& [lo, hi] = *p_.box;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] < lo[k]) w[k] = lo[k];
      if (w[k] > hi[k]) w[k] = hi[k];
    }
    return w;
  }

  std::vector<double> initial_weights(RandomStream& rng) const override {
    // Start inside the centers' bounding box so every loss is active.
    std::vector<double> w(p_.dim());
    for (std::size_t k = 0; k < p_.dim(); ++k) {
      double lo = p_.centers[0][k], hi = p_.centers[0][k];
      for (const auto& c : p_.centers) {
        lo = std::min(lo, c[k]);
        hi = std::max(hi, c[k]);
      }
      w[k] = lo + (hi - lo) * rng.next_double();
    }
    return w;
  }

 private:
  QuadraticMOProblem p_;
};

}  // namespace

std::unique_ptr<LossGradOracle> quad_oracle(QuadraticMOProblem problem) {
  return std::make_unique<QuadOracle>(std::move(problem));
}

std::vector<double> exact_pareto_weight(const QuadraticMOProblem& problem,
                                        const PreferenceVector& r) {
  if (problem.objectives() != 2 || r.size() != 2)
    throw ContractError("exact_pareto_weight: closed form requires exactly 2 objectives");
  const auto& c1 = problem.centers[0];
  const auto& c2 = problem.centers[1];
  const double s1 = problem.scales.empty() ? 1.0 : problem.scales[0];
  const double s2 = problem.scales.empty() ? 1.0 : problem.scales[1];
  // On w(t) = c1 + t (c2 - c1): r1 s1 t^2 = r2 s2 (1-t)^2, root in [0, 1].
  const double a = std::sqrt(r[0] * s1);
  const double b = std::sqrt(r[1] * s2);
  const double t = b / (a + b);
  std::vector<double> w(c1.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = c1[k] + t * (c2[k] - c1[k]);
  return w;
}

SyntheticBL synthetic_bl(const SyntheticBLConfig& config) {
  constexpr int kDim = 2;
  const std::vector<std::vector<double>> base_centers{{0.0, 0.0}, {2.0, 1.0}};
  const std::vector<std::vector<double>> val_shift{{0.5, -0.3}, {-0.4, 0.2}};

  // Each gene owns one (objective, component) slot and toggles a fixed
  // offset there; amplitudes come from the problem seed.
  struct GeneMap {
    int objective;
    int component;
    double amplitude;
  };
  auto maps = std::make_shared<std::vector<GeneMap>>();
  {
    RandomStream rng = derive_stream(config.seed, "synthetic-bl/offsets");
    for (int k = 0; k < config.binary_genes; ++k) {
      RandomStream g = rng.derive(static_cast<std::uint64_t>(k));
      GeneMap m;
      m.objective = k % 2;
      m.component = (k / 2) % kDim;
      m.amplitude = (0.2 + 0.5 * g.next_double()) * (g.next_double() < 0.5 ? -1.0 : 1.0);
      maps->push_back(m);
    }
  }

  const auto centers_of = [maps, base_centers, config](const Genotype& g) {
    QuadraticMOProblem p;
    p.centers = base_centers;
    for (int k = 0; k < config.binary_genes; ++k) {
      if (g.genes[static_cast<std::size_t>(k)] == 1) {
        const GeneMap& m = (*maps)[static_cast<std::size_t>(k)];
        p.centers[static_cast<std::size_t>(m.objective)][static_cast<std::size_t>(m.component)] +=
            m.amplitude;
      }
    }
    return p;
  };

  const auto ul_of = [val_shift](const QuadraticMOProblem& p, const std::vector<double>& w) {
    std::vector<double> out(2, 0.0);
    for (int i = 0; i < 2; ++i) {
      double sq = 0.0;
      for (int k = 0; k < kDim; ++k) {
        const double v = p.centers[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] +
                         val_shift[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        const double d = w[static_cast<std::size_t>(k)] - v;
        sq += d * d;
      }
      out[static_cast<std::size_t>(i)] = 0.5 * sq;
    }
    return out;
  };

  SyntheticBL out;
  BLProblem& problem = out.problem;
  for (int k = 0; k < config.binary_genes; ++k) {
    problem.genes.push_back(GeneSpec{GeneKind::kBinary, 0, 1});
  }
  problem.genes.push_back(GeneSpec{GeneKind::kIndex, 1, config.pref_count});
  problem.pref_gene = config.binary_genes;
  problem.prefs = simplex_lattice(2, config.pref_count - 1);
  problem.encoding = make_feature_layout(problem.genes, 2);
  problem.objective_names = {"val_loss_1", "val_loss_2"};
  problem.maximize_display = {false, false};

  problem.ll.solver = Solver::kEpo;
  problem.ll.optimizer = Optimizer::kPlain;
  problem.ll.lr = config.ll_lr;
  problem.ll.epochs = config.ll_steps;
  problem.ll.batches_per_epoch = 1;
  problem.ll.eps_track = 1e-9;
  problem.ll.line_search = true;

  problem.oracle_factory = [centers_of](const Genotype& g, RandomStream) {
    return quad_oracle(centers_of(g));
  };
  problem.ul_evaluate = [centers_of, ul_of](const Genotype& g, const std::vector<double>& w) {
    return ul_of(centers_of(g), w);
  };

  out.ll_of = centers_of;
  out.truth = [centers_of, ul_of, problem](const Genotype& g) {
    const QuadraticMOProblem p = centers_of(g);
    const PreferenceVector r = problem.preference_of(g);
    return ul_of(p, exact_pareto_weight(p, r));
  };
  return out;
}

}  // namespace blmol
