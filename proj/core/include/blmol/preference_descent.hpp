#pragma once

#include <memory>
#include <vector>

#include "blmol/objective.hpp"
#include "blmol/rng.hpp"

namespace blmol {

struct LossGrad {
  std::vector<double> losses;              // F, length m'
  std::vector<std::vector<double>> grads;  // G, one row per loss, each length n
};

// Lower-level problem abstraction: differentiable loss vector over a flat
// weight vector. Batches are addressed by step index so that repeated
// loss-only evaluations (line search) see the same batch as the gradient.
class LossGradOracle {
 public:
  virtual ~LossGradOracle() = default;

  virtual int weight_dim() const = 0;
  virtual int loss_count() const = 0;

  /// Losses and per-loss gradients on the batch for `step`.
  virtual LossGrad eval(const std::vector<double>& w, long step) = 0;
  /// Losses only, same batch addressing as eval().
  virtual std::vector<double> losses_at(const std::vector<double>& w, long step) = 0;
  /// Feasibility projection applied after every update (default: identity).
  virtual std::vector<double> project(std::vector<double> w) const { return w; }
  virtual std::vector<double> initial_weights(RandomStream& rng) const;
};

enum class Solver { kLs, kEpo, kWs };
enum class Optimizer { kPlain, kAdam };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  Solver solver = Solver::kEpo;
  Optimizer optimizer = Optimizer::kPlain;
  AdamParams adam;
  double lr = 0.001;
  int epochs = 1;
  int batches_per_epoch = 1;
  // Preference-tracking tolerance: above it the EPO step balances toward the
  // preference ray, below it the step is a common descent direction.
  double eps_track = 1e-4;
  // Backtracking on the mode objective; honored for plain-optimizer EPO only
  // (deterministic full-batch training), never for Adam.
  bool line_search = true;

  long total_steps() const { return static_cast<long>(epochs) * batches_per_epoch; }
};

struct TrainStepRecord {
  std::vector<double> losses;
  std::vector<double> mu;
  double nonuniformity = 0.0;
};

struct TrainTrace {
  std::vector<TrainStepRecord> steps;
  std::vector<double> final_weights;
  bool stationary = false;
};

/// Linear scalarization coefficients: mu = r.
std::vector<double> ls_coefficients(const PreferenceVector& r);

/// KL divergence of the normalized weighted losses from uniform; zero iff
/// r_j F_j is equal across objectives. Losses are clamped to 1e-12.
double nonuniformity(const std::vector<double>& losses, const PreferenceVector& r);

struct EpoResult {
  std::vector<double> mu;   // on the simplex
  bool balance_mode = false;
  bool stationary = false;  // min-norm direction vanished (Pareto-stationarity certificate)
};

/// Exact-Pareto-tracking coefficients. Off the preference ray the step
/// balances the weighted losses without letting the worst one ascend; on the
/// ray it is the common descent direction, falling back to the minimum-norm
/// coefficients when none exists.
EpoResult epo_coefficients(const std::vector<double>& losses,
                           const std::vector<std::vector<double>>& grads,
                           const PreferenceVector& r, double eps_track = 1e-4);

/// Minimum-norm point of the convex hull of the gradient rows (coefficients).
std::vector<double> min_norm_coefficients(const std::vector<std::vector<double>>& grads);

/// Composite direction d = mu^T G.
std::vector<double> composite_gradient(const std::vector<double>& mu,
                                       const std::vector<std::vector<double>>& grads);

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
};

/// One update w' = w - lr * step(d). Non-finite results reject the step and
/// halve the rate; throws NumericError after 10 rejections. Adam moments are
/// committed only for the accepted step.
std::vector<double> descent_step(const std::vector<double>& w, const std::vector<double>& d,
                                 const TrainConfig& config, AdamState& state);

/// Run epochs x batches_per_epoch solver steps against the oracle.
TrainTrace train_preference(LossGradOracle& oracle, const PreferenceVector& r,
                            const TrainConfig& config, RandomStream rng);

}  // namespace blmol
