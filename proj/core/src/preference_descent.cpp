#include "blmol/preference_descent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blmol/errors.hpp"

namespace blmol {

namespace {

constexpr double kLossFloor = 1e-12;

std::vector<std::vector<double>> gram(const std::vector<std::vector<double>>& grads) {
  const std::size_t m = grads.size();
  std::vector<std::vector<double>> c(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < grads[i].size(); ++k) dot += grads[i][k] * grads[j][k];
      c[i][j] = dot;
      c[j][i] = dot;
    }
  }
  return c;
}

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>& x) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row) {
      if (std::fabs(a[row][col]) > std::fabs(a[pivot][col])) pivot = row;
    }
    if (std::fabs(a[pivot][col]) < 1e-14) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t row = col + 1; row < n; ++row) {
      const double f = a[row][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[row][k] -= f * a[col][k];
      b[row] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t row = n; row-- > 0;) {
    double s = b[row];
    for (std::size_t k = row + 1; k < n; ++k) s -= a[row][k] * x[k];
    x[row] = s / a[row][row];
  }
  return true;
}

std::vector<double> matvec(const std::vector<std::vector<double>>& a,
                           const std::vector<double>& x) {
  std::vector<double> y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
  }
  return y;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> LossGradOracle::initial_weights(RandomStream& rng) const {
  std::vector<double> w(static_cast<std::size_t>(weight_dim()));
  for (double& x : w) x = rng.next_double() - 0.5;
  return w;
}

std::vector<double> ls_coefficients(const PreferenceVector& r) { return r.values(); }

double nonuniformity(const std::vector<double>& losses, const PreferenceVector& r) {
  if (losses.size() != r.size()) throw ContractError("nonuniformity: length mismatch");
  const std::size_t m = losses.size();
  std::vector<double> weighted(m);
  double sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    weighted[j] = r[j] * std::max(losses[j], kLossFloor);
    sum += weighted[j];
  }
  double kl = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double p = weighted[j] / sum;
    kl += p * std::log(p * static_cast<double>(m));
  }
  return std::max(kl, 0.0);
}

std::vector<double> min_norm_coefficients(const std::vector<std::vector<double>>& grads) {
  const std::size_t m = grads.size();
  if (m == 0) throw ContractError("min_norm_coefficients: no gradients");
  if (m == 1) return {1.0};
  const auto c = gram(grads);

  double best_norm = std::numeric_limits<double>::infinity();
  std::vector<double> best(m, 1.0 / static_cast<double>(m));
  // All support sets: solve the equality-constrained problem on each subset,
  // keep feasible candidates, take the smallest norm.
  const unsigned subsets = (1u << m);
  for (unsigned mask = 1; mask < subsets; ++mask) {
    std::vector<std::size_t> support;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask & (1u << j)) support.push_back(j);
    }
    const std::size_t s = support.size();
    std::vector<double> beta_s;
    if (s == 1) {
      beta_s = {1.0};
    } else {
      // KKT system: 2*C_s beta + lambda 1 = 0, 1^T beta = 1.
      std::vector<std::vector<double>> a(s + 1, std::vector<double>(s + 1, 0.0));
      std::vector<double> b(s + 1, 0.0);
      for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < s; ++j) a[i][j] = 2.0 * c[support[i]][support[j]];
        a[i][s] = 1.0;
        a[s][i] = 1.0;
      }
      b[s] = 1.0;
      std::vector<double> x;
      if (!solve_linear(a, b, x)) continue;
      beta_s.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(s));
    }
    bool feasible = true;
    for (double v : beta_s) {
      if (v < -1e-9) feasible = false;
    }
    if (!feasible) continue;
    std::vector<double> beta(m, 0.0);
    double norm1 = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      beta[support[i]] = std::max(beta_s[i], 0.0);
      norm1 += beta[support[i]];
    }
    if (norm1 <= 0.0) continue;
    for (double& v : beta) v /= norm1;
    const double q = dot(beta, matvec(c, beta));
    if (q < best_norm) {
      best_norm = q;
      best = beta;
    }
  }
  return best;
}

namespace {

// Maximize obj . beta over { beta on the simplex : (C beta)_j >= 0, j in
// constraint_rows } by enumerating basic feasible solutions. Empty result
// means infeasible.
std::vector<double> solve_balance_lp(const std::vector<std::vector<double>>& c,
                                     const std::vector<double>& obj,
                                     const std::vector<std::size_t>& constraint_rows) {
  const std::size_t m = obj.size();
  // Inequalities: beta_i >= 0 (i < m) and row constraints (>= m).
  const std::size_t total = m + constraint_rows.size();
  std::vector<std::vector<double>> ineq(total, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) ineq[i][i] = 1.0;
  for (std::size_t k = 0; k < constraint_rows.size(); ++k) {
    ineq[m + k] = c[constraint_rows[k]];
  }

  const auto feasible = [&](const std::vector<double>& beta) {
    for (const auto& row : ineq) {
      if (dot(row, beta) < -1e-9) return false;
    }
    return true;
  };

  double best_val = -std::numeric_limits<double>::infinity();
  std::vector<double> best;

  std::vector<std::size_t> active(m > 0 ? m - 1 : 0);
  // Choose m-1 active inequalities + the simplex equality -> candidate vertex.
  const auto try_candidate = [&](const std::vector<std::size_t>& act) {
    std::vector<std::vector<double>> a(m, std::vector<double>(m, 1.0));
    std::vector<double> b(m, 0.0);
    // Row 0: sum beta = 1.
    b[0] = 1.0;
    for (std::size_t i = 0; i < act.size(); ++i) {
      a[i + 1] = ineq[act[i]];
      b[i + 1] = 0.0;
    }
    std::vector<double> beta;
    if (!solve_linear(a, b, beta)) return;
    for (double& v : beta) {
      if (v > -1e-12 && v < 0.0) v = 0.0;
    }
    if (!feasible(beta)) return;
    const double val = dot(obj, beta);
    if (val > best_val) {
      best_val = val;
      best = beta;
    }
  };

  if (m == 1) {
    std::vector<double> beta{1.0};
    if (feasible(beta)) return beta;
    return {};
  }
  // Enumerate subsets of size m-1 (m <= 3 keeps this tiny).
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  if (m == 2) {
    for (std::size_t i = 0; i < total; ++i) try_candidate({i});
  } else {
    for (std::size_t i = 0; i < total; ++i) {
      for (std::size_t j = i + 1; j < total; ++j) try_candidate({i, j});
    }
  }
  return best;
}

}  // namespace

EpoResult epo_coefficients(const std::vector<double>& losses,
                           const std::vector<std::vector<double>>& grads,
                           const PreferenceVector& r, double eps_track) {
  const std::size_t m = losses.size();
  if (grads.size() != m || r.size() != m)
    throw ContractError("epo_coefficients: shape mismatch");
  EpoResult out;
  if (m == 1) {
    out.mu = {1.0};
    return out;
  }

  double grad_scale = 0.0;
  for (const auto& row : grads) {
    for (double v : row) grad_scale = std::max(grad_scale, std::fabs(v));
  }
  if (grad_scale == 0.0) {  // degenerate gradients: nothing to steer
    out.mu = r.values();
    out.stationary = true;
    return out;
  }

  const auto c = gram(grads);
  std::vector<double> weighted(m);
  double sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    weighted[j] = r[j] * std::max(losses[j], kLossFloor);
    sum += weighted[j];
  }
  const double kl = nonuniformity(losses, r);

  if (kl > eps_track) {
    // Anchoring adjustments: moving along -mu^T G with mu maximizing
    // beta^T C a descends the nonuniformity fastest within the hull.
    std::vector<double> a(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double p = weighted[j] / sum;
      a[j] = r[j] * (std::log(p * static_cast<double>(m)) - kl);
    }
    const double max_weighted = *std::max_element(weighted.begin(), weighted.end());
    std::vector<std::size_t> worst;
    for (std::size_t j = 0; j < m; ++j) {
      if (weighted[j] >= max_weighted * (1.0 - 1e-12)) worst.push_back(j);
    }
    const std::vector<double> ca = matvec(c, a);
    std::vector<double> mu = solve_balance_lp(c, ca, worst);
    // Balancing is only usable when some constrained hull direction actually
    // descends the nonuniformity; otherwise (the ray is unreachable from
    // here without ascending the worst weighted loss) fall through to a
    // common descent step toward the front.
    if (!mu.empty() && dot(mu, ca) > 0.0) {
      double norm1 = 0.0;
      for (double& v : mu) {
        v = std::max(v, 0.0);
        norm1 += v;
      }
      for (double& v : mu) v /= norm1;
      out.mu = std::move(mu);
      out.balance_mode = true;
      return out;
    }
  }

  out.mu = min_norm_coefficients(grads);
  const std::vector<double> d = composite_gradient(out.mu, grads);
  double dnorm = 0.0;
  for (double v : d) dnorm = std::max(dnorm, std::fabs(v));
  out.stationary = dnorm <= 1e-9 * grad_scale;
  return out;
}

std::vector<double> composite_gradient(const std::vector<double>& mu,
                                       const std::vector<std::vector<double>>& grads) {
  if (mu.size() != grads.size()) throw ContractError("composite_gradient: shape mismatch");
  if (grads.empty()) return {};
  std::vector<double> d(grads[0].size(), 0.0);
  for (std::size_t j = 0; j < grads.size(); ++j) {
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += mu[j] * grads[j][k];
  }
  return d;
}

std::vector<double> descent_step(const std::vector<double>& w, const std::vector<double>& d,
                                 const TrainConfig& config, AdamState& state) {
  if (w.size() != d.size()) throw ContractError("descent_step: shape mismatch");
  const std::size_t n = w.size();

  std::vector<double> update(n);
  std::vector<double> m_new, v_new;
  long t_new = state.t;
  if (config.optimizer == Optimizer::kPlain) {
    update = d;
  } else {
    if (state.m.size() != n) {
      state.m.assign(n, 0.0);
      state.v.assign(n, 0.0);
      state.t = 0;
    }
    m_new = state.m;
    v_new = state.v;
    t_new = state.t + 1;
    const auto& ap = config.adam;
    const double bc1 = 1.0 - std::pow(ap.beta1, static_cast<double>(t_new));
    const double bc2 = 1.0 - std::pow(ap.beta2, static_cast<double>(t_new));
    for (std::size_t k = 0; k < n; ++k) {
      m_new[k] = ap.beta1 * m_new[k] + (1.0 - ap.beta1) * d[k];
      v_new[k] = ap.beta2 * v_new[k] + (1.0 - ap.beta2) * d[k] * d[k];
      update[k] = (m_new[k] / bc1) / (std::sqrt(v_new[k] / bc2) + ap.eps);
    }
  }

  double lr = config.lr;
  for (int attempt = 0; attempt <= 10; ++attempt) {
    std::vector<double> next(n);
    bool finite = true;
    for (std::size_t k = 0; k < n; ++k) {
      next[k] = w[k] - lr * update[k];
      if (!std::isfinite(next[k])) finite = false;
    }
    if (finite) {
      if (config.optimizer == Optimizer::kAdam) {
        state.m = std::move(m_new);
        state.v = std::move(v_new);
        state.t = t_new;
      }
      return next;
    }
    lr *= 0.5;
  }
  throw NumericError("descent_step: non-finite update after 10 learning-rate halvings");
}

TrainTrace train_preference(LossGradOracle& oracle, const PreferenceVector& r,
                            const TrainConfig& config, RandomStream rng) {
  if (static_cast<std::size_t>(oracle.loss_count()) != r.size())
    throw ContractError("train_preference: preference length does not match oracle losses");
  if (config.epochs < 1) throw ContractError("train_preference: epochs must be >= 1");

  TrainTrace trace;
  RandomStream init_rng = rng.derive("init");
  std::vector<double> w = oracle.project(oracle.initial_weights(init_rng));
  AdamState adam_state;

  const long total = config.total_steps();
  const bool plain_epo_line_search = config.line_search &&
                                     config.optimizer == Optimizer::kPlain &&
                                     config.solver == Solver::kEpo;
  int frozen_in_a_row = 0;

  for (long step = 0; step < total; ++step) {
    LossGrad lg = oracle.eval(w, step);
    const double kl = nonuniformity(lg.losses, r);

    std::vector<double> mu;
    bool stationary = false;
    bool balance = false;
    switch (config.solver) {
      case Solver::kLs:
        mu = ls_coefficients(r);
        break;
      case Solver::kWs:
        mu.assign(r.size(), 1.0 / static_cast<double>(r.size()));
        break;
      case Solver::kEpo: {
        EpoResult er = epo_coefficients(lg.losses, lg.grads, r, config.eps_track);
        mu = std::move(er.mu);
        stationary = er.stationary;
        balance = er.balance_mode;
        break;
      }
    }
    trace.steps.push_back(TrainStepRecord{lg.losses, mu, kl});
    trace.stationary = stationary;

    const std::vector<double> d = composite_gradient(mu, lg.grads);
    double dmax = 0.0;
    for (double v : d) dmax = std::max(dmax, std::fabs(v));
    if (dmax == 0.0) {
      if (config.optimizer == Optimizer::kPlain) break;  // nothing will change
      continue;
    }

    if (plain_epo_line_search) {
      bool accepted = false;
      double lr = config.lr;
      for (int k = 0; k < 30 && !accepted; ++k, lr *= 0.5) {
        std::vector<double> w_try(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) w_try[i] = w[i] - lr * d[i];
        w_try = oracle.project(std::move(w_try));
        const std::vector<double> f_try = oracle.losses_at(w_try, step);
        bool finite = true;
        for (double v : f_try) {
          if (!std::isfinite(v)) finite = false;
        }
        if (!finite) continue;
        if (balance) {
          if (nonuniformity(f_try, r) < kl) {
            w = std::move(w_try);
            accepted = true;
          }
        } else {
          bool no_worse = true;
          double gain = 0.0;
          for (std::size_t j = 0; j < f_try.size(); ++j) {
            if (f_try[j] > lg.losses[j] + 1e-15) no_worse = false;
            gain += lg.losses[j] - f_try[j];
          }
          if (no_worse && gain > 0.0) {
            w = std::move(w_try);
            accepted = true;
          }
        }
      }
      if (accepted) {
        frozen_in_a_row = 0;
      } else if (++frozen_in_a_row >= 3) {
        break;  // pinned (bounded front or exact point): further steps are no-ops
      }
    } else {
      w = oracle.project(descent_step(w, d, config, adam_state));
    }
  }

  trace.final_weights = w;
  return trace;
}

}  // namespace blmol
