#include "blmol/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "blmol/errors.hpp"

namespace blmol::ad {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ContractError(std::string(op) + ": shape mismatch");
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid_stable(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

Tape::Id Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::input(Matrix value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Id Tape::param(Matrix value) {
  Node n;
  n.op = Op::kParam;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
  check_same_shape(value(a), value(b), "add");
  Node n;
  n.op = Op::kAdd;
  n.src = {a, b};
  n.value = value(a);
  const Matrix& vb = value(b);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] += vb.data[i];
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  check_same_shape(value(a), value(b), "sub");
  Node n;
  n.op = Op::kSub;
  n.src = {a, b};
  n.value = value(a);
  const Matrix& vb = value(b);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] -= vb.data[i];
  return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
  check_same_shape(value(a), value(b), "mul");
  Node n;
  n.op = Op::kMul;
  n.src = {a, b};
  n.value = value(a);
  const Matrix& vb = value(b);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] *= vb.data[i];
  return push(std::move(n));
}

Tape::Id Tape::emax(Id a, Id b) {
  check_same_shape(value(a), value(b), "emax");
  Node n;
  n.op = Op::kEmax;
  n.src = {a, b};
  n.value = value(a);
  const Matrix& vb = value(b);
  for (std::size_t i = 0; i < n.value.size(); ++i)
    n.value.data[i] = std::max(n.value.data[i], vb.data[i]);
  return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.cols != vb.rows) throw ContractError("matmul: inner dimension mismatch");
  Node n;
  n.op = Op::kMatmul;
  n.src = {a, b};
  n.value = Matrix(va.rows, vb.cols);
  for (int i = 0; i < va.rows; ++i) {
    for (int k = 0; k < va.cols; ++k) {
      const double aik = va.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < vb.cols; ++j) n.value.at(i, j) += aik * vb.at(k, j);
    }
  }
  return push(std::move(n));
}

Tape::Id Tape::add_row(Id m, Id row) {
  const Matrix& vm = value(m);
  const Matrix& vr = value(row);
  if (vr.rows != 1 || vr.cols != vm.cols) throw ContractError("add_row: row shape mismatch");
  Node n;
  n.op = Op::kAddRow;
  n.src = {m, row};
  n.value = vm;
  for (int i = 0; i < vm.rows; ++i) {
    for (int j = 0; j < vm.cols; ++j) n.value.at(i, j) += vr.at(0, j);
  }
  return push(std::move(n));
}

Tape::Id Tape::scale(Id a, double s) {
  Node n;
  n.op = Op::kScale;
  n.src = {a, -1};
  n.fdata = {s};
  n.value = value(a);
  for (double& v : n.value.data) v *= s;
  return push(std::move(n));
}

Tape::Id Tape::relu(Id a) {
  Node n;
  n.op = Op::kRelu;
  n.src = {a, -1};
  n.value = value(a);
  for (double& v : n.value.data) v = std::max(v, 0.0);
  return push(std::move(n));
}

Tape::Id Tape::tanh_op(Id a) {
  Node n;
  n.op = Op::kTanh;
  n.src = {a, -1};
  n.value = value(a);
  for (double& v : n.value.data) v = std::tanh(v);
  return push(std::move(n));
}

Tape::Id Tape::sigmoid(Id a) {
  Node n;
  n.op = Op::kSigmoid;
  n.src = {a, -1};
  n.value = value(a);
  for (double& v : n.value.data) v = sigmoid_stable(v);
  return push(std::move(n));
}

Tape::Id Tape::softmax_rows(Id a) {
  Node n;
  n.op = Op::kSoftmaxRows;
  n.src = {a, -1};
  n.value = value(a);
  for (int i = 0; i < n.value.rows; ++i) {
    double hi = n.value.at(i, 0);
    for (int j = 1; j < n.value.cols; ++j) hi = std::max(hi, n.value.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < n.value.cols; ++j) {
      const double e = std::exp(n.value.at(i, j) - hi);
      n.value.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < n.value.cols; ++j) n.value.at(i, j) /= sum;
  }
  return push(std::move(n));
}

Tape::Id Tape::concat_cols(const std::vector<Id>& xs) {
  if (xs.empty()) throw ContractError("concat_cols: empty");
  int cols = 0;
  const int rows = value(xs[0]).rows;
  for (Id x : xs) {
    if (value(x).rows != rows) throw ContractError("concat_cols: row mismatch");
    cols += value(x).cols;
  }
  Node n;
  n.op = Op::kConcatCols;
  n.many = xs;
  n.value = Matrix(rows, cols);
  int offset = 0;
  for (Id x : xs) {
    const Matrix& v = value(x);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < v.cols; ++j) n.value.at(i, offset + j) = v.at(i, j);
    }
    offset += v.cols;
  }
  return push(std::move(n));
}

Tape::Id Tape::concat_rows(const std::vector<Id>& xs) {
  if (xs.empty()) throw ContractError("concat_rows: empty");
  int rows = 0;
  const int cols = value(xs[0]).cols;
  for (Id x : xs) {
    if (value(x).cols != cols) throw ContractError("concat_rows: column mismatch");
    rows += value(x).rows;
  }
  Node n;
  n.op = Op::kConcatRows;
  n.many = xs;
  n.value = Matrix(rows, cols);
  int offset = 0;
  for (Id x : xs) {
    const Matrix& v = value(x);
    for (int i = 0; i < v.rows; ++i) {
      for (int j = 0; j < cols; ++j) n.value.at(offset + i, j) = v.at(i, j);
    }
    offset += v.rows;
  }
  return push(std::move(n));
}

Tape::Id Tape::mean_rows(Id a) {
  const Matrix& va = value(a);
  Node n;
  n.op = Op::kMeanRows;
  n.src = {a, -1};
  n.value = Matrix(1, va.cols);
  for (int i = 0; i < va.rows; ++i) {
    for (int j = 0; j < va.cols; ++j) n.value.at(0, j) += va.at(i, j);
  }
  for (double& v : n.value.data) v /= va.rows;
  return push(std::move(n));
}

Tape::Id Tape::gather_rows(Id a, std::vector<int> rows) {
  const Matrix& va = value(a);
  Node n;
  n.op = Op::kGatherRows;
  n.src = {a, -1};
  n.value = Matrix(static_cast<int>(rows.size()), va.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= va.rows) throw ContractError("gather_rows: index out of range");
    for (int j = 0; j < va.cols; ++j) n.value.at(static_cast<int>(i), j) = va.at(rows[i], j);
  }
  n.idata = std::move(rows);
  return push(std::move(n));
}

Tape::Id Tape::col(Id a, int j) {
  const Matrix& va = value(a);
  if (j < 0 || j >= va.cols) throw ContractError("col: index out of range");
  Node n;
  n.op = Op::kCol;
  n.src = {a, -1};
  n.idata = {j};
  n.value = Matrix(va.rows, 1);
  for (int i = 0; i < va.rows; ++i) n.value.at(i, 0) = va.at(i, j);
  return push(std::move(n));
}

Tape::Id Tape::scale_rows(Id a, Id colvec) {
  const Matrix& va = value(a);
  const Matrix& vc = value(colvec);
  if (vc.cols != 1 || vc.rows != va.rows) throw ContractError("scale_rows: column shape mismatch");
  Node n;
  n.op = Op::kScaleRows;
  n.src = {a, colvec};
  n.value = va;
  for (int i = 0; i < va.rows; ++i) {
    for (int j = 0; j < va.cols; ++j) n.value.at(i, j) *= vc.at(i, 0);
  }
  return push(std::move(n));
}

Tape::Id Tape::mse_onehot(Id probs, std::vector<int> labels) {
  const Matrix& p = value(probs);
  if (static_cast<int>(labels.size()) != p.rows) throw ContractError("mse_onehot: label count");
  Node n;
  n.op = Op::kMseOnehot;
  n.src = {probs, -1};
  double loss = 0.0;
  for (int i = 0; i < p.rows; ++i) {
    for (int j = 0; j < p.cols; ++j) {
      const double y = (labels[i] == j) ? 1.0 : 0.0;
      const double d = p.at(i, j) - y;
      loss += d * d;
    }
  }
  n.idata = std::move(labels);
  n.value = Matrix(1, 1);
  n.value.at(0, 0) = loss / p.rows;
  return push(std::move(n));
}

Tape::Id Tape::nll_logits(Id logits, std::vector<int> labels) {
  const Matrix& z = value(logits);
  if (static_cast<int>(labels.size()) != z.rows) throw ContractError("nll_logits: label count");
  Node n;
  n.op = Op::kNllLogits;
  n.src = {logits, -1};
  n.aux = Matrix(z.rows, z.cols);  // softmax probabilities for the backward pass
  double loss = 0.0;
  for (int i = 0; i < z.rows; ++i) {
    double hi = z.at(i, 0);
    for (int j = 1; j < z.cols; ++j) hi = std::max(hi, z.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < z.cols; ++j) sum += std::exp(z.at(i, j) - hi);
    const double logsum = hi + std::log(sum);
    for (int j = 0; j < z.cols; ++j) n.aux.at(i, j) = std::exp(z.at(i, j) - logsum);
    loss -= z.at(i, labels[i]) - logsum;
  }
  n.idata = std::move(labels);
  n.value = Matrix(1, 1);
  n.value.at(0, 0) = loss / z.rows;
  return push(std::move(n));
}

Tape::Id Tape::bce_logits(Id logits, std::vector<double> targets) {
  const Matrix& z = value(logits);
  if (z.cols != 1 || static_cast<int>(targets.size()) != z.rows)
    throw ContractError("bce_logits: expects a column of logits matching targets");
  Node n;
  n.op = Op::kBceLogits;
  n.src = {logits, -1};
  double loss = 0.0;
  for (int i = 0; i < z.rows; ++i) {
    loss += softplus(z.at(i, 0)) - targets[i] * z.at(i, 0);
  }
  n.fdata = std::move(targets);
  n.value = Matrix(1, 1);
  n.value.at(0, 0) = loss / z.rows;
  return push(std::move(n));
}

Tape::Id Tape::weighted_sum(const std::vector<Id>& scalars, std::vector<double> weights) {
  if (scalars.size() != weights.size()) throw ContractError("weighted_sum: size mismatch");
  Node n;
  n.op = Op::kWeightedSum;
  n.many = scalars;
  double total = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    const Matrix& v = value(scalars[i]);
    if (v.rows != 1 || v.cols != 1) throw ContractError("weighted_sum: non-scalar operand");
    total += weights[i] * v.at(0, 0);
  }
  n.fdata = std::move(weights);
  n.value = Matrix(1, 1);
  n.value.at(0, 0) = total;
  return push(std::move(n));
}

void Tape::backward(Id scalar_loss) {
  Node& loss = nodes_[static_cast<std::size_t>(scalar_loss)];
  if (loss.value.rows != 1 || loss.value.cols != 1)
    throw ContractError("backward: loss must be scalar");
  for (Node& n : nodes_) {
    n.grad = Matrix(n.value.rows, n.value.cols);
  }
  loss.grad.at(0, 0) = 1.0;
  for (std::size_t i = static_cast<std::size_t>(scalar_loss) + 1; i-- > 0;) {
    backward_node(nodes_[i]);
  }
}

void Tape::backward_node(Node& n) {
  const Matrix& g = n.grad;
  const auto grad_of = [&](Id id) -> Matrix& { return nodes_[static_cast<std::size_t>(id)].grad; };
  const auto value_of = [&](Id id) -> const Matrix& {
    return nodes_[static_cast<std::size_t>(id)].value;
  };

  switch (n.op) {
    case Op::kInput:
    case Op::kParam:
      return;
    case Op::kAdd: {
      Matrix& ga = grad_of(n.src[0]);
      Matrix& gb = grad_of(n.src[1]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i];
        gb.data[i] += g.data[i];
      }
      return;
    }
    case Op::kSub: {
      Matrix& ga = grad_of(n.src[0]);
      Matrix& gb = grad_of(n.src[1]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i];
        gb.data[i] -= g.data[i];
      }
      return;
    }
    case Op::kMul: {
      Matrix& ga = grad_of(n.src[0]);
      Matrix& gb = grad_of(n.src[1]);
      const Matrix& va = value_of(n.src[0]);
      const Matrix& vb = value_of(n.src[1]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i] * vb.data[i];
        gb.data[i] += g.data[i] * va.data[i];
      }
      return;
    }
    case Op::kEmax: {
      Matrix& ga = grad_of(n.src[0]);
      Matrix& gb = grad_of(n.src[1]);
      const Matrix& va = value_of(n.src[0]);
      const Matrix& vb = value_of(n.src[1]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (va.data[i] >= vb.data[i]) {
          ga.data[i] += g.data[i];
        } else {
          gb.data[i] += g.data[i];
        }
      }
      return;
    }
    case Op::kMatmul: {
      const Matrix& va = value_of(n.src[0]);
      const Matrix& vb = value_of(n.src[1]);
      Matrix& ga = grad_of(n.src[0]);
      Matrix& gb = grad_of(n.src[1]);
      // dA = g * B^T
      for (int i = 0; i < va.rows; ++i) {
        for (int k = 0; k < va.cols; ++k) {
          double s = 0.0;
          for (int j = 0; j < vb.cols; ++j) s += g.at(i, j) * vb.at(k, j);
          ga.at(i, k) += s;
        }
      }
      // dB = A^T * g
      for (int k = 0; k < va.cols; ++k) {
        for (int j = 0; j < vb.cols; ++j) {
          double s = 0.0;
          for (int i = 0; i < va.rows; ++i) s += va.at(i, k) * g.at(i, j);
          gb.at(k, j) += s;
        }
      }
      return;
    }
    case Op::kAddRow: {
      Matrix& gm = grad_of(n.src[0]);
      Matrix& gr = grad_of(n.src[1]);
      for (int i = 0; i < g.rows; ++i) {
        for (int j = 0; j < g.cols; ++j) {
          gm.at(i, j) += g.at(i, j);
          gr.at(0, j) += g.at(i, j);
        }
      }
      return;
    }
    case Op::kScale: {
      Matrix& ga = grad_of(n.src[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * n.fdata[0];
      return;
    }
    case Op::kRelu: {
      Matrix& ga = grad_of(n.src[0]);
      const Matrix& va = value_of(n.src[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (va.data[i] > 0.0) ga.data[i] += g.data[i];
      }
      return;
    }
    case Op::kTanh: {
      Matrix& ga = grad_of(n.src[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = n.value.data[i];
        ga.data[i] += g.data[i] * (1.0 - t * t);
      }
      return;
    }
    case Op::kSigmoid: {
      Matrix& ga = grad_of(n.src[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = n.value.data[i];
        ga.data[i] += g.data[i] * s * (1.0 - s);
      }
      return;
    }
    case Op::kSoftmaxRows: {
      Matrix& ga = grad_of(n.src[0]);
      for (int i = 0; i < g.rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < g.cols; ++j) dot += g.at(i, j) * n.value.at(i, j);
        for (int j = 0; j < g.cols; ++j) {
          ga.at(i, j) += n.value.at(i, j) * (g.at(i, j) - dot);
        }
      }
      return;
    }
    case Op::kConcatCols: {
      int offset = 0;
      for (Id x : n.many) {
        Matrix& gx = grad_of(x);
        for (int i = 0; i < gx.rows; ++i) {
          for (int j = 0; j < gx.cols; ++j) gx.at(i, j) += g.at(i, offset + j);
        }
        offset += gx.cols;
      }
      return;
    }
    case Op::kConcatRows: {
      int offset = 0;
      for (Id x : n.many) {
        Matrix& gx = grad_of(x);
        for (int i = 0; i < gx.rows; ++i) {
          for (int j = 0; j < gx.cols; ++j) gx.at(i, j) += g.at(offset + i, j);
        }
        offset += gx.rows;
      }
      return;
    }
    case Op::kMeanRows: {
      Matrix& ga = grad_of(n.src[0]);
      const double inv = 1.0 / ga.rows;
      for (int i = 0; i < ga.rows; ++i) {
        for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += g.at(0, j) * inv;
      }
      return;
    }
    case Op::kGatherRows: {
      Matrix& ga = grad_of(n.src[0]);
      for (std::size_t i = 0; i < n.idata.size(); ++i) {
        for (int j = 0; j < g.cols; ++j) ga.at(n.idata[i], j) += g.at(static_cast<int>(i), j);
      }
      return;
    }
    case Op::kCol: {
      Matrix& ga = grad_of(n.src[0]);
      for (int i = 0; i < g.rows; ++i) ga.at(i, n.idata[0]) += g.at(i, 0);
      return;
    }
    case Op::kScaleRows: {
      Matrix& ga = grad_of(n.src[0]);
      Matrix& gc = grad_of(n.src[1]);
      const Matrix& va = value_of(n.src[0]);
      const Matrix& vc = value_of(n.src[1]);
      for (int i = 0; i < g.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < g.cols; ++j) {
          ga.at(i, j) += g.at(i, j) * vc.at(i, 0);
          s += g.at(i, j) * va.at(i, j);
        }
        gc.at(i, 0) += s;
      }
      return;
    }
    case Op::kMseOnehot: {
      Matrix& gp = grad_of(n.src[0]);
      const Matrix& p = value_of(n.src[0]);
      const double scale = 2.0 * g.at(0, 0) / p.rows;
      for (int i = 0; i < p.rows; ++i) {
        for (int j = 0; j < p.cols; ++j) {
          const double y = (n.idata[i] == j) ? 1.0 : 0.0;
          gp.at(i, j) += scale * (p.at(i, j) - y);
        }
      }
      return;
    }
    case Op::kNllLogits: {
      Matrix& gz = grad_of(n.src[0]);
      const double scale = g.at(0, 0) / n.aux.rows;
      for (int i = 0; i < n.aux.rows; ++i) {
        for (int j = 0; j < n.aux.cols; ++j) {
          const double y = (n.idata[i] == j) ? 1.0 : 0.0;
          gz.at(i, j) += scale * (n.aux.at(i, j) - y);
        }
      }
      return;
    }
    case Op::kBceLogits: {
      Matrix& gz = grad_of(n.src[0]);
      const Matrix& z = value_of(n.src[0]);
      const double scale = g.at(0, 0) / z.rows;
      for (int i = 0; i < z.rows; ++i) {
        gz.at(i, 0) += scale * (sigmoid_stable(z.at(i, 0)) - n.fdata[i]);
      }
      return;
    }
    case Op::kWeightedSum: {
      for (std::size_t i = 0; i < n.many.size(); ++i) {
        grad_of(n.many[i]).at(0, 0) += g.at(0, 0) * n.fdata[i];
      }
      return;
    }
  }
}

}  // namespace blmol::ad
