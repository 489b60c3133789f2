#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace blmol::ad {

// Dense row-major matrix; the only tensor shape the tape knows.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return data.size(); }
};

// Reverse-mode tape over matrix ops. Values are computed eagerly as nodes
// are recorded; backward() re-zeroes all adjoints, seeds a scalar node and
// sweeps the tape once in reverse creation order, so several losses built on
// one forward pass can each run their own backward.
class Tape {
 public:
  using Id = std::int32_t;

  Id input(Matrix value);  // constant leaf, no adjoint accumulation
  Id param(Matrix value);  // differentiable leaf

  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);  // elementwise
  Id emax(Id a, Id b);  // elementwise max; ties route the adjoint to a
  Id matmul(Id a, Id b);
  Id add_row(Id m, Id row);  // broadcast a 1xC row over all rows
  Id scale(Id a, double s);
  Id relu(Id a);
  Id tanh_op(Id a);
  Id sigmoid(Id a);
  Id softmax_rows(Id a);
  Id concat_cols(const std::vector<Id>& xs);
  Id concat_rows(const std::vector<Id>& xs);
  Id mean_rows(Id a);                         // RxC -> 1xC
  Id gather_rows(Id a, std::vector<int> rows);
  Id col(Id a, int j);                        // RxC -> Rx1
  Id scale_rows(Id a, Id colvec);             // row i scaled by colvec[i]

  // Scalar (1x1) losses, numerically stable fused forms.
  Id mse_onehot(Id probs, std::vector<int> labels);
  Id nll_logits(Id logits, std::vector<int> labels);
  Id bce_logits(Id logits, std::vector<double> targets);
  Id weighted_sum(const std::vector<Id>& scalars, std::vector<double> weights);

  const Matrix& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  void backward(Id scalar_loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kInput, kParam, kAdd, kSub, kMul, kEmax, kMatmul, kAddRow, kScale,
    kRelu, kTanh, kSigmoid, kSoftmaxRows, kConcatCols, kConcatRows,
    kMeanRows, kGatherRows, kCol, kScaleRows, kMseOnehot, kNllLogits,
    kBceLogits, kWeightedSum,
  };

  struct Node {
    Op op;
    Matrix value;
    Matrix grad;
    std::array<Id, 2> src{-1, -1};
    std::vector<Id> many;
    std::vector<int> idata;
    std::vector<double> fdata;
    Matrix aux;  // cached softmax probabilities for fused losses
  };

  Id push(Node node);
  void backward_node(Node& n);

  std::vector<Node> nodes_;
};

}  // namespace blmol::ad
