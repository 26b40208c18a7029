#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rcpipe::ad {

using Mat = Eigen::MatrixXd;

// A named trainable tensor with its accumulated gradient.
struct Param {
  std::string name;
  Mat value;
  Mat grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Named parameter registry shared by the optimizer and checkpoints.
// Params are heap-stable: pointers returned by add() stay valid.
class ParamSet {
 public:
  Param& add(const std::string& name, int rows, int cols);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<std::unique_ptr<Param>>& params() { return params_; }
  const std::vector<std::unique_ptr<Param>>& params() const { return params_; }
  void zero_grads();

 private:
  std::vector<std::unique_ptr<Param>> params_;
};

class Tape;

// Handle to a matrix-valued node on the tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Mat& value() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }
  double scalar() const { return value()(0, 0); }
};

// Reverse-mode tape over dense double matrices. Nodes are appended in
// forward order; backward() walks them in reverse.
class Tape {
 public:
  Var constant(Mat value);
  Var leaf(Param& p);
  // Rows of `table.value` gathered by id; backward scatter-adds.
  Var embed_rows(Param& table, const std::vector<int>& ids);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul_elem(Var a, Var b);
  Var scale(Var a, double k);
  Var matmul(Var a, Var b);
  Var matmul_abt(Var a, Var b);  // a * b^T
  Var add_row_broadcast(Var x, Var bias_row);
  Var slice_cols(Var x, int c0, int n);
  Var slice_rows(Var x, int r0, int n);
  Var gather_rows(Var x, const std::vector<int>& rows);
  Var concat_cols(const std::vector<Var>& parts);
  Var row_softmax(Var x);
  Var layer_norm(Var x, Var gain_row, Var bias_row, double eps = 1e-5);
  Var gelu(Var x);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var tanh(Var x);
  // Multiplies rows [r0, r0+n) by a 1x1 scalar node.
  Var scale_rows(Var x, int r0, int n, Var scalar);
  Var select(Var x, int r, int c);  // 1x1 view of one element
  // Forward value `hard_value`; backward passes gradient unchanged to z.
  Var straight_through(Var z, double hard_value);

  // -log softmax(v)[target] for a 1xN (or Nx1) logit vector.
  Var cross_entropy(Var logits, int target);
  // Mean binary cross-entropy over a 1xN logit row against 0/1 targets,
  // with probabilities clamped to [eps, 1-eps].
  Var bce_with_logits_mean(Var logits, const std::vector<double>& targets,
                           double eps = 1e-7);
  Var add_scaled(const std::vector<Var>& terms, const std::vector<double>& coeffs);

  void backward(Var loss);

  const Mat& value(int id) const { return nodes_[id].value; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&, const Mat&)> back;  // receives this node's grad
  };

  Var push(Mat value, std::function<void(Tape&, const Mat&)> back);
  void accumulate(int id, const Mat& g);

  std::vector<Node> nodes_;
  friend struct Var;
};

// Decoupled-weight-decay adaptive optimizer.
class AdamW {
 public:
  AdamW(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);

  void step(ParamSet& params);
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

}  // namespace rcpipe::ad
