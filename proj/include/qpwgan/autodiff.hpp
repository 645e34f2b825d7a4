#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "qpwgan/measure.hpp"

namespace qpwgan::ad {

using Matrix = Eigen::MatrixXd;

// Handle to a node on a Tape. Scalars are 1x1 matrices.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense matrix values. The tape is append-only
// during the forward pass; backward() walks the nodes in reverse and
// accumulates gradients into every recorded input that requires them.
// Single-threaded by contract; use one tape per thread.
class Tape {
 public:
  Var leaf(Matrix value);      // tracked input (parameters, inputs)
  Var constant(Matrix value);  // data; no gradient is propagated into it

  const Matrix& value(Var v) const;
  // Gradient accumulated by the last backward(); zero matrix if untouched.
  Matrix grad(Var v) const;

  // Scalar-rooted reverse pass. Throws if loss is not 1x1.
  void backward(Var loss);

  Var matmul(Var a, Var b);     // A B
  Var matmul_nt(Var a, Var b);  // A B^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var neg(Var a);
  Var add_rowvec(Var m, Var rv);  // row-broadcast add (bias)
  Var sub_colvec(Var m, Var cv);  // out(i,j) = m(i,j) - cv(i,0)
  Var sub_rowvec(Var m, Var rv);  // out(i,j) = m(i,j) - rv(0,j)
  Var mul_scalar(Var a, double s);
  Var add_scalar(Var a, double s);
  Var elem_mul(Var a, Var b);
  Var elem_mul_const(Var a, const Matrix& factor);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var tanh(Var a);
  Var square(Var a);
  Var sqrt(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var rowwise_sumsq(Var a);  // m x 1
  Var concat_rows(Var a, Var b);
  Var rows(Var a, int first, int count);
  Var cols(Var a, int first, int count);
  // Column minima with first-minimizer tie rule; optionally reports the
  // argmin row per column. Gradient flows only through the selected entry.
  Var colwise_min(Var a, std::vector<int>* argmin = nullptr);
  // Pairwise transport costs: out(i,j) = cost(x_i, y_j, spec) for row-point
  // matrices. Backward uses the analytic cost gradient (subgradient 0 at
  // kinks), matching cost_grad_x.
  Var pair_cost(Var x, Var y, const CostSpec& spec);

  std::size_t size() const { return nodes_.size(); }
  bool requires_grad(Var v) const;

 private:
  struct Node {
    Matrix value;
    bool requires_grad = false;
    std::function<void(Tape&)> backprop;
  };

  Var emplace(Matrix value, bool requires_grad, std::function<void(Tape&)> backprop);
  const Node& node(Var v) const;
  Matrix& grad_ref(int id);
  void accumulate(int id, const Matrix& g);

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
};

}  // namespace qpwgan::ad
