#include "qpwgan/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qpwgan::ad {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var Tape::emplace(Matrix value, bool requires_grad, std::function<void(Tape&)> backprop) {
  nodes_.push_back(Node{std::move(value), requires_grad, std::move(backprop)});
  grads_.emplace_back();
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("Tape: invalid Var");
  }
  return nodes_[v.id];
}

Var Tape::leaf(Matrix value) { return emplace(std::move(value), true, nullptr); }

Var Tape::constant(Matrix value) { return emplace(std::move(value), false, nullptr); }

const Matrix& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (grads_[v.id].size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return grads_[v.id];
}

Matrix& Tape::grad_ref(int id) {
  if (grads_[id].size() == 0) {
    grads_[id] = Matrix::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
  }
  return grads_[id];
}

void Tape::accumulate(int id, const Matrix& g) {
  if (!nodes_[id].requires_grad) return;
  grad_ref(id) += g;
}

void Tape::backward(Var loss) {
  const Node& root = node(loss);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar");
  }
  for (auto& g : grads_) g.resize(0, 0);
  grad_ref(loss.id)(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    if (!nodes_[id].requires_grad || grads_[id].size() == 0) continue;
    if (nodes_[id].backprop) nodes_[id].backprop(*this);
  }
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols() != B.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out{static_cast<int>(nodes_.size())};
  return emplace(A * B, rg, [a, b, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    if (t.nodes_[a.id].requires_grad) t.accumulate(a.id, g * t.nodes_[b.id].value.transpose());
    if (t.nodes_[b.id].requires_grad) t.accumulate(b.id, t.nodes_[a.id].value.transpose() * g);
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols() != B.cols()) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out{static_cast<int>(nodes_.size())};
  return emplace(A * B.transpose(), rg, [a, b, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    if (t.nodes_[a.id].requires_grad) t.accumulate(a.id, g * t.nodes_[b.id].value);
    if (t.nodes_[b.id].requires_grad) t.accumulate(b.id, g.transpose() * t.nodes_[a.id].value);
  });
}

Var Tape::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out{static_cast<int>(nodes_.size())};
  return emplace(value(a) + value(b), rg, [a, b, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(value(a), value(b), "sub");
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out{static_cast<int>(nodes_.size())};
  return emplace(value(a) - value(b), rg, [a, b, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    t.accumulate(a.id, g);
    if (t.nodes_[b.id].requires_grad) t.accumulate(b.id, -g);
  });
}

Var Tape::neg(Var a) { return mul_scalar(a, -1.0); }

Var Tape::add_rowvec(Var m, Var rv) {
  const Matrix& M = value(m);
  const Matrix& R = value(rv);
  if (R.rows() != 1 || R.cols() != M.cols()) {
    throw std::invalid_argument("add_rowvec: expected 1 x cols(m)");
  }
  const bool rg = requires_grad(m) || requires_grad(rv);
  Var out{static_cast<int>(nodes_.size())};
  Matrix res = M;
  res.rowwise() += R.row(0);
  return emplace(std::move(res), rg, [m, rv, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    t.accumulate(m.id, g);
    if (t.nodes_[rv.id].requires_grad) t.accumulate(rv.id, g.colwise().sum());
  });
}

Var Tape::sub_colvec(Var m, Var cv) {
  const Matrix& M = value(m);
  const Matrix& C = value(cv);
  if (C.cols() != 1 || C.rows() != M.rows()) {
    throw std::invalid_argument("sub_colvec: expected rows(m) x 1");
  }
  const bool rg = requires_grad(m) || requires_grad(cv);
  Var out{static_cast<int>(nodes_.size())};
  Matrix res = M;
  res.colwise() -= C.col(0);
  return emplace(std::move(res), rg, [m, cv, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    t.accumulate(m.id, g);
    if (t.nodes_[cv.id].requires_grad) t.accumulate(cv.id, -g.rowwise().sum());
  });
}

Var Tape::sub_rowvec(Var m, Var rv) {
  const Matrix& M = value(m);
  const Matrix& R = value(rv);
  if (R.rows() != 1 || R.cols() != M.cols()) {
    throw std::invalid_argument("sub_rowvec: expected 1 x cols(m)");
  }
  const bool rg = requires_grad(m) || requires_grad(rv);
  Var out{static_cast<int>(nodes_.size())};
  Matrix res = M;
  res.rowwise() -= R.row(0);
  return emplace(std::move(res), rg, [m, rv, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    t.accumulate(m.id, g);
    if (t.nodes_[rv.id].requires_grad) t.accumulate(rv.id, -g.colwise().sum());
  });
}

Var Tape::mul_scalar(Var a, double s) {
  Var out{static_cast<int>(nodes_.size())};
  return emplace(value(a) * s, requires_grad(a), [a, s, out](Tape& t) {
    t.accumulate(a.id, t.grads_[out.id] * s);
  });
}

Var Tape::add_scalar(Var a, double s) {
  Var out{static_cast<int>(nodes_.size())};
  return emplace(value(a).array() + s, requires_grad(a), [a, out](Tape& t) {
    t.accumulate(a.id, t.grads_[out.id]);
  });
}

Var Tape::elem_mul(Var a, Var b) {
  check_same_shape(value(a), value(b), "elem_mul");
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out{static_cast<int>(nodes_.size())};
  return emplace(value(a).cwiseProduct(value(b)), rg, [a, b, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    if (t.nodes_[a.id].requires_grad) t.accumulate(a.id, g.cwiseProduct(t.nodes_[b.id].value));
    if (t.nodes_[b.id].requires_grad) t.accumulate(b.id, g.cwiseProduct(t.nodes_[a.id].value));
  });
}

Var Tape::elem_mul_const(Var a, const Matrix& factor) {
  check_same_shape(value(a), factor, "elem_mul_const");
  Var out{static_cast<int>(nodes_.size())};
  return emplace(value(a).cwiseProduct(factor), requires_grad(a), [a, factor, out](Tape& t) {
    t.accumulate(a.id, t.grads_[out.id].cwiseProduct(factor));
  });
}

Var Tape::relu(Var a) {
  const Matrix& A = value(a);
  Matrix mask = (A.array() > 0.0).cast<double>();
  Var out{static_cast<int>(nodes_.size())};
  return emplace(A.cwiseProduct(mask), requires_grad(a), [a, mask, out](Tape& t) {
    t.accumulate(a.id, t.grads_[out.id].cwiseProduct(mask));
  });
}

Var Tape::leaky_relu(Var a, double slope) {
  const Matrix& A = value(a);
  Matrix mask = (A.array() > 0.0).select(Matrix::Ones(A.rows(), A.cols()),
                                         Matrix::Constant(A.rows(), A.cols(), slope));
  Var out{static_cast<int>(nodes_.size())};
  return emplace(A.cwiseProduct(mask), requires_grad(a), [a, mask, out](Tape& t) {
    t.accumulate(a.id, t.grads_[out.id].cwiseProduct(mask));
  });
}

Var Tape::tanh(Var a) {
  Matrix res = value(a).array().tanh();
  Var out{static_cast<int>(nodes_.size())};
  return emplace(std::move(res), requires_grad(a), [a, out](Tape& t) {
    const Matrix& y = t.nodes_[out.id].value;
    t.accumulate(a.id, t.grads_[out.id].cwiseProduct(
                           (1.0 - y.array().square()).matrix()));
  });
}

Var Tape::square(Var a) {
  Var out{static_cast<int>(nodes_.size())};
  return emplace(value(a).array().square(), requires_grad(a), [a, out](Tape& t) {
    t.accumulate(a.id, 2.0 * t.grads_[out.id].cwiseProduct(t.nodes_[a.id].value));
  });
}

Var Tape::sqrt(Var a) {
  Matrix res = value(a).array().max(0.0).sqrt();
  Var out{static_cast<int>(nodes_.size())};
  return emplace(std::move(res), requires_grad(a), [a, out](Tape& t) {
    const Matrix& y = t.nodes_[out.id].value;
    // Subgradient 0 where the root hits zero.
    Matrix d = (y.array() > 0.0).select(0.5 / y.array(), Matrix::Zero(y.rows(), y.cols()).array());
    t.accumulate(a.id, t.grads_[out.id].cwiseProduct(d));
  });
}

Var Tape::sum(Var a) {
  const Matrix& A = value(a);
  Matrix res(1, 1);
  res(0, 0) = A.sum();
  Var out{static_cast<int>(nodes_.size())};
  return emplace(std::move(res), requires_grad(a), [a, out](Tape& t) {
    const Matrix& A2 = t.nodes_[a.id].value;
    t.accumulate(a.id, Matrix::Constant(A2.rows(), A2.cols(), t.grads_[out.id](0, 0)));
  });
}

Var Tape::mean(Var a) {
  const Matrix& A = value(a);
  const double inv = 1.0 / static_cast<double>(A.size());
  Matrix res(1, 1);
  res(0, 0) = A.sum() * inv;
  Var out{static_cast<int>(nodes_.size())};
  return emplace(std::move(res), requires_grad(a), [a, inv, out](Tape& t) {
    const Matrix& A2 = t.nodes_[a.id].value;
    t.accumulate(a.id, Matrix::Constant(A2.rows(), A2.cols(), t.grads_[out.id](0, 0) * inv));
  });
}

Var Tape::rowwise_sumsq(Var a) {
  const Matrix& A = value(a);
  Matrix res = A.array().square().rowwise().sum();
  Var out{static_cast<int>(nodes_.size())};
  return emplace(std::move(res), requires_grad(a), [a, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    const Matrix& A2 = t.nodes_[a.id].value;
    Matrix acc = 2.0 * A2.array().colwise() * g.col(0).array();
    t.accumulate(a.id, acc);
  });
}

Var Tape::concat_rows(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols() != B.cols()) throw std::invalid_argument("concat_rows: column mismatch");
  Matrix res(A.rows() + B.rows(), A.cols());
  res.topRows(A.rows()) = A;
  res.bottomRows(B.rows()) = B;
  const bool rg = requires_grad(a) || requires_grad(b);
  const int ra = static_cast<int>(A.rows());
  Var out{static_cast<int>(nodes_.size())};
  return emplace(std::move(res), rg, [a, b, ra, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    if (t.nodes_[a.id].requires_grad) t.accumulate(a.id, g.topRows(ra));
    if (t.nodes_[b.id].requires_grad) t.accumulate(b.id, g.bottomRows(g.rows() - ra));
  });
}

Var Tape::rows(Var a, int first, int count) {
  const Matrix& A = value(a);
  if (first < 0 || count < 0 || first + count > A.rows()) {
    throw std::invalid_argument("rows: slice out of range");
  }
  Var out{static_cast<int>(nodes_.size())};
  return emplace(A.middleRows(first, count), requires_grad(a), [a, first, count, out](Tape& t) {
    if (!t.nodes_[a.id].requires_grad) return;
    t.grad_ref(a.id).middleRows(first, count) += t.grads_[out.id];
  });
}

Var Tape::cols(Var a, int first, int count) {
  const Matrix& A = value(a);
  if (first < 0 || count < 0 || first + count > A.cols()) {
    throw std::invalid_argument("cols: slice out of range");
  }
  Var out{static_cast<int>(nodes_.size())};
  return emplace(A.middleCols(first, count), requires_grad(a), [a, first, count, out](Tape& t) {
    if (!t.nodes_[a.id].requires_grad) return;
    t.grad_ref(a.id).middleCols(first, count) += t.grads_[out.id];
  });
}

Var Tape::colwise_min(Var a, std::vector<int>* argmin) {
  const Matrix& A = value(a);
  if (A.rows() == 0) throw std::invalid_argument("colwise_min: empty matrix");
  Matrix res(1, A.cols());
  std::vector<int> idx(A.cols());
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    int best = 0;
    for (Eigen::Index i = 1; i < A.rows(); ++i) {
      if (A(i, j) < A(best, j)) best = static_cast<int>(i);
    }
    idx[j] = best;
    res(0, j) = A(best, j);
  }
  if (argmin) *argmin = idx;
  Var out{static_cast<int>(nodes_.size())};
  return emplace(std::move(res), requires_grad(a), [a, idx, out](Tape& t) {
    if (!t.nodes_[a.id].requires_grad) return;
    const Matrix& g = t.grads_[out.id];
    Matrix& ga = t.grad_ref(a.id);
    for (std::size_t j = 0; j < idx.size(); ++j) ga(idx[j], j) += g(0, j);
  });
}

Var Tape::pair_cost(Var x, Var y, const CostSpec& spec) {
  validate(spec);
  const Matrix& X = value(x);
  const Matrix& Y = value(y);
  if (X.cols() != Y.cols()) throw std::invalid_argument("pair_cost: dimension mismatch");
  const double q = spec.q, p = spec.p;
  Matrix res(X.rows(), Y.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < Y.rows(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < X.cols(); ++k) acc += std::pow(std::abs(X(i, k) - Y(j, k)), q);
      res(i, j) = std::pow(std::pow(acc, 1.0 / q), p) / p;
    }
  }
  const bool rg = requires_grad(x) || requires_grad(y);
  Var out{static_cast<int>(nodes_.size())};
  return emplace(std::move(res), rg, [x, y, q, p, out](Tape& t) {
    const Matrix& g = t.grads_[out.id];
    const Matrix& X2 = t.nodes_[x.id].value;
    const Matrix& Y2 = t.nodes_[y.id].value;
    const bool need_x = t.nodes_[x.id].requires_grad;
    const bool need_y = t.nodes_[y.id].requires_grad;
    Matrix gx = Matrix::Zero(X2.rows(), X2.cols());
    Matrix gy = Matrix::Zero(Y2.rows(), Y2.cols());
    for (Eigen::Index i = 0; i < X2.rows(); ++i) {
      for (Eigen::Index j = 0; j < Y2.rows(); ++j) {
        const double go = g(i, j);
        if (go == 0.0) continue;
        double acc = 0.0;
        for (Eigen::Index k = 0; k < X2.cols(); ++k) {
          acc += std::pow(std::abs(X2(i, k) - Y2(j, k)), q);
        }
        const double d = std::pow(acc, 1.0 / q);
        if (d < 1e-300) continue;
        const double scale = std::pow(d, p - 1.0);
        for (Eigen::Index k = 0; k < X2.cols(); ++k) {
          const double delta = X2(i, k) - Y2(j, k);
          if (delta == 0.0) continue;
          const double dcdx =
              scale * std::pow(std::abs(delta) / d, q - 1.0) * (delta > 0 ? 1.0 : -1.0);
          if (need_x) gx(i, k) += go * dcdx;
          if (need_y) gy(j, k) -= go * dcdx;
        }
      }
    }
    if (need_x) t.accumulate(x.id, gx);
    if (need_y) t.accumulate(y.id, gy);
  });
}

}  // namespace qpwgan::ad
