#include "qpwgan/dual_ot.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace qpwgan {

const char* search_space_name(SearchSpaceMode mode) {
  return mode == SearchSpaceMode::BX ? "bx" : "union";
}

SearchSpaceMode search_space_from_name(const std::string& name) {
  if (name == "bx") return SearchSpaceMode::BX;
  if (name == "union") return SearchSpaceMode::BX_UNION_BY;
  throw std::invalid_argument("unknown search space: " + name + " (use bx|union)");
}

CTransform c_transform(const std::vector<double>& phi_on_B, const std::vector<Point>& B,
                       const Point& y, const CostSpec& spec) {
  if (B.empty()) throw std::invalid_argument("c_transform: empty search space");
  if (phi_on_B.size() != B.size()) {
    throw std::invalid_argument("c_transform: phi/search-space size mismatch");
  }
  CTransform best;
  for (std::size_t i = 0; i < B.size(); ++i) {
    const double v = cost(B[i], y, spec) - phi_on_B[i];
    if (best.argmin < 0 || v < best.value) {
      best.value = v;
      best.argmin = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<CTransform> c_transform_batch(const std::vector<double>& phi_on_B,
                                          const std::vector<Point>& B,
                                          const std::vector<Point>& ys, const CostSpec& spec) {
  std::vector<CTransform> out;
  out.reserve(ys.size());
  for (const Point& y : ys) out.push_back(c_transform(phi_on_B, B, y, spec));
  return out;
}

double xi(const Point& x, const Point& y, double phi_x, double psi_y, const CostSpec& spec) {
  return cost(x, y, spec) - phi_x - psi_y;
}

double penalty_p1_value(const std::vector<Point>& bx, const std::vector<Point>& by,
                        const std::vector<double>& phi_x, const std::vector<double>& psi_y,
                        const CostSpec& spec, double lambda1) {
  if (bx.size() != by.size()) throw std::invalid_argument("penalty_p1: batch size mismatch");
  if (phi_x.size() != bx.size() || psi_y.size() != by.size()) {
    throw std::invalid_argument("penalty_p1: potential size mismatch");
  }
  const double m = static_cast<double>(bx.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < bx.size(); ++i) {
    for (std::size_t j = 0; j < by.size(); ++j) {
      const double r = xi(bx[i], by[j], phi_x[i], psi_y[j], spec);
      acc += r * r;
    }
  }
  return lambda1 * acc / (m * m);
}

double penalty_p2_value(const std::vector<Point>& b_union, const std::vector<double>& phi_u,
                        const std::vector<double>& psi_u, const CostSpec& spec, double lambda2,
                        P2Form form) {
  if (phi_u.size() != b_union.size() || psi_u.size() != b_union.size()) {
    throw std::invalid_argument("penalty_p2: potential size mismatch");
  }
  const double m = static_cast<double>(b_union.size()) / 2.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < b_union.size(); ++i) {
    for (std::size_t j = 0; j < b_union.size(); ++j) {
      double r = xi(b_union[i], b_union[j], phi_u[i], psi_u[j], spec);
      if (form == P2Form::Hinge) r = std::min(r, 0.0);
      acc += r * r;
    }
  }
  return lambda2 * acc / (4.0 * m * m);
}

double dual_estimate_value(const std::vector<double>& phi_x, const std::vector<double>& psi_y) {
  if (phi_x.size() != psi_y.size()) {
    throw std::invalid_argument("dual_estimate: batch size mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < phi_x.size(); ++i) acc += phi_x[i] + psi_y[i];
  return acc / static_cast<double>(phi_x.size());
}

ad::Var c_transform_on_tape(ad::Tape& tape, ad::Var cost_B_to_targets, ad::Var phi_on_B,
                            std::vector<int>* argmins) {
  const auto& C = tape.value(cost_B_to_targets);
  const auto& phi = tape.value(phi_on_B);
  if (C.rows() == 0) throw std::invalid_argument("c_transform_on_tape: empty search space");
  if (phi.cols() != 1 || phi.rows() != C.rows()) {
    throw std::invalid_argument("c_transform_on_tape: phi must be |B| x 1");
  }
  return tape.colwise_min(tape.sub_colvec(cost_B_to_targets, phi_on_B), argmins);
}

ad::Var penalty_p1(ad::Tape& tape, ad::Var cost_xy, ad::Var phi_x, ad::Var psi_y,
                   double lambda1) {
  const auto& C = tape.value(cost_xy);
  if (C.rows() != C.cols()) throw std::invalid_argument("penalty_p1: batch size mismatch");
  if (tape.value(phi_x).rows() != C.rows() || tape.value(psi_y).cols() != C.cols()) {
    throw std::invalid_argument("penalty_p1: potential size mismatch");
  }
  const double m = static_cast<double>(C.rows());
  ad::Var resid = tape.sub_rowvec(tape.sub_colvec(cost_xy, phi_x), psi_y);
  return tape.mul_scalar(tape.sum(tape.square(resid)), lambda1 / (m * m));
}

ad::Var penalty_p2(ad::Tape& tape, ad::Var cost_uu, ad::Var phi_u, ad::Var psi_u, double lambda2,
                   int batch_size, P2Form form) {
  const auto& C = tape.value(cost_uu);
  if (C.rows() != C.cols() || C.rows() != 2 * batch_size) {
    throw std::invalid_argument("penalty_p2: union must have 2m points");
  }
  const double m = static_cast<double>(batch_size);
  ad::Var resid = tape.sub_rowvec(tape.sub_colvec(cost_uu, phi_u), psi_u);
  if (form == P2Form::Hinge) {
    // min(xi, 0) = -relu(-xi)
    resid = tape.neg(tape.relu(tape.neg(resid)));
  }
  return tape.mul_scalar(tape.sum(tape.square(resid)), lambda2 / (4.0 * m * m));
}

ad::Var dual_estimate(ad::Tape& tape, ad::Var phi_x, ad::Var psi_y) {
  const auto& phi = tape.value(phi_x);
  const auto& psi = tape.value(psi_y);
  if (phi.size() != psi.size()) throw std::invalid_argument("dual_estimate: batch size mismatch");
  return tape.add(tape.mean(phi_x), tape.mean(psi_y));
}

}  // namespace qpwgan
