#pragma once

#include <vector>

#include "qpwgan/autodiff.hpp"
#include "qpwgan/measure.hpp"

namespace qpwgan {

// Search space for the discrete c-transform minimization.
enum class SearchSpaceMode { BX, BX_UNION_BY };

const char* search_space_name(SearchSpaceMode mode);
SearchSpaceMode search_space_from_name(const std::string& name);

struct PenaltyWeights {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

// The admissibility penalty uses min(xi, 0)^2 (violations only); the
// squared form xi^2 is kept for ablation.
enum class P2Form { Hinge, Square };

struct CTransform {
  double value = 0.0;
  int argmin = -1;  // first minimizer in list order
};

// phi^c(y) = min over x in B of { cost(x, y) - phi(x) }.
CTransform c_transform(const std::vector<double>& phi_on_B, const std::vector<Point>& B,
                       const Point& y, const CostSpec& spec);

std::vector<CTransform> c_transform_batch(const std::vector<double>& phi_on_B,
                                          const std::vector<Point>& B,
                                          const std::vector<Point>& ys, const CostSpec& spec);

// Admissibility residual xi(x, y) = c(x, y) - phi(x) - psi(y).
double xi(const Point& x, const Point& y, double phi_x, double psi_y, const CostSpec& spec);

// Plain-value penalty and objective computations (test/oracle path).
double penalty_p1_value(const std::vector<Point>& bx, const std::vector<Point>& by,
                        const std::vector<double>& phi_x, const std::vector<double>& psi_y,
                        const CostSpec& spec, double lambda1);
double penalty_p2_value(const std::vector<Point>& b_union, const std::vector<double>& phi_u,
                        const std::vector<double>& psi_u, const CostSpec& spec, double lambda2,
                        P2Form form = P2Form::Hinge);
double dual_estimate_value(const std::vector<double>& phi_x, const std::vector<double>& psi_y);

// Tape counterparts used inside training.
//
// c_transform_on_tape consumes the |B| x n cost matrix against the target
// points and phi on B (|B| x 1); the min is differentiated through its
// argmin (first-index tie rule).
ad::Var c_transform_on_tape(ad::Tape& tape, ad::Var cost_B_to_targets, ad::Var phi_on_B,
                            std::vector<int>* argmins = nullptr);

// P1 = lambda1 / m^2 * sum_ij xi(x_i, y_j)^2 over the batch pairs.
ad::Var penalty_p1(ad::Tape& tape, ad::Var cost_xy, ad::Var phi_x, ad::Var psi_y,
                   double lambda1);

// P2 = lambda2 / (4 m^2) * sum over union pairs of min(xi, 0)^2 (hinge
// form) or xi^2 (square form).
ad::Var penalty_p2(ad::Tape& tape, ad::Var cost_uu, ad::Var phi_u, ad::Var psi_u, double lambda2,
                   int batch_size, P2Form form = P2Form::Hinge);

// (1/m) sum_i (phi(x_i) + psi(y_i)).
ad::Var dual_estimate(ad::Tape& tape, ad::Var phi_x, ad::Var psi_y);

}  // namespace qpwgan
