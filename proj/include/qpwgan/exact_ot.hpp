#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qpwgan/measure.hpp"

namespace qpwgan {

// Coupling with prescribed marginals plus its primal objective value.
struct TransportPlan {
  Eigen::MatrixXd gamma;  // size(mu) x size(nu), entries >= 0
  double value = 0.0;     // sum_ij gamma_ij c(x_i, y_j)
};

// Kantorovich potentials on the supports of mu (phi) and nu (psi),
// normalized so that phi[0] == 0.
struct DualPotentials {
  std::vector<double> phi;
  std::vector<double> psi;
};

struct ExactOtResult {
  TransportPlan plan;
  DualPotentials duals;
};

// Dense cost matrix C_ij = cost(a_i, b_j, spec).
Eigen::MatrixXd cost_matrix(const std::vector<Point>& a, const std::vector<Point>& b,
                            const CostSpec& spec);

// Exhaustive permutation search. Requires uniform weights and equal atom
// counts m <= 8; larger or non-uniform instances must go through ot_exact.
TransportPlan ot_bruteforce(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const CostSpec& spec);

// Exact solver (network simplex on the bipartite transport polytope).
// Returns the optimal plan together with dual potentials satisfying
// admissibility and complementary slackness.
ExactOtResult ot_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const CostSpec& spec);

// Independent 1-D oracle: sorted (monotone) matching with uniform weights,
// optimal for the convex costs |x-y|^p / p, p >= 1.
double ot_1d_sorted(std::vector<double> xs, std::vector<double> ys, const CostSpec& spec);

// W_{q,p}(mu, nu) = ot_exact(mu, nu, d_q^p / p)^(1/p). Solves a canonical
// orientation of (mu, nu) so the result is exactly symmetric.
double wasserstein_qp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const CostSpec& spec);

// Primal value minus dual value E_mu[phi] + E_nu[psi].
double duality_gap(const TransportPlan& plan, const DualPotentials& duals,
                   const DiscreteMeasure& mu, const DiscreteMeasure& nu);

}  // namespace qpwgan
