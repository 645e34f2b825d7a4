#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qpwgan/rng.hpp"

namespace qpwgan {

// A sample point in R^n.
using Point = std::vector<double>;

// The (q, p) pair selecting the ground metric d_q and the per-pair cost
// c = d_q^p / p. Both exponents may be non-integer; q, p >= 1.
struct CostSpec {
  double q = 2.0;
  double p = 1.0;
};

void validate(const CostSpec& spec);

// Weighted point cloud. Atoms share one dimension; weights are nonnegative
// and sum to 1 within 1e-12.
struct DiscreteMeasure {
  std::vector<Point> atoms;
  std::vector<double> weights;

  std::size_t size() const { return atoms.size(); }
  int dim() const { return atoms.empty() ? 0 : static_cast<int>(atoms[0].size()); }
};

// Validating factory; throws std::invalid_argument on any invariant breach.
DiscreteMeasure make_measure(std::vector<Point> atoms, std::vector<double> weights);

// Merges atoms with exactly equal coordinates, summing their weights.
DiscreteMeasure merge_atoms(const DiscreteMeasure& m);

// Equality as measures: equal after atom-merging (exact coordinate match).
bool measures_equal_merged(const DiscreteMeasure& a, const DiscreteMeasure& b);

struct GmmComponent {
  Point mean;
  Eigen::MatrixXd covariance;  // symmetric positive definite
  int count = 0;
};

struct GmmSpec {
  std::vector<GmmComponent> components;
};

void validate(const GmmSpec& spec);

// l^q distance (sum_i |x_i - y_i|^q)^(1/q), q >= 1.
double lq_distance(const Point& x, const Point& y, double q);

// Transport cost c(x, y) = d_q(x, y)^p / p.
double cost(const Point& x, const Point& y, const CostSpec& spec);

// Gradient of cost(x, y, spec) with respect to x. Subgradient 0 is used at
// kinks (coordinate ties for q near 1, coincident points).
Point cost_grad_x(const Point& x, const Point& y, const CostSpec& spec);

// Uniform empirical measure on the given points (duplicates kept).
DiscreteMeasure empirical_measure(std::vector<Point> points);

// Draws component counts in component order; each draw is mean + L z with
// L the Cholesky factor of the covariance and z i.i.d. standard normal.
std::vector<Point> sample_gmm(const GmmSpec& spec, Rng& rng);

enum class SourceKind { UniformCube, Gaussian };

// UniformCube draws from [-1, 1]^dim, Gaussian from N(0, I).
std::vector<Point> sample_source(SourceKind kind, int dim, int m, Rng& rng);

// Column-major interop with dense linear algebra: one row per point.
Eigen::MatrixXd points_to_matrix(const std::vector<Point>& pts);
std::vector<Point> matrix_to_points(const Eigen::MatrixXd& m);

}  // namespace qpwgan
