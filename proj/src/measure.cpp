#include "qpwgan/measure.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace qpwgan {

namespace {

void check_finite(const Point& x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("point has non-finite coordinate");
  }
}

void check_same_dim(const Point& x, const Point& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()));
  }
}

}  // namespace

void validate(const CostSpec& spec) {
  if (!(spec.q >= 1.0)) throw std::invalid_argument("CostSpec: q must be >= 1");
  if (!(spec.p >= 1.0)) throw std::invalid_argument("CostSpec: p must be >= 1");
}

DiscreteMeasure make_measure(std::vector<Point> atoms, std::vector<double> weights) {
  if (atoms.size() != weights.size()) {
    throw std::invalid_argument("DiscreteMeasure: atom/weight count mismatch");
  }
  if (atoms.empty()) throw std::invalid_argument("DiscreteMeasure: empty");
  const std::size_t dim = atoms[0].size();
  double sum = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != dim) {
      throw std::invalid_argument("DiscreteMeasure: atoms have mixed dimensions");
    }
    check_finite(atoms[i]);
    if (!(weights[i] >= 0.0)) {
      throw std::invalid_argument("DiscreteMeasure: negative weight");
    }
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("DiscreteMeasure: weights sum to " + std::to_string(sum));
  }
  return DiscreteMeasure{std::move(atoms), std::move(weights)};
}

DiscreteMeasure merge_atoms(const DiscreteMeasure& m) {
  std::map<Point, double> merged;
  for (std::size_t i = 0; i < m.size(); ++i) merged[m.atoms[i]] += m.weights[i];
  DiscreteMeasure out;
  for (auto& [atom, w] : merged) {
    out.atoms.push_back(atom);
    out.weights.push_back(w);
  }
  return out;
}

bool measures_equal_merged(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  DiscreteMeasure ma = merge_atoms(a), mb = merge_atoms(b);
  if (ma.size() != mb.size()) return false;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    if (ma.atoms[i] != mb.atoms[i]) return false;
    if (std::abs(ma.weights[i] - mb.weights[i]) > 1e-12) return false;
  }
  return true;
}

void validate(const GmmSpec& spec) {
  if (spec.components.empty()) throw std::invalid_argument("GmmSpec: no components");
  const std::size_t dim = spec.components[0].mean.size();
  for (const auto& comp : spec.components) {
    if (comp.mean.size() != dim) throw std::invalid_argument("GmmSpec: mixed dimensions");
    check_finite(comp.mean);
    if (comp.count <= 0) throw std::invalid_argument("GmmSpec: count must be positive");
    const auto& cov = comp.covariance;
    if (cov.rows() != static_cast<Eigen::Index>(dim) || cov.cols() != static_cast<Eigen::Index>(dim)) {
      throw std::invalid_argument("GmmSpec: covariance shape mismatch");
    }
    if (!cov.isApprox(cov.transpose(), 1e-12)) {
      throw std::invalid_argument("GmmSpec: covariance not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("GmmSpec: covariance not positive definite");
    }
  }
}

double lq_distance(const Point& x, const Point& y, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_distance: q must be >= 1");
  check_same_dim(x, y);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i] - y[i]), q);
  return std::pow(acc, 1.0 / q);
}

double cost(const Point& x, const Point& y, const CostSpec& spec) {
  validate(spec);
  return std::pow(lq_distance(x, y, spec.q), spec.p) / spec.p;
}

Point cost_grad_x(const Point& x, const Point& y, const CostSpec& spec) {
  validate(spec);
  check_same_dim(x, y);
  const double d = lq_distance(x, y, spec.q);
  Point g(x.size(), 0.0);
  if (d < 1e-300) return g;  // subgradient 0 at coincident points
  // dc/dx_k = d^(p-1) (|x_k - y_k| / d)^(q-1) sign(x_k - y_k); the ratio
  // form stays bounded for p < q as d -> 0.
  const double scale = std::pow(d, spec.p - 1.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double delta = x[k] - y[k];
    if (delta == 0.0) continue;  // |.| subgradient 0 at the kink
    g[k] = scale * std::pow(std::abs(delta) / d, spec.q - 1.0) * (delta > 0 ? 1.0 : -1.0);
  }
  return g;
}

DiscreteMeasure empirical_measure(std::vector<Point> points) {
  if (points.empty()) throw std::invalid_argument("empirical_measure: empty point list");
  const double w = 1.0 / static_cast<double>(points.size());
  std::vector<double> weights(points.size(), w);
  return make_measure(std::move(points), std::move(weights));
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // u1 in (0,1] avoids log(0); u2 in [0,1).
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

std::vector<Point> sample_gmm(const GmmSpec& spec, Rng& rng) {
  validate(spec);
  std::vector<Point> out;
  for (const auto& comp : spec.components) {
    const int dim = static_cast<int>(comp.mean.size());
    Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(comp.covariance).matrixL();
    for (int k = 0; k < comp.count; ++k) {
      Eigen::VectorXd z(dim);
      for (int d = 0; d < dim; ++d) z(d) = rng.normal();
      Eigen::VectorXd v = chol * z;
      Point pt(comp.mean);
      for (int d = 0; d < dim; ++d) pt[d] += v(d);
      out.push_back(std::move(pt));
    }
  }
  return out;
}

std::vector<Point> sample_source(SourceKind kind, int dim, int m, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("sample_source: dim must be >= 1");
  if (m < 1) throw std::invalid_argument("sample_source: m must be >= 1");
  std::vector<Point> out(m, Point(dim));
  for (auto& pt : out) {
    for (int d = 0; d < dim; ++d) {
      pt[d] = kind == SourceKind::Gaussian ? rng.normal() : rng.uniform(-1.0, 1.0);
    }
  }
  return out;
}

Eigen::MatrixXd points_to_matrix(const std::vector<Point>& pts) {
  if (pts.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(pts.size(), pts[0].size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].size() != pts[0].size()) {
      throw std::invalid_argument("points_to_matrix: mixed dimensions");
    }
    for (std::size_t d = 0; d < pts[i].size(); ++d) m(i, d) = pts[i][d];
  }
  return m;
}

std::vector<Point> matrix_to_points(const Eigen::MatrixXd& m) {
  std::vector<Point> pts(m.rows(), Point(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index d = 0; d < m.cols(); ++d) pts[i][d] = m(i, d);
  }
  return pts;
}

}  // namespace qpwgan
