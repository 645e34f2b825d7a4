#include "qpwgan/exact_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qpwgan {

namespace {

void check_measure(const DiscreteMeasure& m, const char* name) {
  if (m.size() == 0) throw std::invalid_argument(std::string(name) + ": empty measure");
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.atoms[i].size() != m.atoms[0].size()) {
      throw std::invalid_argument(std::string(name) + ": atoms have mixed dimensions");
    }
    if (!(m.weights[i] >= 0.0)) {
      throw std::invalid_argument(std::string(name) + ": negative weight");
    }
    sum += m.weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument(std::string(name) + ": weights sum to " + std::to_string(sum));
  }
}

// Network simplex specialized to the dense transportation polytope.
// The basis is a spanning tree over the m supply and n demand nodes;
// pivots price arcs in blocks and exchange one basic cell per step.
// After a long stall the pivot rule switches to Bland's rule, which
// cannot cycle, so termination is guaranteed under degeneracy.
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::MatrixXd& C, const std::vector<double>& supply,
                   const std::vector<double>& demand)
      : C_(C),
        m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        u_(m_),
        v_(n_),
        adj_(m_ + n_) {
    price_tol_ = std::max(1e-10, 1e-13 * C.cwiseAbs().maxCoeff());
    northwest_corner(supply, demand);
    rebuild_adjacency();
  }

  void solve() {
    const long bland_after = 50L * (m_ + n_) + 1000;
    const long hard_cap = 4'000'000L;
    bool bland = false;
    for (long pivots = 0;; ++pivots) {
      if (pivots == bland_after) bland = true;
      if (pivots > hard_cap) {
        throw std::runtime_error("transport simplex exceeded pivot cap");
      }
      compute_duals();
      int ei, ej;
      if (!find_entering(bland, ei, ej)) break;
      pivot(ei, ej);
    }
  }

  Eigen::MatrixXd flows() const {
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(m_, n_);
    for (const auto& cell : basis_) gamma(cell.i, cell.j) = std::max(0.0, cell.flow);
    return gamma;
  }

  const std::vector<double>& row_duals() const { return u_; }
  const std::vector<double>& col_duals() const { return v_; }

 private:
  struct Cell {
    int i, j;
    double flow;
  };

  void northwest_corner(std::vector<double> supply, std::vector<double> demand) {
    basis_.reserve(m_ + n_ - 1);
    int i = 0, j = 0;
    while (true) {
      if (i == m_ - 1 && j == n_ - 1) {
        basis_.push_back({i, j, std::max(0.0, supply[i])});
        break;
      }
      bool advance_row;
      if (i == m_ - 1) {
        advance_row = false;
      } else if (j == n_ - 1) {
        advance_row = true;
      } else {
        advance_row = supply[i] <= demand[j];
      }
      if (advance_row) {
        basis_.push_back({i, j, std::max(0.0, supply[i])});
        demand[j] -= supply[i];
        ++i;
      } else {
        basis_.push_back({i, j, std::max(0.0, demand[j])});
        supply[i] -= demand[j];
        ++j;
      }
    }
  }

  void rebuild_adjacency() {
    for (auto& lst : adj_) lst.clear();
    for (int b = 0; b < static_cast<int>(basis_.size()); ++b) {
      adj_[basis_[b].i].push_back(b);
      adj_[m_ + basis_[b].j].push_back(b);
    }
  }

  void compute_duals() {
    std::vector<char> seen(m_ + n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    u_[0] = 0.0;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int b : adj_[node]) {
        const Cell& cell = basis_[b];
        const int other = (node == cell.i) ? m_ + cell.j : cell.i;
        if (seen[other]) continue;
        seen[other] = 1;
        if (other >= m_) {
          v_[other - m_] = C_(cell.i, cell.j) - u_[cell.i];
        } else {
          u_[other] = C_(cell.i, cell.j) - v_[cell.j];
        }
        stack.push_back(other);
      }
    }
  }

  bool find_entering(bool bland, int& ei, int& ej) {
    const long total = static_cast<long>(m_) * n_;
    if (bland) {
      for (long a = 0; a < total; ++a) {
        const int i = static_cast<int>(a / n_), j = static_cast<int>(a % n_);
        if (C_(i, j) - u_[i] - v_[j] < -price_tol_) {
          ei = i;
          ej = j;
          return true;
        }
      }
      return false;
    }
    const long block = std::max<long>(64, static_cast<long>(std::sqrt(static_cast<double>(total))));
    long scanned = 0;
    while (scanned < total) {
      double best = -price_tol_;
      long best_a = -1;
      for (long k = 0; k < block && scanned < total; ++k, ++scanned) {
        const long a = cursor_;
        cursor_ = (cursor_ + 1) % total;
        const int i = static_cast<int>(a / n_), j = static_cast<int>(a % n_);
        const double r = C_(i, j) - u_[i] - v_[j];
        if (r < best) {
          best = r;
          best_a = a;
        }
      }
      if (best_a >= 0) {
        ei = static_cast<int>(best_a / n_);
        ej = static_cast<int>(best_a % n_);
        return true;
      }
    }
    return false;
  }

  // Tree path from row node `ei` to column node `m_+ej`.
  std::vector<int> tree_path(int ei, int ej) const {
    std::vector<int> parent(m_ + n_, -1), parent_edge(m_ + n_, -1);
    std::vector<int> stack{ei};
    std::vector<char> seen(m_ + n_, 0);
    seen[ei] = 1;
    const int target = m_ + ej;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node == target) break;
      for (int b : adj_[node]) {
        const Cell& cell = basis_[b];
        const int other = (node == cell.i) ? m_ + cell.j : cell.i;
        if (seen[other]) continue;
        seen[other] = 1;
        parent[other] = node;
        parent_edge[other] = b;
        stack.push_back(other);
      }
    }
    std::vector<int> edges;
    for (int node = target; node != ei; node = parent[node]) edges.push_back(parent_edge[node]);
    std::reverse(edges.begin(), edges.end());  // ordered from ei towards ej
    return edges;
  }

  void pivot(int ei, int ej) {
    const std::vector<int> path = tree_path(ei, ej);
    // Walking from the entering row, path edges alternate -,+,-,... and the
    // entering cell itself takes +theta.
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (std::size_t t = 0; t < path.size(); t += 2) {
      const Cell& cell = basis_[path[t]];
      const bool better =
          cell.flow < theta ||
          (cell.flow == theta && leaving >= 0 &&
           (cell.i < basis_[leaving].i ||
            (cell.i == basis_[leaving].i && cell.j < basis_[leaving].j)));
      if (better) {
        theta = cell.flow;
        leaving = path[t];
      }
    }
    for (std::size_t t = 0; t < path.size(); ++t) {
      basis_[path[t]].flow += (t % 2 == 0) ? -theta : theta;
      if (basis_[path[t]].flow < 0.0) basis_[path[t]].flow = 0.0;
    }
    basis_[leaving] = {ei, ej, theta};
    rebuild_adjacency();
  }

  const Eigen::MatrixXd& C_;
  int m_, n_;
  double price_tol_;
  long cursor_ = 0;
  std::vector<double> u_, v_;
  std::vector<Cell> basis_;
  std::vector<std::vector<int>> adj_;
};

// Deterministic total order used to canonicalize solve orientation.
bool measure_less(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  if (a.atoms != b.atoms) return a.atoms < b.atoms;
  return a.weights < b.weights;
}

}  // namespace

Eigen::MatrixXd cost_matrix(const std::vector<Point>& a, const std::vector<Point>& b,
                            const CostSpec& spec) {
  validate(spec);
  Eigen::MatrixXd C(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) C(i, j) = cost(a[i], b[j], spec);
  }
  return C;
}

TransportPlan ot_bruteforce(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const CostSpec& spec) {
  check_measure(mu, "mu");
  check_measure(nu, "nu");
  const std::size_t m = mu.size();
  if (nu.size() != m || m > 8) {
    throw std::invalid_argument(
        "ot_bruteforce: requires equal atom counts m <= 8; use ot_exact");
  }
  const double w = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (std::abs(mu.weights[i] - w) > 1e-12 || std::abs(nu.weights[i] - w) > 1e-12) {
      throw std::invalid_argument("ot_bruteforce: requires uniform weights; use ot_exact");
    }
  }
  const Eigen::MatrixXd C = cost_matrix(mu.atoms, nu.atoms, spec);
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_sum = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += C(i, perm[i]);
    if (s < best_sum) {
      best_sum = s;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  TransportPlan plan;
  plan.gamma = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < m; ++i) plan.gamma(i, best[i]) = w;
  plan.value = best_sum * w;
  return plan;
}

ExactOtResult ot_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const CostSpec& spec) {
  check_measure(mu, "mu");
  check_measure(nu, "nu");
  if (mu.dim() != nu.dim()) throw std::invalid_argument("ot_exact: dimension mismatch");
  const Eigen::MatrixXd C = cost_matrix(mu.atoms, nu.atoms, spec);
  TransportSimplex simplex(C, mu.weights, nu.weights);
  simplex.solve();
  ExactOtResult result;
  result.plan.gamma = simplex.flows();
  result.plan.value = result.plan.gamma.cwiseProduct(C).sum();
  result.duals.phi = simplex.row_duals();
  result.duals.psi = simplex.col_duals();
  // Potentials are defined up to phi + k, psi - k; pin phi[0] = 0.
  const double k = result.duals.phi[0];
  for (auto& f : result.duals.phi) f -= k;
  for (auto& g : result.duals.psi) g += k;
  return result;
}

double ot_1d_sorted(std::vector<double> xs, std::vector<double> ys, const CostSpec& spec) {
  validate(spec);
  if (xs.size() != ys.size()) throw std::invalid_argument("ot_1d_sorted: length mismatch");
  if (xs.empty()) throw std::invalid_argument("ot_1d_sorted: empty input");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += std::pow(std::abs(xs[i] - ys[i]), spec.p) / spec.p;
  }
  return acc / static_cast<double>(xs.size());
}

double wasserstein_qp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const CostSpec& spec) {
  const bool swap = measure_less(nu, mu);
  const auto& a = swap ? nu : mu;
  const auto& b = swap ? mu : nu;
  const double value = std::max(0.0, ot_exact(a, b, spec).plan.value);
  return std::pow(value, 1.0 / spec.p);
}

double duality_gap(const TransportPlan& plan, const DualPotentials& duals,
                   const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (duals.phi.size() != mu.size() || duals.psi.size() != nu.size() ||
      plan.gamma.rows() != static_cast<Eigen::Index>(mu.size()) ||
      plan.gamma.cols() != static_cast<Eigen::Index>(nu.size())) {
    throw std::invalid_argument("duality_gap: shape mismatch");
  }
  double dual_value = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) dual_value += mu.weights[i] * duals.phi[i];
  for (std::size_t j = 0; j < nu.size(); ++j) dual_value += nu.weights[j] * duals.psi[j];
  return plan.value - dual_value;
}

}  // namespace qpwgan
