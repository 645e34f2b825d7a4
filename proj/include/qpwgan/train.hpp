#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qpwgan/dual_ot.hpp"
#include "qpwgan/exact_ot.hpp"
#include "qpwgan/measure.hpp"
#include "qpwgan/nn.hpp"

namespace qpwgan {

enum class Baseline { QpWgan, WganClip, WganGp };

const char* baseline_name(Baseline b);
Baseline baseline_from_name(const std::string& name);

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-4;
  double beta0 = 0.5;
  double beta1 = 0.999;
  int n_critic = 1;
  int iterations = 1000;
  CostSpec spec{2.0, 1.0};
  PenaltyWeights penalties;
  SearchSpaceMode search = SearchSpaceMode::BX_UNION_BY;
  P2Form p2_form = P2Form::Hinge;
  Baseline baseline = Baseline::QpWgan;
  double clip_c = 0.01;
  double gp_lambda = 10.0;
  int eval_every = 10;  // exact-OT evaluation cadence; 0 disables
  int eval_size = 0;    // generated sample count per evaluation; 0 = |eval_set|
  std::uint64_t seed = 1;
};

void validate(const TrainConfig& cfg);

struct TraceRow {
  int iteration = 0;
  double dual_estimate = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double critic_grad_norm = 0.0;
  double gen_grad_norm = 0.0;
  double true_ot_value = std::numeric_limits<double>::quiet_NaN();
  double lipschitz = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
};

// Draws a batch of points; all randomness comes from the passed rng.
using Sampler = std::function<std::vector<Point>(int, Rng&)>;

// Batch sampler over a fixed dataset (uniform with replacement).
Sampler make_dataset_sampler(std::vector<Point> dataset);

struct TrainResult {
  MlpNetwork generator;
  MlpNetwork critic;
  TrainTrace trace;
  bool diverged = false;
  int diverged_at = -1;
};

// Algorithm-1 training of the (q,p)-WGAN: per iteration one batch pair,
// n_critic ascent steps on the penalized dual objective, then one
// generator descent step on the dual estimate. Deterministic given
// cfg.seed. eval_set (optional) enables the exact-OT trace column.
TrainResult train_qp_wgan(const TrainConfig& cfg, const Sampler& target, const Sampler& source,
                          MlpNetwork generator, MlpNetwork critic,
                          const std::vector<Point>* eval_set = nullptr);

// Weight-clipping WGAN baseline; the trace also records the Lipschitz
// estimate of the critic over the current batch points.
TrainResult train_wgan_clip(const TrainConfig& cfg, const Sampler& target, const Sampler& source,
                            MlpNetwork generator, MlpNetwork critic,
                            const std::vector<Point>* eval_set = nullptr);

// Gradient-penalty WGAN baseline (penalty on uniform interpolates).
TrainResult train_wgan_gp(const TrainConfig& cfg, const Sampler& target, const Sampler& source,
                          MlpNetwork generator, MlpNetwork critic,
                          const std::vector<Point>* eval_set = nullptr);

// Gradient-penalty term lambda * mean((||grad phi(x_hat)|| - 1)^2) as a
// tape value; exposed for direct testing.
ad::Var gradient_penalty_on_tape(ad::Tape& tape, const MlpNetwork& critic, const MlpVars& vars,
                                 const Eigen::MatrixXd& x_hat, double lambda);

// T(y) = y - ||grad phi(y)||^(p'-2) grad phi(y) with p' = p/(p-1).
// Requires q = 2 and p > 1; returns y where grad phi vanishes.
Point transport_map_apply(const MlpNetwork& critic, const Point& y, const CostSpec& spec);

// max over distinct-point pairs of |phi(x) - phi(y)| / d_q(x, y).
double estimate_lipschitz(const MlpNetwork& phi, const std::vector<Point>& points, double q);

struct PotentialGenResult {
  MlpNetwork critic;
  TrainTrace trace;
  std::vector<Point> source_points;
  std::vector<Point> mapped_points;
  bool diverged = false;
};

// Critic-only training between source and target, followed by mapping
// source samples through the induced transport map. Source and target
// must share one dimension; requires q = 2, p > 1.
PotentialGenResult potential_generator_experiment(const TrainConfig& cfg, const Sampler& source,
                                                  const Sampler& target, MlpNetwork critic,
                                                  const std::vector<Point>& eval_target,
                                                  int n_map_samples);

struct AtomModel {
  std::vector<Point> atoms;  // uniform weights 1/k
};

struct FitConfig {
  double alpha = 0.05;
  double beta0 = 0.9;
  double beta1 = 0.999;
  std::uint64_t seed = 1;
  double init_jitter = 1e-3;  // atoms start at the origin plus this jitter
  bool decay_lr = true;       // linear decay to 0 over the run
  int trail_every = 10;
  std::optional<std::vector<Point>> init_atoms;
};

struct FitTraceRow {
  int step = 0;
  double value = 0.0;      // W_p^p against the target
  double grad_norm = 0.0;  // ||grad_theta W_p^p||_2
};

struct FitResult {
  AtomModel model;
  std::vector<FitTraceRow> trace;
  std::vector<std::vector<Point>> trail;  // atom snapshots incl. start and end
  TransportPlan final_plan;
};

// Envelope gradient of the exact OT value with respect to the support:
// grad_theta_i = sum_j gamma*_ij grad_x c(theta_i, x_j) at the optimal plan.
Eigen::MatrixXd ot_support_gradient(const std::vector<Point>& atoms,
                                    const DiscreteMeasure& target, const CostSpec& spec,
                                    const TransportPlan& plan);

// Adam descent on the atom positions of a k-atom uniform model, with the
// exact plan recomputed every step.
FitResult fit_discrete_support(const DiscreteMeasure& target, int k, const CostSpec& spec,
                               int steps, const FitConfig& fit);

// Per-generated-point l2 distance to the nearest training point.
std::vector<double> nearest_training_distance(const std::vector<Point>& generated,
                                              const std::vector<Point>& training);

}  // namespace qpwgan
