#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qpwgan/autodiff.hpp"
#include "qpwgan/rng.hpp"

namespace qpwgan {

enum class Activation { Identity, ReLU, LeakyReLU, Tanh };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
  Eigen::MatrixXd weight;  // in x out
  Eigen::RowVectorXd bias;
  Activation activation = Activation::Identity;
  double leaky_slope = 0.2;
  double dropout = 0.0;  // rate in [0, 1)
};

struct MlpNetwork {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers[0].weight.rows()); }
  int output_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.back().weight.cols());
  }
};

// Throws if consecutive layer dimensions do not chain or a dropout rate is
// outside [0, 1).
void validate(const MlpNetwork& net);

struct LayerSpec {
  int in = 0, out = 0;
  Activation activation = Activation::Identity;
  double leaky_slope = 0.2;
  double dropout = 0.0;
};

// Kaiming-style uniform fan-in initialization (gain sqrt(2)), zero biases.
MlpNetwork make_mlp(const std::vector<LayerSpec>& specs, Rng& rng);

// Two 128-unit ReLU hidden layers, linear output.
MlpNetwork make_gmm_critic(int data_dim, Rng& rng);
MlpNetwork make_gmm_generator(int source_dim, int data_dim, Rng& rng);
// The MLP pair used for image-shaped data (784-d in/out, LeakyReLU 0.2,
// dropout 0.3 in the discriminator).
MlpNetwork make_mnist_style_discriminator(Rng& rng);
MlpNetwork make_mnist_style_generator(Rng& rng);

enum class ForwardMode { Train, Eval };

// Tape handles for each layer's (weight, bias) pair.
struct MlpVars {
  std::vector<std::pair<ad::Var, ad::Var>> params;
};

MlpVars register_params(ad::Tape& tape, const MlpNetwork& net);

// Forward pass on the tape. With `vars` null the weights enter as
// constants (no parameter gradients). Dropout uses inverted scaling and is
// applied only in Train mode; `rng` is required in that case.
ad::Var mlp_forward(ad::Tape& tape, const MlpNetwork& net, const MlpVars* vars, ad::Var x,
                    ForwardMode mode, Rng* rng);

// Plain eval-mode forward, no tape.
Eigen::MatrixXd mlp_eval(const MlpNetwork& net, const Eigen::MatrixXd& x);

// Row-wise input gradients of a scalar-output network in eval mode.
Eigen::MatrixXd mlp_input_gradient(const MlpNetwork& net, const Eigen::MatrixXd& x);

// Input gradients expressed as tape ops so a penalty on them can be
// differentiated with respect to the parameters. Piecewise-linear
// activations contribute constant masks; tanh contributes 1 - tanh^2 as a
// tape expression.
ad::Var mlp_input_gradient_on_tape(ad::Tape& tape, const MlpNetwork& net, const MlpVars& vars,
                                   ad::Var x);

// Gradients per layer, aligned with net.layers.
struct ParamGrads {
  std::vector<std::pair<Eigen::MatrixXd, Eigen::RowVectorXd>> layers;

  double squared_norm() const;
};

ParamGrads collect_grads(const ad::Tape& tape, const MlpVars& vars);

struct AdamState {
  struct Slot {
    Eigen::MatrixXd m_w, v_w;
    Eigen::RowVectorXd m_b, v_b;
  };
  std::vector<Slot> slots;
  long step = 0;
};

AdamState make_adam_state(const MlpNetwork& net);

// Standard Adam descent step with bias correction; beta0/beta1 are the
// first/second moment decay rates and eps is fixed at 1e-8 by default.
void adam_step(MlpNetwork& net, const ParamGrads& grads, AdamState& state, double alpha,
               double beta0, double beta1, double eps = 1e-8);

// Elementwise Adam update on a raw parameter; `step` counts from 1.
template <typename Mat>
void adam_update(Mat& param, const Mat& grad, Mat& m, Mat& v, long step, double alpha,
                 double beta0, double beta1, double eps = 1e-8) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw std::invalid_argument("adam_update: shape mismatch");
  }
  m = beta0 * m + (1.0 - beta0) * grad;
  v = beta1 * v + (1.0 - beta1) * grad.array().square().matrix();
  const double bc0 = 1.0 - std::pow(beta0, static_cast<double>(step));
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  param.array() -= alpha * (m.array() / bc0) / ((v.array() / bc1).sqrt() + eps);
}

// Clamp every parameter to [-c, c].
void clip_weights(MlpNetwork& net, double c);

// True if some ReLU/LeakyReLU pre-activation lies within `margin` of 0;
// used by gradient checks to skip kink-adjacent inputs.
bool near_activation_kink(const MlpNetwork& net, const Eigen::MatrixXd& x, double margin);

// Versioned checkpoint: a JSON header line with layer shapes, activation
// names and dropout rates, followed by one CSV line of parameters per
// layer (weights row-major, then biases).
void save_checkpoint(const MlpNetwork& net, const std::string& path);
MlpNetwork load_checkpoint(const std::string& path);

}  // namespace qpwgan
