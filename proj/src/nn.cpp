#include "qpwgan/nn.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qpwgan {

namespace {

constexpr int kCheckpointVersion = 1;

ad::Var apply_activation(ad::Tape& tape, ad::Var v, const Layer& layer) {
  switch (layer.activation) {
    case Activation::Identity:
      return v;
    case Activation::ReLU:
      return tape.relu(v);
    case Activation::LeakyReLU:
      return tape.leaky_relu(v, layer.leaky_slope);
    case Activation::Tanh:
      return tape.tanh(v);
  }
  throw std::logic_error("unknown activation");
}

Eigen::MatrixXd activation_value(const Eigen::MatrixXd& a, const Layer& layer) {
  switch (layer.activation) {
    case Activation::Identity:
      return a;
    case Activation::ReLU:
      return a.cwiseMax(0.0);
    case Activation::LeakyReLU:
      return (a.array() > 0.0).select(a, layer.leaky_slope * a);
    case Activation::Tanh:
      return a.array().tanh();
  }
  throw std::logic_error("unknown activation");
}

// d(activation)/d(pre-activation), evaluated at pre-activation a.
Eigen::MatrixXd activation_prime(const Eigen::MatrixXd& a, const Layer& layer) {
  switch (layer.activation) {
    case Activation::Identity:
      return Eigen::MatrixXd::Ones(a.rows(), a.cols());
    case Activation::ReLU:
      return (a.array() > 0.0).cast<double>();
    case Activation::LeakyReLU:
      return (a.array() > 0.0)
          .select(Eigen::MatrixXd::Ones(a.rows(), a.cols()),
                  Eigen::MatrixXd::Constant(a.rows(), a.cols(), layer.leaky_slope));
    case Activation::Tanh:
      return 1.0 - a.array().tanh().square();
  }
  throw std::logic_error("unknown activation");
}

}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity:
      return "identity";
    case Activation::ReLU:
      return "relu";
    case Activation::LeakyReLU:
      return "leaky_relu";
    case Activation::Tanh:
      return "tanh";
  }
  throw std::logic_error("unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "leaky_relu") return Activation::LeakyReLU;
  if (name == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation name: " + name);
}

void validate(const MlpNetwork& net) {
  if (net.layers.empty()) throw std::invalid_argument("MlpNetwork: no layers");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    if (layer.bias.cols() != layer.weight.cols()) {
      throw std::invalid_argument("MlpNetwork: bias/weight mismatch");
    }
    if (!(layer.dropout >= 0.0 && layer.dropout < 1.0)) {
      throw std::invalid_argument("MlpNetwork: dropout rate must lie in [0, 1)");
    }
    if (l + 1 < net.layers.size() &&
        net.layers[l + 1].weight.rows() != layer.weight.cols()) {
      throw std::invalid_argument("MlpNetwork: layer dimensions do not chain");
    }
  }
}

MlpNetwork make_mlp(const std::vector<LayerSpec>& specs, Rng& rng) {
  MlpNetwork net;
  for (const auto& spec : specs) {
    Layer layer;
    const double bound = std::sqrt(6.0 / static_cast<double>(spec.in));
    layer.weight.resize(spec.in, spec.out);
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        layer.weight(i, j) = rng.uniform(-bound, bound);
      }
    }
    layer.bias = Eigen::RowVectorXd::Zero(spec.out);
    layer.activation = spec.activation;
    layer.leaky_slope = spec.leaky_slope;
    layer.dropout = spec.dropout;
    net.layers.push_back(std::move(layer));
  }
  validate(net);
  return net;
}

MlpNetwork make_gmm_critic(int data_dim, Rng& rng) {
  return make_mlp({{data_dim, 128, Activation::ReLU},
                   {128, 128, Activation::ReLU},
                   {128, 1, Activation::Identity}},
                  rng);
}

MlpNetwork make_gmm_generator(int source_dim, int data_dim, Rng& rng) {
  return make_mlp({{source_dim, 128, Activation::ReLU},
                   {128, 128, Activation::ReLU},
                   {128, data_dim, Activation::Identity}},
                  rng);
}

MlpNetwork make_mnist_style_discriminator(Rng& rng) {
  return make_mlp({{784, 1024, Activation::LeakyReLU, 0.2, 0.3},
                   {1024, 512, Activation::LeakyReLU, 0.2, 0.3},
                   {512, 256, Activation::LeakyReLU, 0.2, 0.3},
                   {256, 1, Activation::Identity}},
                  rng);
}

MlpNetwork make_mnist_style_generator(Rng& rng) {
  return make_mlp({{128, 256, Activation::LeakyReLU, 0.2},
                   {256, 512, Activation::LeakyReLU, 0.2},
                   {512, 1024, Activation::Tanh},
                   {1024, 784, Activation::LeakyReLU, 0.2}},
                  rng);
}

MlpVars register_params(ad::Tape& tape, const MlpNetwork& net) {
  MlpVars vars;
  for (const Layer& layer : net.layers) {
    vars.params.emplace_back(tape.leaf(layer.weight), tape.leaf(layer.bias));
  }
  return vars;
}

ad::Var mlp_forward(ad::Tape& tape, const MlpNetwork& net, const MlpVars* vars, ad::Var x,
                    ForwardMode mode, Rng* rng) {
  validate(net);
  if (tape.value(x).cols() != net.input_dim()) {
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  }
  ad::Var h = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    ad::Var w = vars ? vars->params[l].first : tape.constant(layer.weight);
    ad::Var b = vars ? vars->params[l].second : tape.constant(layer.bias);
    h = apply_activation(tape, tape.add_rowvec(tape.matmul(h, w), b), layer);
    if (layer.dropout > 0.0 && mode == ForwardMode::Train) {
      if (!rng) throw std::invalid_argument("mlp_forward: dropout needs an rng in train mode");
      const auto& v = tape.value(h);
      const double keep = 1.0 - layer.dropout;
      Eigen::MatrixXd mask(v.rows(), v.cols());
      for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
          mask(i, j) = rng->uniform01() < keep ? 1.0 / keep : 0.0;
        }
      }
      h = tape.elem_mul_const(h, mask);
    }
  }
  return h;
}

Eigen::MatrixXd mlp_eval(const MlpNetwork& net, const Eigen::MatrixXd& x) {
  validate(net);
  if (x.cols() != net.input_dim()) {
    throw std::invalid_argument("mlp_eval: input dimension mismatch");
  }
  Eigen::MatrixXd h = x;
  for (const Layer& layer : net.layers) {
    h = activation_value((h * layer.weight).rowwise() + layer.bias, layer);
  }
  return h;
}

Eigen::MatrixXd mlp_input_gradient(const MlpNetwork& net, const Eigen::MatrixXd& x) {
  validate(net);
  if (net.output_dim() != 1) {
    throw std::invalid_argument("mlp_input_gradient: network output must be scalar");
  }
  std::vector<Eigen::MatrixXd> pre;  // pre-activations per layer
  Eigen::MatrixXd h = x;
  for (const Layer& layer : net.layers) {
    pre.push_back((h * layer.weight).rowwise() + layer.bias);
    h = activation_value(pre.back(), layer);
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Ones(x.rows(), 1);
  for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
    g = (g.cwiseProduct(activation_prime(pre[l], net.layers[l]))) *
        net.layers[l].weight.transpose();
  }
  return g;
}

ad::Var mlp_input_gradient_on_tape(ad::Tape& tape, const MlpNetwork& net, const MlpVars& vars,
                                   ad::Var x) {
  validate(net);
  if (net.output_dim() != 1) {
    throw std::invalid_argument("mlp_input_gradient_on_tape: network output must be scalar");
  }
  std::vector<ad::Var> pre;
  ad::Var h = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    pre.push_back(tape.add_rowvec(tape.matmul(h, vars.params[l].first), vars.params[l].second));
    h = apply_activation(tape, pre[l], net.layers[l]);
  }
  const Eigen::Index batch = tape.value(x).rows();
  ad::Var g = tape.constant(Eigen::MatrixXd::Ones(batch, 1));
  for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
    const Layer& layer = net.layers[l];
    ad::Var gated;
    if (layer.activation == Activation::Tanh) {
      ad::Var prime = tape.add_scalar(tape.neg(tape.square(tape.tanh(pre[l]))), 1.0);
      gated = tape.elem_mul(g, prime);
    } else {
      // Piecewise-linear activations: the local slope is constant in a
      // neighbourhood, so it enters as a fixed mask.
      gated = tape.elem_mul_const(g, activation_prime(tape.value(pre[l]), layer));
    }
    g = tape.matmul_nt(gated, vars.params[l].first);
  }
  return g;
}

double ParamGrads::squared_norm() const {
  double acc = 0.0;
  for (const auto& [gw, gb] : layers) acc += gw.squaredNorm() + gb.squaredNorm();
  return acc;
}

ParamGrads collect_grads(const ad::Tape& tape, const MlpVars& vars) {
  ParamGrads grads;
  for (const auto& [w, b] : vars.params) {
    grads.layers.emplace_back(tape.grad(w), tape.grad(b));
  }
  return grads;
}

AdamState make_adam_state(const MlpNetwork& net) {
  AdamState state;
  for (const Layer& layer : net.layers) {
    AdamState::Slot slot;
    slot.m_w = Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols());
    slot.v_w = slot.m_w;
    slot.m_b = Eigen::RowVectorXd::Zero(layer.bias.cols());
    slot.v_b = slot.m_b;
    state.slots.push_back(std::move(slot));
  }
  return state;
}

void adam_step(MlpNetwork& net, const ParamGrads& grads, AdamState& state, double alpha,
               double beta0, double beta1, double eps) {
  if (grads.layers.size() != net.layers.size() || state.slots.size() != net.layers.size()) {
    throw std::invalid_argument("adam_step: layer count mismatch");
  }
  ++state.step;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    adam_update(net.layers[l].weight, grads.layers[l].first, state.slots[l].m_w,
                state.slots[l].v_w, state.step, alpha, beta0, beta1, eps);
    adam_update(net.layers[l].bias, grads.layers[l].second, state.slots[l].m_b,
                state.slots[l].v_b, state.step, alpha, beta0, beta1, eps);
  }
}

void clip_weights(MlpNetwork& net, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("clip_weights: c must be positive");
  for (Layer& layer : net.layers) {
    layer.weight = layer.weight.cwiseMax(-c).cwiseMin(c);
    layer.bias = layer.bias.cwiseMax(-c).cwiseMin(c);
  }
}

bool near_activation_kink(const MlpNetwork& net, const Eigen::MatrixXd& x, double margin) {
  Eigen::MatrixXd h = x;
  for (const Layer& layer : net.layers) {
    Eigen::MatrixXd a = (h * layer.weight).rowwise() + layer.bias;
    if (layer.activation == Activation::ReLU || layer.activation == Activation::LeakyReLU) {
      if ((a.array().abs() < margin).any()) return true;
    }
    h = activation_value(a, layer);
  }
  return false;
}

namespace {

void append_double(std::string& line, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  line.append(buf, res.ptr);
}

}  // namespace

void save_checkpoint(const MlpNetwork& net, const std::string& path) {
  validate(net);
  nlohmann::json header;
  header["format"] = "qpwgan-mlp";
  header["version"] = kCheckpointVersion;
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : net.layers) {
    layers.push_back({{"in", layer.weight.rows()},
                      {"out", layer.weight.cols()},
                      {"activation", activation_name(layer.activation)},
                      {"leaky_slope", layer.leaky_slope},
                      {"dropout", layer.dropout}});
  }
  header["layers"] = layers;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << header.dump() << "\n";
  for (const Layer& layer : net.layers) {
    std::string line;
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        if (!line.empty()) line.push_back(',');
        append_double(line, layer.weight(i, j));
      }
    }
    for (Eigen::Index j = 0; j < layer.bias.cols(); ++j) {
      if (!line.empty()) line.push_back(',');
      append_double(line, layer.bias(j));
    }
    out << line << "\n";
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed: " + path);
}

MlpNetwork load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw std::runtime_error("load_checkpoint: missing header");
  }
  nlohmann::json header = nlohmann::json::parse(header_line);
  if (header.value("format", "") != "qpwgan-mlp" ||
      header.value("version", -1) != kCheckpointVersion) {
    throw std::runtime_error("load_checkpoint: unsupported checkpoint format");
  }
  MlpNetwork net;
  for (const auto& spec : header.at("layers")) {
    Layer layer;
    const int in_dim = spec.at("in").get<int>();
    const int out_dim = spec.at("out").get<int>();
    layer.weight.resize(in_dim, out_dim);
    layer.bias.resize(out_dim);
    layer.activation = activation_from_name(spec.at("activation").get<std::string>());
    layer.leaky_slope = spec.at("leaky_slope").get<double>();
    layer.dropout = spec.at("dropout").get<double>();
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_checkpoint: truncated file");
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    const std::size_t expected = static_cast<std::size_t>(in_dim) * out_dim + out_dim;
    if (vals.size() != expected) {
      throw std::runtime_error("load_checkpoint: parameter count mismatch");
    }
    std::size_t k = 0;
    for (int i = 0; i < in_dim; ++i) {
      for (int j = 0; j < out_dim; ++j) layer.weight(i, j) = vals[k++];
    }
    for (int j = 0; j < out_dim; ++j) layer.bias(j) = vals[k++];
    net.layers.push_back(std::move(layer));
  }
  validate(net);
  return net;
}

}  // namespace qpwgan
