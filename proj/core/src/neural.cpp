#include "deeprx/neural.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace deeprx {

namespace {
constexpr double kProbFloor = 1e-12;

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::None:
      return z;
    case Activation::Sigmoid:
      return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Softmax: {
      Eigen::MatrixXd p(z.rows(), z.cols());
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double m = z.row(r).maxCoeff();
        Eigen::ArrayXd e = (z.row(r).array() - m).exp();
        p.row(r) = (e / e.sum()).matrix();
      }
      return p;
    }
  }
  throw std::logic_error("unreachable");
}

// Derivative factor through the activation, expressed via the activation
// output where possible (sigmoid) or the pre-activation (relu).
Eigen::MatrixXd activation_backward(const Eigen::MatrixXd& grad_out, const Eigen::MatrixXd& z,
                                    const Eigen::MatrixXd& a, Activation act) {
  switch (act) {
    case Activation::None:
      return grad_out;
    case Activation::Sigmoid:
      return (grad_out.array() * a.array() * (1.0 - a.array())).matrix();
    case Activation::Relu:
      return (grad_out.array() * (z.array() > 0.0).cast<double>()).matrix();
    case Activation::Softmax:
      throw std::logic_error("softmax handled by the fused cross-entropy path");
  }
  throw std::logic_error("unreachable");
}

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Relu: return "relu";
    case Activation::Softmax: return "softmax";
  }
  throw std::logic_error("unreachable");
}

Activation activation_by_name(const std::string& name) {
  if (name == "none") return Activation::None;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "relu") return Activation::Relu;
  if (name == "softmax") return Activation::Softmax;
  throw std::invalid_argument("unknown activation: " + name);
}

void DenseNet::validate() const {
  if (dims.size() < 2) throw std::invalid_argument("net needs at least one layer");
  if (activations.size() + 1 != dims.size())
    throw std::invalid_argument("net needs one activation per layer");
  for (int d : dims)
    if (d < 1) throw std::invalid_argument("layer dims must be >= 1");
  for (std::size_t l = 0; l + 1 < activations.size(); ++l)
    if (activations[l] == Activation::Softmax)
      throw std::invalid_argument("softmax allowed on the terminal layer only");
}

DenseNet DenseNet::classifier(std::vector<int> dims, std::vector<Activation> hidden) {
  if (hidden.size() + 2 != dims.size())
    throw std::invalid_argument("classifier needs dims.size()-2 hidden activations");
  DenseNet net;
  net.dims = std::move(dims);
  net.activations = std::move(hidden);
  net.activations.push_back(Activation::Softmax);
  net.validate();
  return net;
}

Params Params::init(const DenseNet& net, std::mt19937_64& rng) {
  net.validate();
  Params p;
  for (int l = 0; l < net.layers(); ++l) {
    const int in = net.dims[static_cast<std::size_t>(l)];
    const int out = net.dims[static_cast<std::size_t>(l) + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd w(out, in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  return p;
}

Params Params::zeros(const DenseNet& net) {
  net.validate();
  Params p;
  for (int l = 0; l < net.layers(); ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(net.dims[static_cast<std::size_t>(l) + 1],
                                              net.dims[static_cast<std::size_t>(l)]));
    p.biases.push_back(Eigen::VectorXd::Zero(net.dims[static_cast<std::size_t>(l) + 1]));
  }
  return p;
}

int Params::count() const {
  int n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<int>(weights[l].size() + biases[l].size());
  return n;
}

double Params::get_flat(int idx) const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const int wn = static_cast<int>(weights[l].size());
    if (idx < wn) {
      const int r = idx / static_cast<int>(weights[l].cols());
      const int c = idx % static_cast<int>(weights[l].cols());
      return weights[l](r, c);
    }
    idx -= wn;
    const int bn = static_cast<int>(biases[l].size());
    if (idx < bn) return biases[l](idx);
    idx -= bn;
  }
  throw std::out_of_range("flat parameter index");
}

void Params::add_flat(int idx, double delta) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const int wn = static_cast<int>(weights[l].size());
    if (idx < wn) {
      const int r = idx / static_cast<int>(weights[l].cols());
      const int c = idx % static_cast<int>(weights[l].cols());
      weights[l](r, c) += delta;
      return;
    }
    idx -= wn;
    const int bn = static_cast<int>(biases[l].size());
    if (idx < bn) {
      biases[l](idx) += delta;
      return;
    }
    idx -= bn;
  }
  throw std::out_of_range("flat parameter index");
}

void Params::save(std::ostream& out) const {
  out << "layers," << weights.size() << "\n";
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out << "w," << weights[l].rows() << "," << weights[l].cols();
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c)
        out << "," << format_full(weights[l](r, c));
    out << "\n";
    out << "b," << biases[l].size();
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) out << "," << format_full(biases[l](r));
    out << "\n";
  }
}

Params Params::load(std::istream& in, const DenseNet& net) {
  auto next_cells = [&in]() {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("checkpoint truncated");
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  auto cells = next_cells();
  if (cells.size() != 2 || cells[0] != "layers")
    throw std::invalid_argument("checkpoint: expected layers,<n>");
  if (std::stoi(cells[1]) != net.layers())
    throw std::invalid_argument("checkpoint: layer count mismatch");
  Params p = Params::zeros(net);
  for (int l = 0; l < net.layers(); ++l) {
    cells = next_cells();
    if (cells.size() < 3 || cells[0] != "w") throw std::invalid_argument("checkpoint: expected w row");
    const int rows = std::stoi(cells[1]);
    const int cols = std::stoi(cells[2]);
    if (rows != p.weights[static_cast<std::size_t>(l)].rows() ||
        cols != p.weights[static_cast<std::size_t>(l)].cols())
      throw std::invalid_argument("checkpoint: weight shape mismatch");
    if (cells.size() != static_cast<std::size_t>(3 + rows * cols))
      throw std::invalid_argument("checkpoint: weight cell count mismatch");
    std::size_t cidx = 3;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        p.weights[static_cast<std::size_t>(l)](r, c) = std::stod(cells[cidx++]);
    cells = next_cells();
    if (cells.size() < 2 || cells[0] != "b") throw std::invalid_argument("checkpoint: expected b row");
    const int n = std::stoi(cells[1]);
    if (n != p.biases[static_cast<std::size_t>(l)].size())
      throw std::invalid_argument("checkpoint: bias shape mismatch");
    if (cells.size() != static_cast<std::size_t>(2 + n))
      throw std::invalid_argument("checkpoint: bias cell count mismatch");
    for (int r = 0; r < n; ++r) p.biases[static_cast<std::size_t>(l)](r) = std::stod(cells[2 + r]);
  }
  return p;
}

void Batch::validate(const DenseNet& net) const {
  if (inputs.rows() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("batch: row count != label count");
  if (inputs.cols() != net.input_dim())
    throw std::invalid_argument("batch: input width != d0");
  for (int l : labels)
    if (l < 0 || l >= net.output_dim()) throw std::invalid_argument("batch: label out of range");
}

Eigen::MatrixXd forward(const DenseNet& net, const Params& params,
                        const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != net.input_dim())
    throw std::invalid_argument("forward: input width != d0");
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < net.layers(); ++l) {
    Eigen::MatrixXd z = a * params.weights[static_cast<std::size_t>(l)].transpose();
    z.rowwise() += params.biases[static_cast<std::size_t>(l)].transpose();
    a = apply_activation(z, net.activations[static_cast<std::size_t>(l)]);
  }
  return a;
}

double cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
  if (probs.rows() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("cross_entropy: rows != labels");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    loss -= std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)]), kProbFloor));
  return loss;
}

std::pair<double, Params> backward(const DenseNet& net, const Params& params, const Batch& batch) {
  batch.validate(net);
  if (net.activations.back() != Activation::Softmax)
    throw std::invalid_argument("backward: terminal softmax required");
  const int m = net.layers();
  const Eigen::Index n = batch.inputs.rows();

  std::vector<Eigen::MatrixXd> zs(static_cast<std::size_t>(m));
  std::vector<Eigen::MatrixXd> as(static_cast<std::size_t>(m) + 1);
  as[0] = batch.inputs;
  for (int l = 0; l < m; ++l) {
    Eigen::MatrixXd z = as[static_cast<std::size_t>(l)] *
                        params.weights[static_cast<std::size_t>(l)].transpose();
    z.rowwise() += params.biases[static_cast<std::size_t>(l)].transpose();
    zs[static_cast<std::size_t>(l)] = z;
    as[static_cast<std::size_t>(l) + 1] =
        apply_activation(z, net.activations[static_cast<std::size_t>(l)]);
  }

  // loss = sum_i (logsumexp(z_i) - z_i[label]); dZ_last = P - onehot.
  const Eigen::MatrixXd& z_last = zs[static_cast<std::size_t>(m) - 1];
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = z_last.row(i).maxCoeff();
    const double lse = mx + std::log((z_last.row(i).array() - mx).exp().sum());
    loss += lse - z_last(i, batch.labels[static_cast<std::size_t>(i)]);
  }
  Eigen::MatrixXd dz = as[static_cast<std::size_t>(m)];
  for (Eigen::Index i = 0; i < n; ++i) dz(i, batch.labels[static_cast<std::size_t>(i)]) -= 1.0;

  Params grads = Params::zeros(net);
  for (int l = m - 1; l >= 0; --l) {
    grads.weights[static_cast<std::size_t>(l)] = dz.transpose() * as[static_cast<std::size_t>(l)];
    grads.biases[static_cast<std::size_t>(l)] = dz.colwise().sum().transpose();
    if (l > 0) {
      const Eigen::MatrixXd da = dz * params.weights[static_cast<std::size_t>(l)];
      dz = activation_backward(da, zs[static_cast<std::size_t>(l) - 1],
                               as[static_cast<std::size_t>(l)],
                               net.activations[static_cast<std::size_t>(l) - 1]);
    }
  }
  return {loss, std::move(grads)};
}

Params finite_difference_gradient(const DenseNet& net, const Params& params, const Batch& batch,
                                  double step) {
  batch.validate(net);
  Params probe = params;
  Params grads = Params::zeros(net);
  const int n = params.count();
  for (int i = 0; i < n; ++i) {
    probe.add_flat(i, step);
    const double up = cross_entropy(forward(net, probe, batch.inputs), batch.labels);
    probe.add_flat(i, -2.0 * step);
    const double down = cross_entropy(forward(net, probe, batch.inputs), batch.labels);
    probe.add_flat(i, step);
    grads.add_flat(i, (up - down) / (2.0 * step));
  }
  return grads;
}

bool finite_difference_safe(const DenseNet& net, const Params& params, const Batch& batch,
                            double margin) {
  Eigen::MatrixXd a = batch.inputs;
  for (int l = 0; l < net.layers(); ++l) {
    Eigen::MatrixXd z = a * params.weights[static_cast<std::size_t>(l)].transpose();
    z.rowwise() += params.biases[static_cast<std::size_t>(l)].transpose();
    if (net.activations[static_cast<std::size_t>(l)] == Activation::Relu &&
        z.cwiseAbs().minCoeff() < margin)
      return false;
    a = apply_activation(z, net.activations[static_cast<std::size_t>(l)]);
  }
  return true;
}

AdamState AdamState::init(const Params& params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    s.m_w.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols()));
    s.v_w.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols()));
    s.m_b.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
    s.v_b.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
  }
  return s;
}

void adam_step(Params& params, const Params& grads, AdamState& state) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    state.m_w[l] = state.beta1 * state.m_w[l] + (1.0 - state.beta1) * grads.weights[l];
    state.v_w[l] = (state.beta2 * state.v_w[l].array() +
                    (1.0 - state.beta2) * grads.weights[l].array().square())
                       .matrix();
    params.weights[l].array() -= state.learning_rate * (state.m_w[l].array() / bc1) /
                                 ((state.v_w[l].array() / bc2).sqrt() + state.epsilon);

    state.m_b[l] = state.beta1 * state.m_b[l] + (1.0 - state.beta1) * grads.biases[l];
    state.v_b[l] = (state.beta2 * state.v_b[l].array() +
                    (1.0 - state.beta2) * grads.biases[l].array().square())
                       .matrix();
    params.biases[l].array() -= state.learning_rate * (state.m_b[l].array() / bc1) /
                                ((state.v_b[l].array() / bc2).sqrt() + state.epsilon);
  }
}

TrainTrace train(const DenseNet& net, Params& params, const Eigen::MatrixXd& inputs,
                 const std::vector<int>& labels, const TrainConfig& config,
                 std::mt19937_64& rng) {
  if (labels.empty()) throw std::invalid_argument("train: empty dataset");
  if (inputs.rows() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("train: inputs/labels mismatch");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");

  AdamState adam = AdamState::init(params, config.learning_rate);
  TrainTrace trace;
  trace.losses.reserve(static_cast<std::size_t>(config.iterations));
  std::uniform_int_distribution<int> pick(0, static_cast<int>(labels.size()) - 1);

  Batch batch;
  batch.inputs.resize(config.batch_size, inputs.cols());
  batch.labels.resize(static_cast<std::size_t>(config.batch_size));
  for (int it = 0; it < config.iterations; ++it) {
    for (int b = 0; b < config.batch_size; ++b) {
      const int idx = pick(rng);
      batch.inputs.row(b) = inputs.row(idx);
      batch.labels[static_cast<std::size_t>(b)] = labels[static_cast<std::size_t>(idx)];
    }
    auto [loss, grads] = backward(net, params, batch);
    trace.losses.push_back(loss);
    adam_step(params, grads, adam);
  }
  return trace;
}

}  // namespace deeprx
