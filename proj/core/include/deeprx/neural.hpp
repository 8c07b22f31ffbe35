// Minimal dense-network engine: forward pass, analytic backprop through a
// terminal softmax + cross-entropy, Adam, minibatch training, and a central
// finite-difference gradient reference that goes through the public forward
// path only.
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace deeprx {

enum class Activation { None, Sigmoid, Relu, Softmax };

std::string activation_name(Activation a);
Activation activation_by_name(const std::string& name);

struct DenseNet {
  std::vector<int> dims;                  // [d0, ..., dm]
  std::vector<Activation> activations;    // one per layer

  int layers() const { return static_cast<int>(activations.size()); }
  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  void validate() const;  // dims >= 1, softmax terminal only

  // dims.size()-2 hidden activations followed by a softmax output layer.
  static DenseNet classifier(std::vector<int> dims, std::vector<Activation> hidden);
};

struct Params {
  std::vector<Eigen::MatrixXd> weights;  // per layer, out x in
  std::vector<Eigen::VectorXd> biases;   // per layer, out

  // Weights U(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
  static Params init(const DenseNet& net, std::mt19937_64& rng);
  static Params zeros(const DenseNet& net);

  // Flat view, layer-major then row-major weights followed by the bias.
  int count() const;
  double get_flat(int idx) const;
  void add_flat(int idx, double delta);

  // Checkpoint: one CSV line per tensor, full decimal precision.
  void save(std::ostream& out) const;
  static Params load(std::istream& in, const DenseNet& net);
};

struct Batch {
  Eigen::MatrixXd inputs;   // batch x d0
  std::vector<int> labels;  // batch
  void validate(const DenseNet& net) const;
};

// Class-probability rows (terminal softmax): nonnegative, each row sums to 1.
Eigen::MatrixXd forward(const DenseNet& net, const Params& params,
                        const Eigen::MatrixXd& inputs);

// -sum_i log p_i(label_i); probabilities floored at 1e-12.
double cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels);

// Loss and its analytic gradient, with log-softmax fused into the terminal
// layer.
std::pair<double, Params> backward(const DenseNet& net, const Params& params, const Batch& batch);

// Central finite differences of cross_entropy(forward(.)) — the independent
// reference for backward(); never calls backward().
Params finite_difference_gradient(const DenseNet& net, const Params& params, const Batch& batch,
                                  double step = 1e-5);

// Central differences assume smoothness within a step-sized neighbourhood;
// false when any relu pre-activation sits inside the kink margin.
bool finite_difference_safe(const DenseNet& net, const Params& params, const Batch& batch,
                            double margin = 1e-3);

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long t = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(const Params& params, double learning_rate);
};

void adam_step(Params& params, const Params& grads, AdamState& state);

struct TrainConfig {
  int iterations = 500;  // I_sgd
  int batch_size = 32;
  double learning_rate = 1e-3;
};

struct TrainTrace {
  std::vector<double> losses;  // pre-update loss per iteration
  double first() const { return losses.empty() ? 0.0 : losses.front(); }
  double last() const { return losses.empty() ? 0.0 : losses.back(); }
};

// iterations Adam steps on uniformly drawn minibatches (with replacement).
TrainTrace train(const DenseNet& net, Params& params, const Eigen::MatrixXd& inputs,
                 const std::vector<int>& labels, const TrainConfig& config,
                 std::mt19937_64& rng);

}  // namespace deeprx
