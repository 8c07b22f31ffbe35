#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "deeprx/neural.hpp"

using namespace deeprx;

namespace {
Batch random_batch(const DenseNet& net, int rows, std::mt19937_64& rng) {
  Batch batch;
  batch.inputs.resize(rows, net.input_dim());
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < net.input_dim(); ++c) batch.inputs(r, c) = gauss(rng);
  std::uniform_int_distribution<int> pick(0, net.output_dim() - 1);
  batch.labels.resize(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) batch.labels[static_cast<std::size_t>(r)] = pick(rng);
  return batch;
}

double max_rel_error(const Params& a, const Params& b, double floor = 1e-6) {
  double worst = 0.0;
  for (int i = 0; i < a.count(); ++i) {
    const double x = a.get_flat(i);
    const double y = b.get_flat(i);
    worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor}));
  }
  return worst;
}

// Central differences need smoothness in a step-sized neighbourhood; reject
// batches that leave any relu pre-activation within the kink margin.
bool fd_safe(const DenseNet& net, const Params& params, const Batch& batch) {
  Eigen::MatrixXd a = batch.inputs;
  for (int l = 0; l < net.layers(); ++l) {
    Eigen::MatrixXd z = a * params.weights[static_cast<std::size_t>(l)].transpose();
    z.rowwise() += params.biases[static_cast<std::size_t>(l)].transpose();
    if (net.activations[static_cast<std::size_t>(l)] == Activation::Relu &&
        z.cwiseAbs().minCoeff() < 1e-3)
      return false;
    if (net.activations[static_cast<std::size_t>(l)] == Activation::Sigmoid)
      a = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    else if (net.activations[static_cast<std::size_t>(l)] == Activation::Relu)
      a = z.cwiseMax(0.0);
    else
      a = z;
  }
  return true;
}

Batch fd_safe_batch(const DenseNet& net, const Params& params, int rows, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Batch batch = random_batch(net, rows, rng);
    if (fd_safe(net, params, batch)) return batch;
  }
  throw std::runtime_error("no kink-free batch found");
}
}  // namespace

TEST_CASE("net validation") {
  CHECK_THROWS_AS(DenseNet({{2}, {}}).validate(), std::invalid_argument);
  DenseNet bad{{2, 3, 2}, {Activation::Softmax, Activation::Softmax}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_NOTHROW(DenseNet::classifier({2, 3, 2}, {Activation::Sigmoid}).validate());
}

TEST_CASE("zero parameters give uniform class probabilities") {
  const DenseNet net = DenseNet::classifier({3, 5, 4}, {Activation::Sigmoid});
  const Params params = Params::zeros(net);
  Eigen::MatrixXd inputs(2, 3);
  inputs << 1.0, -2.0, 0.5, 0.0, 0.0, 3.0;
  const Eigen::MatrixXd probs = forward(net, params, inputs);
  for (Eigen::Index r = 0; r < probs.rows(); ++r)
    for (Eigen::Index c = 0; c < probs.cols(); ++c)
      CHECK(probs(r, c) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("single identity layer computes softmax of the input") {
  DenseNet net;
  net.dims = {3, 3};
  net.activations = {Activation::Softmax};
  Params params = Params::zeros(net);
  params.weights[0] = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd inputs(1, 3);
  inputs << 1.0, 2.0, 3.0;
  const Eigen::MatrixXd probs = forward(net, params, inputs);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(probs(0, 0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
  CHECK(probs(0, 2) == doctest::Approx(std::exp(3.0) / z).epsilon(1e-12));
}

TEST_CASE("probability rows sum to one for random nets") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseNet net = DenseNet::classifier({4, 16, 9}, {Activation::Relu});
    const Params params = Params::init(net, rng);
    const Batch batch = random_batch(net, 32, rng);
    const Eigen::MatrixXd probs = forward(net, params, batch.inputs);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      CHECK(probs.row(r).minCoeff() >= 0.0);
      CHECK(probs.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward rejects wrong input width") {
  const DenseNet net = DenseNet::classifier({3, 4, 2}, {Activation::Sigmoid});
  const Params params = Params::zeros(net);
  CHECK_THROWS_AS(forward(net, params, Eigen::MatrixXd::Zero(2, 5)), std::invalid_argument);
}

TEST_CASE("perfect one-hot predictions have zero loss") {
  Eigen::MatrixXd probs(2, 3);
  probs << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  CHECK(cross_entropy(probs, {0, 2}) == 0.0);
}

TEST_CASE("uniform predictions cost n log C") {
  const int classes = 7, n = 13;
  const Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(n, classes, 1.0 / classes);
  std::vector<int> labels(n, 2);
  CHECK(cross_entropy(probs, labels) ==
        doctest::Approx(n * std::log(static_cast<double>(classes))).epsilon(1e-12));
}

TEST_CASE("cross entropy matches an independent accumulation") {
  std::mt19937_64 rng(5);
  const DenseNet net = DenseNet::classifier({3, 8, 5}, {Activation::Sigmoid});
  const Params params = Params::init(net, rng);
  const Batch batch = random_batch(net, 64, rng);
  const Eigen::MatrixXd probs = forward(net, params, batch.inputs);
  // Reverse-order accumulation as the independent summation route.
  long double acc = 0.0L;
  for (Eigen::Index r = probs.rows() - 1; r >= 0; --r)
    acc -= std::log(static_cast<long double>(probs(r, batch.labels[static_cast<std::size_t>(r)])));
  CHECK(cross_entropy(probs, batch.labels) ==
        doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central differences on small nets") {
  std::mt19937_64 rng(7);
  const std::vector<DenseNet> nets = {
      DenseNet::classifier({2, 3, 3}, {Activation::Sigmoid}),   // 21 parameters
      DenseNet::classifier({2, 4, 2}, {Activation::Relu}),      // 22 parameters
      DenseNet::classifier({3, 2, 2, 3}, {Activation::Sigmoid, Activation::Relu}),
  };
  for (const DenseNet& net : nets) {
    for (int seed = 0; seed < 3; ++seed) {
      const Params params = Params::init(net, rng);
      const Batch batch = fd_safe_batch(net, params, 6, rng);
      const auto [loss, analytic] = backward(net, params, batch);
      CHECK(loss > 0.0);
      const Params numeric = finite_difference_gradient(net, params, batch, 1e-5);
      CHECK(max_rel_error(analytic, numeric) < 1e-5);
    }
  }
}

TEST_CASE("gradients match central differences on a receiver-sized net") {
  std::mt19937_64 rng(11);
  const DenseNet net =
      DenseNet::classifier({1, 100, 50, 16}, {Activation::Sigmoid, Activation::Relu});
  const Params params = Params::init(net, rng);
  const Batch batch = fd_safe_batch(net, params, 4, rng);
  const auto [loss, analytic] = backward(net, params, batch);
  (void)loss;
  // Floor at 1e-4: difference noise dominates coordinates below that scale.
  CHECK(max_rel_error(analytic, finite_difference_gradient(net, params, batch), 1e-4) < 1e-5);
}

TEST_CASE("zero inputs with zero biases leave first-layer weights untouched") {
  const DenseNet net = DenseNet::classifier({3, 4, 2}, {Activation::Sigmoid});
  std::mt19937_64 rng(13);
  const Params params = Params::init(net, rng);  // biases are zero at init
  Batch batch;
  batch.inputs = Eigen::MatrixXd::Zero(5, 3);
  batch.labels = {0, 1, 0, 1, 0};
  const auto [loss, grads] = backward(net, params, batch);
  (void)loss;
  CHECK(grads.weights[0].norm() == 0.0);
}

TEST_CASE("duplicating a batch doubles the gradient") {
  const DenseNet net = DenseNet::classifier({2, 4, 3}, {Activation::Relu});
  std::mt19937_64 rng(17);
  const Params params = Params::init(net, rng);
  const Batch batch = random_batch(net, 5, rng);
  Batch doubled;
  doubled.inputs.resize(10, 2);
  doubled.inputs << batch.inputs, batch.inputs;
  doubled.labels = batch.labels;
  doubled.labels.insert(doubled.labels.end(), batch.labels.begin(), batch.labels.end());
  const auto [l1, g1] = backward(net, params, batch);
  const auto [l2, g2] = backward(net, params, doubled);
  CHECK(l2 == doctest::Approx(2.0 * l1).epsilon(1e-12));
  for (int i = 0; i < g1.count(); ++i)
    CHECK(g2.get_flat(i) == doctest::Approx(2.0 * g1.get_flat(i)).epsilon(1e-9));
}

TEST_CASE("adam with zero gradient advances the step only") {
  const DenseNet net = DenseNet::classifier({2, 3, 2}, {Activation::Sigmoid});
  std::mt19937_64 rng(19);
  Params params = Params::init(net, rng);
  const Params before = params;
  AdamState state = AdamState::init(params, 1e-3);
  adam_step(params, Params::zeros(net), state);
  CHECK(state.t == 1);
  CHECK(max_rel_error(params, before) == 0.0);
}

TEST_CASE("first adam step moves each coordinate by about the learning rate") {
  const DenseNet net = DenseNet::classifier({2, 3, 2}, {Activation::Sigmoid});
  std::mt19937_64 rng(23);
  Params params = Params::init(net, rng);
  const Params before = params;
  Params grads = Params::zeros(net);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < grads.count(); ++i) grads.add_flat(i, gauss(rng) + 2.0);  // keep |g| >> eps
  AdamState state = AdamState::init(params, 1e-3);
  adam_step(params, grads, state);
  for (int i = 0; i < params.count(); ++i) {
    const double step = std::abs(params.get_flat(i) - before.get_flat(i));
    CHECK(step == doctest::Approx(1e-3).epsilon(1e-4));
  }
}

TEST_CASE("adam trajectories replay bit-identically") {
  const DenseNet net = DenseNet::classifier({2, 6, 3}, {Activation::Sigmoid});
  const auto run = [&](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Params params = Params::init(net, rng);
    Eigen::MatrixXd inputs(40, 2);
    std::vector<int> labels(40);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, 2);
    for (int i = 0; i < 40; ++i) {
      inputs(i, 0) = gauss(rng);
      inputs(i, 1) = gauss(rng);
      labels[static_cast<std::size_t>(i)] = pick(rng);
    }
    TrainConfig cfg{50, 8, 1e-3};
    train(net, params, inputs, labels, cfg, rng);
    return params;
  };
  const Params a = run(99);
  const Params b = run(99);
  for (int i = 0; i < a.count(); ++i) CHECK(a.get_flat(i) == b.get_flat(i));
}

TEST_CASE("training separates a linearly separable toy set") {
  const DenseNet net = DenseNet::classifier({2, 8, 2}, {Activation::Relu});
  std::mt19937_64 rng(29);
  Params params = Params::init(net, rng);
  const int n = 200;
  Eigen::MatrixXd inputs(n, 2);
  std::vector<int> labels(n);
  std::normal_distribution<double> gauss(0.0, 0.3);
  std::uniform_int_distribution<int> pick(0, 1);
  for (int i = 0; i < n; ++i) {
    const int cls = pick(rng);
    inputs(i, 0) = (cls ? 1.0 : -1.0) + gauss(rng);
    inputs(i, 1) = (cls ? 1.0 : -1.0) + gauss(rng);
    labels[static_cast<std::size_t>(i)] = cls;
  }
  TrainConfig cfg{500, 16, 1e-2};
  const TrainTrace trace = train(net, params, inputs, labels, cfg, rng);
  CHECK(trace.losses.size() == 500);
  CHECK(trace.last() < 0.1 * trace.first());
}

TEST_CASE("loss decreases across seeds on a learnable toy problem") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DenseNet net = DenseNet::classifier({2, 6, 2}, {Activation::Sigmoid});
    std::mt19937_64 rng(seed);
    Params params = Params::init(net, rng);
    const int n = 64;
    Eigen::MatrixXd inputs(n, 2);
    std::vector<int> labels(n);
    std::normal_distribution<double> gauss(0.0, 0.4);
    std::uniform_int_distribution<int> pick(0, 1);
    for (int i = 0; i < n; ++i) {
      const int cls = pick(rng);
      inputs(i, 0) = (cls ? 1.0 : -1.0) + gauss(rng);
      inputs(i, 1) = gauss(rng);
      labels[static_cast<std::size_t>(i)] = cls;
    }
    TrainConfig cfg{200, 16, 1e-2};
    const TrainTrace trace = train(net, params, inputs, labels, cfg, rng);
    CHECK(trace.last() < trace.first());
  }
}

TEST_CASE("zero iterations leave parameters untouched") {
  const DenseNet net = DenseNet::classifier({2, 3, 2}, {Activation::Sigmoid});
  std::mt19937_64 rng(31);
  Params params = Params::init(net, rng);
  const Params before = params;
  const Batch data = random_batch(net, 8, rng);
  TrainConfig cfg{0, 4, 1e-3};
  const TrainTrace trace = train(net, params, data.inputs, data.labels, cfg, rng);
  CHECK(trace.losses.empty());
  CHECK(max_rel_error(params, before) == 0.0);
}

TEST_CASE("training rejects an empty dataset") {
  const DenseNet net = DenseNet::classifier({2, 3, 2}, {Activation::Sigmoid});
  std::mt19937_64 rng(37);
  Params params = Params::init(net, rng);
  TrainConfig cfg{10, 4, 1e-3};
  CHECK_THROWS_AS(train(net, params, Eigen::MatrixXd(0, 2), {}, cfg, rng),
                  std::invalid_argument);
}

TEST_CASE("weight init respects the fan-in bound, biases start at zero") {
  const DenseNet net = DenseNet::classifier({16, 9, 4}, {Activation::Sigmoid});
  std::mt19937_64 rng(41);
  const Params params = Params::init(net, rng);
  CHECK(params.weights[0].cwiseAbs().maxCoeff() <= 1.0 / 4.0);
  CHECK(params.weights[1].cwiseAbs().maxCoeff() <= 1.0 / 3.0);
  CHECK(params.biases[0].norm() == 0.0);
  CHECK(params.biases[1].norm() == 0.0);
}

TEST_CASE("checkpoint save / load round trip") {
  const DenseNet net = DenseNet::classifier({3, 5, 4}, {Activation::Relu});
  std::mt19937_64 rng(43);
  const Params params = Params::init(net, rng);
  std::stringstream buffer;
  params.save(buffer);
  const Params loaded = Params::load(buffer, net);
  for (int i = 0; i < params.count(); ++i) CHECK(loaded.get_flat(i) == params.get_flat(i));
}

TEST_CASE("checkpoint shape mismatch is rejected") {
  const DenseNet net = DenseNet::classifier({3, 5, 4}, {Activation::Relu});
  const DenseNet other = DenseNet::classifier({3, 6, 4}, {Activation::Relu});
  std::mt19937_64 rng(47);
  const Params params = Params::init(net, rng);
  std::stringstream buffer;
  params.save(buffer);
  CHECK_THROWS_AS(Params::load(buffer, other), std::invalid_argument);
}
