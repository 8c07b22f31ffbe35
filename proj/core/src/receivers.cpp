#include "deeprx/receivers.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace deeprx {

namespace {
constexpr double kProbFloor = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

int int_pow(int base, int exp) {
  int v = 1;
  for (int i = 0; i < exp; ++i) v *= base;
  return v;
}

Eigen::MatrixXd costs_from_probs(const Eigen::MatrixXd& probs) {
  return (-(probs.array().max(kProbFloor)).log()).matrix();
}
}  // namespace

std::vector<int> viterbi_map_sequence(const Eigen::MatrixXd& costs, int alphabet, int memory,
                                      const std::vector<int>* init_tail) {
  if (memory < 1) throw std::invalid_argument("viterbi: memory must be >= 1");
  const int n_labels = int_pow(alphabet, memory);
  if (costs.cols() != n_labels) throw std::invalid_argument("viterbi: costs width != M^L");
  const int n_states = int_pow(alphabet, memory - 1);
  const Eigen::Index horizon = costs.rows();

  std::vector<double> prev_cost(static_cast<std::size_t>(n_states), 0.0);
  if (init_tail) {
    if (static_cast<int>(init_tail->size()) != memory - 1)
      throw std::invalid_argument("viterbi: init tail must hold L-1 symbols");
    int state = 0;
    int radix = 1;
    for (int p = 0; p < memory - 1; ++p) {
      const int d = (*init_tail)[static_cast<std::size_t>(p)];
      if (d < 0 || d >= alphabet) throw std::invalid_argument("viterbi: init tail digit");
      state += d * radix;
      radix *= alphabet;
    }
    prev_cost.assign(static_cast<std::size_t>(n_states), kInf);
    prev_cost[static_cast<std::size_t>(state)] = 0.0;
  }

  // back[t][new_state] = (prev_state, symbol digit)
  std::vector<std::vector<std::pair<int, int>>> back(
      static_cast<std::size_t>(horizon),
      std::vector<std::pair<int, int>>(static_cast<std::size_t>(n_states), {-1, -1}));
  std::vector<double> cur_cost(static_cast<std::size_t>(n_states));

  for (Eigen::Index t = 0; t < horizon; ++t) {
    std::fill(cur_cost.begin(), cur_cost.end(), kInf);
    for (int prev = 0; prev < n_states; ++prev) {
      const double base = prev_cost[static_cast<std::size_t>(prev)];
      if (base == kInf) continue;
      for (int d = 0; d < alphabet; ++d) {
        const int label = d + alphabet * prev;
        const int next = label % n_states;
        const double cand = base + costs(t, label);
        if (cand < cur_cost[static_cast<std::size_t>(next)]) {
          cur_cost[static_cast<std::size_t>(next)] = cand;
          back[static_cast<std::size_t>(t)][static_cast<std::size_t>(next)] = {prev, d};
        }
      }
    }
    prev_cost = cur_cost;
  }

  int best_state = 0;
  double best = kInf;
  for (int s = 0; s < n_states; ++s)
    if (prev_cost[static_cast<std::size_t>(s)] < best) {
      best = prev_cost[static_cast<std::size_t>(s)];
      best_state = s;
    }

  std::vector<int> symbols(static_cast<std::size_t>(horizon));
  int state = best_state;
  for (Eigen::Index t = horizon - 1; t >= 0; --t) {
    const auto [prev, d] = back[static_cast<std::size_t>(t)][static_cast<std::size_t>(state)];
    symbols[static_cast<std::size_t>(t)] = d;
    state = prev;
  }
  return symbols;
}

Eigen::MatrixXd exact_siso_costs(const std::vector<double>& y, const SisoChannelSpec& spec,
                                 const Constellation& c, bool guard_at_start) {
  if (spec.nonlinearity != Nonlinearity::None)
    throw UnsupportedSpecError("exact_siso_costs: tanh spec unsupported");
  const int mem = spec.memory();
  const int n_labels = num_classes(c, mem);
  Eigen::MatrixXd costs(static_cast<Eigen::Index>(y.size()), n_labels);
  for (Eigen::Index t = 0; t < costs.rows(); ++t) {
    const int valid = guard_at_start ? std::min<int>(static_cast<int>(t) + 1, mem) : mem;
    for (int label = 0; label < n_labels; ++label)
      costs(t, label) = -gaussian_log_density(y[static_cast<std::size_t>(t)],
                                              siso_state_mean_guarded(label, spec.taps, c, valid),
                                              spec.sigma2);
  }
  return costs;
}

std::vector<int> mlsd_bruteforce(const std::vector<double>& y, const SisoChannelSpec& spec,
                                 const Constellation& c) {
  if (spec.nonlinearity != Nonlinearity::None)
    throw UnsupportedSpecError("mlsd_bruteforce: tanh spec unsupported");
  const int n = static_cast<int>(y.size());
  if (n > 20) throw std::invalid_argument("mlsd_bruteforce: horizon too long");
  const long total = static_cast<long>(std::pow(c.size(), n));
  std::vector<int> best_points;
  double best_cost = kInf;
  std::vector<int> points(static_cast<std::size_t>(n));
  std::vector<double> symbols(static_cast<std::size_t>(n));
  for (long seq = 0; seq < total; ++seq) {
    long rem = seq;
    for (int i = 0; i < n; ++i) {
      points[static_cast<std::size_t>(i)] = static_cast<int>(rem % c.size());
      rem /= c.size();
      symbols[static_cast<std::size_t>(i)] =
          c.point(points[static_cast<std::size_t>(i)]).real();
    }
    const std::vector<double> mean = siso_convolve(symbols, spec.taps);
    double cost = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = y[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
      cost += d * d;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_points = points;
    }
  }
  return best_points;
}

ViterbiNetReceiver ViterbiNetReceiver::make(const Constellation& c, int memory,
                                            std::mt19937_64& init_rng) {
  ViterbiNetReceiver rx;
  rx.constellation = &c;
  rx.memory = memory;
  rx.net = DenseNet::classifier({1, 100, 50, num_classes(c, memory)},
                                {Activation::Sigmoid, Activation::Relu});
  rx.params = Params::init(rx.net, init_rng);
  return rx;
}

Eigen::MatrixXd viterbinet_costs(const ViterbiNetReceiver& rx, const std::vector<double>& y) {
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(y.size()), 1);
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) inputs(i, 0) = y[static_cast<std::size_t>(i)];
  return costs_from_probs(forward(rx.net, rx.params, inputs));
}

std::vector<int> viterbinet_detect(const ViterbiNetReceiver& rx, const std::vector<double>& y,
                                   const std::vector<int>* init_tail) {
  return viterbi_map_sequence(viterbinet_costs(rx, y), rx.constellation->size(), rx.memory,
                              init_tail);
}

TrainTrace viterbinet_train(ViterbiNetReceiver& rx, const LabeledSet& qstar,
                            const TrainConfig& config, std::mt19937_64& rng) {
  if (qstar.n_classes != rx.net.output_dim())
    throw std::invalid_argument("viterbinet_train: label space mismatch");
  return train(rx.net, rx.params, qstar.outputs, qstar.labels, config, rng);
}

BlackBoxSisoReceiver BlackBoxSisoReceiver::make(const Constellation& c, int memory,
                                                std::mt19937_64& init_rng, int window) {
  BlackBoxSisoReceiver rx;
  rx.constellation = &c;
  rx.memory = memory;
  rx.window = window > 0 ? window : memory;
  rx.net = DenseNet::classifier({rx.window, 64, num_classes(c, memory)}, {Activation::Relu});
  rx.params = Params::init(rx.net, init_rng);
  return rx;
}

std::vector<int> blackbox_siso_detect(const BlackBoxSisoReceiver& rx,
                                      const std::vector<double>& y,
                                      const std::vector<double>* context) {
  const int n = static_cast<int>(y.size());
  Eigen::MatrixXd inputs(n, rx.window);
  for (int i = 0; i < n; ++i)
    for (int w = 0; w < rx.window; ++w) {
      const int t = i - (rx.window - 1) + w;
      double v = 0.0;
      if (t >= 0) {
        v = y[static_cast<std::size_t>(t)];
      } else if (context && static_cast<int>(context->size()) + t >= 0) {
        v = (*context)[context->size() + static_cast<std::size_t>(t)];
      }
      inputs(i, w) = v;
    }
  const Eigen::MatrixXd probs = forward(rx.net, rx.params, inputs);
  std::vector<int> points(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    probs.row(i).maxCoeff(&best);
    points[static_cast<std::size_t>(i)] =
        class_digit(static_cast<int>(best), *rx.constellation, 0);
  }
  return points;
}

TrainTrace blackbox_siso_train(BlackBoxSisoReceiver& rx, const LabeledSet& qstar,
                               const TrainConfig& config, std::mt19937_64& rng) {
  if (qstar.dim() != rx.window)
    throw std::invalid_argument("blackbox_siso_train: window width mismatch");
  return train(rx.net, rx.params, qstar.outputs, qstar.labels, config, rng);
}

DeepSicReceiver DeepSicReceiver::make(const Constellation& c, int users, int antennas,
                                      std::mt19937_64& init_rng, int iterations) {
  if (users < 1 || antennas < 1 || iterations < 1)
    throw std::invalid_argument("deepsic: users, antennas, iterations must be >= 1");
  DeepSicReceiver rx;
  rx.constellation = &c;
  rx.users = users;
  rx.antennas = antennas;
  rx.iterations = iterations;
  const int in_dim = 2 * antennas + (users - 1) * c.size();
  rx.net = DenseNet::classifier({in_dim, 60, 30, c.size()},
                                {Activation::Sigmoid, Activation::Relu});
  rx.params.reserve(static_cast<std::size_t>(iterations * users));
  for (int q = 0; q < iterations; ++q)
    for (int k = 0; k < users; ++k) rx.params.push_back(Params::init(rx.net, init_rng));
  return rx;
}

namespace {
// Rows: [stacked y | soft PMFs of all users but k, ascending user order].
Eigen::MatrixXd deepsic_inputs(const Eigen::MatrixXd& y_rows, const Eigen::MatrixXd& soft,
                               int users, int alphabet, int user) {
  const Eigen::Index n = y_rows.rows();
  const Eigen::Index y_dim = y_rows.cols();
  Eigen::MatrixXd inputs(n, y_dim + (users - 1) * alphabet);
  inputs.leftCols(y_dim) = y_rows;
  Eigen::Index col = y_dim;
  for (int other = 0; other < users; ++other) {
    if (other == user) continue;
    inputs.middleCols(col, alphabet) = soft.middleCols(other * alphabet, alphabet);
    col += alphabet;
  }
  return inputs;
}

Eigen::MatrixXd uniform_soft(Eigen::Index n, int users, int alphabet) {
  return Eigen::MatrixXd::Constant(n, users * alphabet, 1.0 / alphabet);
}
}  // namespace

Eigen::MatrixXd deepsic_soft_estimates(const DeepSicReceiver& rx, const Eigen::MatrixXd& y_rows) {
  const int m = rx.constellation->size();
  Eigen::MatrixXd soft = uniform_soft(y_rows.rows(), rx.users, m);
  for (int q = 0; q < rx.iterations; ++q) {
    Eigen::MatrixXd next(y_rows.rows(), rx.users * m);
    for (int k = 0; k < rx.users; ++k)
      next.middleCols(k * m, m) = forward(
          rx.net, rx.block(q, k), deepsic_inputs(y_rows, soft, rx.users, m, k));
    soft = std::move(next);
  }
  return soft;
}

Eigen::MatrixXi deepsic_detect(const DeepSicReceiver& rx, const Eigen::MatrixXd& y_rows) {
  const int m = rx.constellation->size();
  const Eigen::MatrixXd soft = deepsic_soft_estimates(rx, y_rows);
  Eigen::MatrixXi points(y_rows.rows(), rx.users);
  for (Eigen::Index i = 0; i < y_rows.rows(); ++i)
    for (int k = 0; k < rx.users; ++k) {
      Eigen::Index best = 0;
      soft.row(i).segment(k * m, m).maxCoeff(&best);
      points(i, k) = static_cast<int>(best);
    }
  return points;
}

std::vector<TrainTrace> deepsic_train(DeepSicReceiver& rx, const LabeledSet& qstar,
                                      const TrainConfig& config, std::mt19937_64& rng) {
  if (qstar.arity != rx.users)
    throw std::invalid_argument("deepsic_train: label arity != users");
  const int m = rx.constellation->size();
  const Eigen::MatrixXd& y_rows = qstar.outputs;

  // Per-user symbol targets decomposed from the vector labels.
  std::vector<std::vector<int>> user_labels(static_cast<std::size_t>(rx.users));
  for (int k = 0; k < rx.users; ++k) {
    user_labels[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(qstar.size()));
    for (int i = 0; i < qstar.size(); ++i)
      user_labels[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
          class_digit(qstar.labels[static_cast<std::size_t>(i)], *rx.constellation, k);
  }

  std::vector<TrainTrace> traces;
  Eigen::MatrixXd soft = uniform_soft(y_rows.rows(), rx.users, m);
  for (int q = 0; q < rx.iterations; ++q) {
    for (int k = 0; k < rx.users; ++k) {
      const Eigen::MatrixXd inputs = deepsic_inputs(y_rows, soft, rx.users, m, k);
      traces.push_back(train(rx.net, rx.block(q, k), inputs,
                             user_labels[static_cast<std::size_t>(k)], config, rng));
    }
    // Soft estimates for the next iteration come from the freshly trained
    // iteration-q networks applied to the iteration-(q-1) inputs.
    Eigen::MatrixXd next(y_rows.rows(), rx.users * m);
    for (int k = 0; k < rx.users; ++k)
      next.middleCols(k * m, m) = forward(
          rx.net, rx.block(q, k), deepsic_inputs(y_rows, soft, rx.users, m, k));
    soft = std::move(next);
  }
  return traces;
}

BlackBoxMimoReceiver BlackBoxMimoReceiver::make(const Constellation& c, int users, int antennas,
                                                std::mt19937_64& init_rng) {
  BlackBoxMimoReceiver rx;
  rx.constellation = &c;
  rx.users = users;
  rx.antennas = antennas;
  rx.net = DenseNet::classifier({2 * antennas, 60, 60, num_classes(c, users)},
                                {Activation::Relu, Activation::Relu});
  rx.params = Params::init(rx.net, init_rng);
  return rx;
}

Eigen::MatrixXi blackbox_mimo_detect(const BlackBoxMimoReceiver& rx,
                                     const Eigen::MatrixXd& y_rows) {
  const Eigen::MatrixXd probs = forward(rx.net, rx.params, y_rows);
  Eigen::MatrixXi points(y_rows.rows(), rx.users);
  for (Eigen::Index i = 0; i < y_rows.rows(); ++i) {
    Eigen::Index best = 0;
    probs.row(i).maxCoeff(&best);
    int label = static_cast<int>(best);
    for (int k = 0; k < rx.users; ++k) {
      points(i, k) = label % rx.constellation->size();
      label /= rx.constellation->size();
    }
  }
  return points;
}

TrainTrace blackbox_mimo_train(BlackBoxMimoReceiver& rx, const LabeledSet& qstar,
                               const TrainConfig& config, std::mt19937_64& rng) {
  if (qstar.n_classes != rx.net.output_dim())
    throw std::invalid_argument("blackbox_mimo_train: label space mismatch");
  return train(rx.net, rx.params, qstar.outputs, qstar.labels, config, rng);
}

int genie_map_mimo_label(const Eigen::VectorXcd& y, const MimoChannelSpec& spec,
                         const Constellation& c) {
  const int n_labels = num_classes(c, spec.users);
  int best_label = 0;
  double best = -kInf;
  for (int label = 0; label < n_labels; ++label) {
    const double ll = mimo_state_log_likelihood(y, label, spec, c);
    if (ll > best) {
      best = ll;
      best_label = label;
    }
  }
  return best_label;
}

std::vector<int> genie_map_mimo(const Eigen::VectorXcd& y, const MimoChannelSpec& spec,
                                const Constellation& c) {
  return class_digits(genie_map_mimo_label(y, spec, c), c, spec.users);
}

void save_viterbinet(std::ostream& out, const ViterbiNetReceiver& rx) {
  out << "arch,viterbinet," << rx.constellation->name() << "," << rx.memory << "\n";
  rx.params.save(out);
}

ViterbiNetReceiver load_viterbinet(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("checkpoint: missing descriptor");
  std::stringstream ss(line);
  std::string tag, kind, cname, mem;
  std::getline(ss, tag, ',');
  std::getline(ss, kind, ',');
  std::getline(ss, cname, ',');
  std::getline(ss, mem, ',');
  if (tag != "arch" || kind != "viterbinet")
    throw std::invalid_argument("checkpoint: not a viterbinet descriptor");
  ViterbiNetReceiver rx;
  rx.constellation = &Constellation::by_name(cname);
  rx.memory = std::stoi(mem);
  rx.net = DenseNet::classifier({1, 100, 50, num_classes(*rx.constellation, rx.memory)},
                                {Activation::Sigmoid, Activation::Relu});
  rx.params = Params::load(in, rx.net);
  return rx;
}

void save_deepsic(std::ostream& out, const DeepSicReceiver& rx) {
  out << "arch,deepsic," << rx.constellation->name() << "," << rx.users << "," << rx.antennas
      << "," << rx.iterations << "\n";
  for (const auto& p : rx.params) p.save(out);
}

DeepSicReceiver load_deepsic(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("checkpoint: missing descriptor");
  std::stringstream ss(line);
  std::string tag, kind, cname, users, antennas, iterations;
  std::getline(ss, tag, ',');
  std::getline(ss, kind, ',');
  std::getline(ss, cname, ',');
  std::getline(ss, users, ',');
  std::getline(ss, antennas, ',');
  std::getline(ss, iterations, ',');
  if (tag != "arch" || kind != "deepsic")
    throw std::invalid_argument("checkpoint: not a deepsic descriptor");
  std::mt19937_64 dummy(0);
  DeepSicReceiver rx = DeepSicReceiver::make(Constellation::by_name(cname), std::stoi(users),
                                             std::stoi(antennas), dummy, std::stoi(iterations));
  for (auto& p : rx.params) p = Params::load(in, rx.net);
  return rx;
}

}  // namespace deeprx
