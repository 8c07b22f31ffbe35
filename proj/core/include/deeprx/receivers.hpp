// DNN-aided receivers: ViterbiNet (learned branch metrics in a Viterbi DP),
// DeepSIC (iterative soft interference cancellation with per-user networks),
// sliding-window and joint black-box baselines, and exact-likelihood genies.
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "deeprx/channel.hpp"
#include "deeprx/constellation.hpp"
#include "deeprx/dataset.hpp"
#include "deeprx/neural.hpp"

namespace deeprx {

// Maximum-a-posteriori sequence over an M-ary alphabet with memory L, given a
// T x M^L matrix of per-time branch costs (-log p). The trellis runs over
// M^(L-1) states; ties break toward the lowest state index. `init_tail`, when
// present, pins the L-1 symbols preceding the segment (most recent first);
// otherwise every initial state starts at zero cost.
std::vector<int> viterbi_map_sequence(const Eigen::MatrixXd& costs, int alphabet, int memory,
                                      const std::vector<int>* init_tail = nullptr);

// Branch costs from the exact Gaussian channel law. With `guard_at_start`,
// contributions of symbols before time 0 are dropped (the time-dependent exact
// law of a standalone block); otherwise the full L-tap mean is used.
Eigen::MatrixXd exact_siso_costs(const std::vector<double>& y, const SisoChannelSpec& spec,
                                 const Constellation& c, bool guard_at_start);

// Exhaustive maximum-likelihood sequence detection over all M^T sequences under
// the guard convention. Exponential in T; the reference for Viterbi.
std::vector<int> mlsd_bruteforce(const std::vector<double>& y, const SisoChannelSpec& spec,
                                 const Constellation& c);

struct ViterbiNetReceiver {
  const Constellation* constellation = nullptr;
  int memory = 0;
  DenseNet net;
  Params params;

  // 1 -> 100 -> 50 -> M^L with sigmoid/relu hidden activations.
  static ViterbiNetReceiver make(const Constellation& c, int memory, std::mt19937_64& init_rng);
};

Eigen::MatrixXd viterbinet_costs(const ViterbiNetReceiver& rx, const std::vector<double>& y);
std::vector<int> viterbinet_detect(const ViterbiNetReceiver& rx, const std::vector<double>& y,
                                   const std::vector<int>* init_tail = nullptr);
TrainTrace viterbinet_train(ViterbiNetReceiver& rx, const LabeledSet& qstar,
                            const TrainConfig& config, std::mt19937_64& rng);

struct BlackBoxSisoReceiver {
  const Constellation* constellation = nullptr;
  int memory = 0;
  int window = 0;  // W = L by default
  DenseNet net;
  Params params;

  // W -> 64 -> M^L, relu hidden.
  static BlackBoxSisoReceiver make(const Constellation& c, int memory, std::mt19937_64& init_rng,
                                   int window = 0);
};

// Detects segment symbols; `context` supplies outputs preceding the segment
// (pilot tail) for the first W-1 windows, zeros when absent.
std::vector<int> blackbox_siso_detect(const BlackBoxSisoReceiver& rx,
                                      const std::vector<double>& y,
                                      const std::vector<double>* context = nullptr);
TrainTrace blackbox_siso_train(BlackBoxSisoReceiver& rx, const LabeledSet& qstar,
                               const TrainConfig& config, std::mt19937_64& rng);

struct DeepSicReceiver {
  const Constellation* constellation = nullptr;
  int users = 0;
  int antennas = 0;
  int iterations = 5;  // Q_it
  DenseNet net;                 // shared block shape: 2N+(K-1)M -> 60 -> 30 -> M
  std::vector<Params> params;   // iterations * users, index it*K + k

  static DeepSicReceiver make(const Constellation& c, int users, int antennas,
                              std::mt19937_64& init_rng, int iterations = 5);
  const Params& block(int iteration, int user) const {
    return params[static_cast<std::size_t>(iteration * users + user)];
  }
  Params& block(int iteration, int user) {
    return params[static_cast<std::size_t>(iteration * users + user)];
  }
};

// Soft symbol PMFs after the final iteration: uses x (K*M), rows normalized
// per user.
Eigen::MatrixXd deepsic_soft_estimates(const DeepSicReceiver& rx, const Eigen::MatrixXd& y_rows);
// Hard per-user decisions: uses x K point indices.
Eigen::MatrixXi deepsic_detect(const DeepSicReceiver& rx, const Eigen::MatrixXd& y_rows);
std::vector<TrainTrace> deepsic_train(DeepSicReceiver& rx, const LabeledSet& qstar,
                                      const TrainConfig& config, std::mt19937_64& rng);

struct BlackBoxMimoReceiver {
  const Constellation* constellation = nullptr;
  int users = 0;
  int antennas = 0;
  DenseNet net;  // 2N -> 60 -> 60 -> M^K, relu hidden
  Params params;

  static BlackBoxMimoReceiver make(const Constellation& c, int users, int antennas,
                                   std::mt19937_64& init_rng);
};

Eigen::MatrixXi blackbox_mimo_detect(const BlackBoxMimoReceiver& rx,
                                     const Eigen::MatrixXd& y_rows);
TrainTrace blackbox_mimo_train(BlackBoxMimoReceiver& rx, const LabeledSet& qstar,
                               const TrainConfig& config, std::mt19937_64& rng);

// Exhaustive MAP over all M^K user vectors under the exact linear Gaussian
// law; ties break toward the lowest label. Throws for tanh specs.
int genie_map_mimo_label(const Eigen::VectorXcd& y, const MimoChannelSpec& spec,
                         const Constellation& c);
std::vector<int> genie_map_mimo(const Eigen::VectorXcd& y, const MimoChannelSpec& spec,
                                const Constellation& c);

// Checkpoints: architecture descriptor line, then the Params format
// (one pair of w/b lines per layer, repeated per network block).
void save_viterbinet(std::ostream& out, const ViterbiNetReceiver& rx);
ViterbiNetReceiver load_viterbinet(std::istream& in);
void save_deepsic(std::ostream& out, const DeepSicReceiver& rx);
DeepSicReceiver load_deepsic(std::istream& in);

}  // namespace deeprx
