// Pilot/info framing, labeled pilot sets, per-class index sets, and block
// generation. The receiver-visible half of a block never carries info labels;
// the truth half is consumed only by BER scoring.
#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "deeprx/channel.hpp"
#include "deeprx/constellation.hpp"

namespace deeprx {

struct BlockLayout {
  int pilots = 200;  // B_pilot
  int info = 2000;   // B_info
  int total() const { return pilots + info; }  // B_tran
  void validate() const;
};

enum class OutputSpaceKind { Real, ComplexStacked };

// Labeled pairs of channel-output vectors (real-stacked) and class labels.
struct LabeledSet {
  Eigen::MatrixXd outputs;  // n x dim
  std::vector<int> labels;  // n, each in [0, n_classes)
  int n_classes = 0;
  int arity = 0;  // label tuple length (L or K)
  OutputSpaceKind space = OutputSpaceKind::Real;
  int block_index = 0;

  int size() const { return static_cast<int>(labels.size()); }
  int dim() const { return static_cast<int>(outputs.cols()); }
  void validate() const;
};

// Indices i with labels[i] == label, in order.
std::vector<int> index_set(const LabeledSet& q, int label);
// All classes at once; the union partitions [0, |Q|).
std::vector<std::vector<int>> index_sets(const LabeledSet& q);

// Pilot construction with class coverage by stratified cycling: shuffle all
// classes, emit one representative each, repeat while a full cycle fits, fill
// the remainder uniform i.i.d. A MIMO representative is one channel use (a
// K-user label); a SISO representative is an L-symbol chunk, so SISO coverage
// needs b_pilot >= L * M^L while MIMO needs b_pilot >= M^K.
std::vector<int> make_pilot_points_siso(int b_pilot, const Constellation& c, int memory,
                                        std::mt19937_64& rng, bool require_coverage = true);
std::vector<int> make_pilot_labels_mimo(int b_pilot, const Constellation& c, int users,
                                        std::mt19937_64& rng, bool require_coverage = true);

// SISO state labels: label_i encodes (s_i, s_{i-1}, ..., s_{i-L+1}) with digit
// p = point index of s_{i-p}; guard positions before the block start encode as
// digit 0.
std::vector<int> siso_state_labels(const std::vector<int>& points, const Constellation& c,
                                   int memory);

double symbol_value(int point_idx, const Constellation& c);  // real amplitude (BPSK)
std::vector<double> points_to_symbols(const std::vector<int>& points, const Constellation& c);

struct SisoBlock {
  struct Visible {
    std::vector<int> pilot_points;
    std::vector<double> pilot_outputs;
    std::vector<double> info_outputs;
  } visible;
  struct Truth {
    std::vector<int> info_points;
  } truth;
};

struct MimoBlock {
  struct Visible {
    std::vector<int> pilot_labels;      // class per use
    Eigen::MatrixXcd pilot_outputs;     // N x pilots
    Eigen::MatrixXcd info_outputs;      // N x info
  } visible;
  struct Truth {
    std::vector<int> info_labels;
  } truth;
};

// One contiguous transmission: pilots first, then info; guard zeros only at
// the block start. Deterministic given (spec, layout, engines).
SisoBlock generate_siso_block(const SisoChannelSpec& spec, const BlockLayout& layout,
                              const Constellation& c, std::mt19937_64& rng_pilots,
                              std::mt19937_64& rng_info, std::mt19937_64& rng_noise,
                              bool coverage = true);
MimoBlock generate_mimo_block(const MimoChannelSpec& spec, const BlockLayout& layout,
                              const Constellation& c, std::mt19937_64& rng_pilots,
                              std::mt19937_64& rng_info, std::mt19937_64& rng_noise,
                              bool coverage = true);

// Receiver featurizations of the pilot segment into Q.
// Scalar rows (y_i) with L-state labels:
LabeledSet build_siso_scalar_set(const SisoBlock::Visible& v, const Constellation& c, int memory,
                                 int block_index = 0);
// Sliding-window rows (y_{i-W+1..i}, zeros before the block start):
LabeledSet build_siso_window_set(const SisoBlock::Visible& v, const Constellation& c, int memory,
                                 int window, int block_index = 0);
// Real-stacked (re,im per antenna) rows with K-user vector labels:
LabeledSet build_mimo_vector_set(const MimoBlock::Visible& v, const Constellation& c, int users,
                                 int block_index = 0);

Eigen::VectorXd stack_complex(const Eigen::VectorXcd& y);
Eigen::VectorXcd unstack_complex(const Eigen::VectorXd& y);

}  // namespace deeprx
