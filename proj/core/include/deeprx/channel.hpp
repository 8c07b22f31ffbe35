// Finite-memory SISO and flat MIMO channel simulation: linear or tanh-compressed,
// static or block-fading (synthetic oscillation / trace file), plus exact
// Gaussian state likelihoods for genie receivers.
#pragma once

#include <Eigen/Dense>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "deeprx/constellation.hpp"

namespace deeprx {

struct UnsupportedSpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// sigma^2 = 10^(-snr_db/10), i.e. SNR = 1/sigma^2.
struct NoiseSpec {
  double sigma2 = 1.0;
  static NoiseSpec from_snr_db(double snr_db);
  double snr_db() const;
};

enum class Nonlinearity { None, Tanh };

struct SisoChannelSpec {
  std::vector<double> taps;  // h_0..h_{L-1}, real
  double sigma2 = 1.0;
  Nonlinearity nonlinearity = Nonlinearity::None;
  double tanh_gain = 1.0;  // C

  int memory() const { return static_cast<int>(taps.size()); }
  void validate() const;  // throws std::invalid_argument
};

struct MimoChannelSpec {
  int users = 0;     // K
  int antennas = 0;  // N
  Eigen::MatrixXcd matrix;  // N x K
  double sigma2 = 1.0;      // total per-antenna complex noise variance
  Nonlinearity nonlinearity = Nonlinearity::None;
  double tanh_gain = 1.0;

  void validate() const;
};

// N x K spatial exponential decay, (H)_{n,k} = e^{-|n-k|}.
Eigen::MatrixXcd exponential_decay_matrix(int antennas, int users);

// Noiseless convolution with the guard convention: symbols at negative indices
// contribute zero.
std::vector<double> siso_convolve(const std::vector<double>& symbols,
                                  const std::vector<double>& taps);

// y_i = sum_l h_l s_{i-l} + w_i, then optionally tanh(C * .). One N(0, sigma^2)
// draw per output sample, in index order.
std::vector<double> siso_transmit(const std::vector<double>& symbols, const SisoChannelSpec& spec,
                                  std::mt19937_64& rng);

// y = H s + w per use (column), w complex Gaussian with covariance sigma^2 I_N
// (re and im each N(0, sigma^2/2)); tanh applied elementwise to re and im.
// Noise draw order: use-major, antenna-minor, re before im.
Eigen::MatrixXcd mimo_transmit(const Eigen::MatrixXcd& symbols, const MimoChannelSpec& spec,
                               std::mt19937_64& rng);

// Per-block tap profiles. Synthetic oscillation:
//   h_l(j) = h0_l * (base + amplitude * cos(2 pi j / periods[l mod |periods|]))
class SisoTapProfile {
 public:
  static SisoTapProfile constant(std::vector<double> taps);
  static SisoTapProfile synthetic(std::vector<double> base_taps, std::vector<int> periods,
                                  double base = 0.8, double amplitude = 0.2);
  static SisoTapProfile from_trace(const std::string& csv_path);

  std::vector<double> taps_at(int block) const;  // throws std::out_of_range past trace end
  int memory() const;
  bool is_trace() const { return kind_ == Kind::Trace; }
  int trace_length() const { return static_cast<int>(trace_.size()); }

 private:
  enum class Kind { Constant, Synthetic, Trace };
  Kind kind_ = Kind::Constant;
  std::vector<double> base_taps_;
  std::vector<int> periods_;
  double base_ = 0.8, amplitude_ = 0.2;
  std::vector<std::vector<double>> trace_;
};

// Each matrix entry follows an independent scalar oscillation; entry (n,k)
// uses periods[(n*K + k) mod |periods|].
class MimoTapProfile {
 public:
  static MimoTapProfile constant(Eigen::MatrixXcd matrix);
  static MimoTapProfile synthetic(Eigen::MatrixXcd base_matrix, std::vector<int> periods,
                                  double base = 0.8, double amplitude = 0.2);
  static MimoTapProfile from_trace(const std::string& csv_path);

  Eigen::MatrixXcd matrix_at(int block) const;
  int antennas() const;
  int users() const;
  bool is_trace() const { return kind_ == Kind::Trace; }
  int trace_length() const { return static_cast<int>(trace_.size()); }

 private:
  enum class Kind { Constant, Synthetic, Trace };
  Kind kind_ = Kind::Constant;
  Eigen::MatrixXcd base_;
  std::vector<int> periods_;
  double base_gain_ = 0.8, amplitude_ = 0.2;
  std::vector<Eigen::MatrixXcd> trace_;
};

// Trace files: CSV, full decimal precision.
// SISO header: block,tap_0,...,tap_{L-1}
// MIMO header: block,re_0_0,im_0_0,...,re_{N-1}_{K-1},im_{N-1}_{K-1} (row-major)
void write_siso_trace(const std::string& path, const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_siso_trace(const std::string& path);
void write_mimo_trace(const std::string& path, const std::vector<Eigen::MatrixXcd>& rows);
std::vector<Eigen::MatrixXcd> read_mimo_trace(const std::string& path);

double gaussian_density(double y, double mean, double sigma2);
double gaussian_log_density(double y, double mean, double sigma2);

// Mean output of the L-symbol state `label`; `valid_taps` < L drops the oldest
// contributions (guard zeros at a block start).
double siso_state_mean(int label, const std::vector<double>& taps, const Constellation& c);
double siso_state_mean_guarded(int label, const std::vector<double>& taps, const Constellation& c,
                               int valid_taps);

// Gaussian density of a channel output given the state class. Linear specs
// only; tanh specs are rejected with UnsupportedSpecError.
double exact_state_likelihood(double y, int label, const SisoChannelSpec& spec,
                              const Constellation& c);

// log p(y | label) for the linear MIMO channel: CN(H s(label), sigma^2 I_N).
double mimo_state_log_likelihood(const Eigen::VectorXcd& y, int label,
                                 const MimoChannelSpec& spec, const Constellation& c);

}  // namespace deeprx
