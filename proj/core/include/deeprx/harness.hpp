// Experiment orchestration: per-block augmentation -> training -> detection ->
// BER over streams of fading blocks; SNR sweeps, pilot-efficiency sweeps,
// ablations; deterministic seed derivation and CSV persistence.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "deeprx/augment.hpp"
#include "deeprx/channel.hpp"
#include "deeprx/dataset.hpp"
#include "deeprx/neural.hpp"

namespace deeprx {

enum class ChannelKind { Siso, Mimo };
enum class ProfileKind { Static, FadingSynthetic, Trace };
enum class ReceiverKind { ViterbiNet, BlackBoxSiso, DeepSic, BlackBoxMimo };
enum class MethodKind {
  Regular,
  Combined,
  Extended,
  GeometricOnly,
  ProjectionOnly,
  TranslationOnly,
  Genie,
};

std::string method_name(MethodKind m);
MethodKind method_by_name(const std::string& name);
std::string receiver_name(ReceiverKind r);
ReceiverKind receiver_by_name(const std::string& name);
bool receiver_is_siso(ReceiverKind r);

struct ExperimentConfig {
  ChannelKind channel = ChannelKind::Siso;
  ProfileKind profile = ProfileKind::FadingSynthetic;
  std::string trace_file;
  bool tanh = false;
  double tanh_gain = 1.0;

  std::vector<double> snr_grid_db = {9, 10, 11, 12, 13};
  int blocks = 20;
  int seeds = 5;
  std::uint64_t master_seed = 20260801;

  ReceiverKind receiver = ReceiverKind::ViterbiNet;
  std::vector<MethodKind> methods = {MethodKind::Regular, MethodKind::Combined};
  double extended_beta = 2.5;
  bool include_genie = true;

  BlockLayout layout{200, 2000};

  // SISO channel family
  int memory = 4;
  std::vector<double> taps = {1.0, 0.606, 0.367, 0.223};
  std::vector<int> fading_periods = {10, 15, 20, 25};
  double fading_base = 0.8;
  double fading_amplitude = 0.2;

  // MIMO channel family (matrix defaults to spatial exponential decay)
  int users = 4;
  int antennas = 4;

  AugmentConfig augment;

  // training.batch_size / learning_rate of 0 resolve to receiver defaults.
  int train_iterations = 500;
  int train_batch_size = 0;
  double train_learning_rate = 0.0;
  bool warm_start = true;

  int jobs = 1;

  const Constellation& constellation() const;
  void validate() const;
  // All defaults materialized, one key = value per line, stable order.
  std::string canonical_text() const;
  std::uint64_t fingerprint() const;  // FNV-1a over canonical_text()
  std::string channel_name() const;   // e.g. "siso-linear-synthfade"
};

TrainConfig effective_training(const ExperimentConfig& cfg);
// Per-method synthesis settings; single-augmentation methods scale kappa by 3
// so |Q*| matches the combined scheme.
AugmentConfig method_augment_config(const ExperimentConfig& cfg, MethodKind m);
bool method_augments(MethodKind m);

struct BlockRecord {
  MethodKind method = MethodKind::Regular;
  double snr_db = 0.0;
  int seed_index = 0;
  int block = 0;
  int pilots = 0;
  double ber = 0.0;
  long qstar_size = 0;
  double wall_ms = 0.0;
  double loss_first = 0.0;
  double loss_last = 0.0;
  std::uint64_t fingerprint = 0;
};

// Fraction of differing bit positions after Gray demapping. `arity` digits per
// label (1 for SISO point sequences, K for MIMO vector labels).
double evaluate_ber(const std::vector<int>& estimates, const std::vector<int>& truth,
                    const Constellation& c, int arity = 1);

struct CellSpec {
  MethodKind method = MethodKind::Regular;
  int snr_index = 0;
  int seed_index = 0;
  int pilots = 0;  // 0 -> cfg.layout.pilots
};

// One (method, SNR, seed) cell: the sequential block stream with the dynamic
// augmentation state threaded across blocks.
std::vector<BlockRecord> run_block_stream(const ExperimentConfig& cfg, const CellSpec& cell);

struct SummaryRow {
  MethodKind method = MethodKind::Regular;
  double snr_db = 0.0;
  double mean_ber = 0.0;
  double stderr_ber = 0.0;
  int seeds = 0;
  int blocks = 0;
};

// Rejects mixed-fingerprint record sets.
std::vector<SummaryRow> summarize(const std::vector<BlockRecord>& records);
// Per-seed block-mean BERs for one (method, snr) series, ordered by seed.
std::vector<double> per_seed_mean_ber(const std::vector<BlockRecord>& records, MethodKind method,
                                      double snr_db);

struct SweepResult {
  std::vector<BlockRecord> records;
  std::vector<SummaryRow> summary;
};

// Full grid (methods x SNR x seeds, plus the genie reference on linear
// channels), cells run in parallel up to cfg.jobs, results in deterministic
// order regardless of scheduling.
SweepResult sweep(const ExperimentConfig& cfg);

struct PilotSweepPoint {
  MethodKind method;
  int pilots;
  double mean_ber;
  double stderr_ber;
};

struct PilotSweepResult {
  std::vector<std::vector<BlockRecord>> records_per_pilot;  // grid order
  std::vector<int> pilot_grid;
  std::vector<PilotSweepPoint> table;
  // Interpolated pilots at which regular training matches the augmented BER at
  // the base pilot count, divided by that base count.
  double efficiency_factor = 0.0;
  bool factor_defined = false;
};

PilotSweepResult pilot_sweep(const ExperimentConfig& cfg, const std::vector<int>& pilot_grid,
                             double snr_db);

// Regular + each single augmentation (kappa scaled to match sizes) + combined.
SweepResult ablation(const ExperimentConfig& cfg);

// Paired per-seed statistics for trend assertions: diffs = a - b.
struct PairedComparison {
  double mean_diff = 0.0;
  double stderr_diff = 0.0;
  int wins = 0;      // count of a < b
  int n = 0;         // non-tied pairs
  double sign_test_p = 0.5;  // one-sided P(Bin(n, 1/2) >= wins)
};
PairedComparison paired_compare(const std::vector<double>& a, const std::vector<double>& b);

// results CSV: method,receiver,channel,snr_db,seed,block,ber,qstar_size,wall_ms
void write_results_csv(std::ostream& out, const std::vector<BlockRecord>& records,
                       const ExperimentConfig& cfg);
// summary CSV: method,receiver,channel,snr_db,mean_ber,stderr_ber,seeds,blocks
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows,
                       const ExperimentConfig& cfg);
void write_pilot_table_csv(std::ostream& out, const PilotSweepResult& result,
                           const ExperimentConfig& cfg);

}  // namespace deeprx
