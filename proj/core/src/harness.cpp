#include "deeprx/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "deeprx/receivers.hpp"
#include "deeprx/rng.hpp"

namespace deeprx {

namespace {

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, double>)
      out += format_full(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

std::string method_name(MethodKind m) {
  switch (m) {
    case MethodKind::Regular: return "regular";
    case MethodKind::Combined: return "combined";
    case MethodKind::Extended: return "extended";
    case MethodKind::GeometricOnly: return "geometric";
    case MethodKind::ProjectionOnly: return "projection";
    case MethodKind::TranslationOnly: return "translation";
    case MethodKind::Genie: return "genie";
  }
  throw std::logic_error("unreachable");
}

MethodKind method_by_name(const std::string& name) {
  for (MethodKind m : {MethodKind::Regular, MethodKind::Combined, MethodKind::Extended,
                       MethodKind::GeometricOnly, MethodKind::ProjectionOnly,
                       MethodKind::TranslationOnly, MethodKind::Genie})
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method: " + name);
}

std::string receiver_name(ReceiverKind r) {
  switch (r) {
    case ReceiverKind::ViterbiNet: return "viterbinet";
    case ReceiverKind::BlackBoxSiso: return "blackbox_siso";
    case ReceiverKind::DeepSic: return "deepsic";
    case ReceiverKind::BlackBoxMimo: return "blackbox_mimo";
  }
  throw std::logic_error("unreachable");
}

ReceiverKind receiver_by_name(const std::string& name) {
  for (ReceiverKind r : {ReceiverKind::ViterbiNet, ReceiverKind::BlackBoxSiso,
                         ReceiverKind::DeepSic, ReceiverKind::BlackBoxMimo})
    if (receiver_name(r) == name) return r;
  throw std::invalid_argument("unknown receiver: " + name);
}

bool receiver_is_siso(ReceiverKind r) {
  return r == ReceiverKind::ViterbiNet || r == ReceiverKind::BlackBoxSiso;
}

const Constellation& ExperimentConfig::constellation() const {
  return channel == ChannelKind::Siso ? Constellation::bpsk() : Constellation::qpsk();
}

void ExperimentConfig::validate() const {
  if (snr_grid_db.empty()) throw std::invalid_argument("config: snr grid must be nonempty");
  if (seeds < 1) throw std::invalid_argument("config: need >= 1 seed");
  if (blocks < 1) throw std::invalid_argument("config: need >= 1 block");
  layout.validate();
  augment.validate();
  if (channel == ChannelKind::Siso) {
    if (memory < 1) throw std::invalid_argument("config: memory must be >= 1");
    if (static_cast<int>(taps.size()) != memory)
      throw std::invalid_argument("config: taps length must equal memory");
    if (!receiver_is_siso(receiver))
      throw std::invalid_argument("config: MIMO receiver on a SISO channel");
  } else {
    if (users < 1 || antennas < 1)
      throw std::invalid_argument("config: users and antennas must be >= 1");
    if (receiver_is_siso(receiver))
      throw std::invalid_argument("config: SISO receiver on a MIMO channel");
  }
  if (profile == ProfileKind::Trace) {
    std::ifstream f(trace_file);
    if (!f) throw std::invalid_argument("config: trace file not readable: " + trace_file);
  }
  for (MethodKind m : methods)
    if (m == MethodKind::Extended && !(extended_beta > 1.0))
      throw std::invalid_argument("config: extended method requires beta > 1");
  if (methods.empty()) throw std::invalid_argument("config: need >= 1 method");
  if (train_iterations < 0) throw std::invalid_argument("config: iterations must be >= 0");
  if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
}

std::string ExperimentConfig::channel_name() const {
  std::string name = channel == ChannelKind::Siso ? "siso" : "mimo";
  name += tanh ? "-tanh" : "-linear";
  switch (profile) {
    case ProfileKind::Static: name += "-static"; break;
    case ProfileKind::FadingSynthetic: name += "-synthfade"; break;
    case ProfileKind::Trace: name += "-trace"; break;
  }
  return name;
}

std::string ExperimentConfig::canonical_text() const {
  std::vector<std::string> method_names;
  for (MethodKind m : methods) method_names.push_back(method_name(m));
  const TrainConfig tc = effective_training(*this);
  std::ostringstream out;
  out << "channel = " << (channel == ChannelKind::Siso ? "siso" : "mimo") << "\n"
      << "profile = "
      << (profile == ProfileKind::Static
              ? "static"
              : profile == ProfileKind::FadingSynthetic ? "fading_synthetic" : "trace")
      << "\n"
      << "trace_file = " << trace_file << "\n"
      << "tanh = " << (tanh ? "true" : "false") << "\n"
      << "tanh_gain = " << format_full(tanh_gain) << "\n"
      << "snr_db = " << join(snr_grid_db) << "\n"
      << "blocks = " << blocks << "\n"
      << "seeds = " << seeds << "\n"
      << "master_seed = " << master_seed << "\n"
      << "receiver = " << receiver_name(receiver) << "\n"
      << "methods = " << [&] {
           std::string s;
           for (std::size_t i = 0; i < method_names.size(); ++i)
             s += (i ? "," : "") + method_names[i];
           return s;
         }()
      << "\n"
      << "extended_beta = " << format_full(extended_beta) << "\n"
      << "include_genie = " << (include_genie ? "true" : "false") << "\n"
      << "pilots = " << layout.pilots << "\n"
      << "info = " << layout.info << "\n"
      << "memory = " << memory << "\n"
      << "taps = " << join(taps) << "\n"
      << "fading_periods = " << join(fading_periods) << "\n"
      << "fading_base = " << format_full(fading_base) << "\n"
      << "fading_amplitude = " << format_full(fading_amplitude) << "\n"
      << "users = " << users << "\n"
      << "antennas = " << antennas << "\n"
      << "kappa = " << augment.kappa << "\n"
      << "alpha1 = " << format_full(augment.alpha1) << "\n"
      << "alpha2 = " << format_full(augment.alpha2) << "\n"
      << "enabled = " << (augment.geometric ? "geometric" : "") << ";"
      << (augment.projection ? "projection" : "") << ";"
      << (augment.translation ? "translation" : "") << "\n"
      << "iterations = " << tc.iterations << "\n"
      << "batch_size = " << tc.batch_size << "\n"
      << "learning_rate = " << format_full(tc.learning_rate) << "\n"
      << "warm_start = " << (warm_start ? "true" : "false") << "\n";
  // jobs is an execution knob: results are independent of scheduling, so it
  // stays out of the fingerprint.
  return out.str();
}

std::uint64_t ExperimentConfig::fingerprint() const { return fnv1a(canonical_text()); }

TrainConfig effective_training(const ExperimentConfig& cfg) {
  TrainConfig tc;
  tc.iterations = cfg.train_iterations;
  if (cfg.train_batch_size > 0) {
    tc.batch_size = cfg.train_batch_size;
  } else {
    tc.batch_size = cfg.receiver == ReceiverKind::BlackBoxSiso ? 16 : 32;
  }
  if (cfg.train_learning_rate > 0.0) {
    tc.learning_rate = cfg.train_learning_rate;
  } else {
    tc.learning_rate =
        (cfg.receiver == ReceiverKind::ViterbiNet || cfg.receiver == ReceiverKind::DeepSic)
            ? 1e-3
            : 1e-2;
  }
  return tc;
}

bool method_augments(MethodKind m) {
  return m == MethodKind::Combined || m == MethodKind::GeometricOnly ||
         m == MethodKind::ProjectionOnly || m == MethodKind::TranslationOnly;
}

AugmentConfig method_augment_config(const ExperimentConfig& cfg, MethodKind m) {
  AugmentConfig a = cfg.augment;
  switch (m) {
    case MethodKind::Combined:
      a.geometric = a.projection = a.translation = true;
      break;
    case MethodKind::GeometricOnly:
      a.geometric = true;
      a.projection = a.translation = false;
      a.kappa = 3 * cfg.augment.kappa;
      break;
    case MethodKind::ProjectionOnly:
      a.projection = true;
      a.geometric = a.translation = false;
      a.kappa = 3 * cfg.augment.kappa;
      break;
    case MethodKind::TranslationOnly:
      a.translation = true;
      a.geometric = a.projection = false;
      a.kappa = 3 * cfg.augment.kappa;
      break;
    default:
      a.kappa = 0;
      break;
  }
  return a;
}

double evaluate_ber(const std::vector<int>& estimates, const std::vector<int>& truth,
                    const Constellation& c, int arity) {
  if (estimates.size() != truth.size())
    throw std::invalid_argument("evaluate_ber: length mismatch");
  if (truth.empty()) throw std::invalid_argument("evaluate_ber: empty sequences");
  long wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    int e = estimates[i];
    int t = truth[i];
    for (int p = 0; p < arity; ++p) {
      wrong += c.bit_difference(e % c.size(), t % c.size());
      e /= c.size();
      t /= c.size();
    }
  }
  const double total = static_cast<double>(truth.size()) * arity * c.bits_per_symbol();
  return static_cast<double>(wrong) / total;
}

namespace {

struct StageRngs {
  std::mt19937_64 pilots, info, noise, augment, train_init, train_batches;
};

StageRngs block_rngs(const ExperimentConfig& cfg, const CellSpec& cell, int block) {
  const auto mk = [&](RngStage stage) {
    return make_engine(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(cell.snr_index),
                                   static_cast<std::uint64_t>(cell.seed_index),
                                   static_cast<std::uint64_t>(block), stage));
  };
  return StageRngs{mk(RngStage::PilotSymbols), mk(RngStage::InfoSymbols),
                   mk(RngStage::ChannelNoise), mk(RngStage::Augment),
                   mk(RngStage::TrainInit),    mk(RngStage::TrainBatches)};
}

int effective_pilots(const ExperimentConfig& cfg, const CellSpec& cell) {
  const int base = cell.pilots > 0 ? cell.pilots : cfg.layout.pilots;
  if (cell.method == MethodKind::Extended)
    return static_cast<int>(std::lround(cfg.extended_beta * base));
  return base;
}

double wall_ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<BlockRecord> run_siso_cell(const ExperimentConfig& cfg, const CellSpec& cell) {
  const Constellation& c = cfg.constellation();
  const double snr_db = cfg.snr_grid_db[static_cast<std::size_t>(cell.snr_index)];
  const double sigma2 = NoiseSpec::from_snr_db(snr_db).sigma2;
  const TrainConfig tc = effective_training(cfg);
  const AugmentConfig aug = method_augment_config(cfg, cell.method);
  const bool dynamic = cfg.profile != ProfileKind::Static;
  const std::uint64_t fp = cfg.fingerprint();

  SisoTapProfile profile =
      cfg.profile == ProfileKind::Static
          ? SisoTapProfile::constant(cfg.taps)
          : cfg.profile == ProfileKind::FadingSynthetic
                ? SisoTapProfile::synthetic(cfg.taps, cfg.fading_periods, cfg.fading_base,
                                            cfg.fading_amplitude)
                : SisoTapProfile::from_trace(cfg.trace_file);

  BlockLayout layout = cfg.layout;
  layout.pilots = effective_pilots(cfg, cell);

  ViterbiNetReceiver vnet;
  BlackBoxSisoReceiver bbox;
  bool receiver_ready = false;
  AugmentState state;
  std::vector<BlockRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.blocks));

  for (int j = 0; j < cfg.blocks; ++j) {
    StageRngs rngs = block_rngs(cfg, cell, j);
    SisoChannelSpec spec;
    spec.taps = profile.taps_at(j);
    spec.sigma2 = sigma2;
    spec.nonlinearity = cfg.tanh ? Nonlinearity::Tanh : Nonlinearity::None;
    spec.tanh_gain = cfg.tanh_gain;

    const SisoBlock block =
        generate_siso_block(spec, layout, c, rngs.pilots, rngs.info, rngs.noise);

    const auto t0 = std::chrono::steady_clock::now();
    BlockRecord rec;
    rec.method = cell.method;
    rec.snr_db = snr_db;
    rec.seed_index = cell.seed_index;
    rec.block = j;
    rec.pilots = layout.pilots;
    rec.fingerprint = fp;

    std::vector<int> tail(static_cast<std::size_t>(cfg.memory - 1));
    for (int p = 0; p < cfg.memory - 1; ++p)
      tail[static_cast<std::size_t>(p)] =
          block.visible.pilot_points[block.visible.pilot_points.size() - 1 -
                                     static_cast<std::size_t>(p)];

    std::vector<int> estimates;
    if (cell.method == MethodKind::Genie) {
      const Eigen::MatrixXd costs =
          exact_siso_costs(block.visible.info_outputs, spec, c, /*guard_at_start=*/false);
      estimates = viterbi_map_sequence(costs, c.size(), cfg.memory, &tail);
      rec.qstar_size = 0;
    } else {
      LabeledSet q = cfg.receiver == ReceiverKind::ViterbiNet
                         ? build_siso_scalar_set(block.visible, c, cfg.memory, j)
                         : build_siso_window_set(block.visible, c, cfg.memory, cfg.memory, j);
      LabeledSet qstar;
      if (method_augments(cell.method)) {
        if (dynamic) {
          auto [qs, next] = augment_dynamic(q, state, aug, c, rngs.augment);
          qstar = std::move(qs);
          state = std::move(next);
        } else {
          qstar = augment_static(q, aug, c, rngs.augment);
        }
      } else {
        qstar = std::move(q);
      }
      rec.qstar_size = qstar.size();

      if (!receiver_ready || !cfg.warm_start) {
        if (cfg.receiver == ReceiverKind::ViterbiNet)
          vnet = ViterbiNetReceiver::make(c, cfg.memory, rngs.train_init);
        else
          bbox = BlackBoxSisoReceiver::make(c, cfg.memory, rngs.train_init);
        receiver_ready = true;
      }
      TrainTrace trace;
      if (cfg.receiver == ReceiverKind::ViterbiNet) {
        trace = viterbinet_train(vnet, qstar, tc, rngs.train_batches);
        estimates = viterbinet_detect(vnet, block.visible.info_outputs, &tail);
      } else {
        trace = blackbox_siso_train(bbox, qstar, tc, rngs.train_batches);
        estimates = blackbox_siso_detect(bbox, block.visible.info_outputs,
                                         &block.visible.pilot_outputs);
      }
      rec.loss_first = trace.first();
      rec.loss_last = trace.last();
    }

    rec.ber = evaluate_ber(estimates, block.truth.info_points, c, 1);
    rec.wall_ms = wall_ms_since(t0);
    records.push_back(rec);
  }
  return records;
}

std::vector<BlockRecord> run_mimo_cell(const ExperimentConfig& cfg, const CellSpec& cell) {
  const Constellation& c = cfg.constellation();
  const double snr_db = cfg.snr_grid_db[static_cast<std::size_t>(cell.snr_index)];
  const double sigma2 = NoiseSpec::from_snr_db(snr_db).sigma2;
  const TrainConfig tc = effective_training(cfg);
  const AugmentConfig aug = method_augment_config(cfg, cell.method);
  const bool dynamic = cfg.profile != ProfileKind::Static;
  const std::uint64_t fp = cfg.fingerprint();

  const Eigen::MatrixXcd base = exponential_decay_matrix(cfg.antennas, cfg.users);
  MimoTapProfile profile =
      cfg.profile == ProfileKind::Static
          ? MimoTapProfile::constant(base)
          : cfg.profile == ProfileKind::FadingSynthetic
                ? MimoTapProfile::synthetic(base, cfg.fading_periods, cfg.fading_base,
                                            cfg.fading_amplitude)
                : MimoTapProfile::from_trace(cfg.trace_file);

  BlockLayout layout = cfg.layout;
  layout.pilots = effective_pilots(cfg, cell);

  DeepSicReceiver sic;
  BlackBoxMimoReceiver bbox;
  bool receiver_ready = false;
  AugmentState state;
  std::vector<BlockRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.blocks));

  for (int j = 0; j < cfg.blocks; ++j) {
    StageRngs rngs = block_rngs(cfg, cell, j);
    MimoChannelSpec spec;
    spec.users = cfg.users;
    spec.antennas = cfg.antennas;
    spec.matrix = profile.matrix_at(j);
    spec.sigma2 = sigma2;
    spec.nonlinearity = cfg.tanh ? Nonlinearity::Tanh : Nonlinearity::None;
    spec.tanh_gain = cfg.tanh_gain;

    const MimoBlock block =
        generate_mimo_block(spec, layout, c, rngs.pilots, rngs.info, rngs.noise);

    const auto t0 = std::chrono::steady_clock::now();
    BlockRecord rec;
    rec.method = cell.method;
    rec.snr_db = snr_db;
    rec.seed_index = cell.seed_index;
    rec.block = j;
    rec.pilots = layout.pilots;
    rec.fingerprint = fp;

    std::vector<int> est_labels(static_cast<std::size_t>(layout.info));
    if (cell.method == MethodKind::Genie) {
      for (int u = 0; u < layout.info; ++u)
        est_labels[static_cast<std::size_t>(u)] =
            genie_map_mimo_label(block.visible.info_outputs.col(u), spec, c);
      rec.qstar_size = 0;
    } else {
      LabeledSet q = build_mimo_vector_set(block.visible, c, cfg.users, j);
      LabeledSet qstar;
      if (method_augments(cell.method)) {
        if (dynamic) {
          auto [qs, next] = augment_dynamic(q, state, aug, c, rngs.augment);
          qstar = std::move(qs);
          state = std::move(next);
        } else {
          qstar = augment_static(q, aug, c, rngs.augment);
        }
      } else {
        qstar = std::move(q);
      }
      rec.qstar_size = qstar.size();

      if (!receiver_ready || !cfg.warm_start) {
        if (cfg.receiver == ReceiverKind::DeepSic)
          sic = DeepSicReceiver::make(c, cfg.users, cfg.antennas, rngs.train_init);
        else
          bbox = BlackBoxMimoReceiver::make(c, cfg.users, cfg.antennas, rngs.train_init);
        receiver_ready = true;
      }

      Eigen::MatrixXd info_rows(layout.info, 2 * cfg.antennas);
      for (int u = 0; u < layout.info; ++u)
        info_rows.row(u) = stack_complex(block.visible.info_outputs.col(u)).transpose();

      if (cfg.receiver == ReceiverKind::DeepSic) {
        auto traces = deepsic_train(sic, qstar, tc, rngs.train_batches);
        rec.loss_first = traces.empty() ? 0.0 : traces.front().first();
        rec.loss_last = traces.empty() ? 0.0 : traces.back().last();
        const Eigen::MatrixXi points = deepsic_detect(sic, info_rows);
        for (int u = 0; u < layout.info; ++u) {
          int label = 0;
          int radix = 1;
          for (int k = 0; k < cfg.users; ++k) {
            label += points(u, k) * radix;
            radix *= c.size();
          }
          est_labels[static_cast<std::size_t>(u)] = label;
        }
      } else {
        TrainTrace trace = blackbox_mimo_train(bbox, qstar, tc, rngs.train_batches);
        rec.loss_first = trace.first();
        rec.loss_last = trace.last();
        const Eigen::MatrixXi points = blackbox_mimo_detect(bbox, info_rows);
        for (int u = 0; u < layout.info; ++u) {
          int label = 0;
          int radix = 1;
          for (int k = 0; k < cfg.users; ++k) {
            label += points(u, k) * radix;
            radix *= c.size();
          }
          est_labels[static_cast<std::size_t>(u)] = label;
        }
      }
    }

    rec.ber = evaluate_ber(est_labels, block.truth.info_labels, c, cfg.users);
    rec.wall_ms = wall_ms_since(t0);
    records.push_back(rec);
  }
  return records;
}

std::vector<std::vector<BlockRecord>> run_cells(const ExperimentConfig& cfg,
                                                const std::vector<CellSpec>& cells) {
  std::vector<std::vector<BlockRecord>> results(cells.size());
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(cells.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) results[i] = run_block_stream(cfg, cells[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        results[i] = run_block_stream(cfg, cells[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace

std::vector<BlockRecord> run_block_stream(const ExperimentConfig& cfg, const CellSpec& cell) {
  cfg.validate();
  try {
    return cfg.channel == ChannelKind::Siso ? run_siso_cell(cfg, cell)
                                            : run_mimo_cell(cfg, cell);
  } catch (const std::exception& e) {
    throw std::runtime_error("cell (method=" + method_name(cell.method) +
                             ", snr=" + format_full(cfg.snr_grid_db[static_cast<std::size_t>(
                                            cell.snr_index)]) +
                             ", seed=" + std::to_string(cell.seed_index) + "): " + e.what());
  }
}

std::vector<SummaryRow> summarize(const std::vector<BlockRecord>& records) {
  if (records.empty()) return {};
  const std::uint64_t fp = records.front().fingerprint;
  for (const auto& r : records)
    if (r.fingerprint != fp)
      throw std::invalid_argument("summarize: mixed config fingerprints");

  // Group by (method, snr) preserving first-seen order.
  std::vector<std::pair<MethodKind, double>> keys;
  for (const auto& r : records) {
    const std::pair<MethodKind, double> key{r.method, r.snr_db};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [method, snr] : keys) {
    const std::vector<double> seed_means = per_seed_mean_ber(records, method, snr);
    SummaryRow row;
    row.method = method;
    row.snr_db = snr;
    row.seeds = static_cast<int>(seed_means.size());
    int blocks = 0;
    for (const auto& r : records)
      if (r.method == method && r.snr_db == snr) ++blocks;
    row.blocks = blocks / std::max(1, row.seeds);
    double mean = 0.0;
    for (double v : seed_means) mean += v;
    mean /= static_cast<double>(seed_means.size());
    row.mean_ber = mean;
    if (seed_means.size() > 1) {
      double var = 0.0;
      for (double v : seed_means) var += (v - mean) * (v - mean);
      var /= static_cast<double>(seed_means.size() - 1);
      row.stderr_ber = std::sqrt(var / static_cast<double>(seed_means.size()));
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> per_seed_mean_ber(const std::vector<BlockRecord>& records, MethodKind method,
                                      double snr_db) {
  std::vector<int> seen_seeds;
  std::vector<double> sums;
  std::vector<int> counts;
  for (const auto& r : records) {
    if (r.method != method || r.snr_db != snr_db) continue;
    auto it = std::find(seen_seeds.begin(), seen_seeds.end(), r.seed_index);
    std::size_t idx;
    if (it == seen_seeds.end()) {
      seen_seeds.push_back(r.seed_index);
      sums.push_back(0.0);
      counts.push_back(0);
      idx = seen_seeds.size() - 1;
    } else {
      idx = static_cast<std::size_t>(it - seen_seeds.begin());
    }
    sums[idx] += r.ber;
    counts[idx] += 1;
  }
  std::vector<double> means(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) means[i] = sums[i] / counts[i];
  return means;
}

SweepResult sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<MethodKind> methods = cfg.methods;
  const bool genie_ok = !cfg.tanh;
  if (cfg.include_genie && genie_ok &&
      std::find(methods.begin(), methods.end(), MethodKind::Genie) == methods.end())
    methods.push_back(MethodKind::Genie);

  std::vector<CellSpec> cells;
  for (MethodKind m : methods)
    for (int s = 0; s < static_cast<int>(cfg.snr_grid_db.size()); ++s)
      for (int seed = 0; seed < cfg.seeds; ++seed) cells.push_back(CellSpec{m, s, seed, 0});

  auto per_cell = run_cells(cfg, cells);
  SweepResult result;
  for (auto& recs : per_cell)
    result.records.insert(result.records.end(), recs.begin(), recs.end());
  result.summary = summarize(result.records);
  return result;
}

PilotSweepResult pilot_sweep(const ExperimentConfig& cfg, const std::vector<int>& pilot_grid,
                             double snr_db) {
  if (pilot_grid.empty()) throw std::invalid_argument("pilot_sweep: empty grid");
  ExperimentConfig sweep_cfg = cfg;
  sweep_cfg.snr_grid_db = {snr_db};
  sweep_cfg.validate();

  PilotSweepResult result;
  result.pilot_grid = pilot_grid;
  for (int pilots : pilot_grid) {
    std::vector<CellSpec> cells;
    for (MethodKind m : sweep_cfg.methods)
      for (int seed = 0; seed < sweep_cfg.seeds; ++seed)
        cells.push_back(CellSpec{m, 0, seed, pilots});
    auto per_cell = run_cells(sweep_cfg, cells);
    std::vector<BlockRecord> records;
    for (auto& recs : per_cell) records.insert(records.end(), recs.begin(), recs.end());
    for (const SummaryRow& row : summarize(records))
      result.table.push_back(PilotSweepPoint{row.method, pilots, row.mean_ber, row.stderr_ber});
    result.records_per_pilot.push_back(std::move(records));
  }

  // Spectral-efficiency factor: pilots at which the regular curve matches the
  // first augmenting method's BER at the base (smallest) pilot count.
  const int base = pilot_grid.front();
  MethodKind aug_method = MethodKind::Combined;
  bool have_aug = false;
  for (MethodKind m : sweep_cfg.methods)
    if (method_augments(m)) {
      aug_method = m;
      have_aug = true;
      break;
    }
  auto lookup = [&](MethodKind m, int pilots) -> const PilotSweepPoint* {
    for (const auto& p : result.table)
      if (p.method == m && p.pilots == pilots) return &p;
    return nullptr;
  };
  if (have_aug && pilot_grid.size() >= 2) {
    const PilotSweepPoint* target_point = lookup(aug_method, base);
    std::vector<double> reg(pilot_grid.size());
    bool have_reg = true;
    for (std::size_t i = 0; i < pilot_grid.size(); ++i) {
      const PilotSweepPoint* p = lookup(MethodKind::Regular, pilot_grid[i]);
      if (!p) have_reg = false;
      else reg[i] = p->mean_ber;
    }
    bool monotone = have_reg;
    for (std::size_t i = 0; have_reg && i + 1 < reg.size(); ++i)
      if (reg[i + 1] > reg[i]) monotone = false;
    if (target_point && have_reg && monotone) {
      const double target = std::max(target_point->mean_ber, 1e-12);
      for (std::size_t i = 0; i + 1 < reg.size(); ++i) {
        const double hi = std::max(reg[i], 1e-12);
        const double lo = std::max(reg[i + 1], 1e-12);
        if (hi >= target && target >= lo) {
          const double t =
              hi == lo ? 0.0 : (std::log(hi) - std::log(target)) / (std::log(hi) - std::log(lo));
          const double pilots_star = pilot_grid[i] + t * (pilot_grid[i + 1] - pilot_grid[i]);
          result.efficiency_factor = pilots_star / static_cast<double>(base);
          result.factor_defined = true;
          break;
        }
      }
    }
  }
  return result;
}

SweepResult ablation(const ExperimentConfig& cfg) {
  ExperimentConfig ab = cfg;
  ab.methods = {MethodKind::Regular, MethodKind::GeometricOnly, MethodKind::ProjectionOnly,
                MethodKind::TranslationOnly, MethodKind::Combined};
  return sweep(ab);
}

PairedComparison paired_compare(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_compare: length mismatch");
  PairedComparison out;
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) {
      ++out.n;
      if (d < 0.0) ++out.wins;
    }
    diffs.push_back(d);
  }
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= std::max<std::size_t>(1, diffs.size());
  out.mean_diff = mean;
  if (diffs.size() > 1) {
    double var = 0.0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    var /= static_cast<double>(diffs.size() - 1);
    out.stderr_diff = std::sqrt(var / static_cast<double>(diffs.size()));
  }
  if (out.n == 0) {
    out.sign_test_p = 0.5;
  } else {
    // One-sided exact binomial: P(X >= wins), X ~ Bin(n, 1/2).
    double p = 0.0;
    double log_half = std::log(0.5);
    for (int k = out.wins; k <= out.n; ++k) {
      double log_c = 0.0;
      for (int i = 0; i < k; ++i)
        log_c += std::log(static_cast<double>(out.n - i)) - std::log(static_cast<double>(i + 1));
      p += std::exp(log_c + out.n * log_half);
    }
    out.sign_test_p = std::min(1.0, p);
  }
  return out;
}

void write_results_csv(std::ostream& out, const std::vector<BlockRecord>& records,
                       const ExperimentConfig& cfg) {
  out << "method,receiver,channel,snr_db,seed,block,ber,qstar_size,wall_ms\n";
  const std::string rx = receiver_name(cfg.receiver);
  const std::string ch = cfg.channel_name();
  for (const auto& r : records)
    out << method_name(r.method) << "," << (r.method == MethodKind::Genie ? "genie" : rx) << ","
        << ch << "," << format_full(r.snr_db) << "," << r.seed_index << "," << r.block << ","
        << format_full(r.ber) << "," << r.qstar_size << "," << format_full(r.wall_ms) << "\n";
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows,
                       const ExperimentConfig& cfg) {
  out << "method,receiver,channel,snr_db,mean_ber,stderr_ber,seeds,blocks\n";
  const std::string rx = receiver_name(cfg.receiver);
  const std::string ch = cfg.channel_name();
  for (const auto& r : rows)
    out << method_name(r.method) << "," << (r.method == MethodKind::Genie ? "genie" : rx) << ","
        << ch << "," << format_full(r.snr_db) << "," << format_full(r.mean_ber) << ","
        << format_full(r.stderr_ber) << "," << r.seeds << "," << r.blocks << "\n";
}

void write_pilot_table_csv(std::ostream& out, const PilotSweepResult& result,
                           const ExperimentConfig& cfg) {
  out << "method,receiver,pilots,mean_ber,stderr_ber\n";
  const std::string rx = receiver_name(cfg.receiver);
  for (const auto& p : result.table)
    out << method_name(p.method) << "," << (p.method == MethodKind::Genie ? "genie" : rx) << ","
        << p.pilots << "," << format_full(p.mean_ber) << "," << format_full(p.stderr_ber) << "\n";
  out << "# efficiency_factor,"
      << (result.factor_defined ? format_full(result.efficiency_factor) : std::string("undefined"))
      << "\n";
}

}  // namespace deeprx
