#include <doctest.h>

#include <random>
#include <sstream>

#include "deeprx/harness.hpp"

using namespace deeprx;

namespace {
// Small but complete SISO experiment for plumbing tests.
ExperimentConfig mini_siso() {
  ExperimentConfig cfg;
  cfg.channel = ChannelKind::Siso;
  cfg.profile = ProfileKind::FadingSynthetic;
  cfg.snr_grid_db = {12.0};
  cfg.blocks = 2;
  cfg.seeds = 2;
  cfg.receiver = ReceiverKind::ViterbiNet;
  cfg.methods = {MethodKind::Regular, MethodKind::Combined};
  cfg.layout = BlockLayout{80, 200};
  cfg.memory = 2;
  cfg.taps = {1.0, 0.5};
  cfg.augment.kappa = 2;
  cfg.train_iterations = 60;
  cfg.jobs = 1;
  return cfg;
}

bool samescience(const BlockRecord& a, const BlockRecord& b) {
  return a.method == b.method && a.snr_db == b.snr_db && a.seed_index == b.seed_index &&
         a.block == b.block && a.ber == b.ber && a.qstar_size == b.qstar_size &&
         a.loss_first == b.loss_first && a.loss_last == b.loss_last &&
         a.fingerprint == b.fingerprint;
}
}  // namespace

TEST_CASE("ber is zero on equal sequences and one on fully flipped bpsk") {
  const auto& bpsk = Constellation::bpsk();
  const std::vector<int> truth{0, 1, 1, 0, 1};
  CHECK(evaluate_ber(truth, truth, bpsk) == 0.0);
  std::vector<int> flipped;
  for (int p : truth) flipped.push_back(1 - p);
  CHECK(evaluate_ber(flipped, truth, bpsk) == 1.0);
}

TEST_CASE("ber matches an independent xor popcount oracle") {
  const auto& qpsk = Constellation::qpsk();
  std::mt19937_64 rng(3);
  const int arity = 3;
  std::uniform_int_distribution<int> pick(0, num_classes(qpsk, arity) - 1);
  std::vector<int> est(500), truth(500);
  for (int i = 0; i < 500; ++i) {
    est[static_cast<std::size_t>(i)] = pick(rng);
    truth[static_cast<std::size_t>(i)] = pick(rng);
  }
  // Oracle: expand each label into its Gray bit string and xor-count.
  long wrong = 0;
  long total = 0;
  for (int i = 0; i < 500; ++i) {
    int e = est[static_cast<std::size_t>(i)];
    int t = truth[static_cast<std::size_t>(i)];
    for (int p = 0; p < arity; ++p) {
      int bits_e[2], bits_t[2];
      qpsk.point_to_bits(e % 4, bits_e);
      qpsk.point_to_bits(t % 4, bits_t);
      for (int b = 0; b < 2; ++b) {
        wrong += (bits_e[b] ^ bits_t[b]);
        ++total;
      }
      e /= 4;
      t /= 4;
    }
  }
  CHECK(evaluate_ber(est, truth, qpsk, arity) ==
        doctest::Approx(static_cast<double>(wrong) / static_cast<double>(total)).epsilon(1e-15));
}

TEST_CASE("ber rejects mismatched lengths") {
  const auto& bpsk = Constellation::bpsk();
  CHECK_THROWS_AS(evaluate_ber({0, 1}, {0}, bpsk), std::invalid_argument);
}

TEST_CASE("method and receiver names round trip") {
  for (MethodKind m : {MethodKind::Regular, MethodKind::Combined, MethodKind::Extended,
                       MethodKind::GeometricOnly, MethodKind::ProjectionOnly,
                       MethodKind::TranslationOnly, MethodKind::Genie})
    CHECK(method_by_name(method_name(m)) == m);
  for (ReceiverKind r : {ReceiverKind::ViterbiNet, ReceiverKind::BlackBoxSiso,
                         ReceiverKind::DeepSic, ReceiverKind::BlackBoxMimo})
    CHECK(receiver_by_name(receiver_name(r)) == r);
  CHECK_THROWS_AS(method_by_name("nonsense"), std::invalid_argument);
}

TEST_CASE("single-augmentation methods scale kappa to match the combined size") {
  ExperimentConfig cfg = mini_siso();
  cfg.augment.kappa = 3;
  CHECK(method_augment_config(cfg, MethodKind::Combined).kappa == 3);
  const AugmentConfig geo = method_augment_config(cfg, MethodKind::GeometricOnly);
  CHECK(geo.kappa == 9);
  CHECK(geo.enabled_count() == 1);
  cfg.augment.kappa = 2;
  const AugmentConfig tr = method_augment_config(cfg, MethodKind::TranslationOnly);
  CHECK(tr.kappa == 6);
  CHECK(tr.translation);
  CHECK(!tr.geometric);
}

TEST_CASE("training defaults depend on the receiver") {
  ExperimentConfig cfg = mini_siso();
  cfg.train_iterations = 500;
  cfg.train_batch_size = 0;
  cfg.train_learning_rate = 0.0;
  cfg.receiver = ReceiverKind::ViterbiNet;
  CHECK(effective_training(cfg).batch_size == 32);
  CHECK(effective_training(cfg).learning_rate == 1e-3);
  cfg.receiver = ReceiverKind::BlackBoxSiso;
  CHECK(effective_training(cfg).batch_size == 16);
  CHECK(effective_training(cfg).learning_rate == 1e-2);
  cfg.channel = ChannelKind::Mimo;
  cfg.receiver = ReceiverKind::DeepSic;
  CHECK(effective_training(cfg).learning_rate == 1e-3);
  cfg.receiver = ReceiverKind::BlackBoxMimo;
  CHECK(effective_training(cfg).learning_rate == 1e-2);
  cfg.train_batch_size = 48;
  CHECK(effective_training(cfg).batch_size == 48);
}

TEST_CASE("regular training keeps qstar equal to q") {
  const ExperimentConfig cfg = mini_siso();
  const auto records = run_block_stream(cfg, CellSpec{MethodKind::Regular, 0, 0, 0});
  REQUIRE(records.size() == 2);
  for (const auto& r : records) {
    CHECK(r.qstar_size == cfg.layout.pilots);
    CHECK(r.pilots == cfg.layout.pilots);
    CHECK(r.ber >= 0.0);
    CHECK(r.ber <= 1.0);
  }
}

TEST_CASE("combined training multiplies qstar by 3 kappa + 1") {
  const ExperimentConfig cfg = mini_siso();
  const auto records = run_block_stream(cfg, CellSpec{MethodKind::Combined, 0, 0, 0});
  for (const auto& r : records) CHECK(r.qstar_size == (3 * 2 + 1) * cfg.layout.pilots);
}

TEST_CASE("extended method transmits beta times the pilots") {
  ExperimentConfig cfg = mini_siso();
  cfg.extended_beta = 2.5;
  cfg.layout.pilots = 200;
  const auto records = run_block_stream(cfg, CellSpec{MethodKind::Extended, 0, 0, 0});
  for (const auto& r : records) {
    CHECK(r.pilots == 500);
    CHECK(r.qstar_size == 500);
  }
}

TEST_CASE("block streams replay identically") {
  const ExperimentConfig cfg = mini_siso();
  const auto a = run_block_stream(cfg, CellSpec{MethodKind::Combined, 0, 1, 0});
  const auto b = run_block_stream(cfg, CellSpec{MethodKind::Combined, 0, 1, 0});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(samescience(a[i], b[i]));
}

TEST_CASE("genie method runs without training and bounds the receivers") {
  const ExperimentConfig cfg = mini_siso();
  const auto genie = run_block_stream(cfg, CellSpec{MethodKind::Genie, 0, 0, 0});
  for (const auto& r : genie) {
    CHECK(r.qstar_size == 0);
    CHECK(r.ber <= 0.5);
  }
}

TEST_CASE("sweep includes the genie series on linear channels and matches cells") {
  ExperimentConfig cfg = mini_siso();
  cfg.seeds = 1;
  const SweepResult result = sweep(cfg);
  bool saw_genie = false;
  for (const auto& row : result.summary) saw_genie = saw_genie || row.method == MethodKind::Genie;
  CHECK(saw_genie);

  // The regular series of the sweep equals a directly-run cell.
  const auto direct = run_block_stream(cfg, CellSpec{MethodKind::Regular, 0, 0, 0});
  std::vector<BlockRecord> from_sweep;
  for (const auto& r : result.records)
    if (r.method == MethodKind::Regular) from_sweep.push_back(r);
  REQUIRE(from_sweep.size() == direct.size());
  for (std::size_t i = 0; i < direct.size(); ++i) CHECK(samescience(from_sweep[i], direct[i]));
}

TEST_CASE("tanh channels drop the genie series") {
  ExperimentConfig cfg = mini_siso();
  cfg.tanh = true;
  cfg.seeds = 1;
  cfg.methods = {MethodKind::Regular};
  const SweepResult result = sweep(cfg);
  for (const auto& row : result.summary) CHECK(row.method != MethodKind::Genie);
}

TEST_CASE("parallel execution does not change results or their order") {
  ExperimentConfig cfg = mini_siso();
  cfg.seeds = 2;
  cfg.jobs = 1;
  const SweepResult serial = sweep(cfg);
  cfg.jobs = 4;
  const SweepResult parallel = sweep(cfg);
  REQUIRE(serial.records.size() == parallel.records.size());
  for (std::size_t i = 0; i < serial.records.size(); ++i)
    CHECK(samescience(serial.records[i], parallel.records[i]));
}

TEST_CASE("summaries recompute exactly from raw records") {
  ExperimentConfig cfg = mini_siso();
  cfg.seeds = 2;
  const SweepResult result = sweep(cfg);
  for (const auto& row : result.summary) {
    const auto seed_means = per_seed_mean_ber(result.records, row.method, row.snr_db);
    REQUIRE(static_cast<int>(seed_means.size()) == row.seeds);
    double mean = 0.0;
    for (double v : seed_means) mean += v;
    mean /= static_cast<double>(seed_means.size());
    CHECK(row.mean_ber == doctest::Approx(mean).epsilon(1e-15));
  }
}

TEST_CASE("mixed-fingerprint aggregation is rejected") {
  const ExperimentConfig cfg = mini_siso();
  auto records = run_block_stream(cfg, CellSpec{MethodKind::Regular, 0, 0, 0});
  auto tampered = records;
  tampered.back().fingerprint ^= 1;
  std::vector<BlockRecord> merged = records;
  merged.insert(merged.end(), tampered.begin(), tampered.end());
  CHECK_THROWS_AS(summarize(merged), std::invalid_argument);
}

TEST_CASE("fingerprints react to any config change") {
  ExperimentConfig a = mini_siso();
  ExperimentConfig b = a;
  CHECK(a.fingerprint() == b.fingerprint());
  b.augment.alpha1 = 0.31;
  CHECK(a.fingerprint() != b.fingerprint());
  ExperimentConfig c = a;
  c.layout.pilots += 1;
  CHECK(a.fingerprint() != c.fingerprint());
}

TEST_CASE("channel names encode family, nonlinearity and profile") {
  ExperimentConfig cfg = mini_siso();
  CHECK(cfg.channel_name() == "siso-linear-synthfade");
  cfg.tanh = true;
  cfg.profile = ProfileKind::Static;
  CHECK(cfg.channel_name() == "siso-tanh-static");
  cfg.channel = ChannelKind::Mimo;
  cfg.receiver = ReceiverKind::DeepSic;
  cfg.profile = ProfileKind::Trace;
  CHECK(cfg.channel_name() == "mimo-tanh-trace");
}

TEST_CASE("config validation rejects inconsistent setups") {
  ExperimentConfig cfg = mini_siso();
  cfg.receiver = ReceiverKind::DeepSic;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = mini_siso();
  cfg.taps = {1.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = mini_siso();
  cfg.methods = {MethodKind::Extended};
  cfg.extended_beta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = mini_siso();
  cfg.snr_grid_db.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("paired comparison statistics") {
  // a below b in 5 of 5 pairs: one-sided sign test p = 2^-5.
  const std::vector<double> a{0.1, 0.2, 0.15, 0.3, 0.25};
  const std::vector<double> b{0.2, 0.25, 0.2, 0.4, 0.3};
  const PairedComparison cmp = paired_compare(a, b);
  CHECK(cmp.wins == 5);
  CHECK(cmp.n == 5);
  CHECK(cmp.sign_test_p == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
  CHECK(cmp.mean_diff < 0.0);

  // Split decisions give p > 0.5; ties are dropped.
  const PairedComparison even = paired_compare({0.1, 0.4, 0.2}, {0.2, 0.3, 0.2});
  CHECK(even.n == 2);
  CHECK(even.wins == 1);
  CHECK(even.sign_test_p == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("pilot sweep reports per-point tables and factors") {
  ExperimentConfig cfg = mini_siso();
  cfg.seeds = 1;
  cfg.blocks = 1;
  cfg.methods = {MethodKind::Regular, MethodKind::Combined};
  const PilotSweepResult result = pilot_sweep(cfg, {16, 32}, 12.0);
  CHECK(result.pilot_grid == std::vector<int>{16, 32});
  CHECK(result.table.size() == 4);  // 2 methods x 2 grid points
  for (const auto& p : result.table) {
    CHECK(p.mean_ber >= 0.0);
    CHECK(p.mean_ber <= 1.0);
  }
  // Single grid point: no factor computable.
  const PilotSweepResult single = pilot_sweep(cfg, {16}, 12.0);
  CHECK(!single.factor_defined);
}

TEST_CASE("ablation runs regular, three singles, and combined") {
  ExperimentConfig cfg = mini_siso();
  cfg.seeds = 1;
  cfg.blocks = 1;
  cfg.include_genie = false;
  const SweepResult result = ablation(cfg);
  std::vector<MethodKind> seen;
  for (const auto& row : result.summary) seen.push_back(row.method);
  CHECK(seen.size() == 5);
  // Sizes match between singles and combined.
  long combined_size = 0, single_size = 0;
  for (const auto& r : result.records) {
    if (r.method == MethodKind::Combined) combined_size = r.qstar_size;
    if (r.method == MethodKind::GeometricOnly) single_size = r.qstar_size;
  }
  CHECK(combined_size == single_size);
}

TEST_CASE("results csv follows the documented schema") {
  ExperimentConfig cfg = mini_siso();
  cfg.seeds = 1;
  cfg.blocks = 1;
  cfg.methods = {MethodKind::Regular};
  cfg.include_genie = false;
  const SweepResult result = sweep(cfg);
  std::ostringstream results_csv, summary_csv;
  write_results_csv(results_csv, result.records, cfg);
  write_summary_csv(summary_csv, result.summary, cfg);
  std::istringstream lines(results_csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "method,receiver,channel,snr_db,seed,block,ber,qstar_size,wall_ms");
  std::string row;
  std::getline(lines, row);
  CHECK(row.substr(0, 8) == "regular,");
  std::istringstream slines(summary_csv.str());
  std::getline(slines, header);
  CHECK(header == "method,receiver,channel,snr_db,mean_ber,stderr_ber,seeds,blocks");
}
