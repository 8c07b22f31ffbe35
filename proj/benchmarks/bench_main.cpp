#include <benchmark/benchmark.h>

#include <random>

#include "deeprx/augment.hpp"
#include "deeprx/dataset.hpp"
#include "deeprx/receivers.hpp"

using namespace deeprx;

namespace {
const std::vector<double> kTaps{1.0, 0.606, 0.367, 0.223};

LabeledSet pilot_set(int pilots, double sigma2, std::uint64_t seed) {
  const auto& bpsk = Constellation::bpsk();
  SisoChannelSpec spec{kTaps, sigma2, Nonlinearity::None, 1.0};
  std::mt19937_64 rng(seed);
  SisoBlock::Visible v;
  v.pilot_points = make_pilot_points_siso(pilots, bpsk, 4, rng);
  v.pilot_outputs = siso_transmit(points_to_symbols(v.pilot_points, bpsk), spec, rng);
  return build_siso_scalar_set(v, bpsk, 4);
}
}  // namespace

static void BM_AugmentStatic(benchmark::State& state) {
  const LabeledSet q = pilot_set(200, 0.063, 1);
  AugmentConfig cfg;
  cfg.kappa = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(augment_static(q, cfg, Constellation::bpsk(), rng));
  }
  state.SetItemsProcessed(state.iterations() * q.size() * (3 * state.range(0) + 1));
}
BENCHMARK(BM_AugmentStatic)->Arg(1)->Arg(3)->Arg(9);

static void BM_ExactViterbi(benchmark::State& state) {
  const auto& bpsk = Constellation::bpsk();
  SisoChannelSpec spec{kTaps, 0.063, Nonlinearity::None, 1.0};
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> bit(0, 1);
  std::vector<double> symbols(static_cast<std::size_t>(state.range(0)));
  for (double& s : symbols) s = bit(rng) ? -1.0 : 1.0;
  const std::vector<double> y = siso_transmit(symbols, spec, rng);
  for (auto _ : state) {
    const Eigen::MatrixXd costs = exact_siso_costs(y, spec, bpsk, true);
    benchmark::DoNotOptimize(viterbi_map_sequence(costs, bpsk.size(), 4));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExactViterbi)->Arg(500)->Arg(2000);

static void BM_ViterbiNetTrainStep(benchmark::State& state) {
  const auto& bpsk = Constellation::bpsk();
  std::mt19937_64 rng(4);
  ViterbiNetReceiver rx = ViterbiNetReceiver::make(bpsk, 4, rng);
  const LabeledSet q = pilot_set(200, 0.063, 5);
  TrainConfig cfg{1, 32, 1e-3};
  for (auto _ : state) {
    viterbinet_train(rx, q, cfg, rng);
  }
  state.SetItemsProcessed(state.iterations() * cfg.batch_size);
}
BENCHMARK(BM_ViterbiNetTrainStep);

static void BM_MimoTransmit(benchmark::State& state) {
  const auto& qpsk = Constellation::qpsk();
  MimoChannelSpec spec{4, 4, exponential_decay_matrix(4, 4), 0.063, Nonlinearity::None, 1.0};
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> pick(0, 3);
  Eigen::MatrixXcd s(4, state.range(0));
  for (Eigen::Index u = 0; u < s.cols(); ++u)
    for (int k = 0; k < 4; ++k) s(k, u) = qpsk.point(pick(rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mimo_transmit(s, spec, rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MimoTransmit)->Arg(1000);

BENCHMARK_MAIN();
