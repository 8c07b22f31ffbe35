#include "deeprx/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "deeprx/chart.hpp"
#include "deeprx/receivers.hpp"
#include "deeprx/rng.hpp"

namespace deeprx {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
}

void write_run_outputs(const std::string& out_dir, const ExperimentConfig& cfg,
                       const std::vector<BlockRecord>& records,
                       const std::vector<SummaryRow>& summary) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/config_resolved.toml", resolved_config_text(cfg));
  {
    std::ostringstream s;
    write_results_csv(s, records, cfg);
    write_file(out_dir + "/results.csv", s.str());
  }
  {
    std::ostringstream s;
    write_summary_csv(s, summary, cfg);
    write_file(out_dir + "/summary.csv", s.str());
  }
}

std::vector<ChartSeries> summary_series(const std::vector<SummaryRow>& summary) {
  std::vector<ChartSeries> series;
  for (const auto& row : summary) {
    ChartSeries* s = nullptr;
    for (auto& existing : series)
      if (existing.name == method_name(row.method)) s = &existing;
    if (!s) {
      series.push_back(ChartSeries{method_name(row.method), {}, {}});
      s = &series.back();
    }
    s->x.push_back(row.snr_db);
    s->y.push_back(row.mean_ber);
  }
  return series;
}

int command_gradcheck(const CliInvocation& inv, std::ostream& out) {
  struct Arch {
    std::string name;
    DenseNet net;
  };
  const Constellation& bpsk = Constellation::bpsk();
  const Constellation& qpsk = Constellation::qpsk();
  const int users = 4, antennas = 4, memory = 4;
  std::vector<Arch> archs;
  archs.push_back({"viterbinet",
                   DenseNet::classifier({1, 100, 50, num_classes(bpsk, memory)},
                                        {Activation::Sigmoid, Activation::Relu})});
  archs.push_back({"blackbox_siso",
                   DenseNet::classifier({memory, 64, num_classes(bpsk, memory)},
                                        {Activation::Relu})});
  archs.push_back({"deepsic_block",
                   DenseNet::classifier({2 * antennas + (users - 1) * qpsk.size(), 60, 30,
                                         qpsk.size()},
                                        {Activation::Sigmoid, Activation::Relu})});
  archs.push_back({"blackbox_mimo",
                   DenseNet::classifier({2 * antennas, 60, 60, num_classes(qpsk, users)},
                                        {Activation::Relu, Activation::Relu})});

  bool all_ok = true;
  for (const auto& arch : archs) {
    double worst = 0.0;
    for (int seed = 0; seed < inv.gradcheck_seeds; ++seed) {
      std::mt19937_64 rng(derive_seed(inv.config.master_seed, 0, static_cast<std::uint64_t>(seed),
                                      0, RngStage::TrainInit));
      Params params = Params::init(arch.net, rng);
      const int rows = 4;
      Batch batch;
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::uniform_int_distribution<int> pick(0, arch.net.output_dim() - 1);
      for (int attempt = 0;; ++attempt) {
        batch.inputs.resize(rows, arch.net.input_dim());
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < arch.net.input_dim(); ++c) batch.inputs(r, c) = gauss(rng);
        batch.labels.resize(static_cast<std::size_t>(rows));
        for (int r = 0; r < rows; ++r) batch.labels[static_cast<std::size_t>(r)] = pick(rng);
        if (finite_difference_safe(arch.net, params, batch) || attempt >= 100) break;
      }

      const auto [loss, analytic] = backward(arch.net, params, batch);
      (void)loss;
      const Params numeric = finite_difference_gradient(arch.net, params, batch);
      // Coordinates below 1e-4 are compared absolutely (1e-9): central
      // differences carry ~2e-10 rounding noise at step 1e-5.
      for (int i = 0; i < params.count(); ++i) {
        const double a = analytic.get_flat(i);
        const double n = numeric.get_flat(i);
        const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4});
        worst = std::max(worst, rel);
      }
    }
    const bool ok = worst < 1e-5;
    all_ok = all_ok && ok;
    out << (ok ? "[PASS] " : "[FAIL] ") << "gradcheck " << arch.name
        << ": max relative error " << worst << " (threshold 1e-5, " << inv.gradcheck_seeds
        << " seeds)\n";
  }
  return all_ok ? 0 : 1;
}

int command_oracle(const CliInvocation& inv, std::ostream& out) {
  const Constellation& bpsk = Constellation::bpsk();
  std::mt19937_64 rng(inv.config.master_seed);
  int agree = 0;
  const int horizon = 8;
  for (int trial = 0; trial < inv.oracle_trials; ++trial) {
    const int memory = 2 + trial % 3;
    SisoChannelSpec spec;
    spec.taps.resize(static_cast<std::size_t>(memory));
    std::uniform_real_distribution<double> tap(-1.0, 1.0);
    spec.taps[0] = 1.0;
    for (int l = 1; l < memory; ++l) spec.taps[static_cast<std::size_t>(l)] = tap(rng);
    spec.sigma2 = 0.5;
    std::uniform_int_distribution<int> bit(0, 1);
    std::vector<double> symbols(horizon);
    for (double& s : symbols) s = bit(rng) ? -1.0 : 1.0;
    const std::vector<double> y = siso_transmit(symbols, spec, rng);
    const std::vector<int> viterbi =
        viterbi_map_sequence(exact_siso_costs(y, spec, bpsk, true), bpsk.size(), memory);
    const std::vector<int> mlsd = mlsd_bruteforce(y, spec, bpsk);
    if (viterbi == mlsd) ++agree;
  }
  out << (agree == inv.oracle_trials ? "[PASS] " : "[FAIL] ") << "oracle viterbi-vs-mlsd: "
      << agree << "/" << inv.oracle_trials << " agreements (B=" << horizon << ", L=2..4)\n";

  // Noiseless MIMO genie must invert exactly.
  const Constellation& qpsk = Constellation::qpsk();
  MimoChannelSpec mimo;
  mimo.users = 4;
  mimo.antennas = 4;
  mimo.matrix = exponential_decay_matrix(4, 4);
  mimo.sigma2 = 1e-9;
  int mimo_ok = 0;
  const int mimo_trials = 100;
  std::uniform_int_distribution<int> pick_label(0, num_classes(qpsk, mimo.users) - 1);
  for (int trial = 0; trial < mimo_trials; ++trial) {
    const int label = pick_label(rng);
    Eigen::MatrixXcd s(mimo.users, 1);
    int rem = label;
    for (int k = 0; k < mimo.users; ++k) {
      s(k, 0) = qpsk.point(rem % qpsk.size());
      rem /= qpsk.size();
    }
    const Eigen::MatrixXcd y = mimo_transmit(s, mimo, rng);
    if (genie_map_mimo_label(y.col(0), mimo, qpsk) == label) ++mimo_ok;
  }
  out << (mimo_ok == mimo_trials ? "[PASS] " : "[FAIL] ") << "oracle mimo genie inversion: "
      << mimo_ok << "/" << mimo_trials << " exact at sigma^2 = 1e-9\n";
  return (agree == inv.oracle_trials && mimo_ok == mimo_trials) ? 0 : 1;
}

}  // namespace

std::vector<double> parse_snr_spec(const std::string& spec) {
  std::vector<double> grid;
  if (spec.find(':') != std::string::npos) {
    const auto parts = split_list(spec);
    (void)parts;
    double lo = 0, hi = 0, step = 1;
    char extra = 0;
    const int n = std::sscanf(spec.c_str(), "%lf:%lf:%lf%c", &lo, &hi, &step, &extra);
    if (n != 3 || step <= 0)
      throw UsageError("bad --snr range '" + spec + "', expected lo:hi:step");
    for (double v = lo; v <= hi + 1e-9; v += step) grid.push_back(v);
  } else {
    for (const std::string& cell : split_list(spec)) {
      try {
        std::size_t pos = 0;
        grid.push_back(std::stod(cell, &pos));
        if (pos != cell.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw UsageError("bad --snr value '" + cell + "'");
      }
    }
  }
  if (grid.empty()) throw UsageError("empty --snr grid");
  return grid;
}

CliInvocation parse_and_validate(const std::vector<std::string>& args) {
  CLI::App app{"deeprx: data-augmented training workbench for deep symbol detectors"};
  app.require_subcommand(0, 1);

  std::string config_path, out_dir = "out", snr_spec, methods_spec, receiver_spec;
  int seeds = -1, blocks = -1, jobs = -1, run_seed = 0;
  double beta = 0.0;
  std::string pilot_grid_spec;
  double pilots_snr = 12.0;
  int gradcheck_seeds = 5, oracle_trials = 200;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--snr", snr_spec, "SNR grid override: lo:hi:step or comma list");
    cmd->add_option("--seeds", seeds, "number of seeds");
    cmd->add_option("--blocks", blocks, "number of fading blocks");
    cmd->add_option("--method", methods_spec, "comma list of training methods");
    cmd->add_option("--receiver", receiver_spec, "receiver kind");
    cmd->add_option("--beta", beta, "extended-pilots factor (> 1)");
    cmd->add_option("--jobs", jobs, "parallel sweep cells");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "single cell: first method, first SNR, one seed");
  add_common(cmd_run);
  cmd_run->add_option("--seed", run_seed, "seed index for the single cell");
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "methods x SNR x seeds grid");
  add_common(cmd_sweep);
  CLI::App* cmd_pilots = app.add_subcommand("pilots", "BER versus pilot count at fixed SNR");
  add_common(cmd_pilots);
  cmd_pilots->add_option("--pilot-grid", pilot_grid_spec, "comma list of pilot counts");
  cmd_pilots->add_option("--pilots-snr", pilots_snr, "SNR (dB) for the pilot sweep");
  CLI::App* cmd_ablation =
      app.add_subcommand("ablation", "regular vs single augmentations vs combined");
  add_common(cmd_ablation);
  CLI::App* cmd_gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient check per architecture");
  cmd_gradcheck->add_option("--seeds", gradcheck_seeds, "random restarts per architecture");
  CLI::App* cmd_oracle =
      app.add_subcommand("oracle", "exact-metric Viterbi vs exhaustive MLSD self-check");
  cmd_oracle->add_option("--trials", oracle_trials, "number of random instances");

  std::vector<const char*> argv;
  argv.push_back("deeprx");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    CliInvocation inv;
    inv.command = CliInvocation::Command::Help;
    inv.help_text = app.help();
    return inv;
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n\n" + app.help());
  }

  CliInvocation inv;
  if (cmd_run->parsed()) inv.command = CliInvocation::Command::Run;
  else if (cmd_sweep->parsed()) inv.command = CliInvocation::Command::Sweep;
  else if (cmd_pilots->parsed()) inv.command = CliInvocation::Command::Pilots;
  else if (cmd_ablation->parsed()) inv.command = CliInvocation::Command::Ablation;
  else if (cmd_gradcheck->parsed()) inv.command = CliInvocation::Command::GradCheck;
  else if (cmd_oracle->parsed()) inv.command = CliInvocation::Command::Oracle;
  else {
    inv.command = CliInvocation::Command::Help;
    inv.help_text = app.help();
    return inv;
  }

  inv.out_dir = out_dir;
  inv.config_path = config_path;
  inv.run_seed = run_seed;
  inv.pilots_snr_db = pilots_snr;
  inv.gradcheck_seeds = gradcheck_seeds;
  inv.oracle_trials = oracle_trials;

  if (!config_path.empty())
    inv.config = config_from_file(config_path);

  if (const char* env_seed = std::getenv("DEEPRX_SEED")) {
    try {
      inv.config.master_seed = std::stoull(env_seed);
    } catch (const std::exception&) {
      throw ConfigError(std::string("DEEPRX_SEED is not an integer: ") + env_seed);
    }
  }

  if (!snr_spec.empty()) inv.config.snr_grid_db = parse_snr_spec(snr_spec);
  if (seeds >= 0) inv.config.seeds = seeds;
  if (blocks >= 0) inv.config.blocks = blocks;
  if (!methods_spec.empty()) {
    inv.config.methods.clear();
    for (const std::string& name : split_list(methods_spec)) {
      try {
        inv.config.methods.push_back(method_by_name(name));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
  }
  if (!receiver_spec.empty()) {
    try {
      inv.config.receiver = receiver_by_name(receiver_spec);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (beta > 0.0) inv.config.extended_beta = beta;
  if (jobs > 0) inv.config.jobs = jobs;
  if (!pilot_grid_spec.empty()) {
    inv.pilot_grid.clear();
    for (const std::string& cell : split_list(pilot_grid_spec)) {
      try {
        inv.pilot_grid.push_back(std::stoi(cell));
      } catch (const std::exception&) {
        throw UsageError("bad --pilot-grid value '" + cell + "'");
      }
    }
  }

  if (inv.command != CliInvocation::Command::GradCheck &&
      inv.command != CliInvocation::Command::Oracle) {
    try {
      inv.config.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return inv;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    CliInvocation inv = parse_and_validate(args);
    switch (inv.command) {
      case CliInvocation::Command::Help:
        out << inv.help_text;
        return 0;
      case CliInvocation::Command::GradCheck:
        return command_gradcheck(inv, out);
      case CliInvocation::Command::Oracle:
        return command_oracle(inv, out);
      case CliInvocation::Command::Run: {
        ExperimentConfig cfg = inv.config;
        cfg.methods = {cfg.methods.front()};
        cfg.snr_grid_db = {cfg.snr_grid_db.front()};
        const CellSpec cell{cfg.methods.front(), 0, inv.run_seed, 0};
        const auto records = run_block_stream(cfg, cell);
        // A single cell has one seed; summarize over its blocks.
        const auto summary = summarize(records);
        write_run_outputs(inv.out_dir, cfg, records, summary);
        for (const auto& row : summary)
          out << "method=" << method_name(row.method) << " snr_db=" << row.snr_db
              << " mean_ber=" << row.mean_ber << " blocks=" << row.blocks << "\n";
        return 0;
      }
      case CliInvocation::Command::Sweep: {
        const SweepResult result = sweep(inv.config);
        write_run_outputs(inv.out_dir, inv.config, result.records, result.summary);
        ChartAxes axes;
        axes.title = "BER vs SNR (" + inv.config.channel_name() + ", " +
                     receiver_name(inv.config.receiver) + ")";
        axes.x_label = "SNR (dB)";
        write_chart(inv.out_dir + "/ber_vs_snr.svg", summary_series(result.summary), axes);
        for (const auto& row : result.summary)
          out << "method=" << method_name(row.method) << " snr_db=" << row.snr_db
              << " mean_ber=" << row.mean_ber << " stderr=" << row.stderr_ber << "\n";
        return 0;
      }
      case CliInvocation::Command::Ablation: {
        const SweepResult result = ablation(inv.config);
        ExperimentConfig cfg = inv.config;
        cfg.methods = {MethodKind::Regular, MethodKind::GeometricOnly, MethodKind::ProjectionOnly,
                       MethodKind::TranslationOnly, MethodKind::Combined};
        write_run_outputs(inv.out_dir, cfg, result.records, result.summary);
        ChartAxes axes;
        axes.title = "Ablation: BER vs SNR (" + cfg.channel_name() + ", " +
                     receiver_name(cfg.receiver) + ")";
        axes.x_label = "SNR (dB)";
        write_chart(inv.out_dir + "/ber_vs_snr.svg", summary_series(result.summary), axes);
        for (const auto& row : result.summary)
          out << "method=" << method_name(row.method) << " snr_db=" << row.snr_db
              << " mean_ber=" << row.mean_ber << "\n";
        return 0;
      }
      case CliInvocation::Command::Pilots: {
        ExperimentConfig cfg = inv.config;
        cfg.snr_grid_db = {inv.pilots_snr_db};
        const PilotSweepResult result = pilot_sweep(cfg, inv.pilot_grid, inv.pilots_snr_db);
        std::filesystem::create_directories(inv.out_dir);
        write_file(inv.out_dir + "/config_resolved.toml", resolved_config_text(cfg));
        {
          std::ostringstream s;
          write_pilot_table_csv(s, result, cfg);
          write_file(inv.out_dir + "/pilots.csv", s.str());
        }
        for (std::size_t i = 0; i < result.pilot_grid.size(); ++i) {
          std::ostringstream s;
          write_results_csv(s, result.records_per_pilot[i], cfg);
          write_file(inv.out_dir + "/results_p" + std::to_string(result.pilot_grid[i]) + ".csv",
                     s.str());
        }
        std::vector<ChartSeries> series;
        for (const auto& p : result.table) {
          ChartSeries* s = nullptr;
          for (auto& existing : series)
            if (existing.name == method_name(p.method)) s = &existing;
          if (!s) {
            series.push_back(ChartSeries{method_name(p.method), {}, {}});
            s = &series.back();
          }
          s->x.push_back(p.pilots);
          s->y.push_back(p.mean_ber);
        }
        ChartAxes axes;
        axes.title = "BER vs pilots at " + std::to_string(inv.pilots_snr_db) + " dB";
        axes.x_label = "pilots";
        write_chart(inv.out_dir + "/ber_vs_pilots.svg", series, axes);
        out << "efficiency_factor="
            << (result.factor_defined ? std::to_string(result.efficiency_factor)
                                      : std::string("undefined"))
            << "\n";
        return 0;
      }
    }
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace deeprx
