#include "deeprx/channel.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace deeprx {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}
}  // namespace

NoiseSpec NoiseSpec::from_snr_db(double snr_db) {
  return NoiseSpec{std::pow(10.0, -snr_db / 10.0)};
}

double NoiseSpec::snr_db() const { return -10.0 * std::log10(sigma2); }

void SisoChannelSpec::validate() const {
  require(!taps.empty(), "siso spec: memory must be >= 1");
  for (double h : taps) require(std::isfinite(h), "siso spec: taps must be finite");
  require(sigma2 > 0.0 && std::isfinite(sigma2), "siso spec: sigma2 must be > 0");
  if (nonlinearity == Nonlinearity::Tanh)
    require(tanh_gain > 0.0 && std::isfinite(tanh_gain), "siso spec: tanh gain must be > 0");
}

void MimoChannelSpec::validate() const {
  require(users >= 1 && antennas >= 1, "mimo spec: users and antennas must be >= 1");
  require(matrix.rows() == antennas && matrix.cols() == users, "mimo spec: matrix shape mismatch");
  require(matrix.allFinite(), "mimo spec: matrix must be finite");
  require(sigma2 > 0.0 && std::isfinite(sigma2), "mimo spec: sigma2 must be > 0");
  if (nonlinearity == Nonlinearity::Tanh)
    require(tanh_gain > 0.0 && std::isfinite(tanh_gain), "mimo spec: tanh gain must be > 0");
}

Eigen::MatrixXcd exponential_decay_matrix(int antennas, int users) {
  Eigen::MatrixXcd h(antennas, users);
  for (int n = 0; n < antennas; ++n)
    for (int k = 0; k < users; ++k) h(n, k) = std::exp(-std::abs(n - k));
  return h;
}

std::vector<double> siso_convolve(const std::vector<double>& symbols,
                                  const std::vector<double>& taps) {
  const int n = static_cast<int>(symbols.size());
  const int mem = static_cast<int>(taps.size());
  std::vector<double> y(symbols.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int l = 0; l < mem && l <= i; ++l) acc += taps[static_cast<std::size_t>(l)] * symbols[static_cast<std::size_t>(i - l)];
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

std::vector<double> siso_transmit(const std::vector<double>& symbols, const SisoChannelSpec& spec,
                                  std::mt19937_64& rng) {
  spec.validate();
  std::vector<double> y = siso_convolve(symbols, spec.taps);
  std::normal_distribution<double> noise(0.0, std::sqrt(spec.sigma2));
  for (double& v : y) v += noise(rng);
  if (spec.nonlinearity == Nonlinearity::Tanh)
    for (double& v : y) v = std::tanh(spec.tanh_gain * v);
  return y;
}

Eigen::MatrixXcd mimo_transmit(const Eigen::MatrixXcd& symbols, const MimoChannelSpec& spec,
                               std::mt19937_64& rng) {
  spec.validate();
  if (symbols.rows() != spec.users) throw std::invalid_argument("mimo_transmit: symbol rows != users");
  Eigen::MatrixXcd y = spec.matrix * symbols;
  std::normal_distribution<double> noise(0.0, std::sqrt(spec.sigma2 / 2.0));
  for (Eigen::Index u = 0; u < y.cols(); ++u)
    for (Eigen::Index n = 0; n < y.rows(); ++n) {
      const double re = noise(rng);
      const double im = noise(rng);
      y(n, u) += cplx(re, im);
    }
  if (spec.nonlinearity == Nonlinearity::Tanh)
    for (Eigen::Index u = 0; u < y.cols(); ++u)
      for (Eigen::Index n = 0; n < y.rows(); ++n)
        y(n, u) = cplx(std::tanh(spec.tanh_gain * y(n, u).real()),
                       std::tanh(spec.tanh_gain * y(n, u).imag()));
  return y;
}

SisoTapProfile SisoTapProfile::constant(std::vector<double> taps) {
  require(!taps.empty(), "tap profile: empty taps");
  SisoTapProfile p;
  p.kind_ = Kind::Constant;
  p.base_taps_ = std::move(taps);
  return p;
}

SisoTapProfile SisoTapProfile::synthetic(std::vector<double> base_taps, std::vector<int> periods,
                                         double base, double amplitude) {
  require(!base_taps.empty(), "tap profile: empty taps");
  require(!periods.empty(), "tap profile: empty periods");
  for (int p : periods) require(p >= 1, "tap profile: periods must be >= 1");
  SisoTapProfile p;
  p.kind_ = Kind::Synthetic;
  p.base_taps_ = std::move(base_taps);
  p.periods_ = std::move(periods);
  p.base_ = base;
  p.amplitude_ = amplitude;
  return p;
}

SisoTapProfile SisoTapProfile::from_trace(const std::string& csv_path) {
  SisoTapProfile p;
  p.kind_ = Kind::Trace;
  p.trace_ = read_siso_trace(csv_path);
  require(!p.trace_.empty(), "tap profile: empty trace");
  return p;
}

std::vector<double> SisoTapProfile::taps_at(int block) const {
  if (block < 0) throw std::out_of_range("taps_at: block must be >= 0");
  switch (kind_) {
    case Kind::Constant:
      return base_taps_;
    case Kind::Synthetic: {
      std::vector<double> taps(base_taps_.size());
      for (std::size_t l = 0; l < base_taps_.size(); ++l) {
        const int period = periods_[l % periods_.size()];
        taps[l] = base_taps_[l] * (base_ + amplitude_ * std::cos(kTwoPi * block / period));
      }
      return taps;
    }
    case Kind::Trace:
      if (block >= static_cast<int>(trace_.size()))
        throw std::out_of_range("taps_at: trace exhausted at block " + std::to_string(block));
      return trace_[static_cast<std::size_t>(block)];
  }
  throw std::logic_error("unreachable");
}

int SisoTapProfile::memory() const {
  return kind_ == Kind::Trace ? static_cast<int>(trace_.front().size())
                              : static_cast<int>(base_taps_.size());
}

MimoTapProfile MimoTapProfile::constant(Eigen::MatrixXcd matrix) {
  MimoTapProfile p;
  p.kind_ = Kind::Constant;
  p.base_ = std::move(matrix);
  return p;
}

MimoTapProfile MimoTapProfile::synthetic(Eigen::MatrixXcd base_matrix, std::vector<int> periods,
                                         double base, double amplitude) {
  require(!periods.empty(), "tap profile: empty periods");
  for (int p : periods) require(p >= 1, "tap profile: periods must be >= 1");
  MimoTapProfile p;
  p.kind_ = Kind::Synthetic;
  p.base_ = std::move(base_matrix);
  p.periods_ = std::move(periods);
  p.base_gain_ = base;
  p.amplitude_ = amplitude;
  return p;
}

MimoTapProfile MimoTapProfile::from_trace(const std::string& csv_path) {
  MimoTapProfile p;
  p.kind_ = Kind::Trace;
  p.trace_ = read_mimo_trace(csv_path);
  require(!p.trace_.empty(), "tap profile: empty trace");
  return p;
}

Eigen::MatrixXcd MimoTapProfile::matrix_at(int block) const {
  if (block < 0) throw std::out_of_range("matrix_at: block must be >= 0");
  switch (kind_) {
    case Kind::Constant:
      return base_;
    case Kind::Synthetic: {
      Eigen::MatrixXcd h = base_;
      const int k_users = static_cast<int>(base_.cols());
      for (Eigen::Index n = 0; n < h.rows(); ++n)
        for (Eigen::Index k = 0; k < h.cols(); ++k) {
          const int flat = static_cast<int>(n) * k_users + static_cast<int>(k);
          const int period = periods_[static_cast<std::size_t>(flat) % periods_.size()];
          h(n, k) *= base_gain_ + amplitude_ * std::cos(kTwoPi * block / period);
        }
      return h;
    }
    case Kind::Trace:
      if (block >= static_cast<int>(trace_.size()))
        throw std::out_of_range("matrix_at: trace exhausted at block " + std::to_string(block));
      return trace_[static_cast<std::size_t>(block)];
  }
  throw std::logic_error("unreachable");
}

int MimoTapProfile::antennas() const {
  return static_cast<int>(kind_ == Kind::Trace ? trace_.front().rows() : base_.rows());
}

int MimoTapProfile::users() const {
  return static_cast<int>(kind_ == Kind::Trace ? trace_.front().cols() : base_.cols());
}

void write_siso_trace(const std::string& path, const std::vector<std::vector<double>>& rows) {
  require(!rows.empty(), "trace: no rows");
  const std::size_t mem = rows.front().size();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace for writing: " + path);
  out << "block";
  for (std::size_t l = 0; l < mem; ++l) out << ",tap_" << l;
  out << "\n";
  for (std::size_t j = 0; j < rows.size(); ++j) {
    require(rows[j].size() == mem, "trace: ragged rows");
    out << j;
    for (double v : rows[j]) out << "," << format_full(v);
    out << "\n";
  }
}

std::vector<std::vector<double>> read_siso_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty trace file");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "block")
    throw std::invalid_argument(path + ":1: expected header block,tap_0,...");
  for (std::size_t l = 1; l < header.size(); ++l)
    if (header[l] != "tap_" + std::to_string(l - 1))
      throw std::invalid_argument(path + ":1: bad tap column '" + header[l] + "'");
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": wrong column count");
    const double block = parse_double(cells[0], path, line_no);
    if (block != static_cast<double>(rows.size()))
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": block indices must be consecutive from 0");
    std::vector<double> taps(header.size() - 1);
    for (std::size_t l = 1; l < cells.size(); ++l) taps[l - 1] = parse_double(cells[l], path, line_no);
    rows.push_back(std::move(taps));
  }
  return rows;
}

void write_mimo_trace(const std::string& path, const std::vector<Eigen::MatrixXcd>& rows) {
  require(!rows.empty(), "trace: no rows");
  const Eigen::Index n_ant = rows.front().rows();
  const Eigen::Index n_usr = rows.front().cols();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace for writing: " + path);
  out << "block";
  for (Eigen::Index n = 0; n < n_ant; ++n)
    for (Eigen::Index k = 0; k < n_usr; ++k) out << ",re_" << n << "_" << k << ",im_" << n << "_" << k;
  out << "\n";
  for (std::size_t j = 0; j < rows.size(); ++j) {
    require(rows[j].rows() == n_ant && rows[j].cols() == n_usr, "trace: ragged rows");
    out << j;
    for (Eigen::Index n = 0; n < n_ant; ++n)
      for (Eigen::Index k = 0; k < n_usr; ++k)
        out << "," << format_full(rows[j](n, k).real()) << "," << format_full(rows[j](n, k).imag());
    out << "\n";
  }
}

std::vector<Eigen::MatrixXcd> read_mimo_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty trace file");
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "block" || (header.size() - 1) % 2 != 0)
    throw std::invalid_argument(path + ":1: expected header block,re_0_0,im_0_0,...");
  // Infer N and K from the last column name im_{N-1}_{K-1}.
  const std::string& last = header.back();
  int n_ant = 0, n_usr = 0;
  if (std::sscanf(last.c_str(), "im_%d_%d", &n_ant, &n_usr) != 2)
    throw std::invalid_argument(path + ":1: bad trailing column '" + last + "'");
  ++n_ant;
  ++n_usr;
  if (static_cast<std::size_t>(n_ant) * static_cast<std::size_t>(n_usr) * 2 + 1 != header.size())
    throw std::invalid_argument(path + ":1: column count does not match inferred N,K");
  std::vector<Eigen::MatrixXcd> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": wrong column count");
    const double block = parse_double(cells[0], path, line_no);
    if (block != static_cast<double>(rows.size()))
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": block indices must be consecutive from 0");
    Eigen::MatrixXcd h(n_ant, n_usr);
    std::size_t cell = 1;
    for (int n = 0; n < n_ant; ++n)
      for (int k = 0; k < n_usr; ++k) {
        const double re = parse_double(cells[cell++], path, line_no);
        const double im = parse_double(cells[cell++], path, line_no);
        h(n, k) = cplx(re, im);
      }
    rows.push_back(std::move(h));
  }
  return rows;
}

double gaussian_density(double y, double mean, double sigma2) {
  const double d = y - mean;
  return std::exp(-d * d / (2.0 * sigma2)) / std::sqrt(kTwoPi * sigma2);
}

double gaussian_log_density(double y, double mean, double sigma2) {
  const double d = y - mean;
  return -d * d / (2.0 * sigma2) - 0.5 * std::log(kTwoPi * sigma2);
}

double siso_state_mean(int label, const std::vector<double>& taps, const Constellation& c) {
  return siso_state_mean_guarded(label, taps, c, static_cast<int>(taps.size()));
}

double siso_state_mean_guarded(int label, const std::vector<double>& taps, const Constellation& c,
                               int valid_taps) {
  double m = 0.0;
  for (int l = 0; l < valid_taps; ++l) {
    m += taps[static_cast<std::size_t>(l)] * c.point(label % c.size()).real();
    label /= c.size();
  }
  return m;
}

double exact_state_likelihood(double y, int label, const SisoChannelSpec& spec,
                              const Constellation& c) {
  if (spec.nonlinearity != Nonlinearity::None)
    throw UnsupportedSpecError("exact_state_likelihood: tanh spec has no Gaussian state density");
  return gaussian_density(y, siso_state_mean(label, spec.taps, c), spec.sigma2);
}

double mimo_state_log_likelihood(const Eigen::VectorXcd& y, int label,
                                 const MimoChannelSpec& spec, const Constellation& c) {
  if (spec.nonlinearity != Nonlinearity::None)
    throw UnsupportedSpecError("mimo_state_log_likelihood: tanh spec unsupported");
  if (y.size() != spec.antennas) throw std::invalid_argument("y size != antennas");
  Eigen::VectorXcd s(spec.users);
  int rem = label;
  for (int k = 0; k < spec.users; ++k) {
    s(k) = c.point(rem % c.size());
    rem /= c.size();
  }
  const Eigen::VectorXcd r = y - spec.matrix * s;
  return -r.squaredNorm() / spec.sigma2 -
         spec.antennas * std::log(std::numbers::pi * spec.sigma2);
}

}  // namespace deeprx
