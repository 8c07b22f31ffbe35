#include "deeprx/constellation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace deeprx {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kMatchTol = 1e-9;

double wrap_2pi(double phi) {
  double w = std::fmod(phi, 2.0 * kPi);
  if (w < 0) w += 2.0 * kPi;
  return w;
}
}  // namespace

Constellation::Constellation(std::string name, std::vector<cplx> points, int bits_per_symbol,
                             bool real, std::vector<double> group_phases)
    : name_(std::move(name)),
      points_(std::move(points)),
      bits_per_symbol_(bits_per_symbol),
      real_(real),
      group_phases_(std::move(group_phases)) {
  // Build the point permutation induced by each group phase; verify closure.
  rotation_perm_.resize(group_phases_.size());
  for (std::size_t r = 0; r < group_phases_.size(); ++r) {
    const cplx rot = std::polar(1.0, group_phases_[r]);
    std::vector<int> perm(points_.size(), -1);
    std::vector<bool> hit(points_.size(), false);
    for (std::size_t p = 0; p < points_.size(); ++p) {
      const int q = exact_point(points_[p] * rot);
      if (q < 0 || hit[static_cast<std::size_t>(q)])
        throw std::logic_error("rotation phase does not permute the constellation");
      perm[p] = q;
      hit[static_cast<std::size_t>(q)] = true;
    }
    rotation_perm_[r] = std::move(perm);
  }
}

const Constellation& Constellation::bpsk() {
  static const Constellation c("bpsk", {cplx(1.0, 0.0), cplx(-1.0, 0.0)}, 1, true, {0.0, kPi});
  return c;
}

const Constellation& Constellation::qpsk() {
  const double a = 1.0 / std::sqrt(2.0);
  static const Constellation c("qpsk",
                               {cplx(a, a), cplx(-a, a), cplx(a, -a), cplx(-a, -a)}, 2, false,
                               {0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0});
  return c;
}

const Constellation& Constellation::by_name(const std::string& name) {
  if (name == "bpsk") return bpsk();
  if (name == "qpsk") return qpsk();
  throw std::invalid_argument("unknown constellation: " + name);
}

int Constellation::bits_to_point(const int* bits) const {
  int p = 0;
  for (int b = 0; b < bits_per_symbol_; ++b) {
    const int bit = bits[b];
    if (bit != 0 && bit != 1) throw std::invalid_argument("bits must be 0 or 1");
    p += bit << b;
  }
  return p;
}

void Constellation::point_to_bits(int point_idx, int* bits_out) const {
  for (int b = 0; b < bits_per_symbol_; ++b) bits_out[b] = (point_idx >> b) & 1;
}

int Constellation::bit_of_point(int point_idx, int bit_pos) const {
  return (point_idx >> bit_pos) & 1;
}

int Constellation::bit_difference(int p, int q) const {
  int x = p ^ q;
  int d = 0;
  while (x) {
    d += x & 1;
    x >>= 1;
  }
  return d;
}

std::vector<cplx> Constellation::modulate(const std::vector<int>& bits) const {
  if (bits.size() % static_cast<std::size_t>(bits_per_symbol_) != 0)
    throw std::invalid_argument("bit count not divisible by bits_per_symbol");
  std::vector<cplx> out;
  out.reserve(bits.size() / static_cast<std::size_t>(bits_per_symbol_));
  for (std::size_t i = 0; i < bits.size(); i += static_cast<std::size_t>(bits_per_symbol_))
    out.push_back(points_[static_cast<std::size_t>(bits_to_point(&bits[i]))]);
  return out;
}

int Constellation::nearest_point(cplx v) const {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < points_.size(); ++p) {
    const double d = std::norm(v - points_[p]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(p);
    }
  }
  return best;
}

int Constellation::exact_point(cplx v) const {
  const int p = nearest_point(v);
  return std::abs(v - points_[static_cast<std::size_t>(p)]) <= kMatchTol ? p : -1;
}

std::vector<int> Constellation::demodulate_points(const std::vector<cplx>& symbols) const {
  std::vector<int> out(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) out[i] = nearest_point(symbols[i]);
  return out;
}

std::vector<int> Constellation::demodulate(const std::vector<cplx>& symbols) const {
  std::vector<int> bits(symbols.size() * static_cast<std::size_t>(bits_per_symbol_));
  for (std::size_t i = 0; i < symbols.size(); ++i)
    point_to_bits(nearest_point(symbols[i]), &bits[i * static_cast<std::size_t>(bits_per_symbol_)]);
  return bits;
}

int Constellation::phase_index(double phi) const {
  const double w = wrap_2pi(phi);
  for (std::size_t r = 0; r < group_phases_.size(); ++r) {
    double d = std::abs(w - group_phases_[r]);
    d = std::min(d, 2.0 * kPi - d);
    if (d <= kMatchTol) return static_cast<int>(r);
  }
  throw std::invalid_argument("phase is not in the constellation-conserving rotation group");
}

int num_classes(const Constellation& c, int arity) {
  if (arity < 1) throw std::invalid_argument("arity must be >= 1");
  long n = 1;
  for (int i = 0; i < arity; ++i) {
    n *= c.size();
    if (n > std::numeric_limits<int>::max()) throw std::invalid_argument("class space too large");
  }
  return static_cast<int>(n);
}

int class_index(const std::vector<int>& digits, const Constellation& c) {
  int label = 0;
  int radix = 1;
  for (std::size_t p = 0; p < digits.size(); ++p) {
    if (digits[p] < 0 || digits[p] >= c.size())
      throw std::invalid_argument("digit outside alphabet");
    label += digits[p] * radix;
    radix *= c.size();
  }
  return label;
}

std::vector<int> class_digits(int label, const Constellation& c, int arity) {
  std::vector<int> digits(static_cast<std::size_t>(arity));
  for (int p = 0; p < arity; ++p) {
    digits[static_cast<std::size_t>(p)] = label % c.size();
    label /= c.size();
  }
  return digits;
}

int class_digit(int label, const Constellation& c, int position) {
  for (int p = 0; p < position; ++p) label /= c.size();
  return label % c.size();
}

std::vector<cplx> class_symbols(int label, const Constellation& c, int arity) {
  std::vector<cplx> out(static_cast<std::size_t>(arity));
  for (int p = 0; p < arity; ++p) {
    out[static_cast<std::size_t>(p)] = c.point(label % c.size());
    label /= c.size();
  }
  return out;
}

int class_index_of_symbols(const std::vector<cplx>& symbols, const Constellation& c) {
  std::vector<int> digits(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const int p = c.exact_point(symbols[i]);
    if (p < 0) throw std::invalid_argument("symbol not in alphabet");
    digits[i] = p;
  }
  return class_index(digits, c);
}

int rotate_label(int label, int phase_idx, const Constellation& c, int arity) {
  int out = 0;
  int radix = 1;
  for (int p = 0; p < arity; ++p) {
    out += c.rotate_point(label % c.size(), phase_idx) * radix;
    label /= c.size();
    radix *= c.size();
  }
  return out;
}

std::vector<cplx> rotate_symbols(const std::vector<cplx>& symbols, double phi,
                                 const Constellation& c) {
  const int r = c.phase_index(phi);  // validates group membership
  std::vector<cplx> out(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const int p = c.exact_point(symbols[i]);
    if (p < 0) throw std::invalid_argument("symbol not in alphabet");
    out[i] = c.point(c.rotate_point(p, r));
  }
  return out;
}

}  // namespace deeprx
