// Digital alphabets (BPSK, QPSK): Gray bit maps, mixed-radix class labels over
// symbol tuples, and the constellation-conserving rotation group.
#pragma once

#include <complex>
#include <string>
#include <vector>

namespace deeprx {

using cplx = std::complex<double>;

class Constellation {
 public:
  static const Constellation& bpsk();
  static const Constellation& qpsk();
  static const Constellation& by_name(const std::string& name);

  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(points_.size()); }  // M
  int bits_per_symbol() const { return bits_per_symbol_; }
  bool is_real() const { return real_; }
  const std::vector<cplx>& points() const { return points_; }
  const cplx& point(int idx) const { return points_[static_cast<std::size_t>(idx)]; }

  // Gray map, least-significant bit first: QPSK point index p = b0 + 2*b1,
  // b0 selecting the real sign and b1 the imaginary sign (0 -> +).
  int bits_to_point(const int* bits) const;
  void point_to_bits(int point_idx, int* bits_out) const;
  int bit_of_point(int point_idx, int bit_pos) const;
  int bit_difference(int p, int q) const;  // Hamming distance between bit patterns

  // Rejects bit strings whose length is not a multiple of bits_per_symbol.
  std::vector<cplx> modulate(const std::vector<int>& bits) const;
  std::vector<int> demodulate(const std::vector<cplx>& symbols) const;  // bits, nearest-point
  std::vector<int> demodulate_points(const std::vector<cplx>& symbols) const;
  int nearest_point(cplx v) const;
  // Index of an exact alphabet member (tolerance 1e-9), or -1.
  int exact_point(cplx v) const;

  // Phases phi with e^{j phi} * S = S. BPSK: {0, pi}; QPSK: {0, pi/2, pi, 3pi/2}.
  const std::vector<double>& group_phases() const { return group_phases_; }
  int group_size() const { return static_cast<int>(group_phases_.size()); }
  int phase_index(double phi) const;  // throws std::invalid_argument outside the group
  int rotate_point(int point_idx, int phase_idx) const {
    return rotation_perm_[static_cast<std::size_t>(phase_idx)][static_cast<std::size_t>(point_idx)];
  }

 private:
  Constellation(std::string name, std::vector<cplx> points, int bits_per_symbol, bool real,
                std::vector<double> group_phases);

  std::string name_;
  std::vector<cplx> points_;
  int bits_per_symbol_;
  bool real_;
  std::vector<double> group_phases_;
  std::vector<std::vector<int>> rotation_perm_;  // [phase][point] -> point
};

// Mixed-radix class labels over symbol tuples of length `arity` (the SISO
// L-symbol state or the MIMO K-user vector). Digit p is the point index of
// tuple element p, least significant first.
int num_classes(const Constellation& c, int arity);
int class_index(const std::vector<int>& digits, const Constellation& c);
std::vector<int> class_digits(int label, const Constellation& c, int arity);
int class_digit(int label, const Constellation& c, int position);
std::vector<cplx> class_symbols(int label, const Constellation& c, int arity);
// Rejects tuples containing symbols outside the alphabet.
int class_index_of_symbols(const std::vector<cplx>& symbols, const Constellation& c);

// Rotates every digit of a label by the group element `phase_idx`.
int rotate_label(int label, int phase_idx, const Constellation& c, int arity);
// Rotates a symbol tuple by phase phi; phi must belong to the rotation group.
std::vector<cplx> rotate_symbols(const std::vector<cplx>& symbols, double phi,
                                 const Constellation& c);

}  // namespace deeprx
