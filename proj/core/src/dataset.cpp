#include "deeprx/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace deeprx {

void BlockLayout::validate() const {
  if (pilots < 1) throw std::invalid_argument("layout: pilots must be >= 1");
  if (info < 0) throw std::invalid_argument("layout: info must be >= 0");
}

void LabeledSet::validate() const {
  if (outputs.rows() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("labeled set: outputs/labels size mismatch");
  for (int l : labels)
    if (l < 0 || l >= n_classes) throw std::invalid_argument("labeled set: label out of range");
  if (space == OutputSpaceKind::ComplexStacked && dim() % 2 != 0)
    throw std::invalid_argument("labeled set: complex-stacked dim must be even");
}

std::vector<int> index_set(const LabeledSet& q, int label) {
  std::vector<int> idx;
  for (int i = 0; i < q.size(); ++i)
    if (q.labels[static_cast<std::size_t>(i)] == label) idx.push_back(i);
  return idx;
}

std::vector<std::vector<int>> index_sets(const LabeledSet& q) {
  std::vector<std::vector<int>> sets(static_cast<std::size_t>(q.n_classes));
  for (int i = 0; i < q.size(); ++i)
    sets[static_cast<std::size_t>(q.labels[static_cast<std::size_t>(i)])].push_back(i);
  return sets;
}

namespace {
std::vector<int> shuffled_classes(int n, std::mt19937_64& rng) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  return order;
}
}  // namespace

std::vector<int> make_pilot_points_siso(int b_pilot, const Constellation& c, int memory,
                                        std::mt19937_64& rng, bool require_coverage) {
  const int n_states = num_classes(c, memory);
  const int cycle = memory * n_states;
  if (require_coverage && b_pilot < cycle)
    throw std::invalid_argument("pilot coverage needs b_pilot >= L * M^L = " +
                                std::to_string(cycle));
  std::vector<int> points;
  points.reserve(static_cast<std::size_t>(b_pilot));
  if (require_coverage) {
    while (static_cast<int>(points.size()) + cycle <= b_pilot) {
      for (int s : shuffled_classes(n_states, rng)) {
        // Emit the state's symbols oldest-first so the state is the L most
        // recent symbols once the chunk completes.
        const auto digits = class_digits(s, c, memory);
        for (int p = memory - 1; p >= 0; --p) points.push_back(digits[static_cast<std::size_t>(p)]);
      }
    }
  }
  std::uniform_int_distribution<int> pick(0, c.size() - 1);
  while (static_cast<int>(points.size()) < b_pilot) points.push_back(pick(rng));
  return points;
}

std::vector<int> make_pilot_labels_mimo(int b_pilot, const Constellation& c, int users,
                                        std::mt19937_64& rng, bool require_coverage) {
  const int n_vectors = num_classes(c, users);
  if (require_coverage && b_pilot < n_vectors)
    throw std::invalid_argument("pilot coverage needs b_pilot >= M^K = " +
                                std::to_string(n_vectors));
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(b_pilot));
  if (require_coverage) {
    while (static_cast<int>(labels.size()) + n_vectors <= b_pilot) {
      for (int s : shuffled_classes(n_vectors, rng)) labels.push_back(s);
    }
  }
  std::uniform_int_distribution<int> pick(0, n_vectors - 1);
  while (static_cast<int>(labels.size()) < b_pilot) labels.push_back(pick(rng));
  return labels;
}

std::vector<int> siso_state_labels(const std::vector<int>& points, const Constellation& c,
                                   int memory) {
  std::vector<int> labels(points.size());
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    int label = 0;
    int radix = 1;
    for (int p = 0; p < memory; ++p) {
      const int digit = (i - p >= 0) ? points[static_cast<std::size_t>(i - p)] : 0;
      label += digit * radix;
      radix *= c.size();
    }
    labels[static_cast<std::size_t>(i)] = label;
  }
  return labels;
}

double symbol_value(int point_idx, const Constellation& c) {
  if (!c.is_real()) throw std::invalid_argument("symbol_value: complex constellation");
  return c.point(point_idx).real();
}

std::vector<double> points_to_symbols(const std::vector<int>& points, const Constellation& c) {
  std::vector<double> s(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) s[i] = symbol_value(points[i], c);
  return s;
}

SisoBlock generate_siso_block(const SisoChannelSpec& spec, const BlockLayout& layout,
                              const Constellation& c, std::mt19937_64& rng_pilots,
                              std::mt19937_64& rng_info, std::mt19937_64& rng_noise,
                              bool coverage) {
  layout.validate();
  spec.validate();
  SisoBlock block;
  block.visible.pilot_points =
      make_pilot_points_siso(layout.pilots, c, spec.memory(), rng_pilots, coverage);
  std::uniform_int_distribution<int> pick(0, c.size() - 1);
  block.truth.info_points.resize(static_cast<std::size_t>(layout.info));
  for (int& p : block.truth.info_points) p = pick(rng_info);

  std::vector<int> all_points = block.visible.pilot_points;
  all_points.insert(all_points.end(), block.truth.info_points.begin(),
                    block.truth.info_points.end());
  const std::vector<double> y = siso_transmit(points_to_symbols(all_points, c), spec, rng_noise);
  block.visible.pilot_outputs.assign(y.begin(), y.begin() + layout.pilots);
  block.visible.info_outputs.assign(y.begin() + layout.pilots, y.end());
  return block;
}

MimoBlock generate_mimo_block(const MimoChannelSpec& spec, const BlockLayout& layout,
                              const Constellation& c, std::mt19937_64& rng_pilots,
                              std::mt19937_64& rng_info, std::mt19937_64& rng_noise,
                              bool coverage) {
  layout.validate();
  spec.validate();
  MimoBlock block;
  block.visible.pilot_labels =
      make_pilot_labels_mimo(layout.pilots, c, spec.users, rng_pilots, coverage);
  std::uniform_int_distribution<int> pick(0, c.size() - 1);
  block.truth.info_labels.resize(static_cast<std::size_t>(layout.info));
  for (int& label : block.truth.info_labels) {
    int l = 0;
    int radix = 1;
    for (int k = 0; k < spec.users; ++k) {
      l += pick(rng_info) * radix;
      radix *= c.size();
    }
    label = l;
  }

  Eigen::MatrixXcd s(spec.users, layout.total());
  for (int u = 0; u < layout.total(); ++u) {
    const int label = u < layout.pilots
                          ? block.visible.pilot_labels[static_cast<std::size_t>(u)]
                          : block.truth.info_labels[static_cast<std::size_t>(u - layout.pilots)];
    int rem = label;
    for (int k = 0; k < spec.users; ++k) {
      s(k, u) = c.point(rem % c.size());
      rem /= c.size();
    }
  }
  const Eigen::MatrixXcd y = mimo_transmit(s, spec, rng_noise);
  block.visible.pilot_outputs = y.leftCols(layout.pilots);
  block.visible.info_outputs = y.rightCols(layout.info);
  return block;
}

LabeledSet build_siso_scalar_set(const SisoBlock::Visible& v, const Constellation& c, int memory,
                                 int block_index) {
  LabeledSet q;
  q.arity = memory;
  q.n_classes = num_classes(c, memory);
  q.space = OutputSpaceKind::Real;
  q.block_index = block_index;
  const int n = static_cast<int>(v.pilot_outputs.size());
  q.outputs.resize(n, 1);
  for (int i = 0; i < n; ++i) q.outputs(i, 0) = v.pilot_outputs[static_cast<std::size_t>(i)];
  q.labels = siso_state_labels(v.pilot_points, c, memory);
  return q;
}

LabeledSet build_siso_window_set(const SisoBlock::Visible& v, const Constellation& c, int memory,
                                 int window, int block_index) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  LabeledSet q;
  q.arity = memory;
  q.n_classes = num_classes(c, memory);
  q.space = OutputSpaceKind::Real;
  q.block_index = block_index;
  const int n = static_cast<int>(v.pilot_outputs.size());
  q.outputs.resize(n, window);
  for (int i = 0; i < n; ++i)
    for (int w = 0; w < window; ++w) {
      const int t = i - (window - 1) + w;
      q.outputs(i, w) = t >= 0 ? v.pilot_outputs[static_cast<std::size_t>(t)] : 0.0;
    }
  q.labels = siso_state_labels(v.pilot_points, c, memory);
  return q;
}

LabeledSet build_mimo_vector_set(const MimoBlock::Visible& v, const Constellation& c, int users,
                                 int block_index) {
  LabeledSet q;
  q.arity = users;
  q.n_classes = num_classes(c, users);
  q.space = OutputSpaceKind::ComplexStacked;
  q.block_index = block_index;
  const int n = static_cast<int>(v.pilot_labels.size());
  const int antennas = static_cast<int>(v.pilot_outputs.rows());
  if (v.pilot_outputs.cols() != n)
    throw std::invalid_argument("mimo labeled set: pilot outputs/labels mismatch");
  q.outputs.resize(n, 2 * antennas);
  for (int i = 0; i < n; ++i)
    q.outputs.row(i) = stack_complex(v.pilot_outputs.col(i)).transpose();
  q.labels = v.pilot_labels;
  q.validate();
  return q;
}

Eigen::VectorXd stack_complex(const Eigen::VectorXcd& y) {
  Eigen::VectorXd out(2 * y.size());
  for (Eigen::Index n = 0; n < y.size(); ++n) {
    out(2 * n) = y(n).real();
    out(2 * n + 1) = y(n).imag();
  }
  return out;
}

Eigen::VectorXcd unstack_complex(const Eigen::VectorXd& y) {
  if (y.size() % 2 != 0) throw std::invalid_argument("unstack_complex: odd length");
  Eigen::VectorXcd out(y.size() / 2);
  for (Eigen::Index n = 0; n < out.size(); ++n) out(n) = cplx(y(2 * n), y(2 * n + 1));
  return out;
}

}  // namespace deeprx
