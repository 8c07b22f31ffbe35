#include "deeprx/augment.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace deeprx {

namespace {

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& cov) {
  const double eps = covariance_regularization(cov);
  Eigen::MatrixXd reg = 0.5 * (cov + cov.transpose());
  reg.diagonal().array() += eps;
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("cluster covariance not factorizable after regularization");
  return llt.matrixL();
}

Eigen::VectorXd sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol_l,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> standard(0.0, 1.0);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = standard(rng);
  return mean + chol_l * z;
}

// Synthesis passes shared by the static and dynamic schemes (Algorithm 1's
// buffer loop, given an already-estimated cluster model).
LabeledSet run_synthesis(const LabeledSet& q, const ClusterModel& model,
                         const AugmentConfig& config, const Constellation& c,
                         std::mt19937_64& rng) {
  const int n = q.size();
  const long total = static_cast<long>(n) * (1 + static_cast<long>(config.enabled_count()) * config.kappa);
  LabeledSet out;
  out.arity = q.arity;
  out.n_classes = q.n_classes;
  out.space = q.space;
  out.block_index = q.block_index;
  out.outputs.resize(total, q.dim());
  out.labels = q.labels;
  out.labels.reserve(static_cast<std::size_t>(total));
  out.outputs.topRows(n) = q.outputs;

  // Cache factors and the list of viable translation targets.
  std::vector<Eigen::MatrixXd> chol(static_cast<std::size_t>(q.n_classes));
  std::vector<char> has_chol(static_cast<std::size_t>(q.n_classes), 0);
  const std::vector<int> set_labels = model.set_labels();

  Eigen::Index row = n;
  auto append = [&](const Eigen::VectorXd& y, int label) {
    out.outputs.row(row++) = y.transpose();
    out.labels.push_back(label);
  };

  for (int pass = 0; pass < config.kappa; ++pass) {
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd y = q.outputs.row(i).transpose();
      const int s = q.labels[static_cast<std::size_t>(i)];

      if (config.geometric && model.set(s)) {
        auto& f = chol[static_cast<std::size_t>(s)];
        if (!has_chol[static_cast<std::size_t>(s)]) {
          f = cholesky_factor(model.covariances[static_cast<std::size_t>(s)]);
          has_chol[static_cast<std::size_t>(s)] = 1;
        }
        append(sample_gaussian(model.means.row(s).transpose(), f, rng), s);
      }

      if (config.projection) {
        std::uniform_int_distribution<int> pick(0, c.group_size() - 1);
        const int r = pick(rng);
        append(apply_phase(y, c.group_phases()[static_cast<std::size_t>(r)], q.space),
               rotate_label(s, r, c, q.arity));
      }

      if (config.translation && model.set(s)) {
        // Uniform target among set classes other than s; skip when s is the
        // only set class.
        const int others = static_cast<int>(set_labels.size()) - 1;
        if (others >= 1) {
          std::uniform_int_distribution<int> pick_target(0, others - 1);
          int idx = pick_target(rng);
          const auto it = std::lower_bound(set_labels.begin(), set_labels.end(), s);
          const int pos = static_cast<int>(it - set_labels.begin());
          if (idx >= pos) ++idx;  // set_labels is sorted and contains s
          const int t = set_labels[static_cast<std::size_t>(idx)];
          std::uniform_int_distribution<int> pick_phase(0, c.group_size() - 1);
          const int r = pick_phase(rng);
          append(translate(y, s, t, model, c.group_phases()[static_cast<std::size_t>(r)], q.space),
                 t);
        }
      }
    }
  }
  // Classes that could not act as translation sources leave gaps below the
  // preallocated size.
  if (row < total) out.outputs.conservativeResize(row, Eigen::NoChange);
  out.validate();
  return out;
}

}  // namespace

ClusterModel ClusterModel::empty(int n_classes, int dim) {
  ClusterModel m;
  m.n_classes = n_classes;
  m.dim = dim;
  m.means = Eigen::MatrixXd::Zero(n_classes, dim);
  m.covariances.assign(static_cast<std::size_t>(n_classes), Eigen::MatrixXd::Zero(dim, dim));
  m.is_set.assign(static_cast<std::size_t>(n_classes), 0);
  return m;
}

std::vector<int> ClusterModel::set_labels() const {
  std::vector<int> out;
  for (int s = 0; s < n_classes; ++s)
    if (set(s)) out.push_back(s);
  return out;
}

void ClusterModel::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "label";
  for (int d = 0; d < dim; ++d) f << ",mean_" << d;
  for (int r = 0; r < dim; ++r)
    for (int cidx = 0; cidx < dim; ++cidx) f << ",cov_" << r << "_" << cidx;
  f << "\n";
  for (int s = 0; s < n_classes; ++s) {
    if (!set(s)) continue;
    f << s;
    for (int d = 0; d < dim; ++d) f << "," << format_full(means(s, d));
    const auto& cov = covariances[static_cast<std::size_t>(s)];
    for (int r = 0; r < dim; ++r)
      for (int cidx = 0; cidx < dim; ++cidx) f << "," << format_full(cov(r, cidx));
    f << "\n";
  }
}

void AugmentConfig::validate() const {
  if (kappa < 0) throw std::invalid_argument("augment: kappa must be >= 0");
  if (alpha1 < 0.0 || alpha1 > 1.0 || alpha2 < 0.0 || alpha2 > 1.0)
    throw std::invalid_argument("augment: alpha weights must lie in [0,1]");
}

ClusterModel estimate_means(const LabeledSet& q) {
  q.validate();
  ClusterModel model = ClusterModel::empty(q.n_classes, q.dim());
  std::vector<int> counts(static_cast<std::size_t>(q.n_classes), 0);
  for (int i = 0; i < q.size(); ++i) {
    const int s = q.labels[static_cast<std::size_t>(i)];
    model.means.row(s) += q.outputs.row(i);
    ++counts[static_cast<std::size_t>(s)];
  }
  for (int s = 0; s < q.n_classes; ++s) {
    if (counts[static_cast<std::size_t>(s)] > 0) {
      model.means.row(s) /= counts[static_cast<std::size_t>(s)];
      model.is_set[static_cast<std::size_t>(s)] = 1;
    }
  }
  return model;
}

void estimate_covariances(const LabeledSet& q, ClusterModel& model) {
  if (model.n_classes != q.n_classes || model.dim != q.dim())
    throw std::invalid_argument("estimate_covariances: model/q shape mismatch");
  std::vector<int> counts(static_cast<std::size_t>(q.n_classes), 0);
  for (auto& cov : model.covariances) cov.setZero();
  for (int i = 0; i < q.size(); ++i) {
    const int s = q.labels[static_cast<std::size_t>(i)];
    const Eigen::VectorXd d = q.outputs.row(i).transpose() - model.means.row(s).transpose();
    model.covariances[static_cast<std::size_t>(s)] += d * d.transpose();
    ++counts[static_cast<std::size_t>(s)];
  }
  for (int s = 0; s < q.n_classes; ++s) {
    if (counts[static_cast<std::size_t>(s)] > 0) {
      auto& cov = model.covariances[static_cast<std::size_t>(s)];
      cov /= counts[static_cast<std::size_t>(s)];
      cov = (0.5 * (cov + cov.transpose())).eval();
    }
  }
}

ClusterModel estimate_clusters(const LabeledSet& q) {
  ClusterModel model = estimate_means(q);
  estimate_covariances(q, model);
  return model;
}

double covariance_regularization(const Eigen::MatrixXd& cov) {
  return 1e-6 * cov.trace() / static_cast<double>(cov.rows()) + 1e-9;
}

Eigen::VectorXd apply_phase(const Eigen::VectorXd& y, double phi, OutputSpaceKind space) {
  if (space == OutputSpaceKind::Real) {
    const double c = std::cos(phi);
    if (std::abs(c - 1.0) < 1e-9) return y;
    if (std::abs(c + 1.0) < 1e-9) return -y;
    throw std::invalid_argument("real output space admits only phases 0 and pi");
  }
  if (y.size() % 2 != 0) throw std::invalid_argument("complex-stacked vector has odd length");
  const double co = std::cos(phi);
  const double si = std::sin(phi);
  Eigen::VectorXd out(y.size());
  for (Eigen::Index n = 0; n < y.size(); n += 2) {
    out(n) = co * y(n) - si * y(n + 1);
    out(n + 1) = si * y(n) + co * y(n + 1);
  }
  return out;
}

Eigen::VectorXd geometric_sample(const ClusterModel& model, int label, std::mt19937_64& rng) {
  if (label < 0 || label >= model.n_classes || !model.set(label))
    throw std::invalid_argument("geometric_sample: class has no estimated cluster");
  const Eigen::MatrixXd l = cholesky_factor(model.covariances[static_cast<std::size_t>(label)]);
  return sample_gaussian(model.means.row(label).transpose(), l, rng);
}

std::pair<Eigen::VectorXd, int> conserving_projection(const Eigen::VectorXd& y, int label,
                                                      const Constellation& c, int arity,
                                                      OutputSpaceKind space,
                                                      std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, c.group_size() - 1);
  const int r = pick(rng);
  return {apply_phase(y, c.group_phases()[static_cast<std::size_t>(r)], space),
          rotate_label(label, r, c, arity)};
}

Eigen::VectorXd translate(const Eigen::VectorXd& y, int label, int target,
                          const ClusterModel& model, double phase, OutputSpaceKind space) {
  if (!model.set(label)) throw std::invalid_argument("translate: source class unset");
  if (target < 0 || target >= model.n_classes || !model.set(target))
    throw std::invalid_argument("translate: target class unset");
  const Eigen::VectorXd rotated_mu = apply_phase(model.means.row(label).transpose(), phase, space);
  const Eigen::VectorXd delta = model.means.row(target).transpose() - rotated_mu;
  return apply_phase(y, phase, space) + delta;
}

LabeledSet augment_static(const LabeledSet& q, const AugmentConfig& config,
                          const Constellation& c, std::mt19937_64& rng) {
  config.validate();
  return run_synthesis(q, estimate_clusters(q), config, c, rng);
}

ClusterModel smooth_clusters(const LabeledSet& q, const AugmentState& prev, double alpha1,
                             double alpha2) {
  q.validate();
  if (prev.valid &&
      (prev.clusters.n_classes != q.n_classes || prev.clusters.dim != q.dim()))
    throw std::invalid_argument("smooth_clusters: previous state shape mismatch");

  ClusterModel batch_means = estimate_means(q);
  ClusterModel model = ClusterModel::empty(q.n_classes, q.dim());
  const auto sets = index_sets(q);

  for (int s = 0; s < q.n_classes; ++s) {
    const bool have_batch = !sets[static_cast<std::size_t>(s)].empty();
    const bool have_prev = prev.valid && prev.clusters.set(s);
    if (!have_batch && !have_prev) continue;
    model.is_set[static_cast<std::size_t>(s)] = 1;

    if (!have_batch) {
      model.means.row(s) = prev.clusters.means.row(s);
      model.covariances[static_cast<std::size_t>(s)] =
          prev.clusters.covariances[static_cast<std::size_t>(s)];
      continue;
    }
    const double a1 = have_prev ? alpha1 : 1.0;
    const double a2 = have_prev ? alpha2 : 1.0;

    model.means.row(s) = a1 * batch_means.means.row(s);
    if (have_prev) model.means.row(s) += (1.0 - a1) * prev.clusters.means.row(s);

    // Batch second moment about the smoothed mean mu_j(s).
    Eigen::MatrixXd batch_cov = Eigen::MatrixXd::Zero(q.dim(), q.dim());
    for (int i : sets[static_cast<std::size_t>(s)]) {
      const Eigen::VectorXd d = q.outputs.row(i).transpose() - model.means.row(s).transpose();
      batch_cov += d * d.transpose();
    }
    batch_cov /= static_cast<double>(sets[static_cast<std::size_t>(s)].size());
    batch_cov = (0.5 * (batch_cov + batch_cov.transpose())).eval();
    model.covariances[static_cast<std::size_t>(s)] = a2 * batch_cov;
    if (have_prev)
      model.covariances[static_cast<std::size_t>(s)] +=
          (1.0 - a2) * prev.clusters.covariances[static_cast<std::size_t>(s)];
  }
  return model;
}

std::pair<LabeledSet, AugmentState> augment_dynamic(const LabeledSet& q,
                                                    const AugmentState& prev,
                                                    const AugmentConfig& config,
                                                    const Constellation& c,
                                                    std::mt19937_64& rng) {
  config.validate();
  ClusterModel model = smooth_clusters(q, prev, config.alpha1, config.alpha2);
  LabeledSet qstar = run_synthesis(q, model, config, c, rng);
  AugmentState next;
  next.clusters = std::move(model);
  next.valid = true;
  return {std::move(qstar), std::move(next)};
}

}  // namespace deeprx
