// Data augmentation for deep receivers: per-class Gaussian cluster models,
// geometric sampling, constellation-conserving rotations, cross-cluster
// translation, the combined static scheme, and the adaptive smoothed variant
// for block-fading channels.
#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "deeprx/constellation.hpp"
#include "deeprx/dataset.hpp"

namespace deeprx {

// Per-class mean mu(s) and covariance Sigma(s) over the real-stacked output
// space. Classes never observed stay unset.
struct ClusterModel {
  Eigen::MatrixXd means;                      // n_classes x dim
  std::vector<Eigen::MatrixXd> covariances;   // n_classes of dim x dim
  std::vector<char> is_set;
  int n_classes = 0;
  int dim = 0;

  static ClusterModel empty(int n_classes, int dim);
  bool set(int label) const { return is_set[static_cast<std::size_t>(label)] != 0; }
  std::vector<int> set_labels() const;
  // CSV: label,mean_0..mean_{d-1},cov row-major. Unset classes are omitted.
  void write_csv(const std::string& path) const;
};

struct AugmentConfig {
  int kappa = 3;            // synthesis passes per original sample
  double alpha1 = 0.3;      // mean smoothing weight (dynamic scheme)
  double alpha2 = 0.3;      // covariance smoothing weight
  bool geometric = true;
  bool projection = true;
  bool translation = true;

  int enabled_count() const {
    return (geometric ? 1 : 0) + (projection ? 1 : 0) + (translation ? 1 : 0);
  }
  void validate() const;
};

// Cluster model carried between blocks by the dynamic scheme.
struct AugmentState {
  ClusterModel clusters;
  bool valid = false;
};

// mu(s) = average of outputs labeled s; covariance left zero, unset classes
// flagged.
ClusterModel estimate_means(const LabeledSet& q);
// Biased (divide-by-count) covariance about model.means, symmetrized.
void estimate_covariances(const LabeledSet& q, ClusterModel& model);
ClusterModel estimate_clusters(const LabeledSet& q);

// Regularization added before factorization: eps = 1e-6 * trace/dim + 1e-9.
double covariance_regularization(const Eigen::MatrixXd& cov);

// Rotation e^{j phi} acting on the real-stacked output space: sign flip on
// Real spaces (phi in {0, pi}), per-pair planar rotation on ComplexStacked.
Eigen::VectorXd apply_phase(const Eigen::VectorXd& y, double phi, OutputSpaceKind space);

// Draw from N(mu(s), Sigma(s) + eps I) via Cholesky; dim standard-normal
// variates per draw. Throws std::invalid_argument for unset classes.
Eigen::VectorXd geometric_sample(const ClusterModel& model, int label, std::mt19937_64& rng);

// Uniformly drawn group rotation applied to both halves of the pair.
std::pair<Eigen::VectorXd, int> conserving_projection(const Eigen::VectorXd& y, int label,
                                                      const Constellation& c, int arity,
                                                      OutputSpaceKind space,
                                                      std::mt19937_64& rng);

// y' = P y + (mu(s') - P mu(s)) for the rotation P = e^{j phase}. Deterministic
// given (pair, target, phase). Throws for unset source/target classes.
Eigen::VectorXd translate(const Eigen::VectorXd& y, int label, int target,
                          const ClusterModel& model, double phase, OutputSpaceKind space);

// Combined static scheme: Q* starts as Q; each of kappa passes appends, per
// original sample, one sample per enabled augmentation (geometric, projection,
// translation, in that order). With every class represented,
// |Q*| = (enabled * kappa + 1) * |Q|.
LabeledSet augment_static(const LabeledSet& q, const AugmentConfig& config,
                          const Constellation& c, std::mt19937_64& rng);

// Smoothed cluster estimate:
//   mu_j(s)    = a1 * batch_mean + (1 - a1) * mu_{j-1}(s)
//   Sigma_j(s) = a2 * batch_cov_about(mu_j(s)) + (1 - a2) * Sigma_{j-1}(s)
// Classes absent from the block keep the previous values; classes with no
// previous value bootstrap with a = 1.
ClusterModel smooth_clusters(const LabeledSet& q, const AugmentState& prev, double alpha1,
                             double alpha2);

// Dynamic scheme: smooth_clusters replaces the moment estimation, then the
// static synthesis loop runs unchanged. Returns the augmented set and the
// state to carry into the next block.
std::pair<LabeledSet, AugmentState> augment_dynamic(const LabeledSet& q,
                                                    const AugmentState& prev,
                                                    const AugmentConfig& config,
                                                    const Constellation& c,
                                                    std::mt19937_64& rng);

}  // namespace deeprx
