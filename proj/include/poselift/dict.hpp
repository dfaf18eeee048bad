#pragma once

#include <cstdint>
#include <vector>

#include "poselift/geom.hpp"

namespace poselift {

struct TrainingPoses {
  Skeleton skeleton;
  std::vector<Pose3> poses;  // root-centered
  double mean_limb_length = 0.0;

  int pose_count() const { return static_cast<int>(poses.size()); }
};

// Root-centers every pose and computes the mean bone length. Poses whose
// every bone has positive length are kept; if more than 1% of the input has a
// zero-length bone the batch is rejected as corrupt.
TrainingPoses preprocess(const std::vector<Pose3>& raw, const Skeleton& skeleton);

struct LearnReport {
  int rounds = 0;
  double objective = 0.0;     // 0.5*|X - BC|^2 + alpha*|C|_1 over the batch
  double train_error = 0.0;   // mean per-pose reconstruction residual norm
  int reseeded = 0;           // dead atoms restarted from poorly-fit poses
  bool size_warning = false;  // fewer training poses than atoms
};

// Alternates l1 sparse coding of the batch against the current atoms with
// per-atom constrained least squares (each atom's update is exact under the
// unit-ball constraint, so the objective never rises across rounds). Atoms
// start from seeded random training poses; an atom no pose selects is
// restarted from the worst-reconstructed pose. Stops after hyper.dict_rounds
// rounds or when the objective's relative change drops below 1e-4.
PoseDictionary learn_dictionary(const TrainingPoses& train, int k, const Hyperparams& hyper,
                                std::uint64_t seed, LearnReport* report = nullptr);

// Code of a single pose against the dictionary: the l1-penalized least
// squares fit, solved to its global optimum.
Eigen::VectorXd sparse_code(const Pose3& pose, const PoseDictionary& dict, double alpha);

}  // namespace poselift
