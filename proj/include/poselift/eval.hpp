#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "poselift/geom.hpp"

namespace poselift {

struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose3 apply(const Pose3& s) const {
    return ((scale * rotation * s).colwise() + translation).eval();
  }
};

// Mean bone length over every frame and skeleton edge.
double mean_limb_length(const PoseSequence3D& seq, const Skeleton& skeleton);

// Scales every frame about its root joint by one global factor so the mean
// bone length lands exactly on `target`. Errors on a near-zero current length.
PoseSequence3D rescale_to_limb_length(const PoseSequence3D& seq, const Skeleton& skeleton,
                                      double target);

// Mean distance between matching joints after translating est so the roots
// coincide per frame. No rotation or scale correction. Optional joint subset
// restricts the average (the root still drives the alignment).
double per_joint_error(const PoseSequence3D& est, const PoseSequence3D& gt,
                       const Skeleton& skeleton, const std::vector<int>* joint_subset = nullptr);

// Best similarity transform taking gt onto est in least squares, reflection
// resolved toward det +1. Second element is the mean per-joint distance after
// alignment. Needs at least 3 non-collinear joints.
std::pair<SimilarityTransform, double> procrustes_align(const Pose3& est, const Pose3& gt);

// Mean over frames of the per-frame Procrustes-aligned mean joint distance,
// measured in the ground-truth frame so the value does not change when est is
// moved by a similarity transform.
double reconstruction_error(const PoseSequence3D& est, const PoseSequence3D& gt,
                            const std::vector<int>* joint_subset = nullptr);

struct PcpResult {
  double overall = 0.0;
  std::map<std::string, double> per_group;
  int counted_parts = 0;
  int skipped_parts = 0;  // zero-length ground-truth limbs
};

// Fraction of limb instances whose summed endpoint error stays within tau
// limb lengths: (|a_est-a_gt| + |b_est-b_gt|) / (2 |a_gt-b_gt|) <= tau.
// Groups key on the skeleton's limb group labels; unlabeled pairs fall under
// "all". Groups with no scorable instance are omitted from the breakdown.
PcpResult pcp(const PoseSequence3D& est, const PoseSequence3D& gt, const Skeleton& skeleton,
              double tau);

}  // namespace poselift
