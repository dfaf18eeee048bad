#include "poselift/eval.hpp"

#include <cmath>

namespace poselift {

namespace {

void check_pair(const PoseSequence3D& est, const PoseSequence3D& gt) {
  if (est.frame_count() != gt.frame_count()) throw DataError("sequence frame counts differ");
  if (est.frame_count() == 0) throw DataError("empty sequences");
  if (est.joint_count() != gt.joint_count()) throw DataError("sequence joint counts differ");
}

}  // namespace

double mean_limb_length(const PoseSequence3D& seq, const Skeleton& skeleton) {
  if (seq.frames.empty() || skeleton.edges.empty())
    throw DataError("no frames or no bones to measure");
  double acc = 0.0;
  for (const Pose3& s : seq.frames)
    for (const auto& [a, b] : skeleton.edges) acc += (s.col(a) - s.col(b)).norm();
  return acc / (seq.frames.size() * skeleton.edges.size());
}

PoseSequence3D rescale_to_limb_length(const PoseSequence3D& seq, const Skeleton& skeleton,
                                      double target) {
  skeleton.validate();
  if (target <= 0) throw DataError("target limb length must be positive");
  const double current = mean_limb_length(seq, skeleton);
  if (current < 1e-9) throw DataError("sequence has near-zero limb length");
  const double f = target / current;
  PoseSequence3D out;
  out.frames.reserve(seq.frames.size());
  for (const Pose3& s : seq.frames) {
    Eigen::Vector3d root = s.col(skeleton.root_index);
    Pose3 r = s;
    r.colwise() -= root;
    r *= f;
    r.colwise() += root;
    out.frames.push_back(std::move(r));
  }
  return out;
}

double per_joint_error(const PoseSequence3D& est, const PoseSequence3D& gt,
                       const Skeleton& skeleton, const std::vector<int>* joint_subset) {
  check_pair(est, gt);
  const int p = est.joint_count();
  double acc = 0.0;
  long count = 0;
  for (int t = 0; t < est.frame_count(); ++t) {
    const Eigen::Vector3d shift =
        gt.frames[t].col(skeleton.root_index) - est.frames[t].col(skeleton.root_index);
    auto dist = [&](int j) { return (est.frames[t].col(j) + shift - gt.frames[t].col(j)).norm(); };
    if (joint_subset) {
      for (int j : *joint_subset) {
        if (j < 0 || j >= p) throw DataError("joint subset index out of range");
        acc += dist(j);
        ++count;
      }
    } else {
      for (int j = 0; j < p; ++j) {
        acc += dist(j);
        ++count;
      }
    }
  }
  if (count == 0) throw DataError("empty joint subset");
  return acc / count;
}

std::pair<SimilarityTransform, double> procrustes_align(const Pose3& est, const Pose3& gt) {
  if (est.cols() != gt.cols()) throw DataError("poses have different joint counts");
  const int p = static_cast<int>(est.cols());
  if (p < 3) throw DataError("alignment needs at least 3 joints");

  const Eigen::Vector3d me = est.rowwise().mean();
  const Eigen::Vector3d mg = gt.rowwise().mean();
  Pose3 ec = est.colwise() - me;
  Pose3 gc = gt.colwise() - mg;

  const double var_g = gc.squaredNorm() / p;
  if (var_g < 1e-18) throw DataError("degenerate ground-truth pose");

  Mat3 cov = (ec * gc.transpose()) / p;
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(1) < 1e-12 * std::max(1.0, svd.singularValues()(0)))
    throw DataError("pose pair too collinear to align");
  Mat3 sgn = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) sgn(2, 2) = -1.0;

  SimilarityTransform tf;
  tf.rotation = svd.matrixU() * sgn * svd.matrixV().transpose();
  tf.scale = (svd.singularValues().asDiagonal() * sgn).trace() / var_g;
  if (tf.scale <= 0) throw DataError("alignment collapsed to a non-positive scale");
  tf.translation = me - tf.scale * tf.rotation * mg;

  const Pose3 aligned = tf.apply(gt);
  double acc = 0.0;
  for (int j = 0; j < p; ++j) acc += (est.col(j) - aligned.col(j)).norm();
  return {tf, acc / p};
}

double reconstruction_error(const PoseSequence3D& est, const PoseSequence3D& gt,
                            const std::vector<int>* joint_subset) {
  check_pair(est, gt);
  const int p = est.joint_count();
  double acc = 0.0;
  for (int t = 0; t < est.frame_count(); ++t) {
    auto [tf, residual] = procrustes_align(est.frames[t], gt.frames[t]);
    // distances are measured in the ground-truth frame (divide by the fitted
    // scale), which makes the result invariant to similarities of est
    if (!joint_subset) {
      acc += residual / tf.scale;
      continue;
    }
    const Pose3 aligned = tf.apply(gt.frames[t]);
    double sub = 0.0;
    for (int j : *joint_subset) {
      if (j < 0 || j >= p) throw DataError("joint subset index out of range");
      sub += (est.frames[t].col(j) - aligned.col(j)).norm();
    }
    if (joint_subset->empty()) throw DataError("empty joint subset");
    acc += sub / (tf.scale * joint_subset->size());
  }
  return acc / est.frame_count();
}

PcpResult pcp(const PoseSequence3D& est, const PoseSequence3D& gt, const Skeleton& skeleton,
              double tau) {
  check_pair(est, gt);
  skeleton.validate();
  if (skeleton.limb_pairs.empty()) throw DataError("skeleton declares no limbs to score");
  if (tau < 0) throw DataError("tau must be non-negative");

  PcpResult out;
  std::map<std::string, std::pair<long, long>> groups;  // correct, counted
  long correct = 0;
  for (int t = 0; t < est.frame_count(); ++t) {
    for (size_t l = 0; l < skeleton.limb_pairs.size(); ++l) {
      const auto& [a, b] = skeleton.limb_pairs[l];
      const double len = (gt.frames[t].col(a) - gt.frames[t].col(b)).norm();
      if (len < 1e-12) {
        ++out.skipped_parts;
        continue;
      }
      const double ea = (est.frames[t].col(a) - gt.frames[t].col(a)).norm();
      const double eb = (est.frames[t].col(b) - gt.frames[t].col(b)).norm();
      const bool ok = (ea + eb) / (2.0 * len) <= tau;
      const std::string& g =
          skeleton.limb_groups.empty() || skeleton.limb_groups[l].empty() ? "all"
                                                                          : skeleton.limb_groups[l];
      auto& [gc, gn] = groups[g];
      ++gn;
      ++out.counted_parts;
      if (ok) {
        ++gc;
        ++correct;
      }
    }
  }
  if (out.counted_parts == 0) throw DataError("every limb instance was skipped");
  out.overall = static_cast<double>(correct) / out.counted_parts;
  for (const auto& [name, cn] : groups)
    out.per_group[name] = static_cast<double>(cn.first) / cn.second;
  return out;
}

}  // namespace poselift
