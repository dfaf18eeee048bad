#include "poselift/geom.hpp"

#include <cmath>
#include <queue>

namespace poselift {

namespace {

void check_joint_index(int j, int p, const char* what) {
  if (j < 0 || j >= p)
    throw DataError(std::string(what) + " index " + std::to_string(j) + " out of range for " +
                    std::to_string(p) + " joints");
}

}  // namespace

void Skeleton::validate() const {
  if (joint_count <= 0) throw DataError("skeleton has no joints");
  if (!joint_names.empty() && static_cast<int>(joint_names.size()) != joint_count)
    throw DataError("joint name count does not match joint count");
  check_joint_index(root_index, joint_count, "root");
  for (const auto& [a, b] : edges) {
    check_joint_index(a, joint_count, "edge");
    check_joint_index(b, joint_count, "edge");
    if (a == b) throw DataError("self-loop edge at joint " + std::to_string(a));
  }
  for (const auto& [a, b] : limb_pairs) {
    check_joint_index(a, joint_count, "limb");
    check_joint_index(b, joint_count, "limb");
  }
  if (!limb_groups.empty() && limb_groups.size() != limb_pairs.size())
    throw DataError("limb group labels do not match limb pair count");

  // tree check: connected and acyclic means exactly p-1 edges reaching everyone
  if (static_cast<int>(edges.size()) != joint_count - 1)
    throw DataError("skeleton edges must form a tree (expected " +
                    std::to_string(joint_count - 1) + " edges, got " +
                    std::to_string(edges.size()) + ")");
  std::vector<std::vector<int>> adj(joint_count);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(joint_count, 0);
  std::queue<int> q;
  q.push(root_index);
  seen[root_index] = 1;
  int reached = 0;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    ++reached;
    for (int u : adj[v])
      if (!seen[u]) {
        seen[u] = 1;
        q.push(u);
      }
  }
  if (reached != joint_count) throw DataError("skeleton edges do not connect all joints");
}

Eigen::MatrixXd PoseDictionary::atom_matrix() const {
  const int k = atom_count();
  const int p = skeleton.joint_count;
  Eigen::MatrixXd a(3 * p, k);
  for (int i = 0; i < k; ++i)
    a.col(i) = Eigen::Map<const Eigen::VectorXd>(atoms[i].data(), 3 * p);
  return a;
}

Pose3 PoseDictionary::mean_pose() const {
  const int p = skeleton.joint_count;
  Pose3 s = Pose3::Zero(3, p);
  for (int i = 0; i < atom_count(); ++i) s += mean_pose_code(i) * atoms[i];
  return s;
}

void PoseDictionary::validate() const {
  skeleton.validate();
  if (atoms.empty()) throw DataError("dictionary has no atoms");
  const int p = skeleton.joint_count;
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].cols() != p)
      throw DataError("atom " + std::to_string(i) + " has wrong joint count");
    if (atoms[i].norm() > atom_scale + 1e-9)
      throw DataError("atom " + std::to_string(i) + " exceeds the norm bound");
  }
  if (mean_pose_code.size() != atom_count())
    throw DataError("mean pose code length does not match atom count");
  if (mean_limb_length < 0) throw DataError("negative mean limb length");
}

void ModelParams::validate(const PoseDictionary& dict, bool require_positive_depth) const {
  const int n = frame_count();
  const int k = dict.atom_count();
  const int p = dict.skeleton.joint_count;
  if (C.rows() != k || C.cols() != n) throw DataError("C has wrong shape");
  if (T.cols() != n) throw DataError("T has wrong frame count");
  const int trows = camera_mode == CameraMode::kOrthographic ? 2 : 3;
  if (T.rows() != trows) throw DataError("T has wrong row count for the camera mode");
  for (int t = 0; t < n; ++t) {
    const Mat3& r = R[t];
    if ((r.transpose() * r - Mat3::Identity()).norm() > 1e-8)
      throw DataError("rotation " + std::to_string(t) + " is not orthonormal");
    if (std::abs(r.determinant() - 1.0) > 1e-8)
      throw DataError("rotation " + std::to_string(t) + " has determinant away from +1");
  }
  if (camera_mode == CameraMode::kPerspective) {
    if (Z.rows() != p || Z.cols() != n) throw DataError("Z has wrong shape");
    for (int t = 0; t < n; ++t) {
      if (Z(dict.skeleton.root_index, t) != 1.0)
        throw DataError("root depth must be exactly 1 in frame " + std::to_string(t));
      if (require_positive_depth && (Z.col(t).array() <= 0.0).any())
        throw DataError("non-positive depth in frame " + std::to_string(t));
    }
  } else if (Z.size() != 0) {
    throw DataError("orthographic params carry a depth array");
  }
}

void Hyperparams::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0) throw DataError("prior weights must be >= 0");
  if (nu <= 0) throw DataError("nu must be > 0");
  if (bcd_tol <= 0 || apg_tol <= 0 || rot_grad_tol <= 0) throw DataError("tolerances must be > 0");
  if (bcd_max_iter < 0 || em_max_iter < 0 || apg_max_iter <= 0 || rot_max_iter <= 0 ||
      dict_rounds <= 0)
    throw DataError("iteration caps must be positive");
}

Mat3 skew(const Eigen::Vector3d& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

Mat3 exp_so3(const Eigen::Vector3d& w) {
  const double th = w.norm();
  if (th < 1e-12) {
    Mat3 k = skew(w);
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  Mat3 k = skew(w / th);
  return Mat3::Identity() + std::sin(th) * k + (1.0 - std::cos(th)) * k * k;
}

Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

PoseSequence3D compose_pose(const Eigen::MatrixXd& C, const PoseDictionary& dict) {
  if (C.rows() != dict.atom_count())
    throw DataError("coefficient rows (" + std::to_string(C.rows()) +
                    ") do not match the dictionary size (" + std::to_string(dict.atom_count()) +
                    ")");
  const int p = dict.skeleton.joint_count;
  PoseSequence3D out;
  out.frames.resize(C.cols());
  for (int t = 0; t < C.cols(); ++t) {
    Pose3 s = Pose3::Zero(3, p);
    for (int i = 0; i < C.rows(); ++i)
      if (C(i, t) != 0.0) s.noalias() += C(i, t) * dict.atoms[i];
    out.frames[t] = std::move(s);
  }
  return out;
}

PoseSequence2D project(const ModelParams& params, const PoseDictionary& dict,
                       const Hyperparams& hyper) {
  const int n = params.frame_count();
  const int p = dict.skeleton.joint_count;
  PoseSequence3D shapes = compose_pose(params.C, dict);
  PoseSequence2D out;
  out.frames.resize(n);
  if (params.camera_mode == CameraMode::kOrthographic) {
    for (int t = 0; t < n; ++t) {
      out.frames[t] = params.R[t].topRows<2>() * shapes.frames[t];
      out.frames[t].colwise() += Eigen::Vector2d(params.T.col(t));
    }
    return out;
  }
  if (!hyper.calibration) throw DataError("perspective projection requires a calibration");
  const Mat3& k = *hyper.calibration;
  for (int t = 0; t < n; ++t) {
    Eigen::Matrix3Xd x = params.R[t] * shapes.frames[t];
    x.colwise() += Eigen::Vector3d(params.T.col(t));
    out.frames[t].resize(2, p);
    for (int j = 0; j < p; ++j) {
      Eigen::Vector3d h = k * x.col(j);
      if (h.z() <= 1e-12)
        throw DataError("joint " + std::to_string(j) + " in frame " + std::to_string(t) +
                        " projects at non-positive depth");
      out.frames[t].col(j) = h.head<2>() / h.z();
    }
  }
  return out;
}

Eigen::Matrix3Xd backproject(const Pose2& w, const Eigen::VectorXd& z, const Mat3& kinv) {
  Eigen::Matrix3Xd h(3, w.cols());
  h.topRows<2>() = w;
  h.row(2).setOnes();
  return (kinv * h) * z.asDiagonal();
}

double loss(const ModelParams& params, const PoseSequence2D& observed,
            const PoseDictionary& dict, const Hyperparams& hyper) {
  const int n = params.frame_count();
  const int p = dict.skeleton.joint_count;
  if (observed.frame_count() != n) throw DataError("observation frame count mismatch");
  if (observed.joint_count() != p) throw DataError("observation joint count mismatch");

  PoseSequence3D shapes = compose_pose(params.C, dict);
  double acc = 0.0;
  const bool persp = params.camera_mode == CameraMode::kPerspective;
  Mat3 kinv = Mat3::Identity();
  if (persp) {
    if (!hyper.calibration) throw DataError("perspective loss requires a calibration");
    kinv = hyper.calibration->inverse();
  }
  for (int t = 0; t < n; ++t) {
    Eigen::MatrixXd res;
    if (persp) {
      res = backproject(observed.frames[t], params.Z.col(t), kinv);
      res.noalias() -= params.R[t] * shapes.frames[t];
      res.colwise() -= Eigen::Vector3d(params.T.col(t));
    } else {
      res = observed.frames[t];
      res.noalias() -= params.R[t].topRows<2>() * shapes.frames[t];
      res.colwise() -= Eigen::Vector2d(params.T.col(t));
    }
    if (!observed.all_visible())
      for (int j = 0; j < p; ++j)
        if (!observed.visible(t, j)) res.col(j).setZero();
    acc += res.squaredNorm();
  }
  return 0.5 * hyper.nu * acc;
}

double prior_penalty(const ModelParams& params, const Hyperparams& hyper) {
  const int n = params.frame_count();
  double l1 = params.C.lpNorm<1>();
  double dc = 0.0, dr = 0.0;
  for (int t = 0; t + 1 < n; ++t) {
    dc += (params.C.col(t + 1) - params.C.col(t)).squaredNorm();
    dr += (params.R[t + 1] - params.R[t]).squaredNorm();
  }
  return hyper.alpha * l1 + 0.5 * hyper.beta * dc + 0.5 * hyper.gamma * dr;
}

double objective(const ModelParams& params, const PoseSequence2D& observed,
                 const PoseDictionary& dict, const Hyperparams& hyper) {
  return loss(params, observed, dict, hyper) + prior_penalty(params, hyper);
}

}  // namespace poselift
