#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poselift/common.hpp"

namespace poselift {

using Mat3 = Eigen::Matrix3d;
using Pose3 = Eigen::Matrix3Xd;  // 3 x p, one column per joint
using Pose2 = Eigen::Matrix2Xd;  // 2 x p

struct Skeleton {
  int joint_count = 0;
  std::vector<std::string> joint_names;
  int root_index = 0;
  std::vector<std::pair<int, int>> edges;       // bone connectivity, a tree
  std::vector<std::pair<int, int>> limb_pairs;  // endpoint pairs scored by pcp()
  std::vector<std::string> limb_groups;         // parallel to limb_pairs, may be empty

  // Checks index ranges, name count, and that edges form a single connected
  // acyclic graph spanning all joints. Throws DataError.
  void validate() const;
};

struct PoseSequence3D {
  std::vector<Pose3> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int joint_count() const { return frames.empty() ? 0 : static_cast<int>(frames[0].cols()); }
};

struct PoseSequence2D {
  std::vector<Pose2> frames;
  // n x p; size zero means every joint observed. Invisible joints contribute
  // zero residual to the loss.
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> visibility;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int joint_count() const { return frames.empty() ? 0 : static_cast<int>(frames[0].cols()); }
  bool visible(int t, int j) const {
    return visibility.size() == 0 || visibility(t, j);
  }
  bool all_visible() const { return visibility.size() == 0 || visibility.all(); }
};

enum class CameraMode { kOrthographic, kPerspective };

struct PoseDictionary {
  Skeleton skeleton;
  std::vector<Pose3> atoms;       // k atoms, each 3 x p, root-centered
  double atom_scale = 1.0;        // Frobenius bound every atom satisfies
  double mean_limb_length = 0.0;  // mean bone length of the training data
  Eigen::VectorXd mean_pose_code; // code of the mean training pose

  int atom_count() const { return static_cast<int>(atoms.size()); }
  // Atoms stacked column-wise, 3p x k (column-major vec of each atom).
  Eigen::MatrixXd atom_matrix() const;
  Pose3 mean_pose() const;
  void validate() const;
};

// C is k x n (column t = coefficients of frame t). T is 2 x n under
// orthographic and 3 x n under perspective. Z is p x n, empty unless
// perspective; the root row is pinned to 1, which fixes the depth gauge.
struct ModelParams {
  CameraMode camera_mode = CameraMode::kOrthographic;
  Eigen::MatrixXd C;
  std::vector<Mat3> R;
  Eigen::MatrixXd T;
  Eigen::MatrixXd Z;

  int frame_count() const { return static_cast<int>(R.size()); }
  // require_positive_depth is off while a solver is mid-iteration; depths may
  // pass through zero there and only the final solution is checked.
  void validate(const PoseDictionary& dict, bool require_positive_depth = false) const;
};

struct Hyperparams {
  double alpha = 0.5;  // l1 weight on C
  double beta = 20.0;  // temporal smoothness of C
  double gamma = 2.0;  // temporal smoothness of R
  double nu = 1.0;     // residual precision

  std::optional<Mat3> calibration;  // required for perspective

  double bcd_tol = 1e-6;
  int bcd_max_iter = 200;
  int em_max_iter = 20;
  double apg_tol = 1e-8;
  int apg_max_iter = 500;
  double rot_grad_tol = 1e-8;
  int rot_max_iter = 50;
  int dict_rounds = 30;

  void validate() const;  // positivity of weights and iteration caps
};

Mat3 skew(const Eigen::Vector3d& w);
Mat3 exp_so3(const Eigen::Vector3d& w);  // Rodrigues
// Nearest rotation in Frobenius norm, reflection resolved toward det +1.
Mat3 project_to_so3(const Mat3& m);

// S_t = sum_i C(i,t) * atoms[i]
PoseSequence3D compose_pose(const Eigen::MatrixXd& C, const PoseDictionary& dict);

// Orthographic: first two rows of R_t S_t plus T_t. Perspective: full pinhole
// with params.calibration; throws DataError if a joint lands at depth <= 1e-12.
PoseSequence2D project(const ModelParams& params, const PoseDictionary& dict,
                       const Hyperparams& hyper);

// (nu/2) sum_t of the squared Frobenius residual between the observations and
// the camera model. Perspective uses the stored depths Z, not a reprojection.
double loss(const ModelParams& params, const PoseSequence2D& observed,
            const PoseDictionary& dict, const Hyperparams& hyper);

// alpha*|C|_1 + (beta/2)*|forward diff of C|^2 + (gamma/2)*|forward diff of R|^2
double prior_penalty(const ModelParams& params, const Hyperparams& hyper);

double objective(const ModelParams& params, const PoseSequence2D& observed,
                 const PoseDictionary& dict, const Hyperparams& hyper);

// Perspective helper: Kinv * [W_t; 1] * diag(z_t), the 3D points the camera
// equations pin each joint to at the stored depths.
Eigen::Matrix3Xd backproject(const Pose2& w, const Eigen::VectorXd& z, const Mat3& kinv);

}  // namespace poselift
