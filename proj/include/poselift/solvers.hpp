#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "poselift/geom.hpp"

namespace poselift {

struct ApgReport {
  int iterations = 0;
  double objective = 0.0;
  double rel_change = 0.0;
  bool converged = false;
};

struct RotationStepReport {
  int iterations = 0;
  double grad_norm = 0.0;
  double objective_before = 0.0;  // loss + rotation smoothness, other terms fixed
  double objective_after = 0.0;
};

struct ApgOptions {
  int max_iter = 500;
  double tol = 1e-8;
  double l1_weight = 0.0;
  double lipschitz = 1.0;  // upper bound on the smooth part; backtracking refines
};

// Accelerated proximal gradient for f(x) + l1*|x|_1 with f convex smooth.
// Monotone variant: a candidate that fails to decrease the value triggers a
// momentum restart, so the recorded objective never increases. The prox is an
// inclusive soft threshold (|v| equal to the threshold maps to exactly zero).
ApgReport apg_l1_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                          const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& grad,
                          const ApgOptions& opt, Eigen::VectorXd& x);

// Coefficient step: convex in C with R, T, Z fixed. Warm-started from
// params.C; reaches the global optimum of its subproblem.
std::pair<Eigen::MatrixXd, ApgReport> update_C(const ModelParams& params,
                                               const PoseSequence2D& observed,
                                               const PoseDictionary& dict,
                                               const Hyperparams& hyper);

// Rotation step: Riemannian gradient descent over the rotation product
// manifold with Armijo backtracking; tangent steps through the exponential
// map, so iterates stay orthonormal by construction.
std::pair<std::vector<Mat3>, RotationStepReport> update_R(const ModelParams& params,
                                                          const PoseSequence2D& observed,
                                                          const PoseDictionary& dict,
                                                          const Hyperparams& hyper);

// Translation step, closed form: per-frame row mean of the residual over the
// visible joints. Frames with no visible joint keep their current value.
Eigen::MatrixXd update_T(const ModelParams& params, const PoseSequence2D& observed,
                         const PoseDictionary& dict, const Hyperparams& hyper);

// Depth step (perspective only), closed form per joint; the root depth stays
// pinned at 1 and invisible joints keep their current value. Depths are not
// clamped positive here; validity is checked on the final solution.
Eigen::MatrixXd update_Z(const ModelParams& params, const PoseSequence2D& observed,
                         const PoseDictionary& dict, const Hyperparams& hyper);

}  // namespace poselift
