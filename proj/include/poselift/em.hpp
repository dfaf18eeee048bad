#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "poselift/bcd.hpp"

namespace poselift {

// Affine map from pixel indices to image coordinates; the default unit grid
// puts pixel centers at ((col+0.5)/width, (row+0.5)/height).
struct CoordMap {
  double x0 = 0.0, dx = 1.0;
  double y0 = 0.0, dy = 1.0;
  double x(int col) const { return x0 + dx * col; }
  double y(int row) const { return y0 + dy * row; }
};

// One joint-likelihood grid per (frame, joint). Values are unnormalized and
// non-negative; every channel must carry some mass.
struct HeatMapStack {
  int frames = 0, joints = 0, height = 0, width = 0;
  std::vector<Eigen::MatrixXf> channels;  // frames*joints entries, each height x width
  CoordMap map;

  static CoordMap unit_grid(int height, int width);
  const Eigen::MatrixXf& channel(int t, int j) const { return channels[t * joints + j]; }
  Eigen::MatrixXf& channel(int t, int j) { return channels[t * joints + j]; }
  void validate() const;
};

// Center of the highest-valued pixel per channel; row-major first on ties.
PoseSequence2D heatmap_argmax(const HeatMapStack& hm);

// Posterior-mean 2D locations: each joint's heat map reweighted by a Gaussian
// of precision nu around the current model projection (truncated at four
// standard deviations). Channels with no heat-map mass inside the truncation
// window fall back to the plain heat-map expectation and are reported in
// `fallbacks` as (frame, joint).
PoseSequence2D expected_W(const HeatMapStack& hm, const ModelParams& params,
                          const PoseDictionary& dict, const Hyperparams& hyper,
                          std::vector<std::pair<int, int>>* fallbacks = nullptr);

// Evaluates, by exhaustive summation over the pixel grid, the gap between the
// posterior-expected loss and the loss at the posterior-mean observations:
//   d(theta) = E[loss(theta; W)] - loss(theta; E[W])
// under a posterior held fixed at a seeded perturbation of params_a. For the
// orthographic loss that gap is independent of theta, so the returned
// |d(params_a) - d(params_b)| is zero up to summation error.
double check_expectation_identity(const HeatMapStack& hm, const ModelParams& params_a,
                                  const ModelParams& params_b, const PoseDictionary& dict,
                                  const Hyperparams& hyper, std::uint64_t rng_seed);

struct EmTrace {
  std::vector<double> surrogate_before;  // objective against the fresh expectations
  std::vector<double> surrogate_after;   // same, after the inner solve
  std::vector<PoseSequence2D> expected;
  std::vector<std::vector<std::pair<int, int>>> fallbacks;
  std::vector<BcdTrace> m_steps;
  std::string termination;  // "tol", "max_iter", or "no_iterations"
};

// Alternates expected_W with a warm-started run_bcd. The mean-pose-rigid
// strategy seeds itself from the per-channel argmax locations. em_max_iter of
// zero returns the initialization untouched.
std::pair<ModelParams, EmTrace> run_em(const HeatMapStack& hm, const PoseDictionary& dict,
                                       const Hyperparams& hyper, const InitStrategy& strategy,
                                       CameraMode mode);

}  // namespace poselift
