#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poselift/solvers.hpp"

namespace poselift {

struct InitStrategy {
  enum class Kind {
    kMeanPoseRigid,          // mean-pose code + per-frame rigid fit
    kProvidedParams,         // use `params` as-is
    kGroundTruthPerturbed,   // `params` plus seeded Gaussian noise of scale sigma
  };
  Kind kind = Kind::kMeanPoseRigid;
  std::optional<ModelParams> params;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

// Builds a starting point for run_bcd. Mean-pose-rigid sets every frame's code
// to the dictionary's mean-pose code, fits each frame's rotation by a rigid
// 2D-3D fit (affine fit followed by projection onto the rotations; frames
// where that fit is rank-deficient fall back to identity and are reported in
// degenerate_frames), unit depths under perspective, and closes the
// translations in closed form. Perturbed init leaves depths untouched so the
// root gauge survives.
ModelParams initialize(const PoseSequence2D& observed, const PoseDictionary& dict,
                       const Hyperparams& hyper, const InitStrategy& strategy, CameraMode mode,
                       std::vector<int>* degenerate_frames = nullptr);

// Seeded Gaussian jitter of C, R (through the exponential map), and T. Depths
// are left alone so the root gauge is preserved. sigma of zero is the identity.
ModelParams perturb_params(const ModelParams& base, double sigma, std::uint64_t seed);

struct BcdIterRecord {
  double after_c = 0.0;
  double after_r = 0.0;
  double after_t = 0.0;
  std::optional<double> after_z;
  ApgReport c_report;
  RotationStepReport r_report;
};

struct BcdTrace {
  double initial_objective = 0.0;
  std::vector<BcdIterRecord> iterations;
  std::string termination;  // "tol" or "max_iter"
};

// Alternates the four block updates until the full objective's relative
// change drops below bcd_tol. The objective is checked after every block and
// may never rise beyond 1e-10; a rise is a SolverError since each block is
// individually guarded.
std::pair<ModelParams, BcdTrace> run_bcd(const PoseSequence2D& observed,
                                         const PoseDictionary& dict, const Hyperparams& hyper,
                                         const ModelParams& init);

}  // namespace poselift
