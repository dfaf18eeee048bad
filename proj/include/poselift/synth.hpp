#pragma once

#include <cstdint>

#include "poselift/em.hpp"

namespace poselift {

struct SynthConfig {
  std::uint64_t seed = 0;
  int frames = 30;
  CameraMode camera_mode = CameraMode::kOrthographic;

  int active_atoms = 3;       // support size of the sampled codes
  double coeff_scale = 0.25;  // overall magnitude of the codes
  double rot_init = 0.3;      // spread of the first frame's orientation (radians)
  double rot_step = 0.05;     // rotation random-walk step per frame (radians)
  double trans_drift = 0.005; // translation random-walk step per frame
  double depth = 1.6;         // perspective: nominal camera distance

  double noise_sigma = 0.0;   // 2D observation noise, image units

  double heatmap_sigma = 1.0; // blob width in pixels; zero means a delta
  int grid_height = 64;
  int grid_width = 64;
  int distractor_count = 0;        // extra blobs per affected channel
  double distractor_mass = 1.5;    // their peak amplitude
  double distractor_fraction = 0.2;
};

struct SynthInstance {
  PoseSequence3D truth;   // composed from params.C, so perspective scale sits
                          // in the root-depth gauge
  ModelParams params;
  PoseSequence2D clean;
  PoseSequence2D noisy;
};

// Samples codes on a few atoms (support re-drawn every several frames, values
// smoothed by a 3-tap moving average), a rotation random walk, and a drifting
// translation, then projects. Under perspective the parameters are re-gauged
// so every root depth is exactly 1; a draw that puts a joint behind the
// camera is retried up to 10 times before erroring. The clean projections
// satisfy the camera model exactly.
SynthInstance generate_sequence(const PoseDictionary& dict, const SynthConfig& config,
                                const Hyperparams& hyper);

// One Gaussian blob per channel, peak 1, centered on the joint location
// (nearest pixel when heatmap_sigma is zero). Joints outside the unit square
// are clipped onto it and counted in `clipped`. Distractor blobs, when
// enabled, are drawn from an RNG stream independent of the sequence's, so
// they never change the underlying trajectory.
HeatMapStack render_heatmaps(const PoseSequence2D& observed, const SynthConfig& config,
                             int* clipped = nullptr);

}  // namespace poselift
