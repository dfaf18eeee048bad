#include "poselift/synth.hpp"

#include <cmath>
#include <random>

namespace poselift {

namespace {

constexpr std::uint64_t kAttemptStride = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kRenderStream = 0xd1b54a32d192ed03ull;

Eigen::Vector3d gauss3(std::mt19937_64& rng, std::normal_distribution<double>& g) {
  return {g(rng), g(rng), g(rng)};
}

}  // namespace

SynthInstance generate_sequence(const PoseDictionary& dict, const SynthConfig& config,
                                const Hyperparams& hyper) {
  dict.validate();
  const int k = dict.atom_count();
  const int p = dict.skeleton.joint_count;
  const int n = config.frames;
  if (n <= 0) throw DataError("frame count must be positive");
  if (config.active_atoms < 1 || config.active_atoms > k)
    throw DataError("active atom count out of range");
  const bool persp = config.camera_mode == CameraMode::kPerspective;
  if (persp && !hyper.calibration) throw DataError("perspective generation needs a calibration");

  for (int attempt = 0; attempt < 10; ++attempt) {
    std::mt19937_64 rng(config.seed + kAttemptStride * static_cast<std::uint64_t>(attempt));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> run_len(5, 15);
    std::uniform_int_distribution<int> atom_pick(0, k - 1);

    // sparse codes: support held over short runs, then low-pass filtered
    Eigen::MatrixXd c_raw = Eigen::MatrixXd::Zero(k, n);
    int t = 0;
    while (t < n) {
      const int len = std::min(run_len(rng), n - t);
      std::vector<int> support;
      while (static_cast<int>(support.size()) < config.active_atoms) {
        int cand = atom_pick(rng);
        bool seen = false;
        for (int s : support) seen = seen || s == cand;
        if (!seen) support.push_back(cand);
      }
      for (int u = t; u < t + len; ++u)
        for (int i : support)
          c_raw(i, u) = (config.coeff_scale / config.active_atoms) * (1.0 + 0.5 * gauss(rng));
      t += len;
    }
    Eigen::MatrixXd c(k, n);
    for (int u = 0; u < n; ++u)
      c.col(u) = (c_raw.col(std::max(0, u - 1)) + c_raw.col(u) + c_raw.col(std::min(n - 1, u + 1))) / 3.0;

    std::vector<Mat3> r(n);
    r[0] = exp_so3(config.rot_init * gauss3(rng, gauss));
    for (int u = 1; u < n; ++u) r[u] = r[u - 1] * exp_so3(config.rot_step * gauss3(rng, gauss));

    const int trows = persp ? 3 : 2;
    Eigen::MatrixXd tr(trows, n);
    if (persp)
      tr.col(0) = Eigen::Vector3d(0.0, 0.0, config.depth);
    else
      tr.col(0) = Eigen::Vector2d(0.5, 0.5);
    for (int u = 1; u < n; ++u) {
      tr.col(u) = tr.col(u - 1);
      for (int i = 0; i < trows; ++i) tr(i, u) += config.trans_drift * gauss(rng);
    }

    SynthInstance out;
    out.params.camera_mode = config.camera_mode;
    out.params.C = c;
    out.params.R = r;
    out.params.T = tr;

    PoseSequence3D shapes = compose_pose(c, dict);
    out.clean.frames.resize(n);
    if (persp) {
      const Mat3& cam = *hyper.calibration;
      Eigen::MatrixXd z(p, n);
      bool behind = false;
      for (int u = 0; u < n && !behind; ++u) {
        Eigen::Matrix3Xd x = r[u] * shapes.frames[u];
        x.colwise() += Eigen::Vector3d(tr.col(u));
        out.clean.frames[u].resize(2, p);
        for (int j = 0; j < p; ++j) {
          if (x(2, j) <= 1e-12) {
            behind = true;
            break;
          }
          Eigen::Vector3d h = cam * x.col(j);
          out.clean.frames[u].col(j) = h.head<2>() / h.z();
          z(j, u) = x(2, j);
        }
      }
      if (behind) continue;
      // re-gauge so every root depth is exactly 1
      for (int u = 0; u < n; ++u) {
        const double d = z(dict.skeleton.root_index, u);
        out.params.C.col(u) /= d;
        out.params.T.col(u) /= d;
        z.col(u) /= d;
        z(dict.skeleton.root_index, u) = 1.0;
      }
      out.params.Z = z;
      out.truth = compose_pose(out.params.C, dict);
    } else {
      for (int u = 0; u < n; ++u) {
        out.clean.frames[u] = r[u].topRows<2>() * shapes.frames[u];
        out.clean.frames[u].colwise() += Eigen::Vector2d(tr.col(u));
      }
      out.truth = std::move(shapes);
    }

    out.noisy = out.clean;
    if (config.noise_sigma > 0.0)
      for (int u = 0; u < n; ++u)
        for (int j = 0; j < p; ++j) {
          out.noisy.frames[u](0, j) += config.noise_sigma * gauss(rng);
          out.noisy.frames[u](1, j) += config.noise_sigma * gauss(rng);
        }
    return out;
  }
  throw DataError("could not place the sequence in front of the camera in 10 attempts");
}

HeatMapStack render_heatmaps(const PoseSequence2D& observed, const SynthConfig& config,
                             int* clipped) {
  const int n = observed.frame_count();
  const int p = observed.joint_count();
  if (n == 0) throw DataError("no frames to render");
  if (config.grid_height <= 0 || config.grid_width <= 0) throw DataError("empty heat-map grid");
  if (config.heatmap_sigma < 0) throw DataError("negative blob width");

  HeatMapStack hm;
  hm.frames = n;
  hm.joints = p;
  hm.height = config.grid_height;
  hm.width = config.grid_width;
  hm.map = HeatMapStack::unit_grid(hm.height, hm.width);
  hm.channels.assign(static_cast<size_t>(n) * p,
                     Eigen::MatrixXf::Zero(hm.height, hm.width));

  std::mt19937_64 rng(config.seed ^ kRenderStream);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (clipped) *clipped = 0;

  auto splat = [&](Eigen::MatrixXf& ch, double x, double y, double amplitude) {
    if (config.heatmap_sigma == 0.0) {
      const int c = std::clamp(static_cast<int>(std::lround((x - hm.map.x0) / hm.map.dx)), 0,
                               hm.width - 1);
      const int r = std::clamp(static_cast<int>(std::lround((y - hm.map.y0) / hm.map.dy)), 0,
                               hm.height - 1);
      ch(r, c) = std::max(ch(r, c), static_cast<float>(amplitude));
      return;
    }
    const double s2 = config.heatmap_sigma * config.heatmap_sigma;
    for (int r = 0; r < hm.height; ++r) {
      const double dy = (hm.map.y(r) - y) / hm.map.dy;
      for (int c = 0; c < hm.width; ++c) {
        const double dx = (hm.map.x(c) - x) / hm.map.dx;
        const double v = amplitude * std::exp(-0.5 * (dx * dx + dy * dy) / s2);
        ch(r, c) += static_cast<float>(v);
      }
    }
  };

  for (int t = 0; t < n; ++t)
    for (int j = 0; j < p; ++j) {
      double x = observed.frames[t](0, j);
      double y = observed.frames[t](1, j);
      const double cx = std::clamp(x, 0.0, 1.0);
      const double cy = std::clamp(y, 0.0, 1.0);
      if (clipped && (cx != x || cy != y)) ++*clipped;
      Eigen::MatrixXf& ch = hm.channel(t, j);
      splat(ch, cx, cy, 1.0);
      if (config.distractor_count > 0 && unif(rng) < config.distractor_fraction) {
        for (int b = 0; b < config.distractor_count; ++b) {
          double bx = 0.0, by = 0.0;
          for (int tries = 0; tries < 50; ++tries) {
            bx = unif(rng);
            by = unif(rng);
            if (std::hypot(bx - cx, by - cy) >= 0.2) break;
          }
          splat(ch, bx, by, config.distractor_mass);
        }
      }
    }
  return hm;
}

}  // namespace poselift
