#include "poselift/bcd.hpp"

#include <cmath>
#include <random>

namespace poselift {

namespace {

// Rigid fit of a 3D pose to 2D points: least-squares affine camera, then the
// nearest row-orthonormal 2x3 matrix, completed to det +1. Returns false when
// the affine fit is too degenerate to orient.
bool fit_rotation_2d3d(const Pose2& w, const Pose3& s, const PoseSequence2D& vis, int t,
                       Mat3& out) {
  const int p = static_cast<int>(w.cols());
  Eigen::Vector2d wbar = Eigen::Vector2d::Zero();
  Eigen::Vector3d sbar = Eigen::Vector3d::Zero();
  int count = 0;
  for (int j = 0; j < p; ++j) {
    if (!vis.visible(t, j)) continue;
    wbar += w.col(j);
    sbar += s.col(j);
    ++count;
  }
  if (count < 3) return false;
  wbar /= count;
  sbar /= count;
  Eigen::MatrixXd wc(2, count), sc(3, count);
  int c = 0;
  for (int j = 0; j < p; ++j) {
    if (!vis.visible(t, j)) continue;
    wc.col(c) = w.col(j) - wbar;
    sc.col(c) = s.col(j) - sbar;
    ++c;
  }
  // m = wc * pinv(sc), via SVD with a relative rank cutoff
  Eigen::JacobiSVD<Eigen::MatrixXd> ssvd(sc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = ssvd.singularValues();
  if (sv(0) < 1e-12) return false;
  Eigen::VectorXd inv = sv;
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    inv(i) = sv(i) > 1e-10 * sv(0) ? 1.0 / sv(i) : 0.0;
  Eigen::MatrixXd m =
      wc * (ssvd.matrixV() * inv.asDiagonal() * ssvd.matrixU().transpose());

  Eigen::JacobiSVD<Eigen::MatrixXd> msvd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (msvd.singularValues()(1) < 1e-10 * std::max(1.0, msvd.singularValues()(0))) return false;
  Eigen::MatrixXd r2 = msvd.matrixU() * msvd.matrixV().transpose();  // 2x3
  const Eigen::Vector3d a = r2.row(0), b = r2.row(1);
  out.row(0) = a.transpose();
  out.row(1) = b.transpose();
  out.row(2) = a.cross(b).transpose();
  return true;
}

}  // namespace

ModelParams perturb_params(const ModelParams& base, double sigma, std::uint64_t seed) {
  ModelParams out = base;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.C.size(); ++i) out.C.data()[i] += sigma * gauss(rng);
  for (auto& r : out.R) {
    Eigen::Vector3d w(gauss(rng), gauss(rng), gauss(rng));
    r = r * exp_so3(sigma * w);
  }
  for (Eigen::Index i = 0; i < out.T.size(); ++i) out.T.data()[i] += sigma * gauss(rng);
  return out;
}

ModelParams initialize(const PoseSequence2D& observed, const PoseDictionary& dict,
                       const Hyperparams& hyper, const InitStrategy& strategy, CameraMode mode,
                       std::vector<int>* degenerate_frames) {
  hyper.validate();
  if (strategy.kind == InitStrategy::Kind::kProvidedParams ||
      strategy.kind == InitStrategy::Kind::kGroundTruthPerturbed) {
    if (!strategy.params) throw DataError("init strategy needs a parameter set");
    ModelParams out = strategy.kind == InitStrategy::Kind::kProvidedParams
                          ? *strategy.params
                          : perturb_params(*strategy.params, strategy.sigma, strategy.seed);
    if (out.camera_mode != mode) throw DataError("provided params have the wrong camera mode");
    out.validate(dict);
    return out;
  }

  const int n = observed.frame_count();
  const int p = dict.skeleton.joint_count;
  const int k = dict.atom_count();
  if (observed.joint_count() != p) throw DataError("observation joint count mismatch");
  if (n == 0) throw DataError("no frames to initialize from");

  ModelParams out;
  out.camera_mode = mode;
  out.C = dict.mean_pose_code.replicate(1, n);
  Pose3 mean = dict.mean_pose();
  out.R.resize(n);
  for (int t = 0; t < n; ++t) {
    Mat3 r;
    if (fit_rotation_2d3d(observed.frames[t], mean, observed, t, r)) {
      out.R[t] = r;
    } else {
      out.R[t] = Mat3::Identity();
      if (degenerate_frames) degenerate_frames->push_back(t);
    }
  }
  if (mode == CameraMode::kPerspective) {
    out.Z = Eigen::MatrixXd::Ones(p, n);
    out.T = Eigen::MatrixXd::Zero(3, n);
  } else {
    out.T = Eigen::MatrixXd::Zero(2, n);
  }
  out.T = update_T(out, observed, dict, hyper);
  (void)k;
  return out;
}

std::pair<ModelParams, BcdTrace> run_bcd(const PoseSequence2D& observed,
                                         const PoseDictionary& dict, const Hyperparams& hyper,
                                         const ModelParams& init) {
  hyper.validate();
  dict.validate();
  init.validate(dict);
  if (observed.frame_count() != init.frame_count())
    throw DataError("observation frame count does not match the initial params");
  if (observed.joint_count() != dict.skeleton.joint_count)
    throw DataError("observation joint count does not match the dictionary");

  ModelParams params = init;
  BcdTrace trace;
  double prev = objective(params, observed, dict, hyper);
  trace.initial_objective = prev;
  const bool persp = params.camera_mode == CameraMode::kPerspective;

  auto check = [&](double before, double after, const char* block) {
    if (after > before + 1e-10)
      throw SolverError(std::string("objective rose across the ") + block + " block: " +
                        std::to_string(before) + " -> " + std::to_string(after));
  };

  trace.termination = "max_iter";
  for (int it = 0; it < hyper.bcd_max_iter; ++it) {
    BcdIterRecord rec;
    double before = prev;

    auto [c_new, c_rep] = update_C(params, observed, dict, hyper);
    params.C = std::move(c_new);
    rec.c_report = c_rep;
    rec.after_c = objective(params, observed, dict, hyper);
    check(before, rec.after_c, "coefficient");

    auto [r_new, r_rep] = update_R(params, observed, dict, hyper);
    params.R = std::move(r_new);
    rec.r_report = r_rep;
    rec.after_r = objective(params, observed, dict, hyper);
    check(rec.after_c, rec.after_r, "rotation");

    params.T = update_T(params, observed, dict, hyper);
    rec.after_t = objective(params, observed, dict, hyper);
    check(rec.after_r, rec.after_t, "translation");

    double last = rec.after_t;
    if (persp) {
      params.Z = update_Z(params, observed, dict, hyper);
      rec.after_z = objective(params, observed, dict, hyper);
      check(rec.after_t, *rec.after_z, "depth");
      last = *rec.after_z;
    }

    trace.iterations.push_back(std::move(rec));
    const double rel = std::abs(prev - last) / std::max(1.0, std::abs(prev));
    prev = last;
    if (rel < hyper.bcd_tol) {
      trace.termination = "tol";
      break;
    }
  }
  return {std::move(params), std::move(trace)};
}

}  // namespace poselift
