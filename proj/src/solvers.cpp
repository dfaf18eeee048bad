#include "poselift/solvers.hpp"

#include <cmath>

namespace poselift {

namespace {

void soft_threshold_inplace(Eigen::VectorXd& v, double tau) {
  if (tau <= 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double a = std::abs(v[i]) - tau;
    v[i] = a > 0.0 ? (v[i] > 0.0 ? a : -a) : 0.0;
  }
}

// largest eigenvalue of m'm by power iteration; deterministic start
double sq_operator_norm(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols());
  v.normalize();
  double lam = 0.0;
  for (int i = 0; i < 60; ++i) {
    Eigen::VectorXd w = m.transpose() * (m * v);
    double nw = w.norm();
    if (nw < 1e-300) return 0.0;
    v = w / nw;
    lam = nw;
  }
  return lam;
}

Eigen::Vector3d vee(const Mat3& a) { return {a(2, 1), a(0, 2), a(1, 0)}; }

struct FrameData {
  // target (observation-derived, translation removed) and shape per frame,
  // with invisible joints zeroed out of both so they drop from the residual
  std::vector<Eigen::MatrixXd> target;  // 2xp or 3xp
  std::vector<Eigen::Matrix3Xd> shape;  // 3xp
  bool persp = false;
};

FrameData make_frame_data(const ModelParams& params, const PoseSequence2D& observed,
                          const PoseDictionary& dict, const Hyperparams& hyper) {
  const int n = params.frame_count();
  const int p = dict.skeleton.joint_count;
  FrameData fd;
  fd.persp = params.camera_mode == CameraMode::kPerspective;
  Mat3 kinv = Mat3::Identity();
  if (fd.persp) {
    if (!hyper.calibration) throw DataError("perspective solve requires a calibration");
    kinv = hyper.calibration->inverse();
  }
  PoseSequence3D shapes = compose_pose(params.C, dict);
  fd.target.resize(n);
  fd.shape.resize(n);
  for (int t = 0; t < n; ++t) {
    if (fd.persp) {
      fd.target[t] = backproject(observed.frames[t], params.Z.col(t), kinv);
      fd.target[t].colwise() -= Eigen::Vector3d(params.T.col(t));
    } else {
      fd.target[t] = observed.frames[t];
      fd.target[t].colwise() -= Eigen::Vector2d(params.T.col(t));
    }
    fd.shape[t] = shapes.frames[t];
    if (!observed.all_visible())
      for (int j = 0; j < p; ++j)
        if (!observed.visible(t, j)) {
          fd.target[t].col(j).setZero();
          fd.shape[t].col(j).setZero();
        }
  }
  return fd;
}

double rotation_subobjective(const std::vector<Mat3>& r, const FrameData& fd, double nu,
                             double gamma) {
  const int n = static_cast<int>(r.size());
  double acc = 0.0;
  for (int t = 0; t < n; ++t) {
    if (fd.persp)
      acc += (fd.target[t] - r[t] * fd.shape[t]).squaredNorm();
    else
      acc += (fd.target[t] - r[t].topRows<2>() * fd.shape[t]).squaredNorm();
  }
  double sm = 0.0;
  for (int t = 0; t + 1 < n; ++t) sm += (r[t + 1] - r[t]).squaredNorm();
  return 0.5 * nu * acc + 0.5 * gamma * sm;
}

}  // namespace

ApgReport apg_l1_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                          const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& grad,
                          const ApgOptions& opt, Eigen::VectorXd& x) {
  ApgReport rep;
  const double w = opt.l1_weight;
  auto full = [&](const Eigen::VectorXd& v, double fv) {
    return w > 0.0 ? fv + w * v.lpNorm<1>() : fv;
  };
  double step = 1.0 / std::max(opt.lipschitz, 1e-12);
  double fx_cur = f(x);
  double obj = full(x, fx_cur);
  Eigen::VectorXd y = x, g(x.size()), z(x.size());
  double t = 1.0;
  bool at_x = true;  // y coincides with x (no momentum pending)
  for (int it = 0; it < opt.max_iter; ++it) {
    ++rep.iterations;
    grad(y, g);
    const double fy = f(y);
    double fz = 0.0;
    while (true) {
      z = y - step * g;
      soft_threshold_inplace(z, w * step);
      fz = f(z);
      const double quad =
          fy + g.dot(z - y) + (z - y).squaredNorm() / (2.0 * step);
      if (fz <= quad + 1e-12 * std::max(1.0, std::abs(fy)) || step < 1e-18) break;
      step *= 0.5;
    }
    const double cand = full(z, fz);
    if (cand > obj) {
      if (at_x) {
        // prox step from the incumbent cannot decrease the value: done
        rep.converged = true;
        break;
      }
      // momentum overshot; restart from the incumbent
      y = x;
      t = 1.0;
      at_x = true;
      continue;
    }
    const double rel = (obj - cand) / std::max(1.0, std::abs(obj));
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / tn) * (z - x);
    x = z;
    obj = cand;
    t = tn;
    at_x = false;
    rep.rel_change = rel;
    if (rel < opt.tol) {
      rep.converged = true;
      break;
    }
  }
  rep.objective = obj;
  return rep;
}

std::pair<Eigen::MatrixXd, ApgReport> update_C(const ModelParams& params,
                                               const PoseSequence2D& observed,
                                               const PoseDictionary& dict,
                                               const Hyperparams& hyper) {
  const int n = params.frame_count();
  const int k = dict.atom_count();
  const int p = dict.skeleton.joint_count;
  const bool persp = params.camera_mode == CameraMode::kPerspective;
  const int rows = persp ? 3 : 2;
  const double nu = hyper.nu, beta = hyper.beta;

  FrameData fd = make_frame_data(params, observed, dict, hyper);

  // per-frame linear maps: column i of P[t] is the vectorized projected atom
  std::vector<Eigen::MatrixXd> P(n);
  std::vector<Eigen::VectorXd> y(n);
  for (int t = 0; t < n; ++t) {
    P[t].resize(rows * p, k);
    for (int i = 0; i < k; ++i) {
      Eigen::MatrixXd pb;
      if (persp)
        pb = params.R[t] * dict.atoms[i];
      else
        pb = params.R[t].topRows<2>() * dict.atoms[i];
      if (!observed.all_visible())
        for (int j = 0; j < p; ++j)
          if (!observed.visible(t, j)) pb.col(j).setZero();
      P[t].col(i) = Eigen::Map<const Eigen::VectorXd>(pb.data(), rows * p);
    }
    y[t] = Eigen::Map<const Eigen::VectorXd>(fd.target[t].data(), rows * p);
  }

  // the per-frame maps are contractions of the atom matrix, so its top
  // singular value bounds them all; 4 bounds the difference operator
  const double lam = sq_operator_norm(dict.atom_matrix());

  auto f = [&](const Eigen::VectorXd& v) {
    Eigen::Map<const Eigen::MatrixXd> c(v.data(), k, n);
    double acc = 0.0;
    for (int t = 0; t < n; ++t) acc += (y[t] - P[t] * c.col(t)).squaredNorm();
    double sm = 0.0;
    for (int t = 0; t + 1 < n; ++t) sm += (c.col(t + 1) - c.col(t)).squaredNorm();
    return 0.5 * nu * acc + 0.5 * beta * sm;
  };
  auto grad = [&](const Eigen::VectorXd& v, Eigen::VectorXd& gv) {
    Eigen::Map<const Eigen::MatrixXd> c(v.data(), k, n);
    Eigen::Map<Eigen::MatrixXd> g(gv.data(), k, n);
    for (int t = 0; t < n; ++t)
      g.col(t).noalias() = -nu * (P[t].transpose() * (y[t] - P[t] * c.col(t)));
    for (int t = 0; t < n; ++t) {
      if (t > 0) g.col(t) += beta * (c.col(t) - c.col(t - 1));
      if (t + 1 < n) g.col(t) += beta * (c.col(t) - c.col(t + 1));
    }
  };

  ApgOptions opt;
  opt.max_iter = hyper.apg_max_iter;
  opt.tol = hyper.apg_tol;
  opt.l1_weight = hyper.alpha;
  opt.lipschitz = nu * 1.02 * lam + 4.0 * beta;

  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(params.C.data(), k * n);
  ApgReport rep = apg_l1_minimize(f, grad, opt, x);
  Eigen::MatrixXd c_new = Eigen::Map<const Eigen::MatrixXd>(x.data(), k, n);

  // the canonical objective is the arbiter; an apparent increase can only be
  // evaluation-order noise at convergence, in which case the block is done
  ModelParams trial = params;
  trial.C = c_new;
  if (objective(trial, observed, dict, hyper) > objective(params, observed, dict, hyper))
    return {params.C, rep};
  return {std::move(c_new), rep};
}

std::pair<std::vector<Mat3>, RotationStepReport> update_R(const ModelParams& params,
                                                          const PoseSequence2D& observed,
                                                          const PoseDictionary& dict,
                                                          const Hyperparams& hyper) {
  const int n = params.frame_count();
  const double nu = hyper.nu, gamma = hyper.gamma;
  FrameData fd = make_frame_data(params, observed, dict, hyper);

  std::vector<Mat3> r = params.R;
  RotationStepReport rep;
  rep.objective_before = rotation_subobjective(r, fd, nu, gamma);
  double h = rep.objective_before;

  std::vector<Mat3> omega(n);  // skew parts of R' * euclidean gradient
  std::vector<Mat3> cand(n);
  double step = 1.0;
  for (int it = 0; it < hyper.rot_max_iter; ++it) {
    double gn2 = 0.0;
    for (int t = 0; t < n; ++t) {
      Mat3 g;
      if (fd.persp) {
        Eigen::MatrixXd e = fd.target[t] - r[t] * fd.shape[t];
        g.noalias() = -nu * e * fd.shape[t].transpose();
      } else {
        Eigen::MatrixXd e = fd.target[t] - r[t].topRows<2>() * fd.shape[t];
        g.setZero();
        g.topRows<2>().noalias() = -nu * e * fd.shape[t].transpose();
      }
      if (t > 0) g += gamma * (r[t] - r[t - 1]);
      if (t + 1 < n) g += gamma * (r[t] - r[t + 1]);
      Mat3 a = r[t].transpose() * g;
      omega[t] = 0.5 * (a - a.transpose());
      gn2 += omega[t].squaredNorm();
    }
    rep.grad_norm = std::sqrt(gn2);
    if (rep.grad_norm < hyper.rot_grad_tol) break;

    step = std::min(step * 2.0, 1e6);
    bool accepted = false;
    while (step >= 1e-16) {
      for (int t = 0; t < n; ++t) cand[t] = r[t] * exp_so3(-step * vee(omega[t]));
      double hc = rotation_subobjective(cand, fd, nu, gamma);
      if (hc <= h - 1e-4 * step * gn2) {
        r = cand;
        h = hc;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++rep.iterations;
    if (!accepted) break;
  }
  rep.objective_after = h;

  ModelParams trial = params;
  trial.R = r;
  if (objective(trial, observed, dict, hyper) > objective(params, observed, dict, hyper)) {
    rep.objective_after = rep.objective_before;
    return {params.R, rep};
  }
  return {std::move(r), rep};
}

Eigen::MatrixXd update_T(const ModelParams& params, const PoseSequence2D& observed,
                         const PoseDictionary& dict, const Hyperparams& hyper) {
  const int n = params.frame_count();
  const int p = dict.skeleton.joint_count;
  const bool persp = params.camera_mode == CameraMode::kPerspective;
  Mat3 kinv = Mat3::Identity();
  if (persp) {
    if (!hyper.calibration) throw DataError("perspective solve requires a calibration");
    kinv = hyper.calibration->inverse();
  }
  PoseSequence3D shapes = compose_pose(params.C, dict);
  Eigen::MatrixXd t_new = params.T;
  for (int t = 0; t < n; ++t) {
    Eigen::MatrixXd y;
    if (persp) {
      y = backproject(observed.frames[t], params.Z.col(t), kinv);
      y.noalias() -= params.R[t] * shapes.frames[t];
    } else {
      y = observed.frames[t];
      y.noalias() -= params.R[t].topRows<2>() * shapes.frames[t];
    }
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(y.rows());
    int count = 0;
    for (int j = 0; j < p; ++j) {
      if (!observed.visible(t, j)) continue;
      sum += y.col(j);
      ++count;
    }
    if (count > 0) t_new.col(t) = sum / count;
  }
  return t_new;
}

Eigen::MatrixXd update_Z(const ModelParams& params, const PoseSequence2D& observed,
                         const PoseDictionary& dict, const Hyperparams& hyper) {
  if (params.camera_mode != CameraMode::kPerspective)
    throw DataError("depth update is only defined for the perspective camera");
  if (!hyper.calibration) throw DataError("perspective solve requires a calibration");
  const Mat3 kinv = hyper.calibration->inverse();
  const int n = params.frame_count();
  const int p = dict.skeleton.joint_count;
  const int root = dict.skeleton.root_index;
  PoseSequence3D shapes = compose_pose(params.C, dict);
  Eigen::MatrixXd z = params.Z;
  for (int t = 0; t < n; ++t) {
    Eigen::Matrix3Xd v = params.R[t] * shapes.frames[t];
    v.colwise() += Eigen::Vector3d(params.T.col(t));
    for (int j = 0; j < p; ++j) {
      if (j == root) {
        z(j, t) = 1.0;
        continue;
      }
      if (!observed.visible(t, j)) continue;
      Eigen::Vector3d u =
          kinv * Eigen::Vector3d(observed.frames[t](0, j), observed.frames[t](1, j), 1.0);
      const double den = u.squaredNorm();
      if (den < 1e-12)
        throw DataError("degenerate viewing ray for joint " + std::to_string(j) + " in frame " +
                        std::to_string(t));
      z(j, t) = u.dot(v.col(j)) / den;
    }
  }
  return z;
}

}  // namespace poselift
