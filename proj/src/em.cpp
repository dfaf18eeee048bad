#include "poselift/em.hpp"

#include <cmath>

namespace poselift {

namespace {

struct Window {
  int rlo = 0, rhi = -1, clo = 0, chi = -1;
  bool empty() const { return rlo > rhi || clo > chi; }
};

Window truncation_window(const CoordMap& map, double mux, double muy, double r4, int height,
                         int width) {
  Window w;
  w.clo = std::max(0, static_cast<int>(std::ceil((mux - r4 - map.x0) / map.dx)));
  w.chi = std::min(width - 1, static_cast<int>(std::floor((mux + r4 - map.x0) / map.dx)));
  w.rlo = std::max(0, static_cast<int>(std::ceil((muy - r4 - map.y0) / map.dy)));
  w.rhi = std::min(height - 1, static_cast<int>(std::floor((muy + r4 - map.y0) / map.dy)));
  return w;
}

}  // namespace

CoordMap HeatMapStack::unit_grid(int height, int width) {
  CoordMap m;
  m.dx = 1.0 / width;
  m.x0 = 0.5 / width;
  m.dy = 1.0 / height;
  m.y0 = 0.5 / height;
  return m;
}

void HeatMapStack::validate() const {
  if (frames <= 0 || joints <= 0 || height <= 0 || width <= 0)
    throw DataError("heat map stack has empty dimensions");
  if (channels.size() != static_cast<size_t>(frames) * joints)
    throw DataError("heat map channel count mismatch");
  if (map.dx <= 0 || map.dy <= 0) throw DataError("heat map coordinate map is degenerate");
  for (size_t i = 0; i < channels.size(); ++i) {
    if (channels[i].rows() != height || channels[i].cols() != width)
      throw DataError("heat map channel " + std::to_string(i) + " has the wrong shape");
    float mx = 0.0f;
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        const float v = channels[i](r, c);
        if (!std::isfinite(v) || v < 0.0f)
          throw DataError("heat map channel " + std::to_string(i) +
                          " holds a negative or non-finite value");
        mx = std::max(mx, v);
      }
    if (mx <= 0.0f)
      throw DataError("heat map channel " + std::to_string(i) + " carries no mass");
  }
}

PoseSequence2D heatmap_argmax(const HeatMapStack& hm) {
  PoseSequence2D out;
  out.frames.resize(hm.frames);
  for (int t = 0; t < hm.frames; ++t) {
    out.frames[t].resize(2, hm.joints);
    for (int j = 0; j < hm.joints; ++j) {
      const Eigen::MatrixXf& ch = hm.channel(t, j);
      float best = -1.0f;
      int br = 0, bc = 0;
      for (int r = 0; r < hm.height; ++r)
        for (int c = 0; c < hm.width; ++c)
          if (ch(r, c) > best) {
            best = ch(r, c);
            br = r;
            bc = c;
          }
      out.frames[t](0, j) = hm.map.x(bc);
      out.frames[t](1, j) = hm.map.y(br);
    }
  }
  return out;
}

PoseSequence2D expected_W(const HeatMapStack& hm, const ModelParams& params,
                          const PoseDictionary& dict, const Hyperparams& hyper,
                          std::vector<std::pair<int, int>>* fallbacks) {
  hm.validate();
  if (hm.frames != params.frame_count() || hm.joints != dict.skeleton.joint_count)
    throw DataError("heat map dimensions do not match the model");
  PoseSequence2D proj = project(params, dict, hyper);
  const double sigma = 1.0 / std::sqrt(hyper.nu);
  const double r4 = 4.0 * sigma;
  const double r4sq = r4 * r4;

  PoseSequence2D out;
  out.frames.resize(hm.frames);
  for (int t = 0; t < hm.frames; ++t) {
    out.frames[t].resize(2, hm.joints);
    for (int j = 0; j < hm.joints; ++j) {
      const Eigen::MatrixXf& ch = hm.channel(t, j);
      const double mux = proj.frames[t](0, j);
      const double muy = proj.frames[t](1, j);
      Window win = truncation_window(hm.map, mux, muy, r4, hm.height, hm.width);
      double s = 0.0, sx = 0.0, sy = 0.0;
      if (!win.empty()) {
        for (int r = win.rlo; r <= win.rhi; ++r) {
          const double y = hm.map.y(r);
          const double dy = y - muy;
          for (int c = win.clo; c <= win.chi; ++c) {
            const double h = ch(r, c);
            if (h <= 0.0) continue;
            const double x = hm.map.x(c);
            const double dx = x - mux;
            const double d2 = dx * dx + dy * dy;
            if (d2 > r4sq) continue;
            const double w = h * std::exp(-0.5 * hyper.nu * d2);
            s += w;
            sx += w * x;
            sy += w * y;
          }
        }
      }
      if (s <= 0.0) {
        // no heat-map mass near the projection: use the map's own expectation
        for (int r = 0; r < hm.height; ++r)
          for (int c = 0; c < hm.width; ++c) {
            const double h = ch(r, c);
            if (h <= 0.0) continue;
            s += h;
            sx += h * hm.map.x(c);
            sy += h * hm.map.y(r);
          }
        if (fallbacks) fallbacks->emplace_back(t, j);
      }
      out.frames[t](0, j) = sx / s;
      out.frames[t](1, j) = sy / s;
    }
  }
  return out;
}

double check_expectation_identity(const HeatMapStack& hm, const ModelParams& params_a,
                                  const ModelParams& params_b, const PoseDictionary& dict,
                                  const Hyperparams& hyper, std::uint64_t rng_seed) {
  if (params_a.camera_mode != params_b.camera_mode)
    throw DataError("parameter sets must share a camera mode");
  const ModelParams ref = perturb_params(params_a, 0.05, rng_seed);
  PoseSequence2D wbar = expected_W(hm, ref, dict, hyper);
  PoseSequence2D proj_ref = project(ref, dict, hyper);
  const double sigma = 1.0 / std::sqrt(hyper.nu);
  const double r4 = 4.0 * sigma;
  const double r4sq = r4 * r4;
  const bool persp = params_a.camera_mode == CameraMode::kPerspective;
  Mat3 kinv = Mat3::Identity();
  if (persp) kinv = hyper.calibration->inverse();

  // E[loss(theta; W)] by exhaustive summation, channel by channel, with the
  // posterior enumerated exactly as expected_W does
  auto expected_loss = [&](const ModelParams& theta) {
    PoseSequence3D shapes = compose_pose(theta.C, dict);
    double acc = 0.0;
    for (int t = 0; t < hm.frames; ++t) {
      Eigen::MatrixXd model;  // what the residual compares each observation to
      if (persp) {
        model = theta.R[t] * shapes.frames[t];
        model.colwise() += Eigen::Vector3d(theta.T.col(t));
      } else {
        model = theta.R[t].topRows<2>() * shapes.frames[t];
        model.colwise() += Eigen::Vector2d(theta.T.col(t));
      }
      for (int j = 0; j < hm.joints; ++j) {
        const Eigen::MatrixXf& ch = hm.channel(t, j);
        const double mux = proj_ref.frames[t](0, j);
        const double muy = proj_ref.frames[t](1, j);
        Window win = truncation_window(hm.map, mux, muy, r4, hm.height, hm.width);
        double s = 0.0, sl = 0.0;
        auto residual = [&](double x, double y) {
          if (persp) {
            Eigen::Vector3d u = kinv * Eigen::Vector3d(x, y, 1.0);
            return (theta.Z(j, t) * u - Eigen::Vector3d(model.col(j))).squaredNorm();
          }
          const double rx = x - model(0, j);
          const double ry = y - model(1, j);
          return rx * rx + ry * ry;
        };
        if (!win.empty()) {
          for (int r = win.rlo; r <= win.rhi; ++r) {
            const double y = hm.map.y(r);
            const double dy = y - muy;
            for (int c = win.clo; c <= win.chi; ++c) {
              const double h = ch(r, c);
              if (h <= 0.0) continue;
              const double x = hm.map.x(c);
              const double dx = x - mux;
              const double d2 = dx * dx + dy * dy;
              if (d2 > r4sq) continue;
              const double w = h * std::exp(-0.5 * hyper.nu * d2);
              s += w;
              sl += w * residual(x, y);
            }
          }
        }
        if (s <= 0.0) {
          for (int r = 0; r < hm.height; ++r)
            for (int c = 0; c < hm.width; ++c) {
              const double h = ch(r, c);
              if (h <= 0.0) continue;
              s += h;
              sl += h * residual(hm.map.x(c), hm.map.y(r));
            }
        }
        acc += sl / s;
      }
    }
    return 0.5 * hyper.nu * acc;
  };

  const double da = expected_loss(params_a) - loss(params_a, wbar, dict, hyper);
  const double db = expected_loss(params_b) - loss(params_b, wbar, dict, hyper);
  return std::abs(da - db);
}

std::pair<ModelParams, EmTrace> run_em(const HeatMapStack& hm, const PoseDictionary& dict,
                                       const Hyperparams& hyper, const InitStrategy& strategy,
                                       CameraMode mode) {
  hm.validate();
  hyper.validate();
  PoseSequence2D w0 = heatmap_argmax(hm);
  ModelParams params = initialize(w0, dict, hyper, strategy, mode);

  EmTrace trace;
  if (hyper.em_max_iter == 0) {
    trace.termination = "no_iterations";
    return {std::move(params), std::move(trace)};
  }

  trace.termination = "max_iter";
  double prev_surrogate = 0.0;
  for (int it = 0; it < hyper.em_max_iter; ++it) {
    std::vector<std::pair<int, int>> fb;
    PoseSequence2D wbar = expected_W(hm, params, dict, hyper, &fb);
    const double before = objective(params, wbar, dict, hyper);

    auto [solved, bcd_trace] = run_bcd(wbar, dict, hyper, params);
    params = std::move(solved);
    const double after = objective(params, wbar, dict, hyper);
    if (after > before + 1e-10)
      throw SolverError("inner solve raised the em surrogate: " + std::to_string(before) +
                        " -> " + std::to_string(after));

    trace.surrogate_before.push_back(before);
    trace.surrogate_after.push_back(after);
    trace.expected.push_back(std::move(wbar));
    trace.fallbacks.push_back(std::move(fb));
    trace.m_steps.push_back(std::move(bcd_trace));

    if (it > 0) {
      const double rel = std::abs(prev_surrogate - after) / std::max(1.0, std::abs(prev_surrogate));
      if (rel < hyper.bcd_tol) {
        trace.termination = "tol";
        break;
      }
    }
    prev_surrogate = after;
  }
  return {std::move(params), std::move(trace)};
}

}  // namespace poselift
