// End-to-end acceptance gate. Each numbered check prints one [PASS]/[FAIL]
// line; the process exits nonzero if any of them fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "test_support.hpp"

using namespace poselift;
using testutil::cli_path;
using testutil::default_hyper;
using testutil::human15;
using testutil::make_dictionary;
using testutil::make_temp_dir;
using testutil::run_cli;
using testutil::subgradient_c_best;
using testutil::synth_config;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double secs() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void run_criterion(int index, const std::string& what,
                   const std::function<bool(std::string&)>& body) {
  Timer timer;
  bool ok = false;
  std::string note;
  try {
    ok = body(note);
  } catch (const std::exception& e) {
    note = std::string("exception: ") + e.what();
    ok = false;
  }
  std::printf("[%s] criterion %d: %s%s%s (%.1fs)\n", ok ? "PASS" : "FAIL", index, what.c_str(),
              note.empty() ? "" : " — ", note.c_str(), timer.secs());
  std::fflush(stdout);
  if (!ok) ++failures;
}

bool trace_monotone(const BcdTrace& trace) {
  double prev = trace.initial_objective;
  for (const BcdIterRecord& r : trace.iterations) {
    for (double v : {r.after_c, r.after_r, r.after_t}) {
      if (v > prev + 1e-10) return false;
      prev = v;
    }
    if (r.after_z) {
      if (*r.after_z > prev + 1e-10) return false;
      prev = *r.after_z;
    }
  }
  return true;
}

PoseDictionary small_chain_dict(int joints, int k, std::uint64_t seed) {
  PoseDictionary dict;
  dict.skeleton.joint_count = joints;
  dict.skeleton.root_index = 0;
  for (int j = 0; j + 1 < joints; ++j) dict.skeleton.edges.push_back({j, j + 1});
  dict.skeleton.limb_pairs = dict.skeleton.edges;
  dict.skeleton.validate();

  Pose3 base(3, joints);
  for (int j = 0; j < joints; ++j)
    base.col(j) << 0.3 * j, 0.15 * std::sin(1.3 * j + 0.4), 0.12 * std::cos(0.9 * j);
  base.colwise() -= Eigen::Vector3d(base.col(0));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  dict.atoms.resize(k);
  for (int i = 0; i < k; ++i) {
    Pose3 a = base;
    for (int j = 0; j < joints; ++j)
      a.col(j) += 0.25 * Eigen::Vector3d(g(rng), g(rng), g(rng));
    a.colwise() -= Eigen::Vector3d(a.col(0));
    dict.atoms[i] = a / a.norm();
  }
  dict.atom_scale = 1.0;
  PoseSequence3D one;
  one.frames = {base};
  dict.mean_limb_length = mean_limb_length(one, dict.skeleton);

  Eigen::MatrixXd design(3 * joints, k);
  for (int i = 0; i < k; ++i)
    design.col(i) = Eigen::Map<const Eigen::VectorXd>(dict.atoms[i].data(), 3 * joints);
  Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(base.data(), 3 * joints);
  dict.mean_pose_code = (design.transpose() * design)
                            .ldlt()
                            .solve(design.transpose() * target);
  dict.validate();
  return dict;
}

double mean_err2d(const PoseSequence2D& a, const PoseSequence2D& b) {
  double acc = 0.0;
  long count = 0;
  for (size_t t = 0; t < a.frames.size(); ++t)
    for (int j = 0; j < a.frames[t].cols(); ++j) {
      acc += (a.frames[t].col(j) - b.frames[t].col(j)).norm();
      ++count;
    }
  return acc / count;
}

double fd_loss_derivative(ModelParams& params, double* slot, const PoseSequence2D& obs,
                          const PoseDictionary& dict, const Hyperparams& hyper) {
  const double h = 1e-6;
  const double saved = *slot;
  *slot = saved + h;
  const double up = loss(params, obs, dict, hyper);
  *slot = saved - h;
  const double down = loss(params, obs, dict, hyper);
  *slot = saved;
  return (up - down) / (2.0 * h);
}

std::string cli;

bool files_equal(const std::string& a, const std::string& b) {
  return testutil::read_file(a) == testutil::read_file(b);
}

}  // namespace

int main() {
  cli = cli_path();

  run_criterion(1, "block and EM steps never increase their objectives", [](std::string& note) {
    int checked = 0;
    for (int s = 0; s < 50; ++s) {
      const CameraMode mode = s % 2 ? CameraMode::kPerspective : CameraMode::kOrthographic;
      PoseDictionary dict = make_dictionary(16, 900 + s);
      SynthConfig cfg = synth_config(s, 30, mode);
      cfg.noise_sigma = 0.01;
      Hyperparams hyper = default_hyper(mode);
      hyper.nu = 2000;
      hyper.bcd_max_iter = 4;
      hyper.bcd_tol = 1e-14;
      SynthInstance inst = generate_sequence(dict, cfg, hyper);
      ModelParams start = initialize(inst.noisy, dict, hyper, InitStrategy{}, mode);
      auto [params, trace] = run_bcd(inst.noisy, dict, hyper, start);
      if (!trace_monotone(trace)) return false;

      SynthConfig render_cfg = cfg;
      render_cfg.heatmap_sigma = 1.5;
      HeatMapStack hm = render_heatmaps(inst.clean, render_cfg);
      Hyperparams emh = default_hyper(mode);
      emh.nu = 400;
      emh.em_max_iter = 2;
      emh.bcd_max_iter = 3;
      emh.bcd_tol = 1e-12;
      auto [em_params, em_trace] = run_em(hm, dict, emh, InitStrategy{}, mode);
      for (size_t i = 0; i < em_trace.surrogate_after.size(); ++i) {
        if (em_trace.surrogate_after[i] > em_trace.surrogate_before[i] + 1e-10) return false;
        if (!trace_monotone(em_trace.m_steps[i])) return false;
      }
      ++checked;
    }
    note = std::to_string(checked) + "/50 instances clean";
    return checked == 50;
  });

  run_criterion(2, "coefficient step matches a long-run subgradient oracle", [](std::string& note) {
    double worst_gap = 0.0;
    for (int s = 0; s < 10; ++s) {
      const CameraMode mode = s < 5 ? CameraMode::kOrthographic : CameraMode::kPerspective;
      PoseDictionary dict = small_chain_dict(5, 4, 40 + s);
      SynthConfig cfg = synth_config(60 + s, 3, mode);
      cfg.noise_sigma = 0.01;
      Hyperparams hyper = default_hyper(mode);
      hyper.nu = 2000;
      hyper.apg_max_iter = 20000;
      hyper.apg_tol = 1e-14;
      SynthInstance inst = generate_sequence(dict, cfg, hyper);
      ModelParams params = initialize(inst.noisy, dict, hyper, InitStrategy{}, mode);

      auto [c_star, report] = update_C(params, inst.noisy, dict, hyper);
      ModelParams solved = params;
      solved.C = c_star;
      const double f_apg = objective(solved, inst.noisy, dict, hyper);
      const double f_oracle = subgradient_c_best(params, inst.noisy, dict, hyper, 250000, 0.002);
      if (f_apg > f_oracle + 1e-6) return false;  // oracle must never beat the solver
      worst_gap = std::max(worst_gap, f_oracle - f_apg);
    }
    std::ostringstream os;
    os << "oracle trails by at most " << worst_gap;
    note = os.str();
    return worst_gap <= 1e-2;  // and it lands close, so the comparison is live
  });

  run_criterion(3, "closed-form translation and depth updates are stationary", [](std::string& note) {
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
      const CameraMode mode = s < 10 ? CameraMode::kOrthographic : CameraMode::kPerspective;
      PoseDictionary dict = make_dictionary(6, 2000 + s);
      SynthConfig cfg = synth_config(80 + s, 4, mode);
      cfg.noise_sigma = 0.02;
      Hyperparams hyper = default_hyper(mode);
      SynthInstance inst = generate_sequence(dict, cfg, hyper);
      ModelParams params = initialize(inst.noisy, dict, hyper, InitStrategy{}, mode);

      params.T = update_T(params, inst.noisy, dict, hyper);
      for (int t = 0; t < params.frame_count(); ++t)
        for (int r = 0; r < params.T.rows(); ++r)
          worst = std::max(worst, std::abs(fd_loss_derivative(params, &params.T(r, t),
                                                              inst.noisy, dict, hyper)));
      if (mode == CameraMode::kPerspective) {
        params.Z = update_Z(params, inst.noisy, dict, hyper);
        for (int t = 0; t < params.frame_count(); ++t)
          for (int j = 0; j < params.Z.rows(); ++j) {
            if (j == dict.skeleton.root_index) continue;
            worst = std::max(worst, std::abs(fd_loss_derivative(params, &params.Z(j, t),
                                                                inst.noisy, dict, hyper)));
          }
      }
    }
    std::ostringstream os;
    os << "largest finite-difference gradient " << worst;
    note = os.str();
    return worst <= 1e-6;
  });

  run_criterion(4, "posterior expectation identity holds on random triples", [](std::string& note) {
    double worst = 0.0;
    PoseDictionary dict = small_chain_dict(2, 2, 5);
    Hyperparams hyper = default_hyper(CameraMode::kOrthographic);
    hyper.nu = 30;
    for (int trial = 0; trial < 20; ++trial) {
      HeatMapStack hm;
      hm.frames = 1;
      hm.joints = 2;
      hm.height = 8;
      hm.width = 8;
      hm.map = HeatMapStack::unit_grid(8, 8);
      std::mt19937_64 rng(400 + trial);
      std::uniform_real_distribution<double> unif(0.1, 1.0);
      hm.channels.assign(2, Eigen::MatrixXf::Zero(8, 8));
      for (auto& ch : hm.channels)
        for (int r = 0; r < 8; ++r)
          for (int c = 0; c < 8; ++c) ch(r, c) = static_cast<float>(unif(rng));

      ModelParams a = testutil::random_params(dict, 1, CameraMode::kOrthographic, 10 + trial);
      ModelParams b = testutil::random_params(dict, 1, CameraMode::kOrthographic, 500 + trial);
      worst = std::max(worst, check_expectation_identity(hm, a, b, dict, hyper, 42 + trial));
    }
    std::ostringstream os;
    os << "largest identity gap " << worst;
    note = os.str();
    return worst <= 1e-6;
  });

  run_criterion(5, "noiseless sequences are recovered from exact 2D", [](std::string& note) {
    Timer timer;
    int good = 0;
    for (int s = 0; s < 50; ++s) {
      PoseDictionary dict = make_dictionary(16, 700 + s);
      SynthConfig cfg = synth_config(s, 30, CameraMode::kOrthographic);
      Hyperparams hyper = default_hyper(cfg.camera_mode);
      hyper.nu = 2000;
      hyper.bcd_max_iter = 120;
      hyper.bcd_tol = 1e-9;
      SynthInstance inst = generate_sequence(dict, cfg, hyper);
      ModelParams start = initialize(inst.clean, dict, hyper, InitStrategy{}, cfg.camera_mode);
      auto [params, trace] = run_bcd(inst.clean, dict, hyper, start);
      const double rec = reconstruction_error(compose_pose(params.C, dict), inst.truth);
      if (rec <= 0.05 * mean_limb_length(inst.truth, dict.skeleton)) ++good;
    }
    std::ostringstream os;
    os << good << "/50 under five percent of limb length";
    note = os.str();
    return good >= 45 && timer.secs() < 300.0;
  });

  run_criterion(6, "EM beats the distractor-corrupted argmax", [](std::string& note) {
    int wins = 0;
    for (int s = 0; s < 20; ++s) {
      PoseDictionary dict = make_dictionary(8, 1100 + s);
      SynthConfig cfg = synth_config(s, 10, CameraMode::kOrthographic);
      cfg.heatmap_sigma = 1.5;
      cfg.distractor_count = 2;
      cfg.distractor_fraction = 0.2;
      cfg.distractor_mass = 1.5;
      Hyperparams hyper = default_hyper(cfg.camera_mode);
      hyper.nu = 400;
      hyper.em_max_iter = 6;
      hyper.bcd_max_iter = 30;
      hyper.bcd_tol = 1e-8;
      SynthInstance inst = generate_sequence(dict, cfg, hyper);
      HeatMapStack hm = render_heatmaps(inst.clean, cfg);
      const double argmax_err = mean_err2d(heatmap_argmax(hm), inst.clean);
      auto [params, trace] = run_em(hm, dict, hyper, InitStrategy{}, cfg.camera_mode);
      const double em_err = mean_err2d(trace.expected.back(), inst.clean);
      if (em_err < argmax_err) ++wins;
    }
    note = std::to_string(wins) + "/20 instances improved";
    return wins >= 18;
  });

  run_criterion(7, "delta heat maps reproduce the given-2D reconstruction", [](std::string& note) {
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const bool persp = i >= 6;
      const std::string dir = make_temp_dir();
      PoseDictionary dict = make_dictionary(5, 1300 + i);
      io::save_dictionary(dir + "/dict.json", dict, 0.5, 1300 + i);
      const std::string cam =
          persp ? std::string(" --camera persp --calib 1.1,1.1,0.5,0.5")
                : std::string(" --camera ortho");
      auto synth = run_cli(cli + " synth --dict " + dir + "/dict.json --frames 4 --seed " +
                           std::to_string(i) + " --heatmap-sigma 0" + cam +
                           " --out-prefix " + dir + "/s");
      if (synth.status != 0) return false;

      auto peaks = run_cli(cli + " reconstruct-em --heatmaps " + dir + "/s_heatmaps.mchm" +
                           " --dict " + dir + "/dict.json" + cam + " --em-iters 0" +
                           " --expected2d " + dir + "/peaks.json --out " + dir + "/void.json");
      if (peaks.status != 0) return false;

      const std::string fit = " --nu 2000 --bcd-iters 200 --bcd-tol 1e-10";
      auto direct = run_cli(cli + " reconstruct --poses2d " + dir + "/peaks.json --dict " +
                            dir + "/dict.json" + cam + fit + " --out " + dir + "/direct.json");
      auto via_em = run_cli(cli + " reconstruct-em --heatmaps " + dir + "/s_heatmaps.mchm" +
                            " --dict " + dir + "/dict.json" + cam + fit +
                            " --em-iters 1 --out " + dir + "/viaem.json");
      if (direct.status != 0 || via_em.status != 0) return false;

      auto [da, sa] = io::load_poses3d(dir + "/direct.json");
      auto [db, sb] = io::load_poses3d(dir + "/viaem.json");
      for (size_t t = 0; t < da.frames.size(); ++t)
        for (int j = 0; j < da.frames[t].cols(); ++j)
          worst = std::max(worst, (da.frames[t].col(j) - db.frames[t].col(j)).norm());
    }
    std::ostringstream os;
    os << "largest per-joint difference " << worst;
    note = os.str();
    return worst < 1e-6;
  });

  run_criterion(8, "perspective fits beat orthographic on perspective data", [](std::string& note) {
    int wins = 0;
    for (int s = 0; s < 20; ++s) {
      PoseDictionary dict = make_dictionary(8, 1500 + s);
      SynthConfig cfg = synth_config(s, 12, CameraMode::kPerspective);
      cfg.depth = 1.25;
      cfg.coeff_scale = 0.45;
      cfg.rot_init = 0.4;
      cfg.rot_step = 0.04;
      cfg.trans_drift = 0.01;
      Hyperparams hp = default_hyper(CameraMode::kPerspective);
      hp.nu = 2000;
      hp.bcd_max_iter = 60;
      hp.bcd_tol = 1e-8;
      SynthInstance inst = generate_sequence(dict, cfg, hp);

      auto [pp, tp] = run_bcd(inst.clean, dict, hp,
                              initialize(inst.clean, dict, hp, InitStrategy{},
                                         CameraMode::kPerspective));
      Hyperparams ho = default_hyper(CameraMode::kOrthographic);
      ho.nu = 2000;
      ho.bcd_max_iter = 60;
      ho.bcd_tol = 1e-8;
      auto [po, to] = run_bcd(inst.clean, dict, ho,
                              initialize(inst.clean, dict, ho, InitStrategy{},
                                         CameraMode::kOrthographic));
      const double pje_persp =
          per_joint_error(compose_pose(pp.C, dict), inst.truth, dict.skeleton);
      const double pje_ortho =
          per_joint_error(compose_pose(po.C, dict), inst.truth, dict.skeleton);
      if (pje_persp < pje_ortho) ++wins;
    }
    note = std::to_string(wins) + "/20 seeds ordered correctly";
    return wins >= 18;
  });

  run_criterion(9, "metric protocol fixtures and orderings hold", [](std::string& note) {
    Skeleton skel = human15();
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);

    // reconstruction error never exceeds root-aligned error on the test pairs
    for (int s = 0; s < 10; ++s) {
      PoseDictionary dict = make_dictionary(8, 1900 + s);
      SynthConfig cfg = synth_config(s, 8, CameraMode::kOrthographic);
      cfg.noise_sigma = 0.01;
      Hyperparams hyper = default_hyper(cfg.camera_mode);
      hyper.nu = 2000;
      hyper.bcd_max_iter = 40;
      SynthInstance inst = generate_sequence(dict, cfg, hyper);
      auto [params, trace] = run_bcd(inst.noisy, dict, hyper,
                                     initialize(inst.noisy, dict, hyper, InitStrategy{},
                                                cfg.camera_mode));
      PoseSequence3D est = compose_pose(params.C, dict);
      if (reconstruction_error(est, inst.truth) >
          per_joint_error(est, inst.truth, skel) + 1e-12)
        return false;
    }
    for (int s = 0; s < 20; ++s) {
      PoseSequence3D gt;
      gt.frames = {testutil::base_pose15()};
      PoseSequence3D est = gt;
      for (int j = 0; j < 15; ++j)
        est.frames[0].col(j) += 0.01 * Eigen::Vector3d(g(rng), g(rng), g(rng));
      if (reconstruction_error(est, gt) > per_joint_error(est, gt, skel) + 1e-12) return false;
    }

    // exact similarity copies align to numerical zero
    for (int s = 0; s < 10; ++s) {
      Pose3 gt = testutil::base_pose15();
      const double scale = 0.5 + 0.2 * s;
      const Mat3 rot = exp_so3(0.3 * Eigen::Vector3d(g(rng), g(rng), g(rng)));
      const Eigen::Vector3d shift(g(rng), g(rng), g(rng));
      Pose3 est = (scale * rot * gt).colwise() + shift;
      auto [tf, residual] = procrustes_align(est, gt);
      if (residual > 1e-8) return false;
    }

    // hand-computed pcp fixtures
    Skeleton limb;
    limb.joint_count = 3;
    limb.root_index = 0;
    limb.edges = {{0, 1}, {1, 2}};
    limb.limb_pairs = {{1, 2}};
    PoseSequence3D gt;
    gt.frames = {Pose3(3, 3)};
    gt.frames[0].col(0) << 0, 0, 0;
    gt.frames[0].col(1) << 0, 10, 0;
    gt.frames[0].col(2) << 0, 20, 0;  // limb length 10
    PoseSequence3D est = gt;
    est.frames[0].col(1) += Eigen::Vector3d(6, 0, 0);
    est.frames[0].col(2) += Eigen::Vector3d(-6, 0, 0);  // both endpoints off by 6
    if (pcp(est, gt, limb, 0.5).overall != 0.0) return false;

    Skeleton four;
    four.joint_count = 8;
    four.root_index = 0;
    four.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}};
    four.limb_pairs = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
    PoseSequence3D gt4;
    gt4.frames = {Pose3(3, 8)};
    for (int j = 0; j < 8; ++j) gt4.frames[0].col(j) << j, 0, 0;  // every limb length 1
    PoseSequence3D est4 = gt4;
    est4.frames[0].col(4) += Eigen::Vector3d(0, 0, 0.7);  // endpoint errors 0.7 and 0.7:
    est4.frames[0].col(5) += Eigen::Vector3d(0, 0, 0.7);  // ratio 0.7 > 0.5, one limb fails
    const double score = pcp(est4, gt4, four, 0.5).overall;
    if (score != 0.75) return false;

    note = "orderings, alignment, and hand fixtures all hold";
    return true;
  });

  run_criterion(10, "shipped defaults match the help text and stay insensitive", [](std::string& note) {
    Hyperparams defaults;
    if (defaults.alpha != 0.5 || defaults.beta != 20.0 || defaults.gamma != 2.0) return false;
    auto help = run_cli(cli + " reconstruct --help");
    if (help.status != 0) return false;
    for (const char* needle : {"[0.5]", "[20]", "[2]"})
      if (help.out.find(needle) == std::string::npos) return false;

    PoseDictionary dict = make_dictionary(8, 1700);
    SynthConfig cfg = synth_config(3, 12, CameraMode::kOrthographic);
    cfg.noise_sigma = 0.02;
    Hyperparams base = default_hyper(cfg.camera_mode);
    base.nu = 2000;
    base.bcd_max_iter = 60;
    base.bcd_tol = 1e-8;
    SynthInstance inst = generate_sequence(dict, cfg, base);
    auto fit = [&](const Hyperparams& h) {
      auto [params, trace] =
          run_bcd(inst.noisy, dict, h, initialize(inst.noisy, dict, h, InitStrategy{},
                                                  cfg.camera_mode));
      return reconstruction_error(compose_pose(params.C, dict), inst.truth);
    };
    const double base_err = fit(base);
    double worst_shift = 0.0;
    for (int which = 0; which < 3; ++which)
      for (double factor : {0.5, 2.0}) {
        Hyperparams h = base;
        (which == 0 ? h.alpha : which == 1 ? h.beta : h.gamma) *= factor;
        worst_shift = std::max(worst_shift, std::abs(fit(h) - base_err) / base_err);
      }
    std::ostringstream os;
    os << "largest relative shift " << worst_shift;
    note = os.str();
    return worst_shift < 0.25;
  });

  run_criterion(11, "every command is bitwise reproducible", [](std::string& note) {
    const std::string base = make_temp_dir();
    PoseDictionary dict = make_dictionary(5, 21);
    io::save_dictionary(base + "/dict.json", dict, 0.5, 21);

    auto run_all = [&](const std::string& dir) {
      const std::string d = base + "/" + dir;
      if (run_cli("mkdir -p " + d).status != 0) return false;
      auto step = [&](const std::string& cmd) { return run_cli(cli + " " + cmd).status == 0; };
      if (!step("synth --dict " + base + "/dict.json --frames 6 --seed 4 --noise 0.003" +
                " --distractors 2 --heatmap-sigma 1.5 --out-prefix " + d + "/s"))
        return false;
      if (!step("learn-dict --train " + d + "/s_truth3d.json --k 6 --rounds 8 --seed 2" +
                " --out " + d + "/learned.json"))
        return false;
      if (!step("reconstruct --poses2d " + d + "/s_noisy2d.json --dict " + base +
                "/dict.json --camera ortho --nu 2000 --bcd-iters 20 --trace " + d +
                "/trace.json --plot-data " + d + "/trace.csv --params-out " + d +
                "/fit.json --out " + d + "/rec3d.json"))
        return false;
      if (!step("reconstruct-em --heatmaps " + d + "/s_heatmaps.mchm --dict " + base +
                "/dict.json --camera ortho --nu 400 --em-iters 2 --bcd-iters 10" +
                " --expected2d " + d + "/exp.json --trace " + d + "/emtrace.json" +
                " --params-out " + d + "/emfit.json --out " + d + "/em3d.json"))
        return false;
      if (!step("eval --est " + d + "/rec3d.json --gt " + d + "/s_truth3d.json --report " +
                d + "/report.json --plot-data " + d + "/report.csv"))
        return false;
      return true;
    };
    if (!run_all("one") || !run_all("two")) return false;

    int compared = 0;
    for (const char* f : {"s_truth3d.json", "s_params.json", "s_clean2d.json", "s_noisy2d.json",
                          "s_heatmaps.mchm", "learned.json", "trace.json", "trace.csv",
                          "fit.json", "rec3d.json", "exp.json", "emtrace.json", "emfit.json",
                          "em3d.json", "report.json", "report.csv"}) {
      if (!files_equal(base + "/one/" + f, base + "/two/" + f)) return false;
      ++compared;
    }
    note = std::to_string(compared) + " artifacts byte-identical";
    return true;
  });

  std::printf("%d/11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
