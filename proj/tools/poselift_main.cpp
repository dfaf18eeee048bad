#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poselift/bcd.hpp"
#include "poselift/dict.hpp"
#include "poselift/em.hpp"
#include "poselift/eval.hpp"
#include "poselift/io.hpp"
#include "poselift/synth.hpp"

namespace {

using namespace poselift;

void attach_config(CLI::App* cmd) {
  // Consumed by expand_config_args before the real parse; declared here so the
  // token is recognized and the help text mentions it.
  static std::string sink;
  cmd->add_option("--config", sink, "JSON file of the same option names; explicit flags win");
}

struct ConfigEntry {
  std::string name;
  std::vector<std::string> values;
};

// A config file is a flat JSON object whose keys are the long option names. A
// "calib" entry may be the usual fx,fy,cx,cy list or a full 3x3 nested array,
// which lands on --calib-matrix.
std::vector<ConfigEntry> read_config(const std::string& path) {
  std::ifstream input(path);
  if (!input) throw FormatError("cannot open config file " + path);
  nlohmann::json j;
  try {
    input >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw FormatError(path + ": config must be a JSON object of option names");
  auto scalar = [](const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  std::vector<ConfigEntry> entries;
  for (auto it = j.begin(); it != j.end(); ++it) {
    ConfigEntry entry{it.key(), {}};
    const nlohmann::json& v = it.value();
    if (v.is_array() && entry.name == "calib" && v.size() == 3 && v[0].is_array()) {
      entry.name = "calib-matrix";
      for (const auto& row : v) {
        if (!row.is_array() || row.size() != 3)
          throw FormatError(path + ": calib matrix must be 3x3");
        for (const auto& x : row) entry.values.push_back(scalar(x));
      }
    } else if (v.is_array() && entry.name == "calib") {
      std::string joined;
      for (const auto& x : v) {
        if (!joined.empty()) joined += ',';
        joined += scalar(x);
      }
      entry.values.push_back(std::move(joined));
    } else if (v.is_array()) {
      for (const auto& x : v) entry.values.push_back(scalar(x));
    } else {
      entry.values.push_back(scalar(v));
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

// CLI11 only reads config files attached to the root command, so --config on a
// subcommand is handled by hand: config entries become ordinary tokens appended
// to the argument list, except where the same option was given explicitly.
// Unknown keys turn into unknown flags and fail the parse like any other.
void expand_config_args(std::vector<std::string>& args) {
  if (args.empty() || args[0].rfind("-", 0) == 0) return;
  std::string path;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return;

  auto given = [&](const std::string& name) {
    const std::string flag = "--" + name;
    for (size_t i = 1; i < args.size(); ++i)
      if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  for (ConfigEntry& entry : read_config(path)) {
    if (given(entry.name)) continue;
    // either explicit calibration form overrides both config forms
    if ((entry.name == "calib" || entry.name == "calib-matrix") &&
        (given("calib") || given("calib-matrix")))
      continue;
    args.push_back("--" + entry.name);
    for (std::string& v : entry.values) args.push_back(std::move(v));
  }
}

Mat3 calib_from_string(const std::string& spec) {
  std::vector<double> v;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DataError("--calib: '" + tok + "' is not a number");
    }
  }
  if (v.size() != 4) throw DataError("--calib expects fx,fy,cx,cy");
  Mat3 k = Mat3::Identity();
  k(0, 0) = v[0];
  k(1, 1) = v[1];
  k(0, 2) = v[2];
  k(1, 2) = v[3];
  return k;
}

Mat3 calib_from_values(const std::vector<double>& v) {
  Mat3 k;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) k(r, c) = v[3 * r + c];
  return k;
}

struct CameraArgs {
  std::string camera = "ortho";
  std::string calib;
  std::vector<double> calib_matrix;
};

void add_camera_options(CLI::App* cmd, CameraArgs& a) {
  cmd->add_option("--camera", a.camera, "camera model")
      ->transform(CLI::IsMember({"ortho", "persp", "orthographic", "perspective"}))
      ->capture_default_str();
  auto* c = cmd->add_option("--calib", a.calib,
                            "intrinsics as fx,fy,cx,cy in normalized image coordinates");
  cmd->add_option("--calib-matrix", a.calib_matrix,
                  "full 3x3 calibration, row-major (mainly for config files)")
      ->expected(9)
      ->excludes(c);
}

CameraMode resolve_camera(const CameraArgs& a, Hyperparams& hyper) {
  if (!a.calib.empty())
    hyper.calibration = calib_from_string(a.calib);
  else if (!a.calib_matrix.empty())
    hyper.calibration = calib_from_values(a.calib_matrix);
  const bool persp = a.camera == "persp" || a.camera == "perspective";
  if (persp && !hyper.calibration)
    throw DataError("perspective camera requires --calib or --calib-matrix");
  return persp ? CameraMode::kPerspective : CameraMode::kOrthographic;
}

void add_weight_options(CLI::App* cmd, Hyperparams& h) {
  cmd->add_option("--alpha", h.alpha, "l1 weight on the pose codes")->capture_default_str();
  cmd->add_option("--beta", h.beta, "temporal smoothness weight on the codes")
      ->capture_default_str();
  cmd->add_option("--gamma", h.gamma, "temporal smoothness weight on the rotations")
      ->capture_default_str();
  cmd->add_option("--nu", h.nu, "data term weight (heat-map precision)")->capture_default_str();
}

InitStrategy parse_init(const std::string& spec) {
  InitStrategy s;
  if (spec == "mean") return s;
  if (spec.rfind("file:", 0) == 0) {
    s.kind = InitStrategy::Kind::kProvidedParams;
    s.params = io::load_params(spec.substr(5));
    return s;
  }
  throw DataError("--init takes 'mean' or 'file:<params.json>'");
}

void require_same_skeleton(const PoseDictionary& dict, const Skeleton& skel,
                           const std::string& what) {
  if (dict.skeleton.joint_count != skel.joint_count)
    throw DataError(what + " has " + std::to_string(skel.joint_count) +
                    " joints but the dictionary expects " +
                    std::to_string(dict.skeleton.joint_count));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << std::setprecision(17);
  return out;
}

PoseSequence3D slice3d(const PoseSequence3D& seq, int t) {
  PoseSequence3D one;
  one.frames.push_back(seq.frames[t]);
  return one;
}

int run(int argc, char** argv) {
  CLI::App app{"Sparse dictionary lifting of 2D joint tracks to 3D pose sequences"};
  app.require_subcommand(1);

  // learn-dict
  auto* learn = app.add_subcommand("learn-dict", "Learn a pose dictionary from 3D training poses");
  attach_config(learn);
  struct {
    std::string train, out;
    int k = 64;
    double alpha = 0.5;
    int rounds = 30;
    std::uint64_t seed = 0;
  } ld;
  learn->add_option("--train", ld.train, "3D pose file with training data")->required();
  learn->add_option("--k", ld.k, "number of atoms")->capture_default_str();
  learn->add_option("--alpha", ld.alpha, "l1 weight used while coding")->capture_default_str();
  learn->add_option("--rounds", ld.rounds, "alternation rounds")->capture_default_str();
  learn->add_option("--seed", ld.seed, "atom initialization seed")->capture_default_str();
  learn->add_option("--out", ld.out, "dictionary output file")->required();
  learn->callback([&] {
    auto [poses, skel] = io::load_poses3d(ld.train);
    TrainingPoses train = preprocess(poses.frames, skel);
    Hyperparams hyper;
    hyper.alpha = ld.alpha;
    hyper.dict_rounds = ld.rounds;
    LearnReport report;
    PoseDictionary dict = learn_dictionary(train, ld.k, hyper, ld.seed, &report);
    if (report.size_warning)
      std::cerr << "warning: " << ld.k << " atoms but only " << train.pose_count()
                << " training poses\n";
    io::save_dictionary(ld.out, dict, ld.alpha, ld.seed);
    std::cout << "training reconstruction error " << report.train_error << " after "
              << report.rounds << " rounds (" << report.reseeded << " atoms reseeded)\n";
  });

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct 3D poses from tracked 2D joints");
  attach_config(rec);
  struct {
    std::string poses2d, dict, out, trace, params_out, plot;
    std::string init = "mean";
    CameraArgs cam;
    Hyperparams hyper;
  } rc;
  rec->add_option("--poses2d", rc.poses2d, "2D pose file to lift")->required();
  rec->add_option("--dict", rc.dict, "dictionary file")->required();
  add_camera_options(rec, rc.cam);
  add_weight_options(rec, rc.hyper);
  rec->add_option("--init", rc.init, "'mean' or 'file:<params.json>'")->capture_default_str();
  rec->add_option("--bcd-iters", rc.hyper.bcd_max_iter, "outer iteration cap")
      ->capture_default_str();
  rec->add_option("--bcd-tol", rc.hyper.bcd_tol, "relative objective tolerance")
      ->capture_default_str();
  rec->add_option("--trace", rc.trace, "write the per-iteration objective trace here");
  rec->add_option("--params-out", rc.params_out, "also write the fitted model parameters");
  rec->add_option("--plot-data", rc.plot, "CSV of the objective after each block step");
  rec->add_option("--out", rc.out, "reconstructed 3D pose output")->required();
  rec->callback([&] {
    auto [obs, skel] = io::load_poses2d(rc.poses2d);
    PoseDictionary dict = io::load_dictionary(rc.dict);
    require_same_skeleton(dict, skel, rc.poses2d);
    Hyperparams hyper = rc.hyper;
    CameraMode mode = resolve_camera(rc.cam, hyper);
    ModelParams start = initialize(obs, dict, hyper, parse_init(rc.init), mode);
    auto [params, trace] = run_bcd(obs, dict, hyper, start);
    io::save_poses3d(rc.out, compose_pose(params.C, dict), dict.skeleton, "dict");
    if (!rc.trace.empty()) io::save_bcd_trace(rc.trace, trace);
    if (!rc.params_out.empty()) io::save_params(rc.params_out, params);
    if (!rc.plot.empty()) {
      std::ofstream csv = open_out(rc.plot);
      csv << "iteration,after_coeff,after_rotation,after_translation,after_depth\n";
      for (size_t i = 0; i < trace.iterations.size(); ++i) {
        const BcdIterRecord& r = trace.iterations[i];
        csv << (i + 1) << ',' << r.after_c << ',' << r.after_r << ',' << r.after_t << ',';
        if (r.after_z) csv << *r.after_z;
        csv << '\n';
      }
    }
    std::cout << "objective " << objective(params, obs, dict, hyper) << " after "
              << trace.iterations.size() << " iterations (" << trace.termination << ")\n";
  });

  // reconstruct-em
  auto* em = app.add_subcommand("reconstruct-em",
                                "Reconstruct 3D poses from heat-map joint evidence");
  attach_config(em);
  struct {
    std::string heatmaps, dict, out, expected2d, trace, params_out, plot;
    std::string init = "mean";
    CameraArgs cam;
    Hyperparams hyper;
  } re;
  em->add_option("--heatmaps", re.heatmaps, "heat-map stack file")->required();
  em->add_option("--dict", re.dict, "dictionary file")->required();
  add_camera_options(em, re.cam);
  add_weight_options(em, re.hyper);
  em->add_option("--init", re.init, "'mean' or 'file:<params.json>'")->capture_default_str();
  em->add_option("--em-iters", re.hyper.em_max_iter, "EM iteration cap")->capture_default_str();
  em->add_option("--bcd-iters", re.hyper.bcd_max_iter, "inner iteration cap")
      ->capture_default_str();
  em->add_option("--bcd-tol", re.hyper.bcd_tol, "inner relative objective tolerance")
      ->capture_default_str();
  em->add_option("--expected2d", re.expected2d, "write the final expected 2D poses here");
  em->add_option("--trace", re.trace, "write the per-iteration surrogate trace here");
  em->add_option("--params-out", re.params_out, "also write the fitted model parameters");
  em->add_option("--plot-data", re.plot, "CSV of the surrogate before/after each M-step");
  em->add_option("--out", re.out, "reconstructed 3D pose output")->required();
  em->callback([&] {
    HeatMapStack hm = io::load_heatmaps(re.heatmaps);
    PoseDictionary dict = io::load_dictionary(re.dict);
    if (hm.joints != dict.skeleton.joint_count)
      throw DataError(re.heatmaps + " has " + std::to_string(hm.joints) +
                      " joint channels but the dictionary expects " +
                      std::to_string(dict.skeleton.joint_count));
    Hyperparams hyper = re.hyper;
    CameraMode mode = resolve_camera(re.cam, hyper);
    auto [params, trace] = run_em(hm, dict, hyper, parse_init(re.init), mode);
    io::save_poses3d(re.out, compose_pose(params.C, dict), dict.skeleton, "dict");
    if (!re.expected2d.empty()) {
      PoseSequence2D expected =
          trace.expected.empty() ? heatmap_argmax(hm) : trace.expected.back();
      io::save_poses2d(re.expected2d, expected, dict.skeleton);
    }
    if (!re.trace.empty()) io::save_em_trace(re.trace, trace);
    if (!re.params_out.empty()) io::save_params(re.params_out, params);
    if (!re.plot.empty()) {
      std::ofstream csv = open_out(re.plot);
      csv << "iteration,surrogate_before,surrogate_after\n";
      for (size_t i = 0; i < trace.surrogate_after.size(); ++i)
        csv << (i + 1) << ',' << trace.surrogate_before[i] << ',' << trace.surrogate_after[i]
            << '\n';
    }
    std::cout << trace.surrogate_after.size() << " EM iterations (" << trace.termination
              << ")\n";
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Compare estimated against ground-truth 3D poses");
  attach_config(ev);
  struct {
    std::string est, gt, rescale_to, report, plot;
    std::string metric = "all";
    double tau = 0.5;
  } ea;
  ev->add_option("--est", ea.est, "estimated 3D pose file")->required();
  ev->add_option("--gt", ea.gt, "ground-truth 3D pose file")->required();
  ev->add_option("--metric", ea.metric, "which metric to report")
      ->transform(CLI::IsMember({"pje", "rec", "pcp", "all"}))
      ->capture_default_str();
  ev->add_option("--tau", ea.tau, "PCP threshold")->capture_default_str();
  ev->add_option("--rescale-to", ea.rescale_to,
                 "dictionary file; both sequences are rescaled to its mean limb length first");
  ev->add_option("--report", ea.report, "JSON report output");
  ev->add_option("--plot-data", ea.plot, "CSV of per-frame metric values");
  ev->callback([&] {
    auto [est, eskel] = io::load_poses3d(ea.est);
    auto [gt, gskel] = io::load_poses3d(ea.gt);
    if (eskel.joint_count != gskel.joint_count)
      throw DataError("estimate and ground truth have different joint counts");
    if (est.frame_count() != gt.frame_count())
      throw DataError("estimate and ground truth have different frame counts");
    if (!ea.rescale_to.empty()) {
      // both skeletons go to the common scale so errors are comparable across inputs
      PoseDictionary dict = io::load_dictionary(ea.rescale_to);
      est = rescale_to_limb_length(est, gskel, dict.mean_limb_length);
      gt = rescale_to_limb_length(gt, gskel, dict.mean_limb_length);
    }
    const bool want_pje = ea.metric == "pje" || ea.metric == "all";
    const bool want_rec = ea.metric == "rec" || ea.metric == "all";
    const bool want_pcp = ea.metric == "pcp" || ea.metric == "all";

    nlohmann::json report;
    report["header"] = {{"format_version", 1}, {"kind", "eval_report"}};
    report["frames"] = gt.frame_count();
    std::vector<double> pje_frames, rec_frames, pcp_frames;
    if (want_pje) {
      const double v = per_joint_error(est, gt, gskel);
      for (int t = 0; t < gt.frame_count(); ++t)
        pje_frames.push_back(per_joint_error(slice3d(est, t), slice3d(gt, t), gskel));
      report["per_joint_error"] = {{"mean", v}, {"per_frame", pje_frames}};
      std::cout << "per_joint_error " << v << '\n';
    }
    if (want_rec) {
      const double v = reconstruction_error(est, gt);
      for (int t = 0; t < gt.frame_count(); ++t)
        rec_frames.push_back(reconstruction_error(slice3d(est, t), slice3d(gt, t)));
      report["reconstruction_error"] = {{"mean", v}, {"per_frame", rec_frames}};
      std::cout << "reconstruction_error " << v << '\n';
    }
    if (want_pcp) {
      const PcpResult r = pcp(est, gt, gskel, ea.tau);
      for (int t = 0; t < gt.frame_count(); ++t)
        pcp_frames.push_back(pcp(slice3d(est, t), slice3d(gt, t), gskel, ea.tau).overall);
      nlohmann::json groups;
      for (const auto& [name, value] : r.per_group) groups[name] = value;
      report["pcp"] = {{"overall", r.overall},
                       {"per_group", groups},
                       {"counted_parts", r.counted_parts},
                       {"skipped_parts", r.skipped_parts},
                       {"per_frame", pcp_frames}};
      std::cout << "pcp " << r.overall << '\n';
    }
    if (!ea.report.empty()) {
      std::ofstream out(ea.report);
      if (!out) throw FormatError("cannot write " + ea.report);
      out << report.dump(1) << '\n';
    }
    if (!ea.plot.empty()) {
      std::ofstream csv = open_out(ea.plot);
      csv << "frame";
      if (want_pje) csv << ",per_joint_error";
      if (want_rec) csv << ",reconstruction_error";
      if (want_pcp) csv << ",pcp";
      csv << '\n';
      for (int t = 0; t < gt.frame_count(); ++t) {
        csv << t;
        if (want_pje) csv << ',' << pje_frames[t];
        if (want_rec) csv << ',' << rec_frames[t];
        if (want_pcp) csv << ',' << pcp_frames[t];
        csv << '\n';
      }
    }
  });

  // synth
  auto* sy = app.add_subcommand("synth", "Generate a synthetic sequence with every artifact");
  attach_config(sy);
  struct {
    std::string dict, prefix;
    CameraArgs cam;
    SynthConfig cfg;
  } sa;
  sy->add_option("--dict", sa.dict, "dictionary file")->required();
  sy->add_option("--frames", sa.cfg.frames, "sequence length")->capture_default_str();
  sy->add_option("--noise", sa.cfg.noise_sigma, "2D noise sigma, image units")
      ->capture_default_str();
  sy->add_option("--heatmap-sigma", sa.cfg.heatmap_sigma, "blob width in pixels; 0 for deltas")
      ->capture_default_str();
  sy->add_option("--distractors", sa.cfg.distractor_count, "extra blobs per affected channel")
      ->capture_default_str();
  sy->add_option("--seed", sa.cfg.seed, "generator seed")->capture_default_str();
  add_camera_options(sy, sa.cam);
  sy->add_option("--out-prefix", sa.prefix, "path prefix for the five outputs")->required();
  sy->callback([&] {
    PoseDictionary dict = io::load_dictionary(sa.dict);
    Hyperparams hyper;
    sa.cfg.camera_mode = resolve_camera(sa.cam, hyper);
    SynthInstance inst = generate_sequence(dict, sa.cfg, hyper);
    int clipped = 0;
    HeatMapStack hm = render_heatmaps(inst.noisy, sa.cfg, &clipped);
    io::save_poses3d(sa.prefix + "_truth3d.json", inst.truth, dict.skeleton, "dict");
    io::save_params(sa.prefix + "_params.json", inst.params);
    io::save_poses2d(sa.prefix + "_clean2d.json", inst.clean, dict.skeleton);
    io::save_poses2d(sa.prefix + "_noisy2d.json", inst.noisy, dict.skeleton);
    io::save_heatmaps(sa.prefix + "_heatmaps.mchm", hm);
    std::cout << "wrote " << sa.prefix << "_{truth3d,params,clean2d,noisy2d}.json and "
              << sa.prefix << "_heatmaps.mchm (" << clipped << " joints clipped)\n";
  });

  app.name(argc > 0 ? std::string(argv[0]) : "poselift");
  std::vector<std::string> args(argv + 1, argv + argc);
  expand_config_args(args);
  std::reverse(args.begin(), args.end());  // CLI11 consumes the vector back to front
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const LearnError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
