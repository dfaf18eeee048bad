#include <doctest.h>

#include "test_support.hpp"

using namespace poselift;
using testutil::make_dictionary;

namespace {

// flatten a trace into the objective after every recorded step
std::vector<double> objective_path(const BcdTrace& trace) {
  std::vector<double> path = {trace.initial_objective};
  for (const BcdIterRecord& r : trace.iterations) {
    path.push_back(r.after_c);
    path.push_back(r.after_r);
    path.push_back(r.after_t);
    if (r.after_z) path.push_back(*r.after_z);
  }
  return path;
}

void check_monotone(const BcdTrace& trace) {
  const std::vector<double> path = objective_path(trace);
  for (size_t i = 0; i + 1 < path.size(); ++i) CHECK(path[i + 1] <= path[i] + 1e-10);
}

Hyperparams fitting_hyper(CameraMode mode) {
  Hyperparams h = testutil::default_hyper(mode);
  h.nu = 2000.0;  // observations live in unit image coordinates
  h.bcd_max_iter = 80;
  h.bcd_tol = 1e-8;
  return h;
}

}  // namespace

TEST_CASE("mean-pose initialization produces valid parameters in both modes") {
  PoseDictionary dict = make_dictionary(8, 2);
  for (auto mode : {CameraMode::kOrthographic, CameraMode::kPerspective}) {
    Hyperparams hyper = fitting_hyper(mode);
    SynthInstance inst = generate_sequence(dict, testutil::synth_config(4, 6, mode), hyper);
    InitStrategy mean;
    ModelParams init = initialize(inst.clean, dict, hyper, mean, mode);
    CHECK_NOTHROW(init.validate(dict, true));
    for (int t = 0; t < 6; ++t)
      CHECK((init.C.col(t) - dict.mean_pose_code).norm() == 0.0);
    if (mode == CameraMode::kPerspective) {
      for (int t = 0; t < 6; ++t)
        for (int j = 0; j < dict.skeleton.joint_count; ++j) CHECK(init.Z(j, t) == 1.0);
    }
  }
}

TEST_CASE("initialization reports frames whose rigid fit degenerates") {
  PoseDictionary dict = make_dictionary(4, 6);
  Hyperparams hyper;
  SynthInstance inst =
      generate_sequence(dict, testutil::synth_config(12, 3, CameraMode::kOrthographic), hyper);
  PoseSequence2D obs = inst.clean;
  obs.frames[1].setZero();  // every joint collapses onto one point
  std::vector<int> degenerate;
  InitStrategy mean;
  ModelParams init = initialize(obs, dict, hyper, mean, CameraMode::kOrthographic, &degenerate);
  REQUIRE(degenerate.size() == 1);
  CHECK(degenerate[0] == 1);
  CHECK((init.R[1] - Mat3::Identity()).norm() == 0.0);
  CHECK((init.R[0] - Mat3::Identity()).norm() > 1e-6);
}

TEST_CASE("provided parameters must match the requested camera mode") {
  PoseDictionary dict = make_dictionary(4, 9);
  Hyperparams hyper;
  SynthInstance inst =
      generate_sequence(dict, testutil::synth_config(2, 3, CameraMode::kOrthographic), hyper);
  InitStrategy provided;
  provided.kind = InitStrategy::Kind::kProvidedParams;
  provided.params = inst.params;
  CHECK_NOTHROW(initialize(inst.clean, dict, hyper, provided, CameraMode::kOrthographic));
  CHECK_THROWS_AS(initialize(inst.clean, dict, hyper, provided, CameraMode::kPerspective),
                  DataError);
}

TEST_CASE("perturb_params is deterministic, stays on the group, and keeps depths") {
  PoseDictionary dict = make_dictionary(5, 14);
  Hyperparams hyper = testutil::default_hyper(CameraMode::kPerspective);
  SynthInstance inst =
      generate_sequence(dict, testutil::synth_config(6, 4, CameraMode::kPerspective), hyper);

  ModelParams same = perturb_params(inst.params, 0.0, 123);
  CHECK((same.C - inst.params.C).norm() == 0.0);

  ModelParams a = perturb_params(inst.params, 0.05, 7);
  ModelParams b = perturb_params(inst.params, 0.05, 7);
  ModelParams c = perturb_params(inst.params, 0.05, 8);
  CHECK((a.C - b.C).norm() == 0.0);
  CHECK((a.C - c.C).norm() > 0.0);
  CHECK_NOTHROW(a.validate(dict, true));
  CHECK((a.Z - inst.params.Z).norm() == 0.0);
  CHECK((a.C - inst.params.C).norm() > 0.0);
  CHECK((a.R[0] - inst.params.R[0]).norm() > 0.0);
}

TEST_CASE("run_bcd decreases the objective monotonically and fits clean data") {
  PoseDictionary dict = make_dictionary(8, 21);
  for (auto mode : {CameraMode::kOrthographic, CameraMode::kPerspective}) {
    Hyperparams hyper = fitting_hyper(mode);
    SynthInstance inst = generate_sequence(dict, testutil::synth_config(17, 8, mode), hyper);
    InitStrategy mean;
    ModelParams init = initialize(inst.clean, dict, hyper, mean, mode);
    auto [fit, trace] = run_bcd(inst.clean, dict, hyper, init);

    check_monotone(trace);
    CHECK((trace.termination == "tol" || trace.termination == "max_iter"));
    const double final_obj = objective(fit, inst.clean, dict, hyper);
    CHECK(final_obj < trace.initial_objective);
    CHECK_NOTHROW(fit.validate(dict, true));

    PoseSequence3D est = compose_pose(fit.C, dict);
    const double rec = reconstruction_error(est, inst.truth);
    CHECK(rec < 0.1 * dict.mean_limb_length);
  }
}

TEST_CASE("run_bcd handles masked joints and still decreases monotonically") {
  PoseDictionary dict = make_dictionary(6, 33);
  Hyperparams hyper = fitting_hyper(CameraMode::kOrthographic);
  SynthInstance inst =
      generate_sequence(dict, testutil::synth_config(23, 6, CameraMode::kOrthographic), hyper);
  PoseSequence2D obs = inst.clean;
  obs.visibility.resize(6, dict.skeleton.joint_count);
  obs.visibility.setConstant(true);
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> joint(0, dict.skeleton.joint_count - 1);
  for (int t = 0; t < 6; ++t) obs.visibility(t, joint(rng)) = false;
  InitStrategy mean;
  ModelParams init = initialize(obs, dict, hyper, mean, CameraMode::kOrthographic);
  auto [fit, trace] = run_bcd(obs, dict, hyper, init);
  check_monotone(trace);
  CHECK(objective(fit, obs, dict, hyper) < trace.initial_objective);
}

TEST_CASE("restarting from a finished fit terminates almost immediately") {
  PoseDictionary dict = make_dictionary(6, 44);
  Hyperparams hyper = fitting_hyper(CameraMode::kOrthographic);
  SynthInstance inst =
      generate_sequence(dict, testutil::synth_config(29, 5, CameraMode::kOrthographic), hyper);
  InitStrategy mean;
  ModelParams init = initialize(inst.clean, dict, hyper, mean, CameraMode::kOrthographic);
  auto [fit, trace] = run_bcd(inst.clean, dict, hyper, init);
  auto [again, trace2] = run_bcd(inst.clean, dict, hyper, fit);
  CHECK(trace2.termination == "tol");
  CHECK(trace2.iterations.size() <= 3);
  const double before = objective(fit, inst.clean, dict, hyper);
  const double after = objective(again, inst.clean, dict, hyper);
  CHECK(after <= before + 1e-12);
  CHECK(before - after <= 1e-6 * std::max(1.0, before));
}
