#include "poselift/io.hpp"

#include <fstream>

#include <json.hpp>

namespace poselift::io {

namespace {

using nlohmann::json;

json read_json(const std::string& path, const char* kind) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("header") || !j["header"].is_object())
    throw FormatError(path + ": missing header");
  const json& h = j["header"];
  if (h.value("format_version", -1) != 1)
    throw FormatError(path + ": unsupported format version");
  if (h.value("kind", std::string()) != kind)
    throw FormatError(path + ": expected kind '" + kind + "', got '" +
                      h.value("kind", std::string("<none>")) + "'");
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw FormatError("write failed for " + path);
}

double num(const json& j, const std::string& where) {
  if (!j.is_number()) throw FormatError(where + ": expected a number");
  return j.get<double>();
}

json skeleton_to_json(const Skeleton& s) {
  json j;
  j["joint_count"] = s.joint_count;
  j["root_index"] = s.root_index;
  if (!s.joint_names.empty()) j["joint_names"] = s.joint_names;
  json edges = json::array();
  for (const auto& [a, b] : s.edges) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  json limbs = json::array();
  for (const auto& [a, b] : s.limb_pairs) limbs.push_back({a, b});
  j["limb_pairs"] = std::move(limbs);
  if (!s.limb_groups.empty()) j["limb_groups"] = s.limb_groups;
  return j;
}

Skeleton skeleton_from_json(const json& j, const std::string& path) {
  try {
    Skeleton s;
    s.joint_count = j.at("joint_count").get<int>();
    s.root_index = j.at("root_index").get<int>();
    if (j.contains("joint_names")) s.joint_names = j["joint_names"].get<std::vector<std::string>>();
    for (const auto& e : j.at("edges")) s.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    if (j.contains("limb_pairs"))
      for (const auto& e : j["limb_pairs"])
        s.limb_pairs.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    if (j.contains("limb_groups")) s.limb_groups = j["limb_groups"].get<std::vector<std::string>>();
    try {
      s.validate();
    } catch (const DataError& e) {
      throw FormatError(path + ": " + e.what());
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(path + ": bad skeleton: " + e.what());
  }
}

}  // namespace

void save_poses3d(const std::string& path, const PoseSequence3D& seq, const Skeleton& skeleton,
                  const std::string& units) {
  json j;
  j["header"] = {{"format_version", 1}, {"kind", "pose3d"}, {"units", units}};
  j["skeleton"] = skeleton_to_json(skeleton);
  json frames = json::array();
  for (const Pose3& s : seq.frames) {
    json f = json::array();
    for (int c = 0; c < s.cols(); ++c) f.push_back({s(0, c), s(1, c), s(2, c)});
    frames.push_back(std::move(f));
  }
  j["frames"] = std::move(frames);
  write_json(path, j);
}

std::pair<PoseSequence3D, Skeleton> load_poses3d(const std::string& path) {
  json j = read_json(path, "pose3d");
  Skeleton skeleton = skeleton_from_json(j.at("skeleton"), path);
  PoseSequence3D seq;
  if (!j.contains("frames") || !j["frames"].is_array())
    throw FormatError(path + ": missing frames");
  for (const auto& f : j["frames"]) {
    if (!f.is_array() || static_cast<int>(f.size()) != skeleton.joint_count)
      throw FormatError(path + ": frame with wrong joint count");
    Pose3 s(3, skeleton.joint_count);
    for (int c = 0; c < skeleton.joint_count; ++c) {
      const auto& pt = f[c];
      if (!pt.is_array() || pt.size() != 3) throw FormatError(path + ": joint is not a 3-vector");
      for (int r = 0; r < 3; ++r) s(r, c) = num(pt[r], path);
    }
    seq.frames.push_back(std::move(s));
  }
  if (seq.frames.empty()) throw FormatError(path + ": no frames");
  return {std::move(seq), std::move(skeleton)};
}

void save_poses2d(const std::string& path, const PoseSequence2D& seq, const Skeleton& skeleton) {
  json j;
  j["header"] = {{"format_version", 1}, {"kind", "pose2d"}};
  j["skeleton"] = skeleton_to_json(skeleton);
  json frames = json::array();
  for (const Pose2& s : seq.frames) {
    json f = json::array();
    for (int c = 0; c < s.cols(); ++c) f.push_back({s(0, c), s(1, c)});
    frames.push_back(std::move(f));
  }
  j["frames"] = std::move(frames);
  if (seq.visibility.size() != 0) {
    json vis = json::array();
    for (int t = 0; t < seq.visibility.rows(); ++t) {
      json row = json::array();
      for (int c = 0; c < seq.visibility.cols(); ++c) row.push_back(bool(seq.visibility(t, c)));
      vis.push_back(std::move(row));
    }
    j["visibility"] = std::move(vis);
  }
  write_json(path, j);
}

std::pair<PoseSequence2D, Skeleton> load_poses2d(const std::string& path) {
  json j = read_json(path, "pose2d");
  Skeleton skeleton = skeleton_from_json(j.at("skeleton"), path);
  PoseSequence2D seq;
  if (!j.contains("frames") || !j["frames"].is_array())
    throw FormatError(path + ": missing frames");
  for (const auto& f : j["frames"]) {
    if (!f.is_array() || static_cast<int>(f.size()) != skeleton.joint_count)
      throw FormatError(path + ": frame with wrong joint count");
    Pose2 s(2, skeleton.joint_count);
    for (int c = 0; c < skeleton.joint_count; ++c) {
      const auto& pt = f[c];
      if (!pt.is_array() || pt.size() != 2) throw FormatError(path + ": joint is not a 2-vector");
      for (int r = 0; r < 2; ++r) s(r, c) = num(pt[r], path);
    }
    seq.frames.push_back(std::move(s));
  }
  if (seq.frames.empty()) throw FormatError(path + ": no frames");
  if (j.contains("visibility")) {
    const auto& vis = j["visibility"];
    if (!vis.is_array() || vis.size() != seq.frames.size())
      throw FormatError(path + ": visibility frame count mismatch");
    seq.visibility.resize(seq.frames.size(), skeleton.joint_count);
    for (size_t t = 0; t < vis.size(); ++t) {
      if (!vis[t].is_array() || static_cast<int>(vis[t].size()) != skeleton.joint_count)
        throw FormatError(path + ": visibility row has wrong joint count");
      for (int c = 0; c < skeleton.joint_count; ++c) {
        if (!vis[t][c].is_boolean()) throw FormatError(path + ": visibility entry is not boolean");
        seq.visibility(t, c) = vis[t][c].get<bool>();
      }
    }
  }
  return {std::move(seq), std::move(skeleton)};
}

void save_dictionary(const std::string& path, const PoseDictionary& dict, double alpha_used,
                     std::uint64_t seed) {
  json j;
  j["header"] = {{"format_version", 1},
                 {"kind", "dict"},
                 {"atom_count", dict.atom_count()},
                 {"joint_count", dict.skeleton.joint_count},
                 {"atom_scale", dict.atom_scale},
                 {"mean_limb_length", dict.mean_limb_length},
                 {"alpha_used", alpha_used},
                 {"seed", seed}};
  j["skeleton"] = skeleton_to_json(dict.skeleton);
  json atoms = json::array();
  for (const Pose3& a : dict.atoms) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) {
      json row = json::array();
      for (int c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
      rows.push_back(std::move(row));
    }
    atoms.push_back(std::move(rows));
  }
  j["atoms"] = std::move(atoms);
  json code = json::array();
  for (Eigen::Index i = 0; i < dict.mean_pose_code.size(); ++i)
    code.push_back(dict.mean_pose_code(i));
  j["mean_pose_code"] = std::move(code);
  write_json(path, j);
}

PoseDictionary load_dictionary(const std::string& path) {
  json j = read_json(path, "dict");
  PoseDictionary dict;
  dict.skeleton = skeleton_from_json(j.at("skeleton"), path);
  const json& h = j["header"];
  dict.atom_scale = num(h.at("atom_scale"), path);
  dict.mean_limb_length = num(h.at("mean_limb_length"), path);
  const int k = h.at("atom_count").get<int>();
  const int p = dict.skeleton.joint_count;
  if (h.at("joint_count").get<int>() != p)
    throw FormatError(path + ": header joint count disagrees with the skeleton");
  if (!j.contains("atoms") || !j["atoms"].is_array() || static_cast<int>(j["atoms"].size()) != k)
    throw FormatError(path + ": atom payload does not match the declared count");
  for (const auto& a : j["atoms"]) {
    if (!a.is_array() || a.size() != 3) throw FormatError(path + ": atom is not 3 rows");
    Pose3 atom(3, p);
    for (int r = 0; r < 3; ++r) {
      if (!a[r].is_array() || static_cast<int>(a[r].size()) != p)
        throw FormatError(path + ": atom row has wrong length");
      for (int c = 0; c < p; ++c) atom(r, c) = num(a[r][c], path);
    }
    dict.atoms.push_back(std::move(atom));
  }
  const auto& code = j.at("mean_pose_code");
  if (!code.is_array() || static_cast<int>(code.size()) != k)
    throw FormatError(path + ": mean pose code has wrong length");
  dict.mean_pose_code.resize(k);
  for (int i = 0; i < k; ++i) dict.mean_pose_code(i) = num(code[i], path);
  try {
    dict.validate();
  } catch (const DataError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return dict;
}

void save_params(const std::string& path, const ModelParams& params) {
  json j;
  j["header"] = {{"format_version", 1},
                 {"kind", "params"},
                 {"camera_mode", params.camera_mode == CameraMode::kPerspective ? "perspective"
                                                                                : "orthographic"}};
  json c = json::array();
  for (int i = 0; i < params.C.rows(); ++i) {
    json row = json::array();
    for (int t = 0; t < params.C.cols(); ++t) row.push_back(params.C(i, t));
    c.push_back(std::move(row));
  }
  j["C"] = std::move(c);
  json rs = json::array();
  for (const Mat3& r : params.R) {
    json rows = json::array();
    for (int a = 0; a < 3; ++a) rows.push_back({r(a, 0), r(a, 1), r(a, 2)});
    rs.push_back(std::move(rows));
  }
  j["R"] = std::move(rs);
  json ts = json::array();
  for (int t = 0; t < params.T.cols(); ++t) {
    json v = json::array();
    for (int i = 0; i < params.T.rows(); ++i) v.push_back(params.T(i, t));
    ts.push_back(std::move(v));
  }
  j["T"] = std::move(ts);
  if (params.camera_mode == CameraMode::kPerspective) {
    json zs = json::array();
    for (int t = 0; t < params.Z.cols(); ++t) {
      json v = json::array();
      for (int i = 0; i < params.Z.rows(); ++i) v.push_back(params.Z(i, t));
      zs.push_back(std::move(v));
    }
    j["Z"] = std::move(zs);
  }
  write_json(path, j);
}

ModelParams load_params(const std::string& path) {
  json j = read_json(path, "params");
  ModelParams params;
  const std::string mode = j["header"].value("camera_mode", std::string());
  if (mode == "perspective")
    params.camera_mode = CameraMode::kPerspective;
  else if (mode == "orthographic")
    params.camera_mode = CameraMode::kOrthographic;
  else
    throw FormatError(path + ": unknown camera mode '" + mode + "'");

  const auto& c = j.at("C");
  if (!c.is_array() || c.empty()) throw FormatError(path + ": missing C");
  const int k = static_cast<int>(c.size());
  const int n = static_cast<int>(c[0].size());
  params.C.resize(k, n);
  for (int i = 0; i < k; ++i) {
    if (!c[i].is_array() || static_cast<int>(c[i].size()) != n)
      throw FormatError(path + ": ragged C");
    for (int t = 0; t < n; ++t) params.C(i, t) = num(c[i][t], path);
  }

  const auto& rs = j.at("R");
  if (!rs.is_array() || static_cast<int>(rs.size()) != n)
    throw FormatError(path + ": R frame count mismatch");
  params.R.resize(n);
  for (int t = 0; t < n; ++t) {
    const auto& m = rs[t];
    if (!m.is_array() || m.size() != 3) throw FormatError(path + ": rotation is not 3x3");
    for (int a = 0; a < 3; ++a) {
      if (!m[a].is_array() || m[a].size() != 3) throw FormatError(path + ": rotation is not 3x3");
      for (int b = 0; b < 3; ++b) params.R[t](a, b) = num(m[a][b], path);
    }
  }

  const auto& ts = j.at("T");
  const int trows = params.camera_mode == CameraMode::kPerspective ? 3 : 2;
  if (!ts.is_array() || static_cast<int>(ts.size()) != n)
    throw FormatError(path + ": T frame count mismatch");
  params.T.resize(trows, n);
  for (int t = 0; t < n; ++t) {
    if (!ts[t].is_array() || static_cast<int>(ts[t].size()) != trows)
      throw FormatError(path + ": translation has wrong length for the camera mode");
    for (int i = 0; i < trows; ++i) params.T(i, t) = num(ts[t][i], path);
  }

  if (params.camera_mode == CameraMode::kPerspective) {
    const auto& zs = j.at("Z");
    if (!zs.is_array() || static_cast<int>(zs.size()) != n)
      throw FormatError(path + ": Z frame count mismatch");
    const int p = static_cast<int>(zs[0].size());
    params.Z.resize(p, n);
    for (int t = 0; t < n; ++t) {
      if (!zs[t].is_array() || static_cast<int>(zs[t].size()) != p)
        throw FormatError(path + ": ragged Z");
      for (int i = 0; i < p; ++i) params.Z(i, t) = num(zs[t][i], path);
    }
  }
  return params;
}

void save_heatmaps(const std::string& path, const HeatMapStack& hm) {
  hm.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out.write("MCHM", 4);
  const std::uint32_t head[5] = {1u, static_cast<std::uint32_t>(hm.frames),
                                 static_cast<std::uint32_t>(hm.joints),
                                 static_cast<std::uint32_t>(hm.height),
                                 static_cast<std::uint32_t>(hm.width)};
  out.write(reinterpret_cast<const char*>(head), sizeof(head));
  for (const Eigen::MatrixXf& ch : hm.channels)
    for (int r = 0; r < hm.height; ++r)
      for (int c = 0; c < hm.width; ++c) {
        const float v = ch(r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  const std::uint64_t count = static_cast<std::uint64_t>(hm.frames) * hm.joints * hm.height *
                              hm.width;
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  if (!out) throw FormatError("write failed for " + path);
}

HeatMapStack load_heatmaps(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "MCHM") throw FormatError(path + ": bad magic");
  std::uint32_t head[5];
  in.read(reinterpret_cast<char*>(head), sizeof(head));
  if (!in) throw FormatError(path + ": truncated header");
  if (head[0] != 1) throw FormatError(path + ": unsupported version");
  HeatMapStack hm;
  hm.frames = static_cast<int>(head[1]);
  hm.joints = static_cast<int>(head[2]);
  hm.height = static_cast<int>(head[3]);
  hm.width = static_cast<int>(head[4]);
  if (hm.frames <= 0 || hm.joints <= 0 || hm.height <= 0 || hm.width <= 0)
    throw FormatError(path + ": empty dimensions");
  hm.map = HeatMapStack::unit_grid(hm.height, hm.width);
  const std::uint64_t count = static_cast<std::uint64_t>(hm.frames) * hm.joints * hm.height *
                              hm.width;
  hm.channels.assign(static_cast<size_t>(hm.frames) * hm.joints,
                     Eigen::MatrixXf(hm.height, hm.width));
  for (auto& ch : hm.channels)
    for (int r = 0; r < hm.height; ++r)
      for (int c = 0; c < hm.width; ++c) {
        float v;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) throw FormatError(path + ": truncated payload");
        ch(r, c) = v;
      }
  std::uint64_t trailer;
  in.read(reinterpret_cast<char*>(&trailer), sizeof(trailer));
  if (!in) throw FormatError(path + ": missing trailer");
  if (trailer != count) throw FormatError(path + ": trailer does not match the payload size");
  in.peek();
  if (!in.eof()) throw FormatError(path + ": trailing bytes after the payload");
  try {
    hm.validate();
  } catch (const DataError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return hm;
}

void save_bcd_trace(const std::string& path, const BcdTrace& trace) {
  json j;
  j["header"] = {{"format_version", 1}, {"kind", "trace"}};
  j["initial_objective"] = trace.initial_objective;
  j["termination"] = trace.termination;
  json its = json::array();
  for (const BcdIterRecord& r : trace.iterations) {
    json rec = {{"after_c", r.after_c},
                {"after_r", r.after_r},
                {"after_t", r.after_t},
                {"coeff_iterations", r.c_report.iterations},
                {"rotation_iterations", r.r_report.iterations},
                {"rotation_grad_norm", r.r_report.grad_norm}};
    if (r.after_z) rec["after_z"] = *r.after_z;
    its.push_back(std::move(rec));
  }
  j["iterations"] = std::move(its);
  write_json(path, j);
}

void save_em_trace(const std::string& path, const EmTrace& trace) {
  json j;
  j["header"] = {{"format_version", 1}, {"kind", "em_trace"}};
  j["termination"] = trace.termination;
  json its = json::array();
  for (size_t i = 0; i < trace.surrogate_after.size(); ++i) {
    json rec = {{"surrogate_before", trace.surrogate_before[i]},
                {"surrogate_after", trace.surrogate_after[i]},
                {"fallback_channels", trace.fallbacks[i].size()},
                {"inner_iterations", trace.m_steps[i].iterations.size()}};
    its.push_back(std::move(rec));
  }
  j["iterations"] = std::move(its);
  write_json(path, j);
}

}  // namespace poselift::io
