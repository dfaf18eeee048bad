#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "poselift/dict.hpp"
#include "poselift/em.hpp"
#include "poselift/eval.hpp"

namespace poselift::io {

// All JSON containers carry {"header": {"format_version": 1, "kind": ...}}.
// Loaders reject unknown kinds, bad versions, shape mismatches, and any value
// that breaks the in-memory invariants, throwing FormatError. Writers emit
// keys in sorted order with round-trip-exact numbers, so identical data means
// identical bytes.

void save_poses3d(const std::string& path, const PoseSequence3D& seq, const Skeleton& skeleton,
                  const std::string& units = "mm");
std::pair<PoseSequence3D, Skeleton> load_poses3d(const std::string& path);

void save_poses2d(const std::string& path, const PoseSequence2D& seq, const Skeleton& skeleton);
std::pair<PoseSequence2D, Skeleton> load_poses2d(const std::string& path);

void save_dictionary(const std::string& path, const PoseDictionary& dict, double alpha_used,
                     std::uint64_t seed);
PoseDictionary load_dictionary(const std::string& path);

void save_params(const std::string& path, const ModelParams& params);
ModelParams load_params(const std::string& path);

// Binary stack: magic "MCHM", five little-endian u32 (version, frames,
// joints, height, width), float32 payload in frame-joint-row-column order,
// then a trailing u64 element count that must match the payload exactly.
void save_heatmaps(const std::string& path, const HeatMapStack& hm);
HeatMapStack load_heatmaps(const std::string& path);

void save_bcd_trace(const std::string& path, const BcdTrace& trace);
void save_em_trace(const std::string& path, const EmTrace& trace);

}  // namespace poselift::io
