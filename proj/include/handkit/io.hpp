#pragma once

#include <string>

#include <json.hpp>

#include "handkit/alignment.hpp"
#include "handkit/camera.hpp"
#include "handkit/grasp.hpp"
#include "handkit/hand_model.hpp"
#include "handkit/keypoints.hpp"
#include "handkit/softras.hpp"

namespace handkit::io {

// File helpers: unreadable/unwritable paths raise IoError; malformed content
// raises ValidationError naming the offending field.
std::string load_text(const std::string& path);
void save_text(const std::string& path, const std::string& content);
nlohmann::json load_json(const std::string& path);
void save_json(const std::string& path, const nlohmann::json& j);

camera::Intrinsics intrinsics_from_json(const nlohmann::json& j);
nlohmann::json to_json(const camera::Intrinsics& cam);

hand::Params params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const hand::Params& p);

KeypointSet3D keypoints3d_from_json(const nlohmann::json& j);
nlohmann::json to_json(const KeypointSet3D& k);

KeypointSet2D keypoints2d_from_json(const nlohmann::json& j);
nlohmann::json to_json(const KeypointSet2D& k);

hand::SkinnedModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const hand::SkinnedModel& m);

alignment::RigidPose pose_from_json(const nlohmann::json& j);
nlohmann::json to_json(const alignment::RigidPose& p);

grasp::Mlp mlp_from_json(const nlohmann::json& j);
nlohmann::json to_json(const grasp::Mlp& net);

std::vector<grasp::Sample> dataset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<grasp::Sample>& data);

// Binary PGM (P5, maxval 255) plus a sidecar JSON at <path>.json carrying the
// amodal flag; the flag is metadata and never inferred from pixels.
std::string pgm_bytes(const softras::MaskImage& mask);
softras::MaskImage load_mask_pgm(const std::string& path);
void save_mask_pgm(const std::string& path, const softras::MaskImage& mask);

}  // namespace handkit::io
