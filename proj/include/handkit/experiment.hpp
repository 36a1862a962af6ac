#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "handkit/alignment.hpp"
#include "handkit/camera.hpp"
#include "handkit/hand_model.hpp"

namespace handkit::experiment {

inline constexpr const char* kVersion = "0.1.0";

// FNV-1a, 64-bit: stable content hash for run manifests.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

struct ExperimentConfig {
  std::uint64_t seed = 20240814;
  double hfov_deg = 60.0;
  int width = 640;
  int height = 480;
  alignment::PopulationSpec population;
  double sigma = 0.0;  // 0 picks the camera-dependent default
  std::string out_dir = "out";
  int threads = 1;
  double near_bucket_px = 20.0;
  double far_bucket_px = 100.0;
  double gate_px = 2.0;

  void validate() const;
  camera::Intrinsics make_camera() const;

  // Strict parse: unknown keys are rejected so typos cannot silently fall
  // back to defaults.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Output registry; written once at exit per run. Paths are recorded in
// insertion order with the hash of the exact bytes written.
class Manifest {
 public:
  void record(const std::string& path, std::string_view content);
  void record_input(const std::string& key, const std::string& value);
  void write(const std::string& path, std::uint64_t seed) const;

 private:
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::map<std::string, std::string> inputs_;
};

// Canonical flexed reference pose: every keypoint projects well inside a
// 60 deg / 640x480 view at 420 mm depth.
hand::Params make_reference_params(const hand::SkinnedModel& model);

}  // namespace handkit::experiment
