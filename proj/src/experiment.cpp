#include "handkit/experiment.hpp"

#include <cstdio>
#include <numbers>

#include "handkit/errors.hpp"
#include "handkit/io.hpp"

namespace handkit::experiment {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view data) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return buf;
}

void ExperimentConfig::validate() const {
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) {
    throw ValidationError("[cli] hfov_deg must lie in (0, 180)");
  }
  if (width <= 0 || height <= 0) {
    throw ValidationError("[cli] image size must be positive");
  }
  if (sigma < 0.0) throw ValidationError("[cli] sigma must be >= 0");
  if (threads < 1) throw ValidationError("[cli] threads must be >= 1");
  if (!(near_bucket_px > 0.0) || !(far_bucket_px > near_bucket_px)) {
    throw ValidationError(
        "[cli] bucket thresholds must satisfy 0 < near < far");
  }
  if (!(gate_px > 0.0)) throw ValidationError("[cli] gate_px must be > 0");
  if (out_dir.empty()) throw ValidationError("[cli] out_dir must be set");
  population.validate();
}

camera::Intrinsics ExperimentConfig::make_camera() const {
  return camera::Intrinsics::from_fov(hfov_deg * std::numbers::pi / 180.0,
                                      width, height);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw ValidationError("[cli] config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    auto num = [&]() -> double {
      if (!v.is_number()) {
        throw ValidationError("[cli] config key '" + key + "' must be numeric");
      }
      return v.get<double>();
    };
    if (key == "seed") {
      if (!v.is_number_unsigned()) {
        throw ValidationError("[cli] config 'seed' must be a non-negative integer");
      }
      cfg.seed = v.get<std::uint64_t>();
    } else if (key == "hfov_deg") {
      cfg.hfov_deg = num();
    } else if (key == "width") {
      cfg.width = static_cast<int>(num());
    } else if (key == "height") {
      cfg.height = static_cast<int>(num());
    } else if (key == "sigma") {
      cfg.sigma = num();
    } else if (key == "out_dir") {
      if (!v.is_string()) {
        throw ValidationError("[cli] config 'out_dir' must be a string");
      }
      cfg.out_dir = v.get<std::string>();
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(num());
    } else if (key == "near_bucket_px") {
      cfg.near_bucket_px = num();
    } else if (key == "far_bucket_px") {
      cfg.far_bucket_px = num();
    } else if (key == "gate_px") {
      cfg.gate_px = num();
    } else if (key == "population_size") {
      cfg.population.size = static_cast<int>(num());
    } else if (key == "depth_min_mm") {
      cfg.population.depth_min_mm = num();
    } else if (key == "depth_max_mm") {
      cfg.population.depth_max_mm = num();
    } else if (key == "near_fraction") {
      cfg.population.near_fraction = num();
    } else if (key == "matched_fraction") {
      cfg.population.matched_fraction = num();
    } else {
      throw ValidationError("[cli] unknown config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

json ExperimentConfig::to_json() const {
  return json{{"seed", seed},
              {"hfov_deg", hfov_deg},
              {"width", width},
              {"height", height},
              {"sigma", sigma},
              {"out_dir", out_dir},
              {"threads", threads},
              {"near_bucket_px", near_bucket_px},
              {"far_bucket_px", far_bucket_px},
              {"gate_px", gate_px},
              {"population_size", population.size},
              {"depth_min_mm", population.depth_min_mm},
              {"depth_max_mm", population.depth_max_mm},
              {"near_fraction", population.near_fraction},
              {"matched_fraction", population.matched_fraction}};
}

void Manifest::record(const std::string& path, std::string_view content) {
  outputs_.emplace_back(path, fnv1a64_hex(content));
}

void Manifest::record_input(const std::string& key, const std::string& value) {
  inputs_[key] = value;
}

void Manifest::write(const std::string& path, std::uint64_t seed) const {
  json outputs = json::array();
  for (const auto& [p, h] : outputs_) {
    outputs.push_back(json{{"path", p}, {"fnv1a64", h}});
  }
  json inputs = json::object();
  for (const auto& [k, v] : inputs_) inputs[k] = v;
  const json j{{"version", kVersion},
               {"seed", seed},
               {"inputs", inputs},
               {"outputs", outputs}};
  io::save_json(path, j);
}

hand::Params make_reference_params(const hand::SkinnedModel& model) {
  hand::Params p = hand::Params::zero(model.num_betas());
  // Curl the four fingers and tuck the thumb so the whole silhouette sits
  // inside the frame at the working depth.
  for (int f = 0; f < 4; ++f) {
    const int mcp = 4 + 3 * f;  // index, middle, ring, pinky chains
    p.theta.row(mcp - 1) = Eigen::RowVector3d(0.45, 0.0, 0.0);
    p.theta.row(mcp + 0) = Eigen::RowVector3d(0.70, 0.0, 0.0);
    p.theta.row(mcp + 1) = Eigen::RowVector3d(0.50, 0.0, 0.0);
  }
  p.theta.row(0) = Eigen::RowVector3d(0.20, 0.25, 0.00);  // thumb cmc
  p.theta.row(1) = Eigen::RowVector3d(0.25, 0.10, 0.00);  // thumb mcp
  p.theta.row(2) = Eigen::RowVector3d(0.20, 0.00, 0.00);  // thumb ip
  p.root_rot = Eigen::Vector3d(-0.40, 0.20, 0.10);
  p.root_trans = Eigen::Vector3d(10.0, -15.0, 420.0);
  return p;
}

}  // namespace handkit::experiment
