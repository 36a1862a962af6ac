#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "handkit/camera.hpp"
#include "handkit/hand_model.hpp"
#include "handkit/keypoints.hpp"
#include "handkit/metrics.hpp"

namespace handkit::alignment {

struct RigidPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const;  // proper rotation within 1e-9
  KeypointSet3D apply(const KeypointSet3D& pts) const;
};

struct PnpResult {
  RigidPose pose;
  double residual_px = 0.0;  // mean per-joint reprojection distance
  int iterations = 0;
};

// Rigid camera-frame pose from 2D-3D correspondences: normalized DLT
// initialization, nearest-rotation projection, then Gauss-Newton with
// Armijo backtracking on pixel residuals. Converges at step norm < 1e-10
// or 100 iterations.
PnpResult pnp_align(const KeypointSet2D& ref2d, const KeypointSet3D& hand3d,
                    const camera::Intrinsics& cam);

struct ShiftedAlignment {
  RigidPose pose;
  Eigen::Vector2d shift = Eigen::Vector2d::Zero();
  double residual_px = 0.0;
};

// pnp_align against (ref2d + shift): places the same 2D pattern elsewhere in
// the visual field.
ShiftedAlignment pnp_align_with_shift(const KeypointSet2D& ref2d,
                                      const KeypointSet3D& hand3d,
                                      const camera::Intrinsics& cam,
                                      const Eigen::Vector2d& shift);

struct KeypointFitOptions {
  int max_iterations = 60;
  // Quadratic pull toward the anchor articulation; keeps the fit from
  // collapsing onto the rigid solution when the target pattern is reachable
  // by root motion alone.
  double anchor_weight = 1e-4;
  double step_tolerance = 1e-10;
};

// Full-pose nonlinear least squares: minimizes squared pixel error of the
// projected joints against target2d plus anchor_weight * |theta - anchor|^2,
// over (root_rot, root_trans, theta). beta stays fixed.
hand::Params fit_params_to_keypoints(const hand::SkinnedModel& model,
                                     const hand::Params& init,
                                     const Eigen::Matrix<double, 15, 3>& theta_anchor,
                                     const KeypointSet2D& target2d,
                                     const camera::Intrinsics& cam,
                                     const KeypointFitOptions& opts = {});

enum class ScanMode { kRaw, kPnp, kPnpShift };

ScanMode scan_mode_from_string(const std::string& s);
std::string to_string(ScanMode mode);

// Synthetic stand-in population mirroring the structure of real capture data:
//  - a broad background of independent hands anywhere in the frustum,
//  - "trajectory neighbor" draws: the reference hand under small shape-
//    preserving jitter (same subject moments apart),
//  - "coincidental match" draws: independently shaped hands refit so their
//    projection reproduces the reference 2D pattern at a uniformly sampled
//    image placement.
struct PopulationSpec {
  int size = 500;
  double depth_min_mm = 250.0;
  double depth_max_mm = 600.0;
  double near_fraction = 0.25;
  double matched_fraction = 0.20;
  double near_theta_noise = 0.035;   // rad
  double near_rot_noise = 0.02;      // rad
  double near_trans_noise = 4.0;     // mm
  double matched_theta_noise = 0.25; // rad, start offset before the refit
  double beta_sigma = 1.0;           // shape diversity of independent hands
  double border_margin_px = 10.0;
  KeypointFitOptions refit;

  void validate() const;
};

std::vector<hand::Params> generate_population(const hand::SkinnedModel& model,
                                              const hand::Params& reference,
                                              const camera::Intrinsics& cam,
                                              const PopulationSpec& spec,
                                              std::uint64_t seed);

struct ScanFailure {
  std::string pair_id;
  std::string message;
};

struct ScanResult {
  std::vector<metrics::AmbiguityRecord> records;  // input order, failures omitted
  std::vector<ScanFailure> failures;
};

// One AmbiguityRecord per population hand against the reference. raw compares
// hands where they are; pnp first rigidly aligns each hand to the reference
// 2D keypoints; pnp_shift aligns against a per-hand shifted copy of the
// pattern (shifts sampled from seed, uniform over placements that keep every
// keypoint border_margin_px inside the image). Per-hand errors are logged and
// the scan continues. Worker threads only affect wall time, never output.
ScanResult ambiguity_scan(const hand::SkinnedModel& model,
                          const hand::Params& reference,
                          const std::vector<hand::Params>& population,
                          const camera::Intrinsics& cam, ScanMode mode,
                          std::uint64_t seed, int threads = 1,
                          double border_margin_px = 10.0);

}  // namespace handkit::alignment
