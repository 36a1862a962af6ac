#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "handkit/camera.hpp"
#include "handkit/keypoints.hpp"

namespace handkit::metrics {

// Orthonormal wrist-anchored frame built from keypoints alone: origin at the
// wrist, x toward the index MCP, z along the palm normal
// (index MCP - wrist) x (pinky MCP - wrist), y completing the right-handed set.
struct RootFrame {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // columns = axes
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
};

// Throws NumericalError when wrist / index MCP / pinky MCP are collinear.
RootFrame root_frame_from_keypoints(const KeypointSet3D& pts);

// Distance between the centroids of two 2D keypoint sets, px.
double crop_pixel_distance(const KeypointSet2D& a, const KeypointSet2D& b);

// Mean per-joint distance after bringing both centroids to the origin, px.
double centered_2d_error(const KeypointSet2D& a, const KeypointSet2D& b);

// Mean per-joint distance with no alignment, mm.
double absolute_3d_error(const KeypointSet3D& a, const KeypointSet3D& b);

// Mean per-joint distance after expressing each hand in its own root frame
// (location + orientation alignment), mm.
double root_relative_3d_error(const KeypointSet3D& a, const KeypointSet3D& b);
double root_relative_3d_error(const KeypointSet3D& a, const RootFrame& fa,
                              const KeypointSet3D& b, const RootFrame& fb);

// Mean per-joint distance after subtracting joint 0 from each set, mm.
double mpjpe(const KeypointSet3D& pred, const KeypointSet3D& gt);

// Error of the predicted right-to-left root offset, mm.
double mrrpe(const KeypointSet3D& pred_left, const KeypointSet3D& pred_right,
             const KeypointSet3D& gt_left, const KeypointSet3D& gt_right);

// Mean per-joint pixel distance between the projection of pred3d and gt2d.
double reprojection_error_2d(const KeypointSet3D& pred3d,
                             const camera::Intrinsics& cam,
                             const KeypointSet2D& gt2d);

// One scatter point of the crop-ambiguity analysis.
struct AmbiguityRecord {
  std::string pair_id;
  double crop_px_dist = 0.0;
  double centered_2d_err = 0.0;
  double abs_3d_err = 0.0;
  double rootrel_3d_err = 0.0;

  void validate() const;  // all distances finite and >= 0
};

std::string ambiguity_records_to_csv(const std::vector<AmbiguityRecord>& records);

}  // namespace handkit::metrics
