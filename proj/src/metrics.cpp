#include "handkit/metrics.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "handkit/errors.hpp"

namespace handkit::metrics {

RootFrame root_frame_from_keypoints(const KeypointSet3D& pts) {
  const Eigen::Vector3d wrist = pts.joint(kWrist);
  const Eigen::Vector3d to_index = pts.joint(kIndexMcp) - wrist;
  const Eigen::Vector3d to_pinky = pts.joint(kPinkyMcp) - wrist;
  const Eigen::Vector3d normal = to_index.cross(to_pinky);
  if (to_index.norm() < 1e-9 || normal.norm() < 1e-9) {
    throw NumericalError(
        "[metrics] degenerate root frame: wrist, index MCP and pinky MCP "
        "are collinear");
  }
  RootFrame frame;
  frame.origin = wrist;
  const Eigen::Vector3d x = to_index.normalized();
  const Eigen::Vector3d z = normal.normalized();
  const Eigen::Vector3d y = z.cross(x);
  frame.rotation.col(0) = x;
  frame.rotation.col(1) = y;
  frame.rotation.col(2) = z;
  return frame;
}

double crop_pixel_distance(const KeypointSet2D& a, const KeypointSet2D& b) {
  const Eigen::Vector2d ca = a.points.colwise().mean().transpose();
  const Eigen::Vector2d cb = b.points.colwise().mean().transpose();
  return (ca - cb).norm();
}

double centered_2d_error(const KeypointSet2D& a, const KeypointSet2D& b) {
  const Eigen::RowVector2d ca = a.points.colwise().mean();
  const Eigen::RowVector2d cb = b.points.colwise().mean();
  double sum = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    sum += ((a.points.row(i) - ca) - (b.points.row(i) - cb)).norm();
  }
  return sum / kNumJoints;
}

double absolute_3d_error(const KeypointSet3D& a, const KeypointSet3D& b) {
  double sum = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    sum += (a.joints.row(i) - b.joints.row(i)).norm();
  }
  return sum / kNumJoints;
}

double root_relative_3d_error(const KeypointSet3D& a, const RootFrame& fa,
                              const KeypointSet3D& b, const RootFrame& fb) {
  double sum = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    const Eigen::Vector3d la =
        fa.rotation.transpose() * (a.joint(i) - fa.origin);
    const Eigen::Vector3d lb =
        fb.rotation.transpose() * (b.joint(i) - fb.origin);
    sum += (la - lb).norm();
  }
  return sum / kNumJoints;
}

double root_relative_3d_error(const KeypointSet3D& a, const KeypointSet3D& b) {
  return root_relative_3d_error(a, root_frame_from_keypoints(a), b,
                                root_frame_from_keypoints(b));
}

double mpjpe(const KeypointSet3D& pred, const KeypointSet3D& gt) {
  const Eigen::RowVector3d rp = pred.joints.row(kWrist);
  const Eigen::RowVector3d rg = gt.joints.row(kWrist);
  double sum = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    sum += ((pred.joints.row(i) - rp) - (gt.joints.row(i) - rg)).norm();
  }
  return sum / kNumJoints;
}

double mrrpe(const KeypointSet3D& pred_left, const KeypointSet3D& pred_right,
             const KeypointSet3D& gt_left, const KeypointSet3D& gt_right) {
  const Eigen::Vector3d pred_rel =
      pred_right.joint(kWrist) - pred_left.joint(kWrist);
  const Eigen::Vector3d gt_rel = gt_right.joint(kWrist) - gt_left.joint(kWrist);
  return (pred_rel - gt_rel).norm();
}

double reprojection_error_2d(const KeypointSet3D& pred3d,
                             const camera::Intrinsics& cam,
                             const KeypointSet2D& gt2d) {
  const KeypointSet2D proj = camera::project(cam, pred3d);
  double sum = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    sum += (proj.points.row(i) - gt2d.points.row(i)).norm();
  }
  return sum / kNumJoints;
}

void AmbiguityRecord::validate() const {
  const double vals[4] = {crop_px_dist, centered_2d_err, abs_3d_err,
                          rootrel_3d_err};
  for (double v : vals) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("[metrics] ambiguity record '" + pair_id +
                            "' has a negative or non-finite distance");
    }
  }
}

std::string ambiguity_records_to_csv(
    const std::vector<AmbiguityRecord>& records) {
  std::ostringstream out;
  out << "pair_id,crop_px_dist,centered_2d_err,abs_3d_err,rootrel_3d_err\n";
  char buf[64];
  for (const auto& r : records) {
    out << r.pair_id;
    for (double v : {r.crop_px_dist, r.centered_2d_err, r.abs_3d_err,
                     r.rootrel_3d_err}) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << "," << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace handkit::metrics
