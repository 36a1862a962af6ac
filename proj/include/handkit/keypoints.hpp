#pragma once

#include <Eigen/Core>

namespace handkit {

// 21-keypoint hand layout, MANO joint order with fingertips appended:
//
//   idx  joint            idx  joint            idx  joint
//    0   wrist             8   middle pip       16   thumb tip
//    1   thumb cmc         9   middle dip       17   index tip
//    2   thumb mcp        10   ring mcp         18   middle tip
//    3   thumb ip         11   ring pip         19   ring tip
//    4   index mcp        12   ring dip         20   pinky tip
//    5   index pip        13   pinky mcp
//    6   index dip        14   pinky pip
//    7   middle mcp       15   pinky dip
//
// Joints 1..15 carry articulation; 16..20 are rigid children of the distal
// joints 3, 6, 9, 12, 15.
inline constexpr int kNumJoints = 21;
inline constexpr int kNumArticulated = 15;
inline constexpr int kWrist = 0;
inline constexpr int kThumbCmc = 1;
inline constexpr int kIndexMcp = 4;
inline constexpr int kMiddleMcp = 7;
inline constexpr int kRingMcp = 10;
inline constexpr int kPinkyMcp = 13;
inline constexpr int kFirstFingertip = 16;

// 3D joints in mm, camera frame. Joint 0 is the root (wrist).
struct KeypointSet3D {
  Eigen::Matrix<double, kNumJoints, 3> joints =
      Eigen::Matrix<double, kNumJoints, 3>::Zero();

  Eigen::Vector3d joint(int i) const { return joints.row(i).transpose(); }
  bool finite() const { return joints.allFinite(); }
};

// 2D image points in px.
struct KeypointSet2D {
  Eigen::Matrix<double, kNumJoints, 2> points =
      Eigen::Matrix<double, kNumJoints, 2>::Zero();

  Eigen::Vector2d point(int i) const { return points.row(i).transpose(); }
  bool finite() const { return points.allFinite(); }
};

}  // namespace handkit
