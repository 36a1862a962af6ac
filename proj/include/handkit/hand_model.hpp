#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

#include "handkit/keypoints.hpp"

namespace handkit::hand {

// Full pose of one hand: shape coefficients, per-joint articulation and the
// global root pose. Angles are axis-angle in radians, translation in mm.
struct Params {
  Eigen::VectorXd beta;                          // length B
  Eigen::Matrix<double, kNumArticulated, 3> theta =
      Eigen::Matrix<double, kNumArticulated, 3>::Zero();
  Eigen::Vector3d root_rot = Eigen::Vector3d::Zero();
  Eigen::Vector3d root_trans = Eigen::Vector3d::Zero();

  static Params zero(int num_betas = 10);
  void validate(int expected_betas) const;
};

// MANO-compatible skinning structure: template mesh, 21-entry skeleton
// (fingertips are rigid leaf joints), row-stochastic skinning weights, a
// linear joint regressor and a shape blend basis.
struct SkinnedModel {
  Eigen::MatrixXd template_vertices;                // V x 3, mm
  Eigen::MatrixXi faces;                            // F x 3
  std::array<int, kNumJoints> joint_parents{};      // -1 for the root
  Eigen::Matrix<double, kNumJoints, 3> rest_joints =
      Eigen::Matrix<double, kNumJoints, 3>::Zero();
  Eigen::MatrixXd skinning_weights;                 // V x 21
  Eigen::MatrixXd joint_regressor;                  // 21 x V
  std::vector<Eigen::MatrixXd> shape_basis;         // B entries, each V x 3

  int num_vertices() const { return static_cast<int>(template_vertices.rows()); }
  int num_betas() const { return static_cast<int>(shape_basis.size()); }

  // Checks the type invariants: tree-shaped parents, stochastic weights,
  // valid face indices, matching dimensions. Throws ValidationError.
  void validate() const;
};

// Shape blending result: displaced template and regressed rest joints.
struct ShapedHand {
  Eigen::MatrixXd vertices;  // V x 3
  Eigen::Matrix<double, kNumJoints, 3> rest_joints;
};

ShapedHand shape_blend(const SkinnedModel& model, const Eigen::VectorXd& beta);

// Posed geometry from forward kinematics + linear blend skinning.
struct PosedHand {
  KeypointSet3D joints;
  Eigen::MatrixXd vertices;                        // V x 3
  // World transform per joint (rest frame -> posed frame), rotation | translation.
  std::array<Eigen::Matrix3d, kNumJoints> joint_rotations;
  std::array<Eigen::Vector3d, kNumJoints> joint_translations;
};

PosedHand forward_kinematics(const SkinnedModel& model, const Params& params);

// As above but skips the vertex skinning; joints only.
KeypointSet3D forward_kinematics_joints(const SkinnedModel& model,
                                        const Params& params);

// Pose degrees of freedom (beta excluded): root_rot, root_trans, theta.
inline constexpr int kPoseDim = 3 + 3 + 3 * kNumArticulated;

// Flattened pose vector [root_rot, root_trans, theta row-major]; beta is
// carried separately and left untouched by unpack.
Eigen::VectorXd pack_pose(const Params& params);
void unpack_pose(const Eigen::VectorXd& pose, Params* params);

// d(posed joints)/d(pose), 63 x 51. Rows are joints x (x, y, z), columns
// follow pack_pose order. Optionally returns the posed joints as well.
Eigen::MatrixXd joints_jacobian(const SkinnedModel& model, const Params& params,
                                KeypointSet3D* posed = nullptr);

// Desk-scale procedural stand-in for a licensed hand asset: one capsule per
// phalanx, a box palm, rigid-dominant weights and a seeded random-orthogonal
// shape basis. All dimensions in mm.
struct ProceduralSpec {
  // [thumb, index, middle, ring, pinky] x [proximal, middle, distal]
  std::array<std::array<double, 3>, 5> segment_lengths = {{
      {38.0, 30.0, 24.0},
      {42.0, 26.0, 20.0},
      {46.0, 28.0, 21.0},
      {42.0, 26.0, 20.0},
      {32.0, 20.0, 17.0},
  }};
  std::array<double, 5> finger_radius = {9.0, 8.0, 8.0, 7.5, 6.5};
  double palm_width = 80.0;
  double palm_length = 85.0;
  double palm_thickness = 24.0;
  int ring_segments = 6;         // vertices per capsule ring
  int num_betas = 10;
  double shape_scale_mm = 2.0;   // RMS vertex displacement per unit beta
  std::uint64_t shape_seed = 0x48414e44u;  // fixed: models are reproducible

  void validate() const;
};

SkinnedModel build_procedural(const ProceduralSpec& spec = ProceduralSpec{});

// Every undirected edge is shared by exactly two faces with opposite
// orientation (holds per closed component).
bool mesh_is_watertight(const Eigen::MatrixXi& faces);

}  // namespace handkit::hand
