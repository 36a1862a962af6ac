#include "handkit/hand_model.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "handkit/errors.hpp"
#include "handkit/rng.hpp"
#include "handkit/rotation.hpp"

namespace handkit::hand {

Params Params::zero(int num_betas) {
  Params p;
  p.beta = Eigen::VectorXd::Zero(num_betas);
  return p;
}

void Params::validate(int expected_betas) const {
  if (beta.size() != expected_betas) {
    throw ValidationError("[hand_model] beta has " + std::to_string(beta.size()) +
                          " coefficients, model expects " +
                          std::to_string(expected_betas));
  }
  if (!beta.allFinite() || !theta.allFinite() || !root_rot.allFinite() ||
      !root_trans.allFinite()) {
    throw ValidationError("[hand_model] parameters must be finite");
  }
}

void SkinnedModel::validate() const {
  const int v = num_vertices();
  if (v <= 0 || template_vertices.cols() != 3) {
    throw ValidationError("[hand_model] template_vertices must be V x 3");
  }
  if (!template_vertices.allFinite()) {
    throw ValidationError("[hand_model] template_vertices must be finite");
  }
  if (faces.cols() != 3 || faces.rows() == 0) {
    throw ValidationError("[hand_model] faces must be F x 3");
  }
  if (faces.minCoeff() < 0 || faces.maxCoeff() >= v) {
    throw ValidationError("[hand_model] face indices out of range");
  }
  if (joint_parents[0] != -1) {
    throw ValidationError("[hand_model] joint 0 must be the root");
  }
  for (int j = 1; j < kNumJoints; ++j) {
    // Parents precede children; this rules out cycles and lets transforms
    // compose in a single forward pass.
    if (joint_parents[j] < 0 || joint_parents[j] >= j) {
      throw ValidationError("[hand_model] joint_parents must index an earlier joint");
    }
  }
  if (skinning_weights.rows() != v || skinning_weights.cols() != kNumJoints) {
    throw ValidationError("[hand_model] skinning_weights must be V x 21");
  }
  for (int i = 0; i < v; ++i) {
    if (skinning_weights.row(i).minCoeff() < -1e-12) {
      throw ValidationError("[hand_model] skinning weights must be non-negative");
    }
    if (std::abs(skinning_weights.row(i).sum() - 1.0) > 1e-9) {
      throw ValidationError("[hand_model] skinning weight row " +
                            std::to_string(i) + " does not sum to 1");
    }
  }
  if (joint_regressor.rows() != kNumJoints || joint_regressor.cols() != v) {
    throw ValidationError("[hand_model] joint_regressor must be 21 x V");
  }
  for (int j = 0; j < kNumJoints; ++j) {
    if (std::abs(joint_regressor.row(j).sum() - 1.0) > 1e-9) {
      throw ValidationError("[hand_model] joint_regressor row " +
                            std::to_string(j) + " does not sum to 1");
    }
  }
  for (const auto& basis : shape_basis) {
    if (basis.rows() != v || basis.cols() != 3) {
      throw ValidationError("[hand_model] shape_basis entries must be V x 3");
    }
  }
  if (!rest_joints.allFinite()) {
    throw ValidationError("[hand_model] rest_joints must be finite");
  }
}

ShapedHand shape_blend(const SkinnedModel& model, const Eigen::VectorXd& beta) {
  if (beta.size() != model.num_betas()) {
    throw ValidationError("[hand_model] beta length " + std::to_string(beta.size()) +
                          " does not match shape basis rank " +
                          std::to_string(model.num_betas()));
  }
  if (!beta.allFinite()) {
    throw ValidationError("[hand_model] beta must be finite");
  }
  ShapedHand shaped;
  shaped.vertices = model.template_vertices;
  for (int b = 0; b < model.num_betas(); ++b) {
    shaped.vertices += beta(b) * model.shape_basis[b];
  }
  shaped.rest_joints = model.joint_regressor * shaped.vertices;
  return shaped;
}

namespace {

struct JointTransforms {
  std::array<Eigen::Matrix3d, kNumJoints> rot;
  std::array<Eigen::Vector3d, kNumJoints> trans;
};

// World transform per joint, rest space -> posed space. The root rotates
// about the origin; every articulated joint rotates about its own rest
// position relative to its parent. Fingertip joints carry no rotation.
JointTransforms compose_transforms(const SkinnedModel& model,
                                   const Params& params,
                                   const Eigen::Matrix<double, kNumJoints, 3>& rest) {
  JointTransforms t;
  t.rot[0] = rodrigues(params.root_rot);
  t.trans[0] = params.root_trans;
  for (int j = 1; j < kNumJoints; ++j) {
    const int p = model.joint_parents[j];
    const Eigen::Vector3d pivot = rest.row(j).transpose();
    Eigen::Matrix3d local = Eigen::Matrix3d::Identity();
    if (j <= kNumArticulated) {
      local = rodrigues(params.theta.row(j - 1).transpose());
    }
    t.rot[j] = t.rot[p] * local;
    t.trans[j] = t.rot[p] * (pivot - local * pivot) + t.trans[p];
  }
  return t;
}

KeypointSet3D posed_joints(const JointTransforms& t,
                           const Eigen::Matrix<double, kNumJoints, 3>& rest) {
  KeypointSet3D joints;
  for (int j = 0; j < kNumJoints; ++j) {
    joints.joints.row(j) =
        (t.rot[j] * rest.row(j).transpose() + t.trans[j]).transpose();
  }
  return joints;
}

}  // namespace

PosedHand forward_kinematics(const SkinnedModel& model, const Params& params) {
  params.validate(model.num_betas());
  const ShapedHand shaped = shape_blend(model, params.beta);
  const JointTransforms t = compose_transforms(model, params, shaped.rest_joints);

  PosedHand posed;
  posed.joints = posed_joints(t, shaped.rest_joints);
  posed.joint_rotations = t.rot;
  posed.joint_translations = t.trans;
  posed.vertices = Eigen::MatrixXd::Zero(model.num_vertices(), 3);
  for (int j = 0; j < kNumJoints; ++j) {
    if (model.skinning_weights.col(j).isZero(0.0)) continue;
    Eigen::MatrixXd moved = shaped.vertices * t.rot[j].transpose();
    moved.rowwise() += t.trans[j].transpose();
    posed.vertices += model.skinning_weights.col(j).asDiagonal() * moved;
  }
  return posed;
}

KeypointSet3D forward_kinematics_joints(const SkinnedModel& model,
                                        const Params& params) {
  params.validate(model.num_betas());
  const ShapedHand shaped = shape_blend(model, params.beta);
  const JointTransforms t = compose_transforms(model, params, shaped.rest_joints);
  return posed_joints(t, shaped.rest_joints);
}

Eigen::VectorXd pack_pose(const Params& params) {
  Eigen::VectorXd v(kPoseDim);
  v.segment<3>(0) = params.root_rot;
  v.segment<3>(3) = params.root_trans;
  for (int j = 0; j < kNumArticulated; ++j) {
    v.segment<3>(6 + 3 * j) = params.theta.row(j).transpose();
  }
  return v;
}

void unpack_pose(const Eigen::VectorXd& pose, Params* params) {
  if (pose.size() != kPoseDim) {
    throw ValidationError("[hand_model] pose vector must have " +
                          std::to_string(kPoseDim) + " entries");
  }
  params->root_rot = pose.segment<3>(0);
  params->root_trans = pose.segment<3>(3);
  for (int j = 0; j < kNumArticulated; ++j) {
    params->theta.row(j) = pose.segment<3>(6 + 3 * j).transpose();
  }
}

Eigen::MatrixXd joints_jacobian(const SkinnedModel& model, const Params& params,
                                KeypointSet3D* posed) {
  params.validate(model.num_betas());
  const ShapedHand shaped = shape_blend(model, params.beta);
  const JointTransforms t = compose_transforms(model, params, shaped.rest_joints);
  const KeypointSet3D joints = posed_joints(t, shaped.rest_joints);
  if (posed) *posed = joints;

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3 * kNumJoints, kPoseDim);

  // Root: p_k = R0 y + root_trans with y independent of the root pose, so
  // dp/dr0_i = dR0_i R0^T (p_k - root_trans) and dp/dt = I.
  const Eigen::Matrix3d r0 = t.rot[0];
  const auto dr0 = rodrigues_jacobian(params.root_rot);
  for (int k = 0; k < kNumJoints; ++k) {
    const Eigen::Vector3d y = r0.transpose() * (joints.joint(k) - params.root_trans);
    for (int i = 0; i < 3; ++i) {
      jac.block<3, 1>(3 * k, i) = dr0[i] * y;
    }
    jac.block<3, 3>(3 * k, 3) = Eigen::Matrix3d::Identity();
  }

  // Articulated joint a moves its strict descendants rigidly about its own
  // posed position: dp_k/dtheta_ai = W_a dR_i R_a^T W_a^T (p_k - p_a).
  for (int a = 1; a <= kNumArticulated; ++a) {
    const Eigen::Matrix3d w = t.rot[model.joint_parents[a]];
    const Eigen::Vector3d axis_angle = params.theta.row(a - 1).transpose();
    const Eigen::Matrix3d ra = rodrigues(axis_angle);
    const auto dra = rodrigues_jacobian(axis_angle);
    std::array<Eigen::Matrix3d, 3> m;
    for (int i = 0; i < 3; ++i) {
      m[i] = w * dra[i] * ra.transpose() * w.transpose();
    }
    const Eigen::Vector3d pivot = joints.joint(a);
    for (int k = 0; k < kNumJoints; ++k) {
      bool descendant = false;
      for (int up = model.joint_parents[k]; up >= 0; up = model.joint_parents[up]) {
        if (up == a) {
          descendant = true;
          break;
        }
      }
      if (!descendant) continue;
      const Eigen::Vector3d lever = joints.joint(k) - pivot;
      for (int i = 0; i < 3; ++i) {
        jac.block<3, 1>(3 * k, 6 + 3 * (a - 1) + i) = m[i] * lever;
      }
    }
  }
  return jac;
}

void ProceduralSpec::validate() const {
  for (const auto& finger : segment_lengths) {
    for (double l : finger) {
      if (!(l > 0.0)) {
        throw ValidationError("[hand_model] segment lengths must be positive");
      }
    }
  }
  for (double r : finger_radius) {
    if (!(r > 0.0)) {
      throw ValidationError("[hand_model] finger radii must be positive");
    }
  }
  if (!(palm_width > 0.0) || !(palm_length > 0.0) || !(palm_thickness > 0.0)) {
    throw ValidationError("[hand_model] palm dimensions must be positive");
  }
  if (ring_segments < 3) {
    throw ValidationError("[hand_model] capsule rings need >= 3 segments");
  }
  if (num_betas < 1) {
    throw ValidationError("[hand_model] shape basis needs >= 1 coefficient");
  }
  if (!(shape_scale_mm > 0.0)) {
    throw ValidationError("[hand_model] shape scale must be positive");
  }
}

bool mesh_is_watertight(const Eigen::MatrixXi& faces) {
  std::map<std::pair<int, int>, int> directed;
  for (int f = 0; f < faces.rows(); ++f) {
    for (int e = 0; e < 3; ++e) {
      const int a = faces(f, e);
      const int b = faces(f, (e + 1) % 3);
      if (a == b) return false;
      if (++directed[{a, b}] > 1) return false;  // duplicated directed edge
    }
  }
  for (const auto& [edge, count] : directed) {
    auto rev = directed.find({edge.second, edge.first});
    if (rev == directed.end()) return false;
  }
  return true;
}

SkinnedModel build_procedural(const ProceduralSpec& spec) {
  spec.validate();

  SkinnedModel model;
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> tris;
  // weight/regressor assembled densely at the end
  std::vector<std::pair<int, std::pair<int, double>>> skin_entries;  // (vertex, (joint, w))
  std::vector<std::vector<std::pair<int, double>>> regressor_rows(kNumJoints);

  auto add_vertex = [&](const Eigen::Vector3d& p) {
    verts.push_back(p);
    return static_cast<int>(verts.size()) - 1;
  };

  const double w = spec.palm_width;
  const double len = spec.palm_length;
  const double th = spec.palm_thickness;

  // Palm box; the wrist sits at the center of the near (y = 0) face.
  const int c0 = add_vertex({-w / 2, 0, -th / 2});
  const int c1 = add_vertex({w / 2, 0, -th / 2});
  const int c2 = add_vertex({w / 2, len, -th / 2});
  const int c3 = add_vertex({-w / 2, len, -th / 2});
  const int c4 = add_vertex({-w / 2, 0, th / 2});
  const int c5 = add_vertex({w / 2, 0, th / 2});
  const int c6 = add_vertex({w / 2, len, th / 2});
  const int c7 = add_vertex({-w / 2, len, th / 2});
  const int box[12][3] = {{c0, c2, c1}, {c0, c3, c2},   // z = -th/2
                          {c4, c5, c6}, {c4, c6, c7},   // z = +th/2
                          {c0, c1, c5}, {c0, c5, c4},   // y = 0
                          {c2, c3, c7}, {c2, c7, c6},   // y = len
                          {c0, c4, c7}, {c0, c7, c3},   // x = -w/2
                          {c1, c2, c6}, {c1, c6, c5}};  // x = +w/2
  for (const auto& f : box) tris.emplace_back(f[0], f[1], f[2]);
  for (int c : {c0, c1, c2, c3, c4, c5, c6, c7}) {
    skin_entries.push_back({c, {kWrist, 1.0}});
  }
  // Wrist regressed from the near-face corners.
  for (int c : {c0, c1, c4, c5}) regressor_rows[kWrist].push_back({c, 0.25});

  // Finger layout: joint chains in rest pose are straight segments. The four
  // fingers run along +y from the palm's far edge; the thumb leaves the palm
  // edge diagonally.
  std::array<Eigen::Vector3d, 5> base = {{
      {-0.50 * w, 0.28 * len, 0.0},   // thumb
      {-0.325 * w, 1.0 * len, 0.0},   // index
      {-0.11 * w, 1.03 * len, 0.0},   // middle
      {0.11 * w, 1.0 * len, 0.0},     // ring
      {0.33 * w, 0.93 * len, 0.0},    // pinky
  }};
  std::array<Eigen::Vector3d, 5> dir = {{
      Eigen::Vector3d(-0.6, 0.8, 0.0).normalized(),
      {0.0, 1.0, 0.0},
      {0.0, 1.0, 0.0},
      {0.0, 1.0, 0.0},
      {0.0, 1.0, 0.0},
  }};

  Eigen::Matrix<double, kNumJoints, 3> joints;
  joints.setZero();
  std::array<int, kNumJoints> parents{};
  parents[0] = -1;

  const int nring = spec.ring_segments;

  // Capsule between a and b: two rings centered exactly on the bone ends plus
  // cone caps. Ring centroids coincide with the joints, which makes the
  // regressor exact on the template.
  auto add_capsule = [&](const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                         double radius, int driver_joint, int blend_joint,
                         int tip_joint) {
    const Eigen::Vector3d axis = (b - a).normalized();
    Eigen::Vector3d e1 = axis.cross(Eigen::Vector3d::UnitZ());
    if (e1.norm() < 1e-6) e1 = axis.cross(Eigen::Vector3d::UnitX());
    e1.normalize();
    const Eigen::Vector3d e2 = axis.cross(e1).normalized();

    std::vector<int> ring_a(nring), ring_b(nring);
    for (int k = 0; k < nring; ++k) {
      const double phi = 2.0 * M_PI * k / nring;
      const Eigen::Vector3d offset =
          radius * (std::cos(phi) * e1 + std::sin(phi) * e2);
      ring_a[k] = add_vertex(a + offset);
      ring_b[k] = add_vertex(b + offset);
    }
    const int apex_a = add_vertex(a - 0.7 * radius * axis);
    const int apex_b = add_vertex(b + 0.7 * radius * axis);

    for (int k = 0; k < nring; ++k) {
      const int k1 = (k + 1) % nring;
      tris.emplace_back(ring_a[k], ring_b[k], ring_b[k1]);
      tris.emplace_back(ring_a[k], ring_b[k1], ring_a[k1]);
      tris.emplace_back(apex_a, ring_a[k], ring_a[k1]);
      tris.emplace_back(apex_b, ring_b[k1], ring_b[k]);
    }

    // Rigid-dominant weights: the near ring blends toward the previous bone,
    // everything else follows the driving joint (or the fingertip leaf).
    const int far_joint = tip_joint >= 0 ? tip_joint : driver_joint;
    for (int k = 0; k < nring; ++k) {
      skin_entries.push_back({ring_a[k], {driver_joint, 0.7}});
      skin_entries.push_back({ring_a[k], {blend_joint, 0.3}});
      skin_entries.push_back({ring_b[k], {far_joint, 1.0}});
    }
    skin_entries.push_back({apex_a, {driver_joint, 0.7}});
    skin_entries.push_back({apex_a, {blend_joint, 0.3}});
    skin_entries.push_back({apex_b, {far_joint, 1.0}});

    for (int k = 0; k < nring; ++k) {
      regressor_rows[driver_joint].push_back({ring_a[k], 1.0 / nring});
      if (tip_joint >= 0) {
        regressor_rows[tip_joint].push_back({ring_b[k], 1.0 / nring});
      }
    }
  };

  for (int f = 0; f < 5; ++f) {
    const int mcp = 1 + 3 * f;
    const int tip = kFirstFingertip + f;
    const auto& lengths = spec.segment_lengths[f];
    Eigen::Vector3d chain[4];
    chain[0] = base[f];
    chain[1] = chain[0] + lengths[0] * dir[f];
    chain[2] = chain[1] + lengths[1] * dir[f];
    chain[3] = chain[2] + lengths[2] * dir[f];

    joints.row(mcp) = chain[0].transpose();
    joints.row(mcp + 1) = chain[1].transpose();
    joints.row(mcp + 2) = chain[2].transpose();
    joints.row(tip) = chain[3].transpose();
    parents[mcp] = kWrist;
    parents[mcp + 1] = mcp;
    parents[mcp + 2] = mcp + 1;
    parents[tip] = mcp + 2;

    const double r = spec.finger_radius[f];
    add_capsule(chain[0], chain[1], r, mcp, kWrist, -1);
    add_capsule(chain[1], chain[2], 0.9 * r, mcp + 1, mcp, -1);
    add_capsule(chain[2], chain[3], 0.8 * r, mcp + 2, mcp + 1, tip);
  }

  const int num_vertices = static_cast<int>(verts.size());
  model.template_vertices.resize(num_vertices, 3);
  for (int i = 0; i < num_vertices; ++i) {
    model.template_vertices.row(i) = verts[i].transpose();
  }
  model.faces.resize(static_cast<int>(tris.size()), 3);
  for (size_t i = 0; i < tris.size(); ++i) {
    model.faces.row(static_cast<int>(i)) = tris[i].transpose();
  }
  model.joint_parents = parents;

  model.skinning_weights = Eigen::MatrixXd::Zero(num_vertices, kNumJoints);
  for (const auto& [vertex, jw] : skin_entries) {
    model.skinning_weights(vertex, jw.first) += jw.second;
  }
  model.joint_regressor = Eigen::MatrixXd::Zero(kNumJoints, num_vertices);
  for (int j = 0; j < kNumJoints; ++j) {
    for (const auto& [vertex, weight] : regressor_rows[j]) {
      model.joint_regressor(j, vertex) += weight;
    }
  }
  // Anchor the rest joints to the regressor so that shape_blend(0) reproduces
  // them bit-exactly.
  model.rest_joints = model.joint_regressor * model.template_vertices;

  // Seeded random-orthogonal shape basis (orthonormal over flattened V x 3,
  // scaled to shape_scale_mm RMS displacement per unit coefficient).
  Rng rng(spec.shape_seed);
  const int dim = 3 * num_vertices;
  Eigen::MatrixXd basis(dim, spec.num_betas);
  for (int b = 0; b < spec.num_betas; ++b) {
    for (int i = 0; i < dim; ++i) basis(i, b) = rng.normal();
    for (int prev = 0; prev < b; ++prev) {
      basis.col(b) -= basis.col(prev).dot(basis.col(b)) * basis.col(prev);
    }
    basis.col(b).normalize();
  }
  const double scale = spec.shape_scale_mm * std::sqrt(static_cast<double>(dim));
  model.shape_basis.resize(spec.num_betas);
  for (int b = 0; b < spec.num_betas; ++b) {
    model.shape_basis[b] =
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>(
            basis.col(b).data(), num_vertices, 3) *
        scale;
  }

  model.validate();
  return model;
}

}  // namespace handkit::hand
