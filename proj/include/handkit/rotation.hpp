#pragma once

#include <Eigen/Core>

#include <array>

namespace handkit {

// Axis-angle (Rodrigues) to rotation matrix. Switches to the series expansion
// of sin(t)/t and (1-cos t)/t^2 below 1e-8 rad to avoid singular division.
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle);

// dR/dr_k for axis-angle r, k = 0..2 (Gallego & Yezzi closed form).
std::array<Eigen::Matrix3d, 3> rodrigues_jacobian(
    const Eigen::Vector3d& axis_angle);

// Rotation matrix to axis-angle; angle in [0, pi].
Eigen::Vector3d log_rotation(const Eigen::Matrix3d& rotation);

// Orthonormal with determinant +1, within tol.
bool is_rotation(const Eigen::Matrix3d& m, double tol = 1e-9);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Nearest rotation in Frobenius norm (orthogonal Procrustes projection).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

}  // namespace handkit
