#include "handkit/rotation.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace handkit {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle) {
  const double theta2 = axis_angle.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a, b;  // sin(t)/t, (1-cos t)/t^2
  if (theta < 1e-8) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Eigen::Matrix3d k = skew(axis_angle);
  return Eigen::Matrix3d::Identity() + a * k + b * (k * k);
}

std::array<Eigen::Matrix3d, 3> rodrigues_jacobian(
    const Eigen::Vector3d& axis_angle) {
  const Eigen::Matrix3d r = rodrigues(axis_angle);
  const double theta2 = axis_angle.squaredNorm();
  std::array<Eigen::Matrix3d, 3> jac;
  if (theta2 < 1e-16) {
    // dR/dr_k at the identity is the elementary skew generator.
    for (int k = 0; k < 3; ++k) {
      jac[k] = skew(Eigen::Vector3d::Unit(k));
    }
    return jac;
  }
  // Gallego & Yezzi: dR/dr_k = (r_k [r]x + [r x (I - R) e_k]x) / |r|^2 * R
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d ek = Eigen::Vector3d::Unit(k);
    const Eigen::Vector3d v =
        axis_angle.cross((Eigen::Matrix3d::Identity() - r) * ek);
    jac[k] = ((axis_angle(k) * skew(axis_angle) + skew(v)) / theta2) * r;
  }
  return jac;
}

Eigen::Vector3d log_rotation(const Eigen::Matrix3d& rotation) {
  const double cos_theta =
      std::clamp((rotation.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta < 1e-10) {
    return Eigen::Vector3d::Zero();
  }
  if (theta > M_PI - 1e-6) {
    // Near pi the antisymmetric part vanishes; take the axis from R + I.
    const Eigen::Matrix3d s = 0.5 * (rotation + Eigen::Matrix3d::Identity());
    Eigen::Vector3d axis(std::sqrt(std::max(0.0, s(0, 0))),
                         std::sqrt(std::max(0.0, s(1, 1))),
                         std::sqrt(std::max(0.0, s(2, 2))));
    // Fix signs from the off-diagonal terms, anchored on the largest entry.
    int imax = 0;
    axis.cwiseAbs().maxCoeff(&imax);
    for (int i = 0; i < 3; ++i) {
      if (i != imax && s(imax, i) < 0.0) axis(i) = -axis(i);
    }
    return theta * axis.normalized();
  }
  Eigen::Vector3d w(rotation(2, 1) - rotation(1, 2),
                    rotation(0, 2) - rotation(2, 0),
                    rotation(1, 0) - rotation(0, 1));
  return w * (theta / (2.0 * std::sin(theta)));
}

bool is_rotation(const Eigen::Matrix3d& m, double tol) {
  const Eigen::Matrix3d gram = m.transpose() * m;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) {
    return false;
  }
  return std::abs(m.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace handkit
