#include "handkit/camera.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "handkit/errors.hpp"

namespace handkit::camera {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ValidationError("[camera] focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw ValidationError("[camera] image size must be positive");
  }
  if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(ppx) ||
      !std::isfinite(ppy)) {
    throw ValidationError("[camera] intrinsics must be finite");
  }
}

Intrinsics Intrinsics::from_fov(double hfov_rad, int width, int height) {
  Intrinsics cam;
  cam.width = width;
  cam.height = height;
  cam.fx = 0.5 * width / std::tan(0.5 * hfov_rad);
  cam.fy = cam.fx;
  cam.ppx = 0.5 * width;
  cam.ppy = 0.5 * height;
  cam.validate();
  return cam;
}

void CropBox::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max)) {
    throw ValidationError("[camera] crop box must have positive extent");
  }
  if (!std::isfinite(x_min) || !std::isfinite(y_min) ||
      !std::isfinite(x_max) || !std::isfinite(y_max)) {
    throw ValidationError("[camera] crop box must be finite");
  }
}

Eigen::Vector2d project_point(const Intrinsics& cam, const Eigen::Vector3d& p) {
  return {cam.fx * p.x() / p.z() + cam.ppx, cam.fy * p.y() / p.z() + cam.ppy};
}

KeypointSet2D project(const Intrinsics& cam, const KeypointSet3D& pts) {
  cam.validate();
  KeypointSet2D out;
  for (int i = 0; i < kNumJoints; ++i) {
    const Eigen::Vector3d p = pts.joint(i);
    if (!(p.z() > 0.0)) {
      throw NumericalError("[camera] joint " + std::to_string(i) +
                           " is behind the camera (z = " +
                           std::to_string(p.z()) + ")");
    }
    out.points.row(i) = project_point(cam, p).transpose();
  }
  return out;
}

std::pair<double, double> pixel_angles(const Intrinsics& cam, double x,
                                       double y) {
  return {std::atan((x - cam.ppx) / cam.fx), std::atan((y - cam.ppy) / cam.fy)};
}

Eigen::Vector3d lift_point(const Intrinsics& cam, const Eigen::Vector2d& uv,
                           double z) {
  return {(uv.x() - cam.ppx) * z / cam.fx, (uv.y() - cam.ppy) * z / cam.fy, z};
}

namespace {

void encode_angle(double theta, double* out) {
  for (int k = 0; k < kKpeFrequencies; ++k) {
    const double t = std::ldexp(theta, k);  // 2^k * theta
    out[2 * k] = std::sin(t);
    out[2 * k + 1] = std::cos(t);
  }
}

}  // namespace

Eigen::VectorXd encode_pixel(const Intrinsics& cam, double x, double y) {
  const auto [tx, ty] = pixel_angles(cam, x, y);
  Eigen::VectorXd v(kKpeValuesPerPoint);
  encode_angle(tx, v.data());
  encode_angle(ty, v.data() + 2 * kKpeFrequencies);
  return v;
}

KpeEncoding kpe_sparse(const Intrinsics& cam, const CropBox& box) {
  cam.validate();
  box.validate();
  const double pts[kKpeSparsePoints][2] = {
      {box.x_min, box.y_min}, {box.x_max, box.y_min}, {box.x_min, box.y_max},
      {box.x_max, box.y_max}, {box.center_x(), box.center_y()}};
  KpeEncoding enc;
  enc.values.resize(kKpeSparseSize);
  for (int i = 0; i < kKpeSparsePoints; ++i) {
    enc.values.segment(i * kKpeValuesPerPoint, kKpeValuesPerPoint) =
        encode_pixel(cam, pts[i][0], pts[i][1]);
  }
  return enc;
}

DenseKpeMap kpe_dense(const Intrinsics& cam, const CropBox& box, int grid) {
  cam.validate();
  box.validate();
  if (grid < 1) {
    throw ValidationError("[camera] dense grid must be >= 1");
  }
  const double cell_w = (box.x_max - box.x_min) / grid;
  const double cell_h = (box.y_max - box.y_min) / grid;
  DenseKpeMap map;
  map.grid = grid;
  map.values.resize(grid * grid, kKpeValuesPerPoint);
  for (int row = 0; row < grid; ++row) {
    const double y = box.y_min + (row + 0.5) * cell_h;
    for (int col = 0; col < grid; ++col) {
      const double x = box.x_min + (col + 0.5) * cell_w;
      map.values.row(row * grid + col) = encode_pixel(cam, x, y).transpose();
    }
  }
  return map;
}

std::vector<KeypointSet2D> perspective_demo(const Intrinsics& cam,
                                            const hand::SkinnedModel& model,
                                            const hand::Params& params,
                                            const std::vector<double>& offsets) {
  cam.validate();
  const KeypointSet3D joints = hand::forward_kinematics_joints(model, params);
  std::vector<KeypointSet2D> out;
  out.reserve(offsets.size());
  for (double dx : offsets) {
    KeypointSet3D shifted = joints;
    shifted.joints.col(0).array() += dx;
    out.push_back(project(cam, shifted));
  }
  return out;
}

std::string dense_kpe_to_csv(const DenseKpeMap& map) {
  std::ostringstream out;
  out << "row,col";
  for (const char* axis : {"x", "y"}) {
    for (int k = 0; k < kKpeFrequencies; ++k) {
      out << "," << axis << "_sin" << k << "," << axis << "_cos" << k;
    }
  }
  out << "\n";
  char buf[64];
  for (int row = 0; row < map.grid; ++row) {
    for (int col = 0; col < map.grid; ++col) {
      out << row << "," << col;
      for (int j = 0; j < kKpeValuesPerPoint; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g",
                      map.values(row * map.grid + col, j));
        out << "," << buf;
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace handkit::camera
