#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

#include "handkit/hand_model.hpp"
#include "handkit/keypoints.hpp"

namespace handkit::camera {

struct Intrinsics {
  double fx = 0.0;   // focal length, px units
  double fy = 0.0;
  double ppx = 0.0;  // principal point, px
  double ppy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;  // fx, fy > 0; width, height > 0

  // Symmetric pinhole camera from a horizontal field of view.
  static Intrinsics from_fov(double hfov_rad, int width, int height);
};

// Crop rectangle in image coordinates; may extend past image bounds.
struct CropBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  void validate() const;  // x_min < x_max, y_min < y_max
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
};

inline constexpr int kKpeFrequencies = 4;
// Per encoded point: {theta_x, theta_y} x 4 frequencies x {sin, cos},
// interleaved per frequency: sin(2^0 t), cos(2^0 t), sin(2^1 t), ...
inline constexpr int kKpeValuesPerPoint = 2 * kKpeFrequencies * 2;

// Sparse variant: 5 points (4 corners + center) -> 80 values. Memory order is
// corners (min,min), (max,min), (min,max), (max,max), then the center block.
struct KpeEncoding {
  Eigen::VectorXd values;
};

inline constexpr int kKpeSparsePoints = 5;
inline constexpr int kKpeSparseSize = kKpeSparsePoints * kKpeValuesPerPoint;

// grid x grid cells, each encoded at its pixel center. values is
// (grid*grid) x 16, row-major over cells (row * grid + col).
struct DenseKpeMap {
  int grid = 0;
  Eigen::MatrixXd values;
};

// Pinhole projection u = fx X/Z + ppx, v = fy Y/Z + ppy.
// Throws NumericalError naming the first joint with Z <= 0.
KeypointSet2D project(const Intrinsics& cam, const KeypointSet3D& pts);

Eigen::Vector2d project_point(const Intrinsics& cam,
                              const Eigen::Vector3d& p);

// Viewing-ray angles of a pixel: atan((x-ppx)/fx), atan((y-ppy)/fy).
std::pair<double, double> pixel_angles(const Intrinsics& cam, double x,
                                       double y);

// Back-projection of a pixel at known depth; inverse of project_point.
Eigen::Vector3d lift_point(const Intrinsics& cam, const Eigen::Vector2d& uv,
                           double z);

// 16-value sinusoidal encoding of one pixel location.
Eigen::VectorXd encode_pixel(const Intrinsics& cam, double x, double y);

KpeEncoding kpe_sparse(const Intrinsics& cam, const CropBox& box);

DenseKpeMap kpe_dense(const Intrinsics& cam, const CropBox& box, int grid);

// CSV export of a dense map: header row,col followed by the 16 layout names.
std::string dense_kpe_to_csv(const DenseKpeMap& map);

// The same posed hand swept laterally across the field of view: one 2D
// projection per x-offset (mm). The projected shapes differ even though the
// 3D hand is identical up to translation.
std::vector<KeypointSet2D> perspective_demo(const Intrinsics& cam,
                                            const hand::SkinnedModel& model,
                                            const hand::Params& params,
                                            const std::vector<double>& offsets);

}  // namespace handkit::camera
