#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "handkit/errors.hpp"
#include "handkit/metrics.hpp"
#include "handkit/rotation.hpp"
#include "test_support.hpp"

using namespace handkit;

namespace {

KeypointSet2D random_points2d(std::mt19937_64& rng, double spread = 100.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  KeypointSet2D k;
  for (int j = 0; j < kNumJoints; ++j) {
    k.points(j, 0) = 320.0 + spread * n(rng);
    k.points(j, 1) = 240.0 + spread * n(rng);
  }
  return k;
}

KeypointSet3D rigidly_moved(const KeypointSet3D& a, const Eigen::Matrix3d& r,
                            const Eigen::Vector3d& t) {
  KeypointSet3D b;
  b.joints = a.joints * r.transpose();
  b.joints.rowwise() += t.transpose();
  return b;
}

}  // namespace

TEST_CASE("crop distance: zero on identical sets, 50 on a 3-4-5 shift") {
  std::mt19937_64 rng(41);
  const KeypointSet2D a = random_points2d(rng);
  CHECK(metrics::crop_pixel_distance(a, a) == 0.0);

  KeypointSet2D b = a;
  b.points.col(0).array() += 30.0;
  b.points.col(1).array() += 40.0;
  CHECK(metrics::crop_pixel_distance(a, b) == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("crop distance equals the distance between centroids") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const KeypointSet2D a = random_points2d(rng);
    const KeypointSet2D b = random_points2d(rng);
    const Eigen::Vector2d ca = a.points.colwise().mean().transpose();
    const Eigen::Vector2d cb = b.points.colwise().mean().transpose();
    CHECK(metrics::crop_pixel_distance(a, b) ==
          doctest::Approx((ca - cb).norm()).epsilon(1e-12));
    CHECK(metrics::crop_pixel_distance(a, b) ==
          metrics::crop_pixel_distance(b, a));
  }
}

TEST_CASE("centered 2D error ignores translation exactly") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const KeypointSet2D a = random_points2d(rng);
    KeypointSet2D b = a;
    std::normal_distribution<double> n(0.0, 200.0);
    b.points.col(0).array() += n(rng);
    b.points.col(1).array() += n(rng);
    CHECK(metrics::centered_2d_error(a, b) < 1e-9);
  }
}

TEST_CASE("centered 2D error of a single displaced joint") {
  std::mt19937_64 rng(44);
  const KeypointSet2D a = random_points2d(rng);
  KeypointSet2D b = a;
  const double d = 21.0;
  b.points(17, 0) += d;
  // displacing one of n joints moves the centroid by d/n: the displaced joint
  // contributes (n-1)d/n, the others d/n each, so the mean is 2(n-1)d/n^2.
  const double n = kNumJoints;
  const double expect = 2.0 * (n - 1.0) * d / (n * n);
  CHECK(metrics::centered_2d_error(a, b) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("doubling about the centroid leaves the centroid spread") {
  std::mt19937_64 rng(45);
  const KeypointSet2D a = random_points2d(rng);
  const Eigen::RowVector2d c = a.points.colwise().mean();
  KeypointSet2D b;
  b.points = a.points;
  b.points.rowwise() -= c;
  b.points *= 2.0;
  b.points.rowwise() += c;

  double spread = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    spread += (a.points.row(j) - c).norm();
  }
  spread /= kNumJoints;
  CHECK(metrics::centered_2d_error(a, b) ==
        doctest::Approx(spread).epsilon(1e-12));
}

TEST_CASE("absolute 3D error: zero, pure shift, and the brute-force loop") {
  std::mt19937_64 rng(46);
  const KeypointSet3D a = testsupport::random_keypoints(rng);
  CHECK(metrics::absolute_3d_error(a, a) == 0.0);

  KeypointSet3D b = a;
  b.joints.col(0).array() += 10.0;
  CHECK(metrics::absolute_3d_error(a, b) == doctest::Approx(10.0).epsilon(1e-12));

  const KeypointSet3D c = testsupport::random_keypoints(rng);
  double brute = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    brute += (a.joint(j) - c.joint(j)).norm();
  }
  brute /= kNumJoints;
  CHECK(metrics::absolute_3d_error(a, c) ==
        doctest::Approx(brute).epsilon(1e-12));
  CHECK(metrics::absolute_3d_error(a, c) == metrics::absolute_3d_error(c, a));
}

TEST_CASE("root-relative error vanishes on rigidly moved copies") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const KeypointSet3D a = testsupport::random_keypoints(rng);
    const Eigen::Matrix3d r =
        rodrigues(testsupport::random_axis_angle(rng, 3.0));
    const Eigen::Vector3d t = 300.0 * testsupport::random_unit(rng);
    const KeypointSet3D b = rigidly_moved(a, r, t);
    CHECK(metrics::root_relative_3d_error(a, b) < 1e-9);
  }
}

TEST_CASE("root-relative error sees a bent fingertip at 1/21 weight") {
  std::mt19937_64 rng(48);
  const KeypointSet3D a = testsupport::random_keypoints(rng);
  KeypointSet3D b = a;
  // joint 18 (middle tip) plays no part in the root frame construction, so
  // bending it 10 mm moves exactly one of the 21 residuals.
  const metrics::RootFrame frame = metrics::root_frame_from_keypoints(a);
  b.joints.row(18) += 10.0 * frame.rotation.col(1).transpose();
  CHECK(metrics::root_relative_3d_error(a, b) ==
        doctest::Approx(10.0 / 21.0).epsilon(1e-9));
}

TEST_CASE("root frame is orthonormal and anchored at the wrist") {
  std::mt19937_64 rng(49);
  const KeypointSet3D a = testsupport::random_keypoints(rng);
  const metrics::RootFrame f = metrics::root_frame_from_keypoints(a);
  CHECK(is_rotation(f.rotation, 1e-9));
  CHECK((f.origin - a.joint(0)).norm() == 0.0);
  // x axis points from the wrist toward the index MCP
  const Eigen::Vector3d x = (a.joint(kIndexMcp) - a.joint(0)).normalized();
  CHECK((f.rotation.col(0) - x).norm() < 1e-12);
}

TEST_CASE("degenerate wrist/index/pinky geometry is rejected") {
  KeypointSet3D a;
  for (int j = 0; j < kNumJoints; ++j) {
    a.joints.row(j) = Eigen::RowVector3d(j * 10.0, 0.0, 400.0);  // collinear
  }
  CHECK_THROWS_AS(metrics::root_frame_from_keypoints(a), NumericalError);
}

TEST_CASE("mpjpe: translation immunity and the 21 mm fingertip") {
  std::mt19937_64 rng(50);
  const KeypointSet3D gt = testsupport::random_keypoints(rng);
  KeypointSet3D pred = gt;
  pred.joints.rowwise() += Eigen::RowVector3d(13.0, -7.0, 4.0);
  CHECK(metrics::mpjpe(pred, gt) < 1e-12);

  pred = gt;
  pred.joints(18, 1) += 21.0;  // middle fingertip, wrist untouched
  CHECK(metrics::mpjpe(pred, gt) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mpjpe matches the subtract-root brute force on random pairs") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 30; ++trial) {
    const KeypointSet3D a = testsupport::random_keypoints(rng);
    const KeypointSet3D b = testsupport::random_keypoints(rng);
    double brute = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
      brute += ((a.joint(j) - a.joint(0)) - (b.joint(j) - b.joint(0))).norm();
    }
    brute /= kNumJoints;
    CHECK(metrics::mpjpe(a, b) == doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("mpjpe is not rotation invariant") {
  std::mt19937_64 rng(52);
  const KeypointSet3D a = testsupport::random_keypoints(rng);
  const Eigen::Matrix3d r = rodrigues(Eigen::Vector3d(0.0, 0.7, 0.0));
  const KeypointSet3D b = rigidly_moved(a, r, Eigen::Vector3d::Zero());
  CHECK(metrics::mpjpe(a, b) > 1.0);
}

TEST_CASE("mrrpe: offset arithmetic and global-shift immunity") {
  std::mt19937_64 rng(53);
  const KeypointSet3D gt_left = testsupport::random_keypoints(rng);
  KeypointSet3D gt_right = testsupport::random_keypoints(rng);
  gt_right.joints.row(0) = gt_left.joints.row(0);
  gt_right.joints.row(0) += Eigen::RowVector3d(90.0, 0.0, 0.0);

  KeypointSet3D pred_left = gt_left;
  KeypointSet3D pred_right = gt_right;
  pred_right.joints.row(0) = pred_left.joints.row(0);
  pred_right.joints.row(0) += Eigen::RowVector3d(100.0, 0.0, 0.0);

  CHECK(metrics::mrrpe(pred_left, pred_right, gt_left, gt_right) ==
        doctest::Approx(10.0).epsilon(1e-12));

  const Eigen::RowVector3d g(40.0, -25.0, 60.0);
  pred_left.joints.rowwise() += g;
  pred_right.joints.rowwise() += g;
  CHECK(metrics::mrrpe(pred_left, pred_right, gt_left, gt_right) ==
        doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("mrrpe matches the formula on random instances") {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 30; ++trial) {
    const KeypointSet3D pl = testsupport::random_keypoints(rng);
    const KeypointSet3D pr = testsupport::random_keypoints(rng);
    const KeypointSet3D gl = testsupport::random_keypoints(rng);
    const KeypointSet3D gr = testsupport::random_keypoints(rng);
    const Eigen::Vector3d expect =
        (pr.joint(0) - pl.joint(0)) - (gr.joint(0) - gl.joint(0));
    CHECK(metrics::mrrpe(pl, pr, gl, gr) ==
          doctest::Approx(expect.norm()).epsilon(1e-12));
  }
}

TEST_CASE("2D reprojection error: consistency, uniform shift, random loop") {
  const camera::Intrinsics cam =
      camera::Intrinsics::from_fov(std::numbers::pi / 3.0, 640, 480);
  std::mt19937_64 rng(55);
  const KeypointSet3D p3 = testsupport::random_keypoints(rng, 40.0, 450.0);
  const KeypointSet2D proj = camera::project(cam, p3);
  CHECK(metrics::reprojection_error_2d(p3, cam, proj) < 1e-12);

  KeypointSet2D shifted = proj;
  shifted.points.col(0).array() += 3.0;
  shifted.points.col(1).array() += 4.0;
  CHECK(metrics::reprojection_error_2d(p3, cam, shifted) ==
        doctest::Approx(5.0).epsilon(1e-12));

  const KeypointSet2D gt2 = random_points2d(rng);
  double brute = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    brute += (proj.point(j) - gt2.point(j)).norm();
  }
  brute /= kNumJoints;
  CHECK(metrics::reprojection_error_2d(p3, cam, gt2) ==
        doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("ambiguity records validate and serialize with the fixed header") {
  std::vector<metrics::AmbiguityRecord> records(2);
  records[0].pair_id = "ref-000";
  records[1].pair_id = "ref-001";
  records[1].crop_px_dist = 12.5;
  records[1].centered_2d_err = 0.25;
  records[1].abs_3d_err = 30.0;
  records[1].rootrel_3d_err = 4.0;
  const std::string csv = metrics::ambiguity_records_to_csv(records);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "pair_id,crop_px_dist,centered_2d_err,abs_3d_err,rootrel_3d_err");
  std::string row0;
  std::getline(in, row0);
  CHECK(row0 == "ref-000,0,0,0,0");

  metrics::AmbiguityRecord bad;
  bad.abs_3d_err = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("root-relative error is invariant under rigid motion of either side") {
  std::mt19937_64 rng(56);
  for (int trial = 0; trial < 100; ++trial) {
    const KeypointSet3D a = testsupport::random_keypoints(rng);
    const KeypointSet3D b = testsupport::random_keypoints(rng);
    const double base = metrics::root_relative_3d_error(a, b);
    const Eigen::Matrix3d r =
        rodrigues(testsupport::random_axis_angle(rng, 3.0));
    const Eigen::Vector3d t = 200.0 * testsupport::random_unit(rng);
    CHECK(std::abs(metrics::root_relative_3d_error(rigidly_moved(a, r, t), b) -
                   base) < 1e-9);
    CHECK(std::abs(metrics::root_relative_3d_error(a, rigidly_moved(b, r, t)) -
                   base) < 1e-9);
  }
}
