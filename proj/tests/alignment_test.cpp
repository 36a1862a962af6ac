#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "handkit/alignment.hpp"
#include "handkit/errors.hpp"
#include "handkit/experiment.hpp"
#include "handkit/rotation.hpp"
#include "scenes.hpp"
#include "test_support.hpp"

using namespace handkit;
using alignment::pnp_align;
using alignment::pnp_align_with_shift;
using alignment::PnpResult;

namespace {

const hand::SkinnedModel& default_model() {
  static const hand::SkinnedModel model = hand::build_procedural();
  return model;
}

double rotation_error_rad(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return log_rotation(a.transpose() * b).norm();
}

}  // namespace

TEST_CASE("noiseless round trip recovers random rigid poses") {
  const camera::Intrinsics cam = testscenes::vga60();
  std::mt19937_64 rng(61);
  hand::Params base = testsupport::random_params(rng, 10);
  base.root_trans.setZero();  // origin-centered cloud; the pose places it
  const KeypointSet3D hand3d =
      hand::forward_kinematics_joints(default_model(), base);

  std::uniform_real_distribution<double> lateral(-80.0, 80.0);
  std::uniform_real_distribution<double> depth(380.0, 530.0);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    alignment::RigidPose truth;
    KeypointSet3D moved;
    do {
      truth.rotation = rodrigues(testsupport::random_axis_angle(rng, 2.8));
      truth.translation =
          Eigen::Vector3d(lateral(rng), lateral(rng), depth(rng));
      moved = truth.apply(hand3d);
    } while (moved.joints.col(2).minCoeff() < 50.0);
    const KeypointSet2D ref2d = camera::project(cam, moved);

    const PnpResult res = pnp_align(ref2d, hand3d, cam);
    CHECK(is_rotation(res.pose.rotation, 1e-9));
    const double rot_err = rotation_error_rad(res.pose.rotation, truth.rotation);
    const double trans_err = (res.pose.translation - truth.translation).norm();
    if (rot_err < 1e-6 && trans_err < 1e-6 && res.residual_px < 1e-8) ++hits;
  }
  CHECK(hits >= 99);
}

TEST_CASE("aligning a hand to its own projection is the identity") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  const KeypointSet3D hand3d = hand::forward_kinematics_joints(
      model, experiment::make_reference_params(model));
  const KeypointSet2D ref2d = camera::project(cam, hand3d);

  const PnpResult res = pnp_align(ref2d, hand3d, cam);
  CHECK(log_rotation(res.pose.rotation).norm() < 1e-8);
  CHECK(res.pose.translation.norm() < 1e-6);
  CHECK(res.residual_px < 1e-8);
}

TEST_CASE("half-pixel noise stays inside the regression envelope") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  std::mt19937_64 rng(62);
  std::normal_distribution<double> noise(0.0, 0.5);

  for (int trial = 0; trial < 20; ++trial) {
    const hand::Params params = testsupport::random_params(rng, 10);
    KeypointSet3D moved = hand::forward_kinematics_joints(model, params);
    if (moved.joints.col(2).minCoeff() < 100.0) continue;
    KeypointSet2D ref2d = camera::project(cam, moved);
    for (int j = 0; j < kNumJoints; ++j) {
      ref2d.points(j, 0) += noise(rng);
      ref2d.points(j, 1) += noise(rng);
    }
    const PnpResult res = pnp_align(ref2d, moved, cam);
    CHECK(res.residual_px <= 1.0);
    CHECK(log_rotation(res.pose.rotation).norm() < 0.05);
    CHECK(res.pose.translation.norm() < 30.0);
  }
}

TEST_CASE("zero shift reduces to plain alignment") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  std::mt19937_64 rng(63);
  const KeypointSet3D hand3d = hand::forward_kinematics_joints(
      model, testsupport::random_params(rng, 10));
  const KeypointSet2D ref2d = camera::project(
      cam, hand::forward_kinematics_joints(
               model, testsupport::random_params(rng, 10)));

  const PnpResult plain = pnp_align(ref2d, hand3d, cam);
  const alignment::ShiftedAlignment shifted =
      pnp_align_with_shift(ref2d, hand3d, cam, Eigen::Vector2d::Zero());
  CHECK((shifted.pose.rotation - plain.pose.rotation).norm() == 0.0);
  CHECK((shifted.pose.translation - plain.pose.translation).norm() == 0.0);
  CHECK(shifted.residual_px == plain.residual_px);
  CHECK(shifted.shift == Eigen::Vector2d::Zero());
}

TEST_CASE("corner shift keeps sub-pixel residual but moves the 3D recovery") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  const testscenes::CornerWitness w = testscenes::corner_witness(model);

  const KeypointSet3D hand3d =
      hand::forward_kinematics_joints(model, w.params);
  const KeypointSet2D ref2d = camera::project(cam, hand3d);

  const PnpResult unshifted = pnp_align(ref2d, hand3d, cam);
  const alignment::ShiftedAlignment shifted =
      pnp_align_with_shift(ref2d, hand3d, cam, w.corner_shift);

  CHECK(unshifted.residual_px < 1e-8);
  CHECK(shifted.residual_px < 0.5);

  const KeypointSet3D rec_u = unshifted.pose.apply(hand3d);
  const KeypointSet3D rec_s = shifted.pose.apply(hand3d);
  // Root-relative comparison of the two recoveries: subtract each root, then
  // average the per-joint distances.
  CHECK(metrics::mpjpe(rec_s, rec_u) > 5.0);
}

TEST_CASE("a grid of nine shifts yields nine distinct sub-pixel alignments") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  const hand::Params fist = testscenes::fist_pose(model.num_betas(), 400.0);
  const KeypointSet3D hand3d = hand::forward_kinematics_joints(model, fist);
  const KeypointSet2D ref2d = camera::project(cam, hand3d);

  std::vector<alignment::ShiftedAlignment> solutions;
  for (double dy : {-25.0, 0.0, 25.0}) {
    for (double dx : {-25.0, 0.0, 25.0}) {
      solutions.push_back(
          pnp_align_with_shift(ref2d, hand3d, cam, Eigen::Vector2d(dx, dy)));
      CHECK(solutions.back().residual_px < 0.5);
      CHECK(is_rotation(solutions.back().pose.rotation, 1e-9));
    }
  }
  REQUIRE(solutions.size() == 9);
  // Re-aiming the pattern is mostly a rotation about the camera center, so
  // distinctness lives in the recovered joints, not the translation vector.
  for (size_t i = 0; i < solutions.size(); ++i) {
    for (size_t j = i + 1; j < solutions.size(); ++j) {
      const KeypointSet3D a = solutions[i].pose.apply(hand3d);
      const KeypointSet3D b = solutions[j].pose.apply(hand3d);
      CHECK(metrics::absolute_3d_error(a, b) > 5.0);
    }
  }
}

TEST_CASE("scanning the reference against itself gives one zero row") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  const hand::Params reference = experiment::make_reference_params(model);

  const alignment::ScanResult scan = alignment::ambiguity_scan(
      model, reference, {reference}, cam, alignment::ScanMode::kRaw, 7);
  REQUIRE(scan.records.size() == 1);
  CHECK(scan.failures.empty());
  CHECK(scan.records[0].crop_px_dist < 1e-9);
  CHECK(scan.records[0].centered_2d_err < 1e-9);
  CHECK(scan.records[0].abs_3d_err < 1e-9);
  CHECK(scan.records[0].rootrel_3d_err < 1e-9);
}

TEST_CASE("far crops hide strictly more 3D error than near crops") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  const hand::Params reference = experiment::make_reference_params(model);

  alignment::PopulationSpec spec;
  spec.size = 500;
  const auto population =
      alignment::generate_population(model, reference, cam, spec, 20240814);
  REQUIRE(population.size() == 500);

  const alignment::ScanResult scan = alignment::ambiguity_scan(
      model, reference, population, cam, alignment::ScanMode::kRaw, 20240814);
  CHECK(scan.failures.empty());

  double near_max = 0.0, far_max = 0.0;
  int near_count = 0, far_count = 0;
  for (const auto& r : scan.records) {
    if (r.centered_2d_err >= 2.0) continue;
    if (r.crop_px_dist < 20.0) {
      near_max = std::max(near_max, r.rootrel_3d_err);
      ++near_count;
    } else if (r.crop_px_dist > 100.0) {
      far_max = std::max(far_max, r.rootrel_3d_err);
      ++far_count;
    }
  }
  CHECK(near_count >= 10);
  CHECK(far_count >= 10);
  CHECK(far_max > 2.0 * near_max);
}

TEST_CASE("alignment collapses 2D spread; shifting spreads the 3D solutions") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  const hand::Params reference = experiment::make_reference_params(model);

  alignment::PopulationSpec spec;
  spec.size = 120;
  const auto population =
      alignment::generate_population(model, reference, cam, spec, 99);

  const alignment::ScanResult pnp = alignment::ambiguity_scan(
      model, reference, population, cam, alignment::ScanMode::kPnp, 99);
  const alignment::ScanResult pnp_shift = alignment::ambiguity_scan(
      model, reference, population, cam, alignment::ScanMode::kPnpShift, 99);

  REQUIRE(!pnp.records.empty());
  REQUIRE(!pnp_shift.records.empty());

  double pnp_crop_max = 0.0, shift_crop_max = 0.0;
  for (const auto& r : pnp.records)
    pnp_crop_max = std::max(pnp_crop_max, r.crop_px_dist);
  for (const auto& r : pnp_shift.records)
    shift_crop_max = std::max(shift_crop_max, r.crop_px_dist);
  // aligned to the reference pattern in place vs scattered over the frame
  CHECK(pnp_crop_max < 1.0);
  CHECK(shift_crop_max > 50.0);

  double pnp_abs_max = 0.0, shift_abs_max = 0.0;
  for (const auto& r : pnp.records)
    pnp_abs_max = std::max(pnp_abs_max, r.abs_3d_err);
  for (const auto& r : pnp_shift.records)
    shift_abs_max = std::max(shift_abs_max, r.abs_3d_err);
  CHECK(shift_abs_max > 1.5 * pnp_abs_max);
}

TEST_CASE("per-hand failures are logged and the scan continues") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  const hand::Params reference = experiment::make_reference_params(model);

  std::vector<hand::Params> population;
  population.push_back(reference);
  hand::Params behind = reference;
  behind.root_trans.z() = -500.0;
  population.push_back(behind);
  population.push_back(reference);

  const alignment::ScanResult scan = alignment::ambiguity_scan(
      model, reference, population, cam, alignment::ScanMode::kRaw, 7);
  CHECK(scan.records.size() == 2);
  REQUIRE(scan.failures.size() == 1);
  CHECK(scan.failures[0].pair_id == "0001");
  CHECK(!scan.failures[0].message.empty());
}

TEST_CASE("scan output is independent of the worker thread count") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  const hand::Params reference = experiment::make_reference_params(model);

  alignment::PopulationSpec spec;
  spec.size = 60;
  const auto population =
      alignment::generate_population(model, reference, cam, spec, 17);

  const alignment::ScanResult a = alignment::ambiguity_scan(
      model, reference, population, cam, alignment::ScanMode::kPnpShift, 17, 1);
  const alignment::ScanResult b = alignment::ambiguity_scan(
      model, reference, population, cam, alignment::ScanMode::kPnpShift, 17, 4);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].pair_id == b.records[i].pair_id);
    CHECK(a.records[i].crop_px_dist == b.records[i].crop_px_dist);
    CHECK(a.records[i].centered_2d_err == b.records[i].centered_2d_err);
    CHECK(a.records[i].abs_3d_err == b.records[i].abs_3d_err);
    CHECK(a.records[i].rootrel_3d_err == b.records[i].rootrel_3d_err);
  }
  REQUIRE(a.failures.size() == b.failures.size());
}

TEST_CASE("population generator: size, front-of-camera, determinism") {
  const camera::Intrinsics cam = testscenes::vga60();
  const hand::SkinnedModel& model = default_model();
  const hand::Params reference = experiment::make_reference_params(model);

  alignment::PopulationSpec spec;
  spec.size = 40;
  const auto population =
      alignment::generate_population(model, reference, cam, spec, 5);
  REQUIRE(population.size() == 40);
  for (const auto& p : population) {
    const KeypointSet3D joints = hand::forward_kinematics_joints(model, p);
    CHECK(joints.joints.col(2).minCoeff() > 0.0);
    // The wrist anchors the placement; finger keypoints may poke past the
    // image edge for extreme articulations.
    const Eigen::Vector2d wrist = camera::project_point(cam, p.root_trans);
    CHECK(wrist.x() > 0.0);
    CHECK(wrist.x() < cam.width);
    CHECK(wrist.y() > 0.0);
    CHECK(wrist.y() < cam.height);
  }

  const auto again =
      alignment::generate_population(model, reference, cam, spec, 5);
  for (size_t i = 0; i < population.size(); ++i) {
    CHECK(population[i].theta == again[i].theta);
    CHECK(population[i].root_trans == again[i].root_trans);
  }
}

TEST_CASE("scan mode names round-trip") {
  using alignment::ScanMode;
  for (ScanMode m : {ScanMode::kRaw, ScanMode::kPnp, ScanMode::kPnpShift}) {
    CHECK(alignment::scan_mode_from_string(alignment::to_string(m)) == m);
  }
  CHECK_THROWS_AS(alignment::scan_mode_from_string("bogus"), ValidationError);
}

TEST_CASE("degenerate correspondences are rejected") {
  const camera::Intrinsics cam = testscenes::vga60();
  KeypointSet3D line;
  for (int j = 0; j < kNumJoints; ++j) {
    line.joints.row(j) = Eigen::RowVector3d(0.0, 0.0, 300.0 + 5.0 * j);
  }
  KeypointSet2D ref;
  ref.points.setConstant(100.0);
  CHECK_THROWS_AS(pnp_align(ref, line, cam), NumericalError);
}
