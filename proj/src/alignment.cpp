#include "handkit/alignment.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <thread>

#include "handkit/errors.hpp"
#include "handkit/rng.hpp"
#include "handkit/rotation.hpp"

namespace handkit::alignment {

void RigidPose::validate() const {
  if (!is_rotation(rotation, 1e-9)) {
    throw NumericalError("[alignment] pose rotation is not orthonormal");
  }
  if (!translation.allFinite()) {
    throw NumericalError("[alignment] pose translation is not finite");
  }
}

KeypointSet3D RigidPose::apply(const KeypointSet3D& pts) const {
  KeypointSet3D out;
  out.joints = pts.joints * rotation.transpose();
  out.joints.rowwise() += translation.transpose();
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sum of squared pixel residuals; +inf when any joint lands at or behind the
// image plane (used to reject line-search steps).
double squared_px_error(const camera::Intrinsics& cam, const Eigen::Matrix3d& r,
                        const Eigen::Vector3d& t, const KeypointSet3D& pts,
                        const KeypointSet2D& target) {
  double f = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    const Eigen::Vector3d p = r * pts.joint(i) + t;
    if (!(p.z() > 1e-9)) return kInf;
    const Eigen::Vector2d uv(cam.fx * p.x() / p.z() + cam.ppx,
                             cam.fy * p.y() / p.z() + cam.ppy);
    f += (uv - target.point(i)).squaredNorm();
  }
  return f;
}

double mean_px_residual(const camera::Intrinsics& cam, const Eigen::Matrix3d& r,
                        const Eigen::Vector3d& t, const KeypointSet3D& pts,
                        const KeypointSet2D& target) {
  double sum = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    const Eigen::Vector3d p = r * pts.joint(i) + t;
    const Eigen::Vector2d uv(cam.fx * p.x() / p.z() + cam.ppx,
                             cam.fy * p.y() / p.z() + cam.ppy);
    sum += (uv - target.point(i)).norm();
  }
  return sum / kNumJoints;
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const camera::Intrinsics& cam,
                                                const Eigen::Vector3d& p) {
  Eigen::Matrix<double, 2, 3> j;
  const double iz = 1.0 / p.z();
  j << cam.fx * iz, 0.0, -cam.fx * p.x() * iz * iz,
       0.0, cam.fy * iz, -cam.fy * p.y() * iz * iz;
  return j;
}

// Normalized DLT for the 3x4 projection of calibrated rays, returning an
// initial rigid pose via nearest-rotation projection.
RigidPose dlt_initialize(const KeypointSet2D& ref2d, const KeypointSet3D& hand3d,
                         const camera::Intrinsics& cam) {
  // Calibrated 2D coordinates.
  Eigen::Matrix<double, kNumJoints, 2> m;
  for (int i = 0; i < kNumJoints; ++i) {
    m(i, 0) = (ref2d.points(i, 0) - cam.ppx) / cam.fx;
    m(i, 1) = (ref2d.points(i, 1) - cam.ppy) / cam.fy;
  }

  // Hartley conditioning on both sides.
  const Eigen::RowVector3d c3 = hand3d.joints.colwise().mean();
  double scale3 = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    scale3 += (hand3d.joints.row(i) - c3).norm();
  }
  scale3 /= kNumJoints;
  if (scale3 < 1e-9) {
    throw NumericalError("[alignment] degenerate 3D configuration (coincident points)");
  }
  const double k3 = std::sqrt(3.0) / scale3;

  const Eigen::RowVector2d c2 = m.colwise().mean();
  double scale2 = 0.0;
  for (int i = 0; i < kNumJoints; ++i) scale2 += (m.row(i) - c2).norm();
  scale2 /= kNumJoints;
  if (scale2 < 1e-12) {
    throw NumericalError("[alignment] degenerate 2D configuration (coincident points)");
  }
  const double k2 = std::sqrt(2.0) / scale2;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * kNumJoints, 12);
  for (int i = 0; i < kNumJoints; ++i) {
    Eigen::RowVector4d xh;
    xh << (hand3d.joints.row(i) - c3) * k3, 1.0;
    const double u = (m(i, 0) - c2(0)) * k2;
    const double v = (m(i, 1) - c2(1)) * k2;
    a.block<1, 4>(2 * i, 0) = xh;
    a.block<1, 4>(2 * i, 8) = -u * xh;
    a.block<1, 4>(2 * i + 1, 4) = xh;
    a.block<1, 4>(2 * i + 1, 8) = -v * xh;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(10) < 1e-10 * sv(0)) {
    throw NumericalError(
        "[alignment] degenerate correspondence configuration (rank-deficient "
        "linear system)");
  }
  const Eigen::VectorXd p = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> pn;
  pn.row(0) = p.segment<4>(0).transpose();
  pn.row(1) = p.segment<4>(4).transpose();
  pn.row(2) = p.segment<4>(8).transpose();

  // Undo the conditioning transforms.
  Eigen::Matrix3d t2 = Eigen::Matrix3d::Identity();
  t2(0, 0) = k2;
  t2(1, 1) = k2;
  t2(0, 2) = -k2 * c2(0);
  t2(1, 2) = -k2 * c2(1);
  Eigen::Matrix4d t3 = Eigen::Matrix4d::Identity();
  t3.block<3, 3>(0, 0) *= k3;
  t3.block<3, 1>(0, 3) = -k3 * c3.transpose();
  Eigen::Matrix<double, 3, 4> proj = t2.inverse() * pn * t3;

  Eigen::Matrix3d mblock = proj.leftCols<3>();
  if (mblock.determinant() < 0.0) {
    proj = -proj;
    mblock = -mblock;
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> msvd(mblock);
  const double s = msvd.singularValues().sum() / 3.0;
  if (s < 1e-15) {
    throw NumericalError("[alignment] degenerate projection recovered from DLT");
  }
  RigidPose pose;
  pose.rotation = nearest_rotation(mblock);
  pose.translation = proj.col(3) / s;

  // For correspondences with no consistent rigid explanation the det-positive
  // branch can land entirely behind the camera; the opposite nullspace sign
  // then puts every point in front and the refinement takes it from there.
  auto depths_behind = [&](const RigidPose& candidate) {
    int behind = 0;
    for (int i = 0; i < kNumJoints; ++i) {
      if (!((candidate.rotation * hand3d.joint(i) + candidate.translation).z() >
            0.0)) {
        ++behind;
      }
    }
    return behind;
  };
  if (depths_behind(pose) == kNumJoints) {
    RigidPose flipped;
    flipped.rotation = nearest_rotation(-mblock);
    flipped.translation = -pose.translation;
    if (depths_behind(flipped) == 0) return flipped;
  }
  return pose;
}

}  // namespace

PnpResult pnp_align(const KeypointSet2D& ref2d, const KeypointSet3D& hand3d,
                    const camera::Intrinsics& cam) {
  cam.validate();
  if (!ref2d.finite() || !hand3d.finite()) {
    throw ValidationError("[alignment] correspondences must be finite");
  }

  RigidPose pose = dlt_initialize(ref2d, hand3d, cam);
  for (int i = 0; i < kNumJoints; ++i) {
    if (!((pose.rotation * hand3d.joint(i) + pose.translation).z() > 0.0)) {
      throw NumericalError(
          "[alignment] infeasible alignment: joints behind the camera");
    }
  }

  Eigen::Matrix3d r = pose.rotation;
  Eigen::Vector3d t = pose.translation;
  double f = squared_px_error(cam, r, t, hand3d, ref2d);
  int iterations = 0;

  for (int iter = 0; iter < 100; ++iter) {
    iterations = iter + 1;
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (int i = 0; i < kNumJoints; ++i) {
      const Eigen::Vector3d p = r * hand3d.joint(i) + t;
      const Eigen::Vector2d res(cam.fx * p.x() / p.z() + cam.ppx - ref2d.points(i, 0),
                                cam.fy * p.y() / p.z() + cam.ppy - ref2d.points(i, 1));
      Eigen::Matrix<double, 2, 6> j;
      // Left-multiplied rotation increment: d(Rp)/dw = -[Rp]_x.
      j.block<2, 3>(0, 0) = -projection_jacobian(cam, p) * skew(r * hand3d.joint(i));
      j.block<2, 3>(0, 3) = projection_jacobian(cam, p);
      h += j.transpose() * j;
      g += j.transpose() * res;
    }
    const Eigen::Matrix<double, 6, 1> delta = h.ldlt().solve(-g);
    if (!delta.allFinite()) break;
    const double slope = g.dot(delta);
    double alpha = 1.0;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      const Eigen::Matrix3d r_try =
          rodrigues(alpha * delta.head<3>()) * r;
      const Eigen::Vector3d t_try = t + alpha * delta.tail<3>();
      const double f_try = squared_px_error(cam, r_try, t_try, hand3d, ref2d);
      if (f_try <= f + 1e-4 * alpha * slope) {
        r = nearest_rotation(r_try);
        t = t_try;
        f = f_try;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    if (alpha * delta.norm() < 1e-10) break;
  }

  PnpResult out;
  out.pose.rotation = r;
  out.pose.translation = t;
  out.pose.validate();
  out.residual_px = mean_px_residual(cam, r, t, hand3d, ref2d);
  out.iterations = iterations;
  return out;
}

ShiftedAlignment pnp_align_with_shift(const KeypointSet2D& ref2d,
                                      const KeypointSet3D& hand3d,
                                      const camera::Intrinsics& cam,
                                      const Eigen::Vector2d& shift) {
  KeypointSet2D target = ref2d;
  target.points.rowwise() += shift.transpose();
  const PnpResult res = pnp_align(target, hand3d, cam);
  ShiftedAlignment out;
  out.pose = res.pose;
  out.shift = shift;
  out.residual_px = res.residual_px;
  return out;
}

hand::Params fit_params_to_keypoints(const hand::SkinnedModel& model,
                                     const hand::Params& init,
                                     const Eigen::Matrix<double, 15, 3>& theta_anchor,
                                     const KeypointSet2D& target2d,
                                     const camera::Intrinsics& cam,
                                     const KeypointFitOptions& opts) {
  cam.validate();
  init.validate(model.num_betas());
  if (opts.anchor_weight < 0.0) {
    throw ValidationError("[alignment] anchor weight must be >= 0");
  }

  hand::Params params = init;
  const double aw = opts.anchor_weight;

  auto objective = [&](const hand::Params& p) -> double {
    const KeypointSet3D joints = hand::forward_kinematics_joints(model, p);
    double f = 0.0;
    for (int i = 0; i < kNumJoints; ++i) {
      const Eigen::Vector3d q = joints.joint(i);
      if (!(q.z() > 1e-9)) return kInf;
      const Eigen::Vector2d uv(cam.fx * q.x() / q.z() + cam.ppx,
                               cam.fy * q.y() / q.z() + cam.ppy);
      f += (uv - target2d.point(i)).squaredNorm();
    }
    f += aw * (p.theta - theta_anchor).squaredNorm();
    return f;
  };

  double f = objective(params);
  if (f == kInf) {
    throw NumericalError("[alignment] initial pose places joints behind the camera");
  }

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    KeypointSet3D joints;
    const Eigen::MatrixXd jj = hand::joints_jacobian(model, params, &joints);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hand::kPoseDim, hand::kPoseDim);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(hand::kPoseDim);
    for (int i = 0; i < kNumJoints; ++i) {
      const Eigen::Vector3d q = joints.joint(i);
      const Eigen::Vector2d res(cam.fx * q.x() / q.z() + cam.ppx - target2d.points(i, 0),
                                cam.fy * q.y() / q.z() + cam.ppy - target2d.points(i, 1));
      const Eigen::MatrixXd j = projection_jacobian(cam, q) * jj.middleRows<3>(3 * i);
      h += j.transpose() * j;
      g += j.transpose() * res;
    }
    // Anchor block acts on the 45 articulation coordinates.
    for (int k = 0; k < 45; ++k) {
      const int row = k / 3;
      const int col = k % 3;
      const double res = params.theta(row, col) - theta_anchor(row, col);
      h(6 + k, 6 + k) += aw;
      g(6 + k) += aw * res;
    }
    h.diagonal().array() += 1e-12 * (1.0 + h.trace() / hand::kPoseDim);

    const Eigen::VectorXd delta = h.ldlt().solve(-g);
    if (!delta.allFinite()) break;
    const double slope = 2.0 * g.dot(delta);  // gradient of f is 2g
    const Eigen::VectorXd pose0 = hand::pack_pose(params);
    double alpha = 1.0;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      hand::Params trial = params;
      hand::unpack_pose(pose0 + alpha * delta, &trial);
      const double f_try = objective(trial);
      if (f_try <= f + 1e-4 * alpha * slope) {
        params = trial;
        f = f_try;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    if (alpha * delta.norm() < opts.step_tolerance) break;
  }
  return params;
}

ScanMode scan_mode_from_string(const std::string& s) {
  if (s == "raw") return ScanMode::kRaw;
  if (s == "pnp") return ScanMode::kPnp;
  if (s == "pnp_shift") return ScanMode::kPnpShift;
  throw ValidationError("[alignment] unknown scan mode '" + s +
                        "' (expected raw, pnp or pnp_shift)");
}

std::string to_string(ScanMode mode) {
  switch (mode) {
    case ScanMode::kRaw: return "raw";
    case ScanMode::kPnp: return "pnp";
    case ScanMode::kPnpShift: return "pnp_shift";
  }
  return "unknown";
}

void PopulationSpec::validate() const {
  if (size < 1) throw ValidationError("[alignment] population size must be >= 1");
  if (!(depth_min_mm > 0.0) || !(depth_max_mm > depth_min_mm)) {
    throw ValidationError("[alignment] depth range must satisfy 0 < min < max");
  }
  if (near_fraction < 0.0 || matched_fraction < 0.0 ||
      near_fraction + matched_fraction > 1.0) {
    throw ValidationError("[alignment] population fractions must be in [0,1] "
                          "and sum to at most 1");
  }
  if (near_theta_noise < 0.0 || near_rot_noise < 0.0 || near_trans_noise < 0.0 ||
      matched_theta_noise < 0.0 || beta_sigma < 0.0) {
    throw ValidationError("[alignment] noise scales must be >= 0");
  }
  if (border_margin_px < 0.0) {
    throw ValidationError("[alignment] border margin must be >= 0");
  }
}

namespace {

// Uniform placement of the reference pattern: shift range that keeps every
// keypoint at least margin px inside the image. Falls back to no shift when
// the pattern does not fit.
Eigen::Vector2d sample_pattern_shift(Rng& rng, const KeypointSet2D& ref2d,
                                     const camera::Intrinsics& cam,
                                     double margin) {
  const double lo_x = margin - ref2d.points.col(0).minCoeff();
  const double hi_x = cam.width - margin - ref2d.points.col(0).maxCoeff();
  const double lo_y = margin - ref2d.points.col(1).minCoeff();
  const double hi_y = cam.height - margin - ref2d.points.col(1).maxCoeff();
  if (lo_x > hi_x || lo_y > hi_y) return Eigen::Vector2d::Zero();
  return {rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)};
}

}  // namespace

std::vector<hand::Params> generate_population(const hand::SkinnedModel& model,
                                              const hand::Params& reference,
                                              const camera::Intrinsics& cam,
                                              const PopulationSpec& spec,
                                              std::uint64_t seed) {
  spec.validate();
  cam.validate();
  reference.validate(model.num_betas());

  Rng rng(seed);
  const KeypointSet3D ref_joints = hand::forward_kinematics_joints(model, reference);
  const KeypointSet2D ref2d = camera::project(cam, ref_joints);
  const Eigen::Matrix3d ref_root = rodrigues(reference.root_rot);

  const int n_near = static_cast<int>(std::lround(spec.near_fraction * spec.size));
  const int n_matched =
      static_cast<int>(std::lround(spec.matched_fraction * spec.size));
  const int n_background = spec.size - n_near - n_matched;

  std::vector<hand::Params> population;
  population.reserve(spec.size);

  // Independent hands anywhere in the frustum, flexion-biased articulation.
  const double place_margin = 0.15 * std::min(cam.width, cam.height);
  for (int i = 0; i < n_background; ++i) {
    hand::Params p = hand::Params::zero(model.num_betas());
    for (int b = 0; b < model.num_betas(); ++b) {
      p.beta(b) = std::clamp(rng.normal() * spec.beta_sigma, -2.0, 2.0);
    }
    for (int j = 0; j < kNumArticulated; ++j) {
      p.theta(j, 0) = rng.uniform(-0.25, 1.0);
      p.theta(j, 1) = rng.uniform(-0.2, 0.2);
      p.theta(j, 2) = rng.uniform(-0.35, 0.35);
    }
    p.root_rot = log_rotation(rng.rotation_uniform());
    const double z = rng.uniform(spec.depth_min_mm, spec.depth_max_mm);
    const double u = rng.uniform(place_margin, cam.width - place_margin);
    const double v = rng.uniform(place_margin, cam.height - place_margin);
    p.root_trans = camera::lift_point(cam, {u, v}, z);
    population.push_back(std::move(p));
  }

  // The reference hand moments apart: small shape-preserving jitter.
  for (int i = 0; i < n_near; ++i) {
    hand::Params p = reference;
    for (int j = 0; j < kNumArticulated; ++j) {
      for (int c = 0; c < 3; ++c) {
        p.theta(j, c) += rng.normal() * spec.near_theta_noise;
      }
    }
    const Eigen::Vector3d rot_noise(rng.normal() * spec.near_rot_noise,
                                    rng.normal() * spec.near_rot_noise,
                                    rng.normal() * spec.near_rot_noise);
    p.root_rot = log_rotation(rodrigues(rot_noise) * ref_root);
    p.root_trans += Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) *
                    spec.near_trans_noise;
    population.push_back(std::move(p));
  }

  // Independently shaped hands whose projection reproduces the reference
  // pattern at a uniformly sampled placement: rigid placement via shifted
  // PnP, then a full-pose refit anchored at the perturbed articulation.
  for (int i = 0; i < n_matched; ++i) {
    hand::Params p = hand::Params::zero(model.num_betas());
    for (int b = 0; b < model.num_betas(); ++b) {
      p.beta(b) = std::clamp(rng.normal() * spec.beta_sigma, -2.0, 2.0);
    }
    p.theta = reference.theta;
    for (int j = 0; j < kNumArticulated; ++j) {
      for (int c = 0; c < 3; ++c) {
        p.theta(j, c) += rng.normal() * spec.matched_theta_noise;
      }
    }
    const Eigen::Vector2d shift =
        sample_pattern_shift(rng, ref2d, cam, spec.border_margin_px);
    KeypointSet2D target = ref2d;
    target.points.rowwise() += shift.transpose();

    const PnpResult rigid = pnp_align(target, ref_joints, cam);
    p.root_rot = log_rotation(rigid.pose.rotation * ref_root);
    p.root_trans =
        rigid.pose.rotation * reference.root_trans + rigid.pose.translation;

    population.push_back(
        fit_params_to_keypoints(model, p, p.theta, target, cam, spec.refit));
  }

  return population;
}

ScanResult ambiguity_scan(const hand::SkinnedModel& model,
                          const hand::Params& reference,
                          const std::vector<hand::Params>& population,
                          const camera::Intrinsics& cam, ScanMode mode,
                          std::uint64_t seed, int threads,
                          double border_margin_px) {
  cam.validate();
  reference.validate(model.num_betas());
  if (population.empty()) {
    throw ValidationError("[alignment] population must be non-empty");
  }

  const KeypointSet3D ref3d = hand::forward_kinematics_joints(model, reference);
  const KeypointSet2D ref2d = camera::project(cam, ref3d);
  const metrics::RootFrame ref_frame = metrics::root_frame_from_keypoints(ref3d);
  const int n = static_cast<int>(population.size());

  // Shifts are drawn up front from a single stream so that results do not
  // depend on worker scheduling.
  std::vector<Eigen::Vector2d> shifts(n, Eigen::Vector2d::Zero());
  if (mode == ScanMode::kPnpShift) {
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
      shifts[i] = sample_pattern_shift(rng, ref2d, cam, border_margin_px);
    }
  }

  std::vector<std::optional<metrics::AmbiguityRecord>> records(n);
  std::vector<std::optional<ScanFailure>> failures(n);

  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      char id[16];
      std::snprintf(id, sizeof(id), "%04d", i);
      try {
        const KeypointSet3D joints =
            hand::forward_kinematics_joints(model, population[i]);
        KeypointSet3D aligned3d = joints;
        switch (mode) {
          case ScanMode::kRaw:
            break;
          case ScanMode::kPnp:
            aligned3d = pnp_align(ref2d, joints, cam).pose.apply(joints);
            break;
          case ScanMode::kPnpShift:
            aligned3d = pnp_align_with_shift(ref2d, joints, cam, shifts[i])
                            .pose.apply(joints);
            break;
        }
        const KeypointSet2D b2d = camera::project(cam, aligned3d);
        metrics::AmbiguityRecord rec;
        rec.pair_id = id;
        rec.crop_px_dist = metrics::crop_pixel_distance(ref2d, b2d);
        rec.centered_2d_err = metrics::centered_2d_error(ref2d, b2d);
        rec.abs_3d_err = metrics::absolute_3d_error(ref3d, aligned3d);
        rec.rootrel_3d_err = metrics::root_relative_3d_error(
            ref3d, ref_frame, aligned3d,
            metrics::root_frame_from_keypoints(aligned3d));
        rec.validate();
        records[i] = std::move(rec);
      } catch (const std::exception& e) {
        failures[i] = ScanFailure{id, e.what()};
      }
    }
  };

  const int workers = std::max(1, threads);
  if (workers == 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  ScanResult result;
  for (int i = 0; i < n; ++i) {
    if (records[i]) result.records.push_back(*records[i]);
    if (failures[i]) result.failures.push_back(*failures[i]);
  }
  return result;
}

}  // namespace handkit::alignment
