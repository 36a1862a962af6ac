#include "handkit/softras.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "handkit/errors.hpp"
#include "handkit/rotation.hpp"

namespace handkit::softras {

void MaskImage::validate() const {
  if (width <= 0 || height <= 0) {
    throw ValidationError("[softras] mask size must be positive");
  }
  if (values.rows() != height || values.cols() != width) {
    throw ValidationError("[softras] mask buffer does not match its size");
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double v = values(r, c);
      if (v != 0.0 && v != 1.0) {
        throw ValidationError("[softras] mask values must be 0 or 1");
      }
    }
  }
}

double default_sigma(int width, int height) {
  return 1e-4 * (static_cast<double>(width) * width +
                 static_cast<double>(height) * height);
}

namespace {

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct BoundaryHit {
  bool inside = false;
  double dist = 0.0;  // unsigned distance to the nearest edge
  int seg = 0;        // nearest edge: 0 = (a,b), 1 = (b,c), 2 = (c,a)
  double t = 0.0;     // clamped parameter along that edge
};

BoundaryHit nearest_boundary(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                             const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  auto cross2 = [](const Eigen::Vector2d& u, const Eigen::Vector2d& w) {
    return u.x() * w.y() - u.y() * w.x();
  };
  BoundaryHit hit;
  const double area = cross2(b - a, c - a);
  const double s0 = cross2(b - a, p - a);
  const double s1 = cross2(c - b, p - b);
  const double s2 = cross2(a - c, p - c);
  hit.inside = area >= 0.0 ? (s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0)
                           : (s0 <= 0.0 && s1 <= 0.0 && s2 <= 0.0);
  const Eigen::Vector2d v[3] = {a, b, c};
  hit.dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d& e0 = v[k];
    const Eigen::Vector2d d = v[(k + 1) % 3] - e0;
    const double len2 = d.squaredNorm();
    const double t = len2 > 1e-18
                         ? std::clamp((p - e0).dot(d) / len2, 0.0, 1.0)
                         : 0.0;
    const double dist = (p - e0 - t * d).norm();
    if (dist < hit.dist) {
      hit.dist = dist;
      hit.seg = k;
      hit.t = t;
    }
  }
  return hit;
}

struct Raster {
  int width = 0;
  int height = 0;
  double sigma = 0.0;
  double band = 0.0;
  Eigen::MatrixXd px;                        // V x 2 projected vertices
  Eigen::VectorXd min_x, max_x;              // per-face screen bounds
  std::vector<std::vector<int>> row_faces;   // ascending face ids per row
};

Raster prepare(const Eigen::MatrixXd& vertices, const Eigen::MatrixXi& faces,
               const camera::Intrinsics& cam, double sigma) {
  cam.validate();
  if (!(sigma > 0.0)) {
    throw ValidationError("[softras] sigma must be positive");
  }
  if (vertices.cols() != 3 || vertices.rows() == 0) {
    throw ValidationError("[softras] vertices must be V x 3");
  }
  if (faces.cols() != 3 || faces.rows() == 0) {
    throw ValidationError("[softras] faces must be F x 3");
  }
  if (faces.minCoeff() < 0 || faces.maxCoeff() >= vertices.rows()) {
    throw ValidationError("[softras] face indices out of range");
  }

  Raster r;
  r.width = cam.width;
  r.height = cam.height;
  r.sigma = sigma;
  // Wide enough that the discarded tail, logistic(-36), is below double
  // resolution against 1; the banded render then matches its own analytic
  // derivative to machine precision.
  r.band = 6.0 * std::sqrt(sigma);
  r.px.resize(vertices.rows(), 2);
  for (int v = 0; v < vertices.rows(); ++v) {
    const double z = vertices(v, 2);
    if (!(z > 0.0)) {
      throw NumericalError("[softras] vertex " + std::to_string(v) +
                           " is behind the camera");
    }
    r.px(v, 0) = cam.fx * vertices(v, 0) / z + cam.ppx;
    r.px(v, 1) = cam.fy * vertices(v, 1) / z + cam.ppy;
  }

  const int nf = static_cast<int>(faces.rows());
  r.min_x.resize(nf);
  r.max_x.resize(nf);
  r.row_faces.assign(r.height, {});
  for (int f = 0; f < nf; ++f) {
    const double xs[3] = {r.px(faces(f, 0), 0), r.px(faces(f, 1), 0),
                          r.px(faces(f, 2), 0)};
    const double ys[3] = {r.px(faces(f, 0), 1), r.px(faces(f, 1), 1),
                          r.px(faces(f, 2), 1)};
    r.min_x(f) = std::min({xs[0], xs[1], xs[2]});
    r.max_x(f) = std::max({xs[0], xs[1], xs[2]});
    const double min_y = std::min({ys[0], ys[1], ys[2]});
    const double max_y = std::max({ys[0], ys[1], ys[2]});
    const int r0 = std::max(0, static_cast<int>(std::floor(min_y - r.band)));
    const int r1 = std::min(r.height - 1,
                            static_cast<int>(std::ceil(max_y + r.band)));
    for (int row = r0; row <= r1; ++row) r.row_faces[row].push_back(f);
  }
  return r;
}

}  // namespace

SoftSilhouette render_soft_silhouette(const Eigen::MatrixXd& vertices,
                                      const Eigen::MatrixXi& faces,
                                      const camera::Intrinsics& cam,
                                      double sigma) {
  const Raster r = prepare(vertices, faces, cam, sigma);
  SoftSilhouette out;
  out.width = r.width;
  out.height = r.height;
  out.sigma = sigma;
  out.occupancy = Eigen::MatrixXd::Zero(r.height, r.width);

  for (int row = 0; row < r.height; ++row) {
    const double py = row + 0.5;
    for (int col = 0; col < r.width; ++col) {
      const double px = col + 0.5;
      double transparent = 1.0;
      for (int f : r.row_faces[row]) {
        if (px < r.min_x(f) - r.band || px > r.max_x(f) + r.band) continue;
        const BoundaryHit hit = nearest_boundary(
            {px, py}, r.px.row(faces(f, 0)).transpose(),
            r.px.row(faces(f, 1)).transpose(), r.px.row(faces(f, 2)).transpose());
        if (!hit.inside && hit.dist > r.band) continue;
        const double d = hit.inside ? hit.dist : -hit.dist;
        const double big = logistic(d * std::abs(d) / sigma);
        transparent *= 1.0 - big;
      }
      out.occupancy(row, col) = 1.0 - transparent;
    }
  }
  return out;
}

std::pair<double, Eigen::MatrixXd> silhouette_l1_loss(const SoftSilhouette& render,
                                                      const MaskImage& target) {
  target.validate();
  if (!target.amodal) {
    throw ValidationError(
        "[softras] silhouette loss is defined on amodal masks only");
  }
  if (render.width != target.width || render.height != target.height) {
    throw ValidationError("[softras] render and mask dimensions differ");
  }
  const double n = static_cast<double>(render.width) * render.height;
  double loss = 0.0;
  Eigen::MatrixXd grad(render.height, render.width);
  for (int row = 0; row < render.height; ++row) {
    for (int col = 0; col < render.width; ++col) {
      const double diff = render.occupancy(row, col) - target.values(row, col);
      loss += std::abs(diff);
      grad(row, col) = diff > 0.0 ? 1.0 / n : (diff < 0.0 ? -1.0 / n : 0.0);
    }
  }
  return {loss / n, std::move(grad)};
}

Eigen::MatrixXd silhouette_loss_grad_vertices(const Eigen::MatrixXd& vertices,
                                              const Eigen::MatrixXi& faces,
                                              const camera::Intrinsics& cam,
                                              double sigma,
                                              const MaskImage& target,
                                              double* loss) {
  const Raster r = prepare(vertices, faces, cam, sigma);
  target.validate();
  if (!target.amodal) {
    throw ValidationError(
        "[softras] silhouette loss is defined on amodal masks only");
  }
  if (r.width != target.width || r.height != target.height) {
    throw ValidationError("[softras] render and mask dimensions differ");
  }

  // Projection jacobians per vertex, reused across contributions.
  std::vector<Eigen::Matrix<double, 2, 3>> proj_jac(vertices.rows());
  for (int v = 0; v < vertices.rows(); ++v) {
    const double x = vertices(v, 0), y = vertices(v, 1), z = vertices(v, 2);
    proj_jac[v] << cam.fx / z, 0.0, -cam.fx * x / (z * z),
                   0.0, cam.fy / z, -cam.fy * y / (z * z);
  }

  struct Contribution {
    int face;
    double big;       // D_ij
    double d_abs;
    double sign;      // +1 inside, -1 outside
    BoundaryHit hit;
  };
  std::vector<Contribution> contribs;
  std::vector<double> suffix;

  Eigen::MatrixXd grad3d = Eigen::MatrixXd::Zero(vertices.rows(), 3);
  const double npix = static_cast<double>(r.width) * r.height;
  double loss_acc = 0.0;

  for (int row = 0; row < r.height; ++row) {
    const double py = row + 0.5;
    for (int col = 0; col < r.width; ++col) {
      const double px = col + 0.5;
      contribs.clear();
      double transparent = 1.0;
      for (int f : r.row_faces[row]) {
        if (px < r.min_x(f) - r.band || px > r.max_x(f) + r.band) continue;
        const BoundaryHit hit = nearest_boundary(
            {px, py}, r.px.row(faces(f, 0)).transpose(),
            r.px.row(faces(f, 1)).transpose(), r.px.row(faces(f, 2)).transpose());
        if (!hit.inside && hit.dist > r.band) continue;
        const double d = hit.inside ? hit.dist : -hit.dist;
        const double big = logistic(d * std::abs(d) / sigma);
        transparent *= 1.0 - big;
        contribs.push_back({f, big, hit.dist, hit.inside ? 1.0 : -1.0, hit});
      }
      const double occ = 1.0 - transparent;
      const double diff = occ - target.values(row, col);
      loss_acc += std::abs(diff);
      if (diff == 0.0 || contribs.empty()) continue;
      const double gl = (diff > 0.0 ? 1.0 : -1.0) / npix;

      // Leave-one-out products of (1 - D) via prefix/suffix sweeps.
      suffix.assign(contribs.size() + 1, 1.0);
      for (int k = static_cast<int>(contribs.size()) - 1; k >= 0; --k) {
        suffix[k] = suffix[k + 1] * (1.0 - contribs[k].big);
      }
      double prefix = 1.0;
      for (size_t k = 0; k < contribs.size(); ++k) {
        const Contribution& cb = contribs[k];
        const double loo = prefix * suffix[k + 1];
        prefix *= 1.0 - cb.big;
        if (cb.d_abs < 1e-12) continue;  // dD/dd vanishes at the edge
        const double wd = gl * loo * cb.big * (1.0 - cb.big) * 2.0 * cb.d_abs /
                          sigma * cb.sign;
        const int i0 = faces(cb.face, cb.hit.seg);
        const int i1 = faces(cb.face, (cb.hit.seg + 1) % 3);
        const Eigen::Vector2d e0 = r.px.row(i0).transpose();
        const Eigen::Vector2d e1 = r.px.row(i1).transpose();
        const Eigen::Vector2d q = e0 + cb.hit.t * (e1 - e0);
        const Eigen::Vector2d dir = (Eigen::Vector2d(px, py) - q) / cb.d_abs;
        // d(dist)/d(e0) = -dir (1 - t), d(dist)/d(e1) = -dir t.
        grad3d.row(i0) -= wd * (1.0 - cb.hit.t) * (dir.transpose() * proj_jac[i0]);
        grad3d.row(i1) -= wd * cb.hit.t * (dir.transpose() * proj_jac[i1]);
      }
    }
  }
  if (loss) *loss = loss_acc / npix;
  return grad3d;
}

MaskImage mask_from_silhouette(const SoftSilhouette& s, double threshold,
                               bool amodal) {
  MaskImage m;
  m.width = s.width;
  m.height = s.height;
  m.amodal = amodal;
  m.values = (s.occupancy.array() >= threshold).cast<double>();
  return m;
}

namespace {

// Chain rule from vertex gradients to the pose vector through linear blend
// skinning. Articulated joint a moves every vertex bound to a descendant
// joint rigidly about a's posed position.
Eigen::VectorXd pose_gradient(const hand::SkinnedModel& model,
                              const hand::Params& params,
                              const hand::PosedHand& posed,
                              const Eigen::MatrixXd& grad_v) {
  const hand::ShapedHand shaped = hand::shape_blend(model, params.beta);
  const int nv = model.num_vertices();

  std::vector<Eigen::MatrixXd> moved(kNumJoints);
  for (int j = 0; j < kNumJoints; ++j) {
    if (model.skinning_weights.col(j).isZero(0.0)) continue;
    moved[j] = shaped.vertices * posed.joint_rotations[j].transpose();
    moved[j].rowwise() += posed.joint_translations[j].transpose();
  }

  Eigen::VectorXd g = Eigen::VectorXd::Zero(hand::kPoseDim);
  g.segment<3>(3) = grad_v.colwise().sum().transpose();

  const Eigen::Matrix3d r0 = posed.joint_rotations[0];
  const auto dr0 = rodrigues_jacobian(params.root_rot);
  Eigen::MatrixXd rel0 = posed.vertices;
  rel0.rowwise() -= params.root_trans.transpose();
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix3d m = dr0[i] * r0.transpose();
    g(i) = (rel0 * m.transpose()).cwiseProduct(grad_v).sum();
  }

  for (int a = 1; a <= kNumArticulated; ++a) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nv, 3);
    Eigen::VectorXd wsum = Eigen::VectorXd::Zero(nv);
    for (int j = 0; j < kNumJoints; ++j) {
      bool in_subtree = false;
      for (int up = j; up >= 0; up = model.joint_parents[up]) {
        if (up == a) {
          in_subtree = true;
          break;
        }
      }
      if (!in_subtree || model.skinning_weights.col(j).isZero(0.0)) continue;
      s += model.skinning_weights.col(j).asDiagonal() * moved[j];
      wsum += model.skinning_weights.col(j);
    }
    if (wsum.isZero(0.0)) continue;
    const Eigen::Vector3d pivot = posed.joints.joint(a);
    s -= wsum * pivot.transpose();

    const Eigen::Matrix3d w = posed.joint_rotations[model.joint_parents[a]];
    const Eigen::Vector3d axis_angle = params.theta.row(a - 1).transpose();
    const Eigen::Matrix3d ra = rodrigues(axis_angle);
    const auto dra = rodrigues_jacobian(axis_angle);
    for (int i = 0; i < 3; ++i) {
      const Eigen::Matrix3d m = w * dra[i] * ra.transpose() * w.transpose();
      g(6 + 3 * (a - 1) + i) = (s * m.transpose()).cwiseProduct(grad_v).sum();
    }
  }
  return g;
}

}  // namespace

FitResult fit_pose_to_mask(const hand::SkinnedModel& model,
                           const hand::Params& init, const MaskImage& target,
                           const camera::Intrinsics& cam, int steps,
                           double step_size, double sigma) {
  if (steps < 0) throw ValidationError("[softras] steps must be >= 0");
  if (!(step_size > 0.0)) {
    throw ValidationError("[softras] step size must be positive");
  }
  target.validate();
  if (!target.amodal) {
    throw ValidationError(
        "[softras] silhouette loss is defined on amodal masks only");
  }
  if (target.width != cam.width || target.height != cam.height) {
    throw ValidationError("[softras] mask dimensions must match the camera");
  }
  if (sigma <= 0.0) sigma = default_sigma(cam.width, cam.height);

  auto loss_only = [&](const hand::Params& p) -> double {
    try {
      const hand::PosedHand posed = hand::forward_kinematics(model, p);
      const SoftSilhouette sil =
          render_soft_silhouette(posed.vertices, model.faces, cam, sigma);
      return silhouette_l1_loss(sil, target).first;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  FitResult out;
  out.params = init;

  hand::PosedHand posed = hand::forward_kinematics(model, init);
  double loss = 0.0;
  Eigen::MatrixXd grad_v = silhouette_loss_grad_vertices(
      posed.vertices, model.faces, cam, sigma, target, &loss);
  out.loss_trajectory.push_back(loss);

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(hand::kPoseDim);
  scale.segment<3>(3).setConstant(100.0);  // mm block vs radian blocks

  double alpha = step_size;
  Eigen::VectorXd g = pose_gradient(model, init, posed, grad_v);
  for (int attempt = 0; attempt < steps; ++attempt) {
    if (loss == 0.0 || g.norm() < 1e-30) break;
    const Eigen::VectorXd pose0 = hand::pack_pose(out.params);
    hand::Params trial = out.params;
    hand::unpack_pose(pose0 - alpha * scale.cwiseProduct(g), &trial);
    const double trial_loss = loss_only(trial);
    // Demand a decrease above float-noise scale; keeps an already-optimal
    // start from drifting on 1-ulp wins.
    if (trial_loss < loss - 1e-12 * (1.0 + loss)) {
      out.params = trial;
      posed = hand::forward_kinematics(model, out.params);
      grad_v = silhouette_loss_grad_vertices(posed.vertices, model.faces, cam,
                                             sigma, target, &loss);
      g = pose_gradient(model, out.params, posed, grad_v);
      out.loss_trajectory.push_back(loss);
      out.accepted_steps += 1;
      alpha = std::min(alpha * 1.5, 1e4 * step_size);
    } else {
      alpha *= 0.5;
      if (alpha < 1e-14 * step_size) break;
    }
  }
  return out;
}

}  // namespace handkit::softras
