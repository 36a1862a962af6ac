#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

#include "handkit/camera.hpp"
#include "handkit/hand_model.hpp"

namespace handkit::softras {

// Soft occupancy image. occupancy(row, col) covers the pixel centered at
// (col + 0.5, row + 0.5); sigma is the logistic sharpness in px^2.
struct SoftSilhouette {
  int width = 0;
  int height = 0;
  double sigma = 0.0;
  Eigen::MatrixXd occupancy;  // height x width, values in [0,1]
};

// Binary mask with the amodal flag carried as metadata (never inferred).
struct MaskImage {
  int width = 0;
  int height = 0;
  bool amodal = true;
  Eigen::MatrixXd values;  // height x width, {0,1}

  void validate() const;
};

// Default sharpness: 1e-4 of the squared image diagonal.
double default_sigma(int width, int height);

// Soft silhouette of a triangle mesh. Per pixel i and face j the signed 2D
// distance d_ij to the projected triangle (positive inside) feeds
// D_ij = logistic(d_ij |d_ij| / sigma), aggregated as 1 - prod_j (1 - D_ij).
// Faces are considered only within a 6 sqrt(sigma) band of their screen
// bounds (the discarded tail is below double resolution) and always combined
// in ascending face order, so the result is bit-stable. The render raster is
// cam.width x cam.height.
SoftSilhouette render_soft_silhouette(const Eigen::MatrixXd& vertices,
                                      const Eigen::MatrixXi& faces,
                                      const camera::Intrinsics& cam,
                                      double sigma);

// Mean absolute difference and its subgradient w.r.t. occupancy. The loss is
// defined on amodal masks only; a modal target is refused.
std::pair<double, Eigen::MatrixXd> silhouette_l1_loss(const SoftSilhouette& render,
                                                      const MaskImage& target);

// Analytic d(loss)/d(vertices) of the L1 silhouette loss, V x 3. Optionally
// reports the loss value of the underlying render.
Eigen::MatrixXd silhouette_loss_grad_vertices(const Eigen::MatrixXd& vertices,
                                              const Eigen::MatrixXi& faces,
                                              const camera::Intrinsics& cam,
                                              double sigma,
                                              const MaskImage& target,
                                              double* loss = nullptr);

MaskImage mask_from_silhouette(const SoftSilhouette& s, double threshold = 0.5,
                               bool amodal = true);

struct FitResult {
  hand::Params params;
  std::vector<double> loss_trajectory;  // initial loss + accepted steps
  int accepted_steps = 0;
};

// Gradient descent with backtracking on the L1 silhouette loss over
// (root_trans, root_rot, theta). Translation moves on a 100x larger step
// scale than the angular blocks. The recorded trajectory is strictly
// decreasing across accepted steps; steps bounds the number of attempts.
// sigma <= 0 selects the camera default; larger values smooth the objective
// (useful against rotation-for-translation aliasing on blob-like views).
FitResult fit_pose_to_mask(const hand::SkinnedModel& model,
                           const hand::Params& init, const MaskImage& target,
                           const camera::Intrinsics& cam, int steps,
                           double step_size, double sigma = 0.0);

}  // namespace handkit::softras
