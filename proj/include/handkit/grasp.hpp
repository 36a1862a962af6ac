#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace handkit::grasp {

inline constexpr int kThetaDim = 45;
inline constexpr int kNumClasses = 8;

// Four affine layers with rectifier nonlinearities in between; the last layer
// emits raw logits. Input is the flattened articulation vector, optionally
// extended by an extra feature block (absent by default).
struct Mlp {
  std::vector<Eigen::MatrixXd> weights;  // per layer, out x in
  std::vector<Eigen::VectorXd> biases;
  int extra_inputs = 0;

  static std::vector<int> default_widths(int extra_inputs = 0);  // 45+e,128,64,32,8
  static Mlp random_init(std::uint64_t seed, int extra_inputs = 0);
  static Mlp zero_init(int extra_inputs = 0);

  int input_width() const { return static_cast<int>(weights.front().cols()); }
  int output_width() const { return static_cast<int>(weights.back().rows()); }
  void validate() const;  // chained widths, finite parameters
};

Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& input);

struct CrossEntropyResult {
  double loss = 0.0;
  Eigen::VectorXd grad_logits;  // softmax - one_hot(label)
};

// Stable -log softmax(logits)[label] via max subtraction.
CrossEntropyResult cross_entropy(const Eigen::VectorXd& logits, int label);

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  double loss = 0.0;
};

// Reverse-mode gradients of the cross-entropy loss for one sample.
MlpGradients mlp_backward(const Mlp& net, const Eigen::VectorXd& input,
                          int label);

struct Sample {
  Eigen::VectorXd theta;
  int label = 0;
};

// Mean loss/gradients over the dataset.
MlpGradients batch_gradients(const Mlp& net, const std::vector<Sample>& data);

// Eight separable articulation clusters: one canonical theta per class plus
// Gaussian noise.
std::vector<Sample> make_toy_dataset(int per_class, double noise,
                                     std::uint64_t seed);

struct TrainResult {
  Mlp net;
  std::vector<double> loss;      // per epoch, pre-update, plus final state
  std::vector<double> accuracy;  // aligned with loss
  bool single_class_warning = false;
};

// Full-batch gradient descent; deterministic under fixed seed (the seed only
// drives weight initialization).
TrainResult train_grasp_toy(const std::vector<Sample>& dataset, int epochs,
                            double lr, std::uint64_t seed);

}  // namespace handkit::grasp
