#include "handkit/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "handkit/errors.hpp"
#include "handkit/rng.hpp"

namespace handkit::grasp {

std::vector<int> Mlp::default_widths(int extra_inputs) {
  return {kThetaDim + extra_inputs, 128, 64, 32, kNumClasses};
}

Mlp Mlp::random_init(std::uint64_t seed, int extra_inputs) {
  if (extra_inputs < 0) {
    throw ValidationError("[grasp] extra input width must be >= 0");
  }
  const std::vector<int> widths = default_widths(extra_inputs);
  Rng rng(seed);
  Mlp net;
  net.extra_inputs = extra_inputs;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    // Rectifier-friendly scaling; the final linear layer gets a gentler one.
    const bool last = l + 2 == widths.size();
    const double scale = std::sqrt((last ? 1.0 : 2.0) / fan_in);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.normal() * scale;
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

Mlp Mlp::zero_init(int extra_inputs) {
  if (extra_inputs < 0) {
    throw ValidationError("[grasp] extra input width must be >= 0");
  }
  const std::vector<int> widths = default_widths(extra_inputs);
  Mlp net;
  net.extra_inputs = extra_inputs;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    net.weights.push_back(Eigen::MatrixXd::Zero(widths[l + 1], widths[l]));
    net.biases.push_back(Eigen::VectorXd::Zero(widths[l + 1]));
  }
  return net;
}

void Mlp::validate() const {
  if (weights.empty() || weights.size() != biases.size()) {
    throw ValidationError("[grasp] network needs matching weight/bias layers");
  }
  for (size_t l = 0; l < weights.size(); ++l) {
    if (biases[l].size() != weights[l].rows()) {
      throw ValidationError("[grasp] bias width mismatch at layer " +
                            std::to_string(l));
    }
    if (l > 0 && weights[l].cols() != weights[l - 1].rows()) {
      throw ValidationError("[grasp] layer widths do not chain at layer " +
                            std::to_string(l));
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw ValidationError("[grasp] non-finite parameters at layer " +
                            std::to_string(l));
    }
  }
}

Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& input) {
  net.validate();
  if (input.size() != net.input_width()) {
    throw ValidationError("[grasp] input width " + std::to_string(input.size()) +
                          " does not match network input " +
                          std::to_string(net.input_width()));
  }
  if (!input.allFinite()) {
    throw ValidationError("[grasp] input must be finite");
  }
  Eigen::VectorXd a = input;
  for (size_t l = 0; l < net.weights.size(); ++l) {
    a = net.weights[l] * a + net.biases[l];
    if (l + 1 < net.weights.size()) a = a.cwiseMax(0.0);
  }
  return a;
}

CrossEntropyResult cross_entropy(const Eigen::VectorXd& logits, int label) {
  if (label < 0 || label >= logits.size()) {
    throw ValidationError("[grasp] label " + std::to_string(label) +
                          " out of range for " + std::to_string(logits.size()) +
                          " classes");
  }
  const double m = logits.maxCoeff();
  const Eigen::VectorXd shifted = logits.array() - m;
  const Eigen::VectorXd ex = shifted.array().exp();
  const double z = ex.sum();
  CrossEntropyResult out;
  out.loss = std::log(z) - shifted(label);
  out.grad_logits = ex / z;
  out.grad_logits(label) -= 1.0;
  return out;
}

MlpGradients mlp_backward(const Mlp& net, const Eigen::VectorXd& input,
                          int label) {
  net.validate();
  if (input.size() != net.input_width()) {
    throw ValidationError("[grasp] input width does not match the network");
  }
  const size_t layers = net.weights.size();
  std::vector<Eigen::VectorXd> activations;  // a_0 = input, a_l post-relu
  std::vector<Eigen::VectorXd> pre;          // z_l per layer
  activations.push_back(input);
  Eigen::VectorXd a = input;
  for (size_t l = 0; l < layers; ++l) {
    Eigen::VectorXd z = net.weights[l] * a + net.biases[l];
    pre.push_back(z);
    a = (l + 1 < layers) ? z.cwiseMax(0.0).eval() : z;
    activations.push_back(a);
  }

  const CrossEntropyResult ce = cross_entropy(activations.back(), label);

  MlpGradients grads;
  grads.loss = ce.loss;
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  Eigen::VectorXd delta = ce.grad_logits;
  for (int l = static_cast<int>(layers) - 1; l >= 0; --l) {
    grads.weights[l] = delta * activations[l].transpose();
    grads.biases[l] = delta;
    if (l > 0) {
      delta = (net.weights[l].transpose() * delta).eval();
      // Rectifier mask of the previous layer's pre-activation.
      delta = delta.cwiseProduct(
          (pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

MlpGradients batch_gradients(const Mlp& net, const std::vector<Sample>& data) {
  if (data.empty()) {
    throw ValidationError("[grasp] dataset must be non-empty");
  }
  MlpGradients acc;
  acc.weights.resize(net.weights.size());
  acc.biases.resize(net.biases.size());
  for (size_t l = 0; l < net.weights.size(); ++l) {
    acc.weights[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                           net.weights[l].cols());
    acc.biases[l] = Eigen::VectorXd::Zero(net.biases[l].size());
  }
  for (const auto& sample : data) {
    const MlpGradients g = mlp_backward(net, sample.theta, sample.label);
    acc.loss += g.loss;
    for (size_t l = 0; l < acc.weights.size(); ++l) {
      acc.weights[l] += g.weights[l];
      acc.biases[l] += g.biases[l];
    }
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  acc.loss *= inv;
  for (size_t l = 0; l < acc.weights.size(); ++l) {
    acc.weights[l] *= inv;
    acc.biases[l] *= inv;
  }
  return acc;
}

std::vector<Sample> make_toy_dataset(int per_class, double noise,
                                     std::uint64_t seed) {
  if (per_class < 1) {
    throw ValidationError("[grasp] need at least one sample per class");
  }
  if (noise < 0.0) {
    throw ValidationError("[grasp] noise must be >= 0");
  }
  Rng rng(seed);
  std::vector<Eigen::VectorXd> canonical(kNumClasses);
  for (int k = 0; k < kNumClasses; ++k) {
    canonical[k].resize(kThetaDim);
    for (int i = 0; i < kThetaDim; ++i) canonical[k](i) = rng.uniform(-1.0, 1.0);
  }
  std::vector<Sample> data;
  data.reserve(static_cast<size_t>(per_class) * kNumClasses);
  for (int k = 0; k < kNumClasses; ++k) {
    for (int s = 0; s < per_class; ++s) {
      Sample smp;
      smp.label = k;
      smp.theta = canonical[k];
      for (int i = 0; i < kThetaDim; ++i) smp.theta(i) += rng.normal() * noise;
      data.push_back(std::move(smp));
    }
  }
  return data;
}

TrainResult train_grasp_toy(const std::vector<Sample>& dataset, int epochs,
                            double lr, std::uint64_t seed) {
  if (dataset.empty()) {
    throw ValidationError("[grasp] dataset must be non-empty");
  }
  if (epochs < 0) throw ValidationError("[grasp] epochs must be >= 0");
  if (lr < 0.0) throw ValidationError("[grasp] learning rate must be >= 0");
  std::set<int> classes;
  for (const auto& s : dataset) classes.insert(s.label);

  TrainResult out;
  out.single_class_warning = classes.size() < 2;
  out.net = Mlp::random_init(seed);

  auto evaluate = [&](const Mlp& net, double* loss, double* acc) {
    double l = 0.0;
    int correct = 0;
    for (const auto& s : dataset) {
      const Eigen::VectorXd logits = mlp_forward(net, s.theta);
      l += cross_entropy(logits, s.label).loss;
      int arg = 0;
      logits.maxCoeff(&arg);
      if (arg == s.label) ++correct;
    }
    *loss = l / dataset.size();
    *acc = static_cast<double>(correct) / dataset.size();
  };

  for (int epoch = 0; epoch < epochs; ++epoch) {
    double loss = 0.0, acc = 0.0;
    evaluate(out.net, &loss, &acc);
    out.loss.push_back(loss);
    out.accuracy.push_back(acc);
    const MlpGradients g = batch_gradients(out.net, dataset);
    for (size_t l = 0; l < out.net.weights.size(); ++l) {
      out.net.weights[l] -= lr * g.weights[l];
      out.net.biases[l] -= lr * g.biases[l];
    }
  }
  double loss = 0.0, acc = 0.0;
  evaluate(out.net, &loss, &acc);
  out.loss.push_back(loss);
  out.accuracy.push_back(acc);
  return out;
}

}  // namespace handkit::grasp
