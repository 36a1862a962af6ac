#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <random>

#include "handkit/errors.hpp"
#include "handkit/grasp.hpp"

using namespace handkit;
using grasp::Mlp;

namespace {

Eigen::VectorXd random_theta(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::VectorXd v(grasp::kThetaDim);
  for (int i = 0; i < v.size(); ++i) v[i] = n(rng);
  return v;
}

double batch_loss(const Mlp& net, const std::vector<grasp::Sample>& data) {
  double total = 0.0;
  for (const auto& s : data) {
    total += grasp::cross_entropy(grasp::mlp_forward(net, s.theta), s.label).loss;
  }
  return total / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("zero network emits zero logits") {
  const Mlp net = Mlp::zero_init();
  std::mt19937_64 rng(81);
  const Eigen::VectorXd logits = grasp::mlp_forward(net, random_theta(rng));
  CHECK(logits.size() == grasp::kNumClasses);
  CHECK(logits.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward pass is deterministic") {
  const Mlp net = Mlp::random_init(4);
  std::mt19937_64 rng(82);
  const Eigen::VectorXd theta = random_theta(rng);
  CHECK(grasp::mlp_forward(net, theta) == grasp::mlp_forward(net, theta));
}

TEST_CASE("a single active path traces through all four layers") {
  // One unit per layer carries weight, everything else is zero: the network
  // computes w4*w3*w2*w1*x + b on the positive side of each rectifier.
  Mlp net = Mlp::zero_init();
  const double w1 = 0.5, w2 = 2.0, w3 = 1.5, w4 = -0.25;
  net.weights[0](0, 7) = w1;
  net.weights[1](3, 0) = w2;
  net.weights[2](5, 3) = w3;
  net.weights[3](2, 5) = w4;
  net.biases[3][6] = 0.75;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(grasp::kThetaDim);
  theta[7] = 1.2;  // positive path: rectifiers pass it through

  const Eigen::VectorXd logits = grasp::mlp_forward(net, theta);
  CHECK(logits[2] == doctest::Approx(w4 * w3 * w2 * w1 * 1.2).epsilon(1e-15));
  CHECK(logits[6] == 0.75);
  CHECK(logits[0] == 0.0);

  theta[7] = -1.2;  // first rectifier clips the path
  CHECK(grasp::mlp_forward(net, theta)[2] == 0.0);
}

TEST_CASE("uniform logits cost ln 8 and saturated logits cost nothing") {
  const Eigen::VectorXd uniform = Eigen::VectorXd::Zero(grasp::kNumClasses);
  for (int label = 0; label < grasp::kNumClasses; ++label) {
    CHECK(grasp::cross_entropy(uniform, label).loss ==
          doctest::Approx(std::log(8.0)).epsilon(1e-15));
  }

  Eigen::VectorXd confident = Eigen::VectorXd::Zero(grasp::kNumClasses);
  confident[3] = 30.0;
  CHECK(grasp::cross_entropy(confident, 3).loss < 1e-9);
}

TEST_CASE("cross entropy is stable under large logit shifts") {
  Eigen::VectorXd logits(grasp::kNumClasses);
  logits << 1.0, -2.0, 0.5, 3.0, -1.0, 0.0, 2.0, -0.5;
  const double base = grasp::cross_entropy(logits, 3).loss;
  const double shifted =
      grasp::cross_entropy((logits.array() + 1000.0).matrix(), 3).loss;
  CHECK(std::abs(base - shifted) < 1e-12);
  CHECK(std::isfinite(
      grasp::cross_entropy((logits.array() + 1e8).matrix(), 0).loss));
}

TEST_CASE("cross entropy gradient is softmax minus one-hot and sums to zero") {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd logits(grasp::kNumClasses);
    for (int i = 0; i < logits.size(); ++i) logits[i] = n(rng);
    const int label = trial % grasp::kNumClasses;
    const grasp::CrossEntropyResult r = grasp::cross_entropy(logits, label);

    // softmax sums to one: grad + one_hot must be a distribution
    Eigen::VectorXd softmax = r.grad_logits;
    softmax[label] += 1.0;
    CHECK(std::abs(softmax.sum() - 1.0) < 1e-12);
    CHECK(softmax.minCoeff() >= 0.0);

    const double h = 1e-6;
    for (int k = 0; k < logits.size(); ++k) {
      Eigen::VectorXd lp = logits, lm = logits;
      lp[k] += h;
      lm[k] -= h;
      const double fd = (grasp::cross_entropy(lp, label).loss -
                         grasp::cross_entropy(lm, label).loss) /
                        (2.0 * h);
      CHECK(std::abs(r.grad_logits[k] - fd) < 1e-6);
    }
  }
  CHECK_THROWS_AS(grasp::cross_entropy(Eigen::VectorXd::Zero(8), 8),
                  ValidationError);
  CHECK_THROWS_AS(grasp::cross_entropy(Eigen::VectorXd::Zero(8), -1),
                  ValidationError);
}

TEST_CASE("every weight and bias gradient matches central differences") {
  Mlp net = Mlp::random_init(11);
  std::mt19937_64 rng(84);
  const Eigen::VectorXd theta = random_theta(rng);
  const int label = 5;
  const grasp::MlpGradients grads = grasp::mlp_backward(net, theta, label);

  auto loss_at = [&](const Mlp& n) {
    return grasp::cross_entropy(grasp::mlp_forward(n, theta), label).loss;
  };

  const double h = 1e-6;
  std::uniform_int_distribution<int> pick_layer(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int l = pick_layer(rng);
    std::uniform_int_distribution<int> pick_r(
        0, static_cast<int>(net.weights[l].rows()) - 1);
    std::uniform_int_distribution<int> pick_c(
        0, static_cast<int>(net.weights[l].cols()) - 1);
    const int r = pick_r(rng), c = pick_c(rng);

    Mlp np = net, nm = net;
    np.weights[l](r, c) += h;
    nm.weights[l](r, c) -= h;
    const double fd = (loss_at(np) - loss_at(nm)) / (2.0 * h);
    const double an = grads.weights[l](r, c);
    CHECK(std::abs(an - fd) < 1e-4 * std::max({std::abs(fd), std::abs(an), 1.0}));

    Mlp bp = net, bm = net;
    bp.biases[l][r] += h;
    bm.biases[l][r] -= h;
    const double fdb = (loss_at(bp) - loss_at(bm)) / (2.0 * h);
    const double anb = grads.biases[l][r];
    CHECK(std::abs(anb - fdb) <
          1e-4 * std::max({std::abs(fdb), std::abs(anb), 1.0}));
  }
}

TEST_CASE("a saturated correct prediction is a stationary point") {
  Mlp net = Mlp::zero_init();
  net.biases[3][2] = 60.0;  // constant, extremely confident class-2 logits
  std::mt19937_64 rng(85);
  const grasp::MlpGradients grads = grasp::mlp_backward(net, random_theta(rng), 2);
  double worst = grads.loss;
  for (int l = 0; l < 4; ++l) {
    worst = std::max(worst, grads.weights[l].cwiseAbs().maxCoeff());
    worst = std::max(worst, grads.biases[l].cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("batch gradients equal the mean of per-sample gradients") {
  Mlp net = Mlp::random_init(12);
  std::mt19937_64 rng(86);
  std::vector<grasp::Sample> data;
  for (int i = 0; i < 7; ++i) {
    data.push_back({random_theta(rng), i % grasp::kNumClasses});
  }
  const grasp::MlpGradients batch = grasp::batch_gradients(net, data);

  for (int l = 0; l < 4; ++l) {
    Eigen::MatrixXd wsum = Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                                 net.weights[l].cols());
    Eigen::VectorXd bsum = Eigen::VectorXd::Zero(net.biases[l].size());
    double lsum = 0.0;
    for (const auto& s : data) {
      const grasp::MlpGradients g = grasp::mlp_backward(net, s.theta, s.label);
      wsum += g.weights[l];
      bsum += g.biases[l];
      lsum += g.loss;
    }
    CHECK((batch.weights[l] - wsum / 7.0).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((batch.biases[l] - bsum / 7.0).cwiseAbs().maxCoeff() < 1e-12);
    if (l == 0) CHECK(std::abs(batch.loss - lsum / 7.0) < 1e-12);
  }
}

TEST_CASE("toy dataset is seeded, labeled, and separable by construction") {
  const auto data = grasp::make_toy_dataset(25, 0.1, 99);
  REQUIRE(data.size() == 200);
  std::array<int, 8> counts{};
  for (const auto& s : data) {
    REQUIRE(s.label >= 0);
    REQUIRE(s.label < 8);
    ++counts[s.label];
    CHECK(s.theta.size() == grasp::kThetaDim);
  }
  for (int c : counts) CHECK(c == 25);

  const auto again = grasp::make_toy_dataset(25, 0.1, 99);
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(data[i].label == again[i].label);
    CHECK(data[i].theta == again[i].theta);
  }
}

TEST_CASE("zero learning rate leaves the network untouched") {
  const auto data = grasp::make_toy_dataset(4, 0.1, 7);
  const grasp::TrainResult r = grasp::train_grasp_toy(data, 20, 0.0, 5);
  const Mlp fresh = Mlp::random_init(5);
  for (int l = 0; l < 4; ++l) {
    CHECK(r.net.weights[l] == fresh.weights[l]);
    CHECK(r.net.biases[l] == fresh.biases[l]);
  }
  for (size_t e = 1; e < r.loss.size(); ++e) {
    CHECK(r.loss[e] == r.loss[0]);
  }
}

TEST_CASE("full-batch training ignores dataset order") {
  auto data = grasp::make_toy_dataset(6, 0.1, 13);
  const grasp::TrainResult a = grasp::train_grasp_toy(data, 30, 0.2, 21);

  std::mt19937_64 rng(14);
  std::shuffle(data.begin(), data.end(), rng);
  const grasp::TrainResult b = grasp::train_grasp_toy(data, 30, 0.2, 21);

  for (int l = 0; l < 4; ++l) {
    CHECK((a.net.weights[l] - b.net.weights[l]).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(std::abs(a.loss.back() - b.loss.back()) < 1e-12);
}

TEST_CASE("eight noisy clusters train to high accuracy") {
  const auto data = grasp::make_toy_dataset(25, 0.1, 20240814);
  const grasp::TrainResult r = grasp::train_grasp_toy(data, 300, 0.2, 20240815);
  REQUIRE(!r.accuracy.empty());
  CHECK(r.accuracy.back() >= 0.95);
  CHECK(!r.single_class_warning);

  const grasp::TrainResult again =
      grasp::train_grasp_toy(data, 300, 0.2, 20240815);
  CHECK(again.accuracy.back() == r.accuracy.back());
  for (int l = 0; l < 4; ++l) {
    CHECK(again.net.weights[l] == r.net.weights[l]);
  }
}

TEST_CASE("single-class data trains under protest") {
  std::mt19937_64 rng(87);
  std::vector<grasp::Sample> data;
  for (int i = 0; i < 10; ++i) data.push_back({random_theta(rng), 3});
  const grasp::TrainResult r = grasp::train_grasp_toy(data, 10, 0.1, 1);
  CHECK(r.single_class_warning);
  CHECK(r.loss.size() >= 2);
  CHECK(r.loss.back() < r.loss.front());
}

TEST_CASE("empty datasets are rejected") {
  CHECK_THROWS_AS(grasp::train_grasp_toy({}, 10, 0.1, 1), ValidationError);
  CHECK_THROWS_AS(grasp::batch_gradients(Mlp::random_init(1), {}),
                  ValidationError);
}

TEST_CASE("last-layer-only descent never increases the convex loss") {
  // Freeze the hidden stack (train only the final affine layer): the problem
  // is convex in those parameters, so small steps decrease the loss.
  Mlp net = Mlp::random_init(31);
  const auto data = grasp::make_toy_dataset(5, 0.3, 32);

  double prev = batch_loss(net, data);
  for (int epoch = 0; epoch < 60; ++epoch) {
    const grasp::MlpGradients g = grasp::batch_gradients(net, data);
    net.weights[3] -= 0.05 * g.weights[3];
    net.biases[3] -= 0.05 * g.biases[3];
    const double cur = batch_loss(net, data);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("optional extra input block widens the first layer only") {
  const Mlp net = Mlp::random_init(3, 16);
  CHECK(net.extra_inputs == 16);
  CHECK(net.input_width() == grasp::kThetaDim + 16);
  CHECK(net.output_width() == grasp::kNumClasses);
  std::mt19937_64 rng(88);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd input(grasp::kThetaDim + 16);
  for (int i = 0; i < input.size(); ++i) input[i] = n(rng);
  CHECK(grasp::mlp_forward(net, input).size() == grasp::kNumClasses);
  // wrong width is refused
  CHECK_THROWS_AS(grasp::mlp_forward(net, Eigen::VectorXd::Zero(45)),
                  ValidationError);
}

TEST_CASE("network validation catches broken chains") {
  Mlp net = Mlp::random_init(2);
  net.weights[1] = Eigen::MatrixXd::Zero(64, 100);  // breaks 128 -> 64
  CHECK_THROWS_AS(net.validate(), ValidationError);
  Mlp net2 = Mlp::random_init(2);
  net2.biases[0][0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(net2.validate(), ValidationError);
}
