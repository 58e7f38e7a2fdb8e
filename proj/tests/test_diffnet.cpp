#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "dirrisk/datasets.hpp"
#include "dirrisk/diffnet.hpp"
#include "dirrisk/rng.hpp"

using namespace dirrisk;

namespace {

// Forward pass written as plain loops over the stored parameters.
std::vector<long double> loop_forward(const Classifier& m, const Vector& x) {
  std::vector<long double> a(x.data(), x.data() + x.size());
  const auto& W = m.weights();
  const auto& b = m.biases();
  for (std::size_t l = 0; l < W.size(); ++l) {
    std::vector<long double> z(W[l].rows());
    for (int i = 0; i < W[l].rows(); ++i) {
      long double s = b[l](i);
      for (int j = 0; j < W[l].cols(); ++j) s += static_cast<long double>(W[l](i, j)) * a[j];
      z[i] = (l + 1 < W.size() && s < 0) ? 0.0L : s;
    }
    a = z;
  }
  return a;
}

long double ce_oracle(const std::vector<long double>& logits, int y) {
  long double sum = 0;
  for (long double l : logits) sum += std::exp(l);
  return std::log(sum) - logits[y];
}

Vector random_vector(int dim, Rng& rng) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.gaussian();
  return v;
}

Classifier random_with_bias(const std::vector<int>& dims, std::uint64_t seed) {
  const Classifier base = Classifier::random(dims, seed);
  Rng rng({seed, 99});
  std::vector<Vector> biases;
  for (const auto& b : base.biases()) biases.push_back(0.3 * random_vector(static_cast<int>(b.size()), rng));
  return Classifier(base.layer_dims(), base.weights(), biases);
}

}  // namespace

TEST_CASE("softmax is stable and normalized") {
  Vector l(3);
  l << 1000.0, 1001.0, 999.0;
  const Vector p = softmax(l);
  CHECK(p.sum() == doctest::Approx(1.0));
  const long double e0 = std::exp(-1.0L), e2 = std::exp(-2.0L);
  CHECK(p(1) == doctest::Approx(static_cast<double>(1.0L / (1.0L + e0 + e2))));
  CHECK(std::isfinite(loss_ce(l, 2)));
  CHECK(loss_ce(l, 2) == doctest::Approx(static_cast<double>(2.0L + std::log(1.0L + e0 + e2))));
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  Vector l(4);
  l << 0.5, 2.0, 2.0, -1.0;
  CHECK(argmax(l) == 1);
  CHECK(argmax(Vector::Zero(3)) == 0);
}

TEST_CASE("forward and loss agree with a loop oracle") {
  Rng rng({5, 0});
  for (int trial = 0; trial < 20; ++trial) {
    const Classifier m = random_with_bias({7, 9, 5, 3}, 100 + trial);
    const Vector x = random_vector(7, rng);
    const auto ref = loop_forward(m, x);
    const Vector got = m.forward(x);
    for (int k = 0; k < 3; ++k) CHECK(got(k) == doctest::Approx(static_cast<double>(ref[k])).epsilon(1e-12));
    for (int y = 0; y < 3; ++y) {
      CHECK(m.loss(x, y) == doctest::Approx(static_cast<double>(ce_oracle(ref, y))).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero model: uniform logits, predicts class 0, loss log K") {
  const Classifier m = Classifier::zeros({4, 6, 5});
  const Vector x = Vector::Constant(4, 0.7);
  CHECK(m.forward(x).isZero());
  CHECK(m.predict(x) == 0);
  CHECK(m.loss(x, 3) == doctest::Approx(std::log(5.0)));
  CHECK(m.input_gradient(x, 3).isZero());
}

TEST_CASE("linear model gradient is W^T (softmax - e_y)") {
  const Classifier m = random_with_bias({6, 4}, 3);
  Rng rng({3, 3});
  const Vector x = random_vector(6, rng);
  Vector r = softmax(m.weights()[0] * x + m.biases()[0]);
  r(2) -= 1.0;
  const Vector expected = m.weights()[0].transpose() * r;
  CHECK((m.input_gradient(x, 2) - expected).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("input gradient matches central differences") {
  Rng rng({11, 0});
  for (int trial = 0; trial < 25; ++trial) {
    const int dim = 3 + trial;
    const Classifier m = random_with_bias({dim, 16, 8, 4}, 500 + trial);
    const Vector x = random_vector(dim, rng);
    const int y = trial % 4;
    const Vector g = m.input_gradient(x, y);
    const double h = 1e-5;
    for (int i = 0; i < dim; ++i) {
      Vector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (m.loss(xp, y) - m.loss(xm, y)) / (2 * h);
      CHECK(g(i) == doctest::Approx(fd).epsilon(1e-5).scale(1e-6));
    }
  }
}

TEST_CASE("constructor rejects bad shapes and non-finite parameters") {
  const Classifier good = Classifier::random({3, 2}, 1);
  CHECK_THROWS(Classifier({3}, {}, {}));
  CHECK_THROWS(Classifier({3, 2}, {Eigen::MatrixXd::Zero(2, 4)}, {Vector::Zero(2)}));
  CHECK_THROWS(Classifier({3, 2}, good.weights(), {Vector::Zero(3)}));
  auto w = good.weights();
  w[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(Classifier({3, 2}, w, good.biases()));
  CHECK_THROWS(Classifier::zeros({3, 0, 2}));
  CHECK_THROWS(good.forward(Vector::Zero(4)));
  CHECK_THROWS(good.loss(Vector::Zero(3), 2));
}

TEST_CASE("training separates 2D blobs and is deterministic") {
  const Dataset data = gaussian_blobs(2, 2, 200, 6.0, 0.5, 17);
  const TrainOptions opts{20, 0.1, 16, 4};
  const TrainReport a = train_sgd(Classifier::random({2, 8, 2}, 1), data, opts);
  const TrainReport b = train_sgd(Classifier::random({2, 8, 2}, 1), data, opts);
  CHECK(a.train_accuracy >= 0.99);
  CHECK(accuracy(a.model, data) == a.train_accuracy);
  CHECK(a.model == b.model);
  CHECK(a.final_loss == b.final_loss);
}

TEST_CASE("zero epochs leaves the weights untouched") {
  const Dataset data = gaussian_blobs(3, 2, 10, 3.0, 1.0, 2);
  const Classifier init = Classifier::random({3, 4, 2}, 8);
  CHECK(train_sgd(init, data, {0, 0.1, 4, 0}).model == init);
}

TEST_CASE("training reports divergence") {
  const Dataset data = gaussian_blobs(4, 2, 20, 3.0, 1.0, 2);
  CHECK_THROWS_AS(train_sgd(Classifier::random({4, 8, 2}, 1), data, {5, 1e300, 4, 0}), DivergenceError);
}

TEST_CASE("save then load reproduces every bit") {
  Classifier m = random_with_bias({5, 3, 2}, 21);
  auto w = m.weights();
  w[0](0, 0) = 4.9e-324;
  w[0](1, 1) = -0.1;
  w[1](0, 2) = 1.0 / 3.0;
  m = Classifier(m.layer_dims(), w, m.biases());
  std::stringstream s;
  save_classifier(m, s);
  const std::string first = s.str();
  const Classifier back = load_classifier(s);
  CHECK(back == m);
  std::stringstream again;
  save_classifier(back, again);
  CHECK(again.str() == first);
}

TEST_CASE("loading a malformed file throws") {
  std::stringstream bad1("not a model\n");
  CHECK_THROWS(load_classifier(bad1));
  std::stringstream s;
  save_classifier(Classifier::zeros({2, 2}), s);
  std::string text = s.str();
  std::stringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS(load_classifier(truncated));
}
