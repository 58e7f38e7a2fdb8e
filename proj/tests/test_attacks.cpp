#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dirrisk/attacks.hpp"
#include "dirrisk/rng.hpp"
#include "dirrisk/sphere.hpp"

using namespace dirrisk;

namespace {

// Two-class linear model with logit difference w . x.
Classifier linear_binary(const Vector& w) {
  Eigen::MatrixXd W(2, w.size());
  W.row(0) = Vector::Zero(w.size()).transpose();
  W.row(1) = w.transpose();
  return Classifier({static_cast<int>(w.size()), 2}, {W}, {Vector::Zero(2)});
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(xs.size());
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

AttackConfig config(Norm p, double eps, int steps, double alpha) {
  AttackConfig c;
  c.p = p;
  c.epsilon = eps;
  c.steps = steps;
  c.step_size = alpha;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(AttackConfig{}.validate());
  CHECK_THROWS(config(Norm::L2, 0.0, 1, 0.1).validate());
  CHECK_THROWS(config(Norm::L2, 1.0, 0, 0.1).validate());
  CHECK_THROWS(config(Norm::L2, 1.0, 1, -0.1).validate());
  AttackConfig c = config(Norm::L2, 1.0, 1, 0.1);
  c.momentum = -1;
  CHECK_THROWS(c.validate());
  c = config(Norm::L2, 1.0, 1, 0.1);
  c.inner_samples = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("FGSM on a linear model is the closed-form corner") {
  // Class 0 sample: the loss gradient points along +w.
  const Vector w = vec({2.0, -1.0, 0.5});
  const Classifier m = linear_binary(w);
  const Vector x = vec({-0.2, 0.1, 0.0});
  const AttackResult r = fgsm(m, x, 0, config(Norm::Linf, 0.1, 1, 0.1));
  CHECK(r.delta == vec({0.1, -0.1, 0.1}));
  const AttackResult r2 = fgsm(m, x, 0, config(Norm::L2, 0.1, 1, 0.1));
  CHECK((r2.delta - 0.1 * w.normalized()).norm() < 1e-15);
  CHECK(r.final_loss == doctest::Approx(m.loss(x + r.delta, 0)));
}

TEST_CASE("PGD reaches the boundary direction on a linear model") {
  const Vector w = vec({1.0, 1.0});
  const Classifier m = linear_binary(w);
  const Vector x = vec({-1.0, -1.0});
  const AttackResult r = pgd(m, x, 0, config(Norm::L2, 3.0, 20, 0.5));
  CHECK(r.delta.norm() == doctest::Approx(3.0));
  CHECK((r.delta.normalized() - w.normalized()).norm() < 1e-12);
  CHECK(r.success);
}

TEST_CASE("iterates stay in the ball and the domain") {
  const Classifier m = Classifier::random({6, 12, 3}, 4);
  Rng rng({1, 0});
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(6);
    for (int i = 0; i < 6; ++i) x(i) = rng.uniform();
    const int y = m.predict(x);
    for (Norm p : {Norm::L2, Norm::Linf}) {
      AttackConfig c = config(p, 0.3, 8, 0.1);
      c.domain = Box{0.0, 1.0};
      c.inner_samples = 3;
      auto check = [&](int, const Vector& xa) {
        CHECK(norm(xa - x, p) <= 0.3 * (1 + 1e-12));
        CHECK(xa.minCoeff() >= 0.0);
        CHECK(xa.maxCoeff() <= 1.0);
      };
      pgd(m, x, y, c, check);
      mi_fgsm(m, x, y, c, check);
      pgn_simplified(m, x, y, c, {7, 7}, check);
    }
  }
}

TEST_CASE("MI-FGSM without momentum matches PGD under l_inf") {
  const Classifier m = Classifier::random({5, 10, 3}, 9);
  const Vector x = vec({0.1, -0.4, 0.3, 0.9, -1.0});
  AttackConfig c = config(Norm::Linf, 0.2, 6, 0.05);
  c.momentum = 0.0;
  CHECK(mi_fgsm(m, x, m.predict(x), c).delta == pgd(m, x, m.predict(x), c).delta);
}

TEST_CASE("momentum accumulates l1-normalized gradients") {
  // Constant gradient: after t steps the accumulator is t * g / ||g||_1, so
  // the l_2 step direction never changes.
  const Vector w = vec({3.0, 4.0});
  const Classifier m = linear_binary(w);
  const Vector x = vec({-10.0, -10.0});
  std::vector<Vector> iterates;
  mi_fgsm(m, x, 0, config(Norm::L2, 100.0, 4, 1.0), [&](int, const Vector& xa) { iterates.push_back(xa); });
  REQUIRE(iterates.size() == 4);
  for (int t = 0; t < 4; ++t) CHECK((iterates[t] - x - (t + 1) * w.normalized()).norm() < 1e-12);
}

TEST_CASE("PGN without noise reduces to MI-FGSM") {
  const Classifier m = Classifier::random({5, 10, 3}, 9);
  const Vector x = vec({0.1, -0.4, 0.3, 0.9, -1.0});
  AttackConfig c = config(Norm::Linf, 0.2, 6, 0.05);
  c.noise_radius = 0.0;
  c.inner_samples = 3;
  CHECK(pgn_simplified(m, x, m.predict(x), c, {1, 1}).delta == mi_fgsm(m, x, m.predict(x), c).delta);
}

TEST_CASE("averaged noisy gradient is deterministic and averages") {
  const Classifier m = Classifier::random({4, 8, 2}, 3);
  const Vector x = vec({0.2, 0.2, -0.1, 0.5});
  const Vector a = averaged_noisy_gradient(m, x, 1, Norm::L2, 0.5, 8, std::nullopt, {2, 2});
  const Vector b = averaged_noisy_gradient(m, x, 1, Norm::L2, 0.5, 8, std::nullopt, {2, 2});
  CHECK(a == b);
  const Vector zero = averaged_noisy_gradient(m, x, 1, Norm::L2, 0.0, 8, std::nullopt, {2, 2});
  CHECK((zero - m.input_gradient(x, 1)).norm() < 1e-14);
}

TEST_CASE("zero gradient: attacks stay put and report it") {
  const Classifier m = Classifier::zeros({3, 4, 2});
  const Vector x = vec({0.5, 0.5, 0.5});
  for (const AttackResult& r : {fgsm(m, x, 0, config(Norm::Linf, 0.1, 1, 0.1)),
                                pgd(m, x, 0, config(Norm::Linf, 0.1, 5, 0.02)),
                                mi_fgsm(m, x, 0, config(Norm::L2, 0.1, 5, 0.02))}) {
    CHECK(r.delta.isZero());
    CHECK(r.zero_gradient);
    CHECK_FALSE(r.success);
  }
}

TEST_CASE("success check and ASR") {
  const Classifier m = linear_binary(vec({1.0, 0.0}));
  const Vector x = vec({-0.1, 0.0});
  CHECK(attack_success(m, x, 0, vec({0.2, 0.0}), Norm::L2, 0.2));
  CHECK_FALSE(attack_success(m, x, 0, vec({0.05, 0.0}), Norm::L2, 0.2));
  CHECK_THROWS(attack_success(m, x, 0, vec({0.3, 0.0}), Norm::L2, 0.2));
  std::vector<AttackResult> rs(4);
  rs[1].success = rs[3].success = true;
  CHECK(asr(rs) == 0.5);
  CHECK_THROWS(asr(std::span<const AttackResult>{}));
}

TEST_CASE("attacks are bit-reproducible") {
  const Classifier m = Classifier::random({5, 10, 3}, 9);
  const Vector x = vec({0.1, -0.4, 0.3, 0.9, -1.0});
  AttackConfig c = config(Norm::L2, 0.5, 5, 0.1);
  c.inner_samples = 4;
  CHECK(pgn_simplified(m, x, 0, c, {5, 0}).delta == pgn_simplified(m, x, 0, c, {5, 0}).delta);
  CHECK(pgd(m, x, 0, c).delta == pgd(m, x, 0, c).delta);
}

TEST_CASE("JSON record") {
  AttackResult r;
  r.delta = vec({0.3, 0.4});
  r.success = true;
  r.final_loss = 1.5;
  const std::string j = attack_record_json(12, "pgd20", Norm::L2, 0.5, r);
  CHECK(j == R"({"sample_id":12,"attack":"pgd20","p":"2","epsilon":0.5,"success":true,"delta_norm":0.5,"final_loss":1.5})");
}
