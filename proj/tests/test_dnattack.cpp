#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dirrisk/dnattack.hpp"
#include "dirrisk/rng.hpp"
#include "dirrisk/sphere.hpp"

using namespace dirrisk;

namespace {

DnConfig dn_config(Norm p, double eps, int steps, int draws, double kappa_adv) {
  DnConfig c;
  c.base.p = p;
  c.base.epsilon = eps;
  c.base.steps = steps;
  c.base.step_size = eps / steps;
  c.base.inner_samples = draws;
  c.kappa_adv = kappa_adv;
  return c;
}

Vector point(int dim, std::uint64_t seed) {
  Rng rng({seed, 0});
  Vector x(dim);
  for (int i = 0; i < dim; ++i) x(i) = rng.uniform();
  return x;
}

}  // namespace

TEST_CASE("operation trace for T = 3, N = 2") {
  const Classifier m = Classifier::random({6, 8, 3}, 2);
  const Vector x = point(6, 1);
  std::vector<std::string> ops;
  dn_attack(m, x, m.predict(x), dn_config(Norm::Linf, 0.1, 3, 2, 5.0), {1, 1},
            [&](std::string_view op) { ops.emplace_back(op); });
  std::vector<std::string> expected{"init"};
  for (int t = 1; t <= 3; ++t) {
    expected.insert(expected.end(), {"iteration", "reset_gbar"});
    for (int i = 0; i < 2; ++i) {
      if (t == 1) {
        expected.push_back("sample_ball");
      } else {
        expected.insert(expected.end(), {"delta", "direction", "sample_directional", "project_sphere"});
      }
      expected.insert(expected.end(), {"clip_input", "accumulate_gradient"});
    }
    expected.insert(expected.end(), {"momentum", "project_ball", "clip_adv"});
  }
  expected.push_back("return");
  CHECK(ops == expected);
}

TEST_CASE("configuration validation") {
  CHECK_NOTHROW(dn_config(Norm::L2, 1.0, 2, 2, 0.0).validate());
  CHECK_THROWS(dn_config(Norm::L2, 1.0, 2, 2, -1.0).validate());
  CHECK_THROWS(dn_config(Norm::L2, 1.0, 2, 2, INFINITY).validate());
  CHECK_THROWS(dn_config(Norm::L2, 0.0, 2, 2, 1.0).validate());
}

TEST_CASE("iterates stay in the ball and domain") {
  const Classifier m = Classifier::random({8, 16, 3}, 5);
  for (Norm p : {Norm::L2, Norm::Linf}) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Vector x = point(8, s);
      DnConfig c = dn_config(p, 0.25, 6, 3, 4.0);
      c.base.domain = Box{0.0, 1.0};
      const AttackResult r = dn_attack(m, x, m.predict(x), c, {s, 3}, {}, [&](int, const Vector& xa) {
        CHECK(norm(xa - x, p) <= 0.25 * (1 + 1e-12));
        CHECK(xa.minCoeff() >= 0.0);
        CHECK(xa.maxCoeff() <= 1.0);
      });
      CHECK(norm(r.delta, p) <= 0.25 * (1 + 1e-12));
    }
  }
}

TEST_CASE("identical config and stream give identical results") {
  const Classifier m = Classifier::random({8, 16, 3}, 5);
  const Vector x = point(8, 4);
  const DnConfig c = dn_config(Norm::L2, 0.5, 5, 4, 10.0);
  CHECK(dn_attack(m, x, 0, c, {9, 9}).delta == dn_attack(m, x, 0, c, {9, 9}).delta);
  CHECK_FALSE(dn_attack(m, x, 0, c, {9, 9}).delta == dn_attack(m, x, 0, c, {9, 10}).delta);
}

TEST_CASE("variants differing only in kappa_adv share the first iterate") {
  const Classifier m = Classifier::random({8, 16, 3}, 5);
  const Vector x = point(8, 4);
  std::vector<Vector> first;
  for (double k : {0.0, 10.0, 1e4}) {
    dn_attack(m, x, 0, dn_config(Norm::L2, 0.5, 5, 4, k), {9, 9}, {}, [&](int t, const Vector& xa) {
      if (t == 0) first.push_back(xa);
    });
  }
  REQUIRE(first.size() == 3);
  CHECK(first[0] == first[1]);
  CHECK(first[1] == first[2]);
}

TEST_CASE("directional perturbation lies on the sphere of radius ||delta||_p") {
  Rng rng({1, 2});
  const Vector delta = 0.3 * point(10, 3) - Vector::Constant(10, 0.1);
  for (Norm p : {Norm::L2, Norm::Linf}) {
    for (double k : {0.0, 3.0, 1e6}) {
      const Vector eta = directional_perturbation(delta, k, p, rng);
      CHECK(norm(eta, p) == doctest::Approx(norm(delta, p)).epsilon(1e-12));
    }
  }
  // Huge concentration collapses onto delta itself.
  const Vector eta = directional_perturbation(delta, 1e12, Norm::L2, rng);
  CHECK((eta - delta).norm() < 1e-9);
}

TEST_CASE("dn gradient tends to the gradient at x + delta as kappa grows") {
  const Classifier m = Classifier::random({6, 12, 3}, 8);
  const Vector x = point(6, 2);
  const Vector delta = 0.05 * (point(6, 3) - Vector::Constant(6, 0.5));
  const Vector g = dn_gradient(m, x, delta, 1, 1e12, Norm::L2, 5, {4, 4});
  CHECK((g - m.input_gradient(x + delta, 1)).norm() < 1e-8 * (1 + g.norm()));
  CHECK_THROWS(dn_gradient(m, x, Vector::Zero(6), 1, 1.0, Norm::L2, 5, {4, 4}));
}

TEST_CASE("sampling norm can differ from the budget norm") {
  const Classifier m = Classifier::random({6, 12, 3}, 8);
  const Vector x = point(6, 2);
  DnConfig c = dn_config(Norm::Linf, 0.1, 4, 2, 3.0);
  CHECK(c.sampling_norm() == Norm::Linf);
  c.sample_norm = Norm::L2;
  CHECK(c.sampling_norm() == Norm::L2);
  const AttackResult r = dn_attack(m, x, 0, c, {1, 1});
  CHECK(r.delta.cwiseAbs().maxCoeff() <= 0.1 * (1 + 1e-12));
}
