#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "dirrisk/rng.hpp"
#include "dirrisk/sphere.hpp"

using namespace dirrisk;

namespace {

Vector unit_axis(int dim, int k = 0) {
  Vector v = Vector::Zero(dim);
  v(k) = 1.0;
  return v;
}

// E[cos(xi, v)] for xi ~ N(kappa v, I_dim): xi . v = kappa + z with z ~ N(0,1)
// and the orthogonal part has squared norm Q ~ chi^2_{dim-1}.
double exact_mean_cosine(double kappa, int dim) {
  using boost::math::quadrature::gauss_kronrod;
  const boost::math::chi_squared chi(dim - 1);
  const double qlo = boost::math::quantile(chi, 1e-13);
  const double qhi = boost::math::quantile(chi, 1 - 1e-13);
  auto inner = [&](double z) {
    const double a = kappa + z;
    auto f = [&](double q) { return boost::math::pdf(chi, q) * a / std::sqrt(a * a + q); };
    return gauss_kronrod<double, 61>::integrate(f, qlo, qhi, 8, 1e-12);
  };
  auto outer = [&](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI) * inner(z); };
  return gauss_kronrod<double, 61>::integrate(outer, -9.0, 9.0, 8, 1e-12);
}

}  // namespace

TEST_CASE("norms") {
  Vector v(3);
  v << 3.0, -4.0, 0.0;
  CHECK(norm(v, Norm::L2) == 5.0);
  CHECK(norm(v, Norm::Linf) == 4.0);
}

TEST_CASE("spec validation") {
  CHECK_THROWS(PerturbationSpec{Norm::L2, 0.0}.validate());
  CHECK_THROWS(PerturbationSpec{Norm::L2, -1.0}.validate());
  CHECK_NOTHROW(PerturbationSpec{Norm::Linf, 0.5}.validate());
  CHECK_THROWS(DirectionalDistribution{Vector::Constant(2, 1.0), 1.0}.validate());
  CHECK_THROWS(DirectionalDistribution{unit_axis(2), -1.0}.validate());
  CHECK_NOTHROW(DirectionalDistribution{unit_axis(2), 0.0}.validate());
}

TEST_CASE("projection lands exactly on the sphere and keeps the direction") {
  Rng rng({1, 1});
  for (Norm p : {Norm::L2, Norm::Linf}) {
    for (int trial = 0; trial < 2000; ++trial) {
      const int dim = 1 + trial % 50;
      const double r = 1e-3 + 10.0 * rng.uniform();
      const Vector xi = sample_gaussian(dim, rng) * std::pow(10.0, 4 * rng.uniform() - 2);
      const Vector eta = project_sphere(xi, {p, r});
      CHECK(std::abs(norm(eta, p) - r) / r <= 1e-9);
      const double cos = eta.dot(xi) / (eta.norm() * xi.norm());
      CHECK(cos == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("projecting zero is an error") {
  CHECK_THROWS_AS(project_sphere(Vector::Zero(4), {Norm::L2, 1.0}), std::domain_error);
}

TEST_CASE("kappa = 0 reproduces the isotropic Gaussian draw exactly") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng a({s, 3}), b({s, 3});
    const Vector g = sample_gaussian(17, a);
    const Vector d = sample_directional({unit_axis(17, 4), 0.0}, b);
    CHECK(g == d);
  }
}

TEST_CASE("directional samples have mean kappa v") {
  Rng rng({8, 8});
  Vector v = Vector::Ones(5) / std::sqrt(5.0);
  Vector sum = Vector::Zero(5);
  const int n = 40000;
  for (int i = 0; i < n; ++i) sum += sample_directional({v, 3.0}, rng);
  sum /= n;
  CHECK((sum - 3.0 * v).cwiseAbs().maxCoeff() < 5.0 / std::sqrt(n));
}

TEST_CASE("uniform ball samples stay inside and fill the radius law") {
  Rng rng({2, 0});
  const int n = 40000;
  int inner_l2 = 0, inner_linf = 0;
  for (int i = 0; i < n; ++i) {
    const Vector a = sample_ball_uniform({Norm::L2, 2.0}, 2, rng);
    const Vector b = sample_ball_uniform({Norm::Linf, 2.0}, 3, rng);
    REQUIRE(a.norm() <= 2.0);
    REQUIRE(b.cwiseAbs().maxCoeff() <= 2.0);
    inner_l2 += a.norm() <= 1.0;
    inner_linf += b.cwiseAbs().maxCoeff() <= 1.0;
  }
  // Volume fractions of the half-radius ball: 1/4 in 2D, 1/8 for the cube.
  const double se2 = std::sqrt(0.25 * 0.75 / n), se3 = std::sqrt(0.125 * 0.875 / n);
  CHECK(std::abs(inner_l2 / double(n) - 0.25) < 4 * se2);
  CHECK(std::abs(inner_linf / double(n) - 0.125) < 4 * se3);
}

TEST_CASE("ball projection") {
  Vector d(2);
  d << 3.0, 4.0;
  CHECK(project_ball(d, Norm::L2, 10.0) == d);
  const Vector p = project_ball(d, Norm::L2, 1.0);
  CHECK(p(0) == doctest::Approx(0.6));
  CHECK(p(1) == doctest::Approx(0.8));
  const Vector q = project_ball(d, Norm::Linf, 3.5);
  CHECK(q(0) == 3.0);
  CHECK(q(1) == 3.5);
  Rng rng({4, 4});
  for (int i = 0; i < 200; ++i) {
    const Vector x = 3.0 * sample_gaussian(6, rng);
    for (Norm n : {Norm::L2, Norm::Linf}) {
      const Vector once = project_ball(x, n, 1.5);
      CHECK(norm(once, n) <= 1.5 * (1 + 1e-12));
      CHECK((project_ball(once, n, 1.5) - once).norm() <= 1e-12);
    }
  }
}

TEST_CASE("box clipping and optional domain") {
  Vector x(3);
  x << -0.5, 0.5, 1.5;
  const Vector c = clip_box(x, 0.0, 1.0);
  CHECK(c(0) == 0.0);
  CHECK(c(1) == 0.5);
  CHECK(c(2) == 1.0);
  CHECK(clip_domain(x, std::nullopt) == x);
  CHECK(clip_domain(x, Box{0.0, 1.0}) == c);
}

TEST_CASE("normalize_p") {
  Vector g(3);
  g << -2.0, 0.0, 0.5;
  const Vector s = normalize_p(g, Norm::Linf);
  CHECK(s(0) == -1.0);
  CHECK(s(1) == 0.0);
  CHECK(s(2) == 1.0);
  CHECK(normalize_p(g, Norm::L2).norm() == doctest::Approx(1.0));
  CHECK(normalize_p(Vector::Zero(3), Norm::L2).isZero());
  CHECK(normalize_p(Vector::Zero(3), Norm::Linf).isZero());
}

TEST_CASE("kappa star and the cosine approximation") {
  CHECK(kappa_star(16) == doctest::Approx(2.0));
  CHECK(kappa_star(3072) == doctest::Approx(7.4448).epsilon(1e-4));
  CHECK(expected_cosine(0.0, 100) == 0.0);
  CHECK(expected_cosine(10.0, 100) == doctest::Approx(1.0 / std::sqrt(2.0)));
  for (int dim : {16, 256, 3072}) {
    double last = -1;
    for (double k : {0.0, 1.0, 4.0, 16.0, 64.0}) {
      CHECK(expected_cosine(k, dim) > last);
      last = expected_cosine(k, dim);
    }
  }
}

TEST_CASE("empirical mean cosine matches the exact expectation") {
  // The closed form is an approximation; the sampler is checked against the
  // exact integral instead.
  Rng rng({6, 6});
  for (auto [dim, kappa] : {std::pair{16, 4.0}, std::pair{16, 2.0}, std::pair{256, 4.0}}) {
    const Vector v = unit_axis(dim);
    const int n = 40000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const Vector xi = sample_directional({v, kappa}, rng);
      const double c = xi(0) / xi.norm();
      s += c;
      s2 += c * c;
    }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    const double exact = exact_mean_cosine(kappa, dim);
    CHECK(std::abs(mean - exact) < 3.5 * se);
    CHECK(std::abs(expected_cosine(kappa, dim) - exact) < 0.05);
  }
}

TEST_CASE("exact cosine at kappa = sqrt(D) is above 1/sqrt(2) for small D") {
  const double exact16 = exact_mean_cosine(4.0, 16);
  CHECK(exact16 > 1.0 / std::sqrt(2.0) + 0.002);
  CHECK(exact_mean_cosine(0.0, 16) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}
