#include "dirrisk/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dirrisk {

double norm(const Vector& v, Norm p) {
  if (v.size() == 0) return 0.0;
  return p == Norm::L2 ? v.norm() : v.cwiseAbs().maxCoeff();
}

void PerturbationSpec::validate() const {
  if (!std::isfinite(radius) || radius <= 0.0) {
    throw std::invalid_argument("perturbation radius must be finite and positive");
  }
}

void DirectionalDistribution::validate() const {
  if (v.size() == 0 || !v.allFinite() || std::abs(v.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("direction v must be a finite unit vector");
  }
  if (!std::isfinite(kappa) || kappa < 0.0) {
    throw std::invalid_argument("concentration kappa must be finite and nonnegative");
  }
}

Vector sample_gaussian(int dim, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  Vector z(dim);
  for (int i = 0; i < dim; ++i) z[i] = rng.gaussian();
  return z;
}

Vector sample_directional(const DirectionalDistribution& dist, Rng& rng) {
  Vector xi = sample_gaussian(static_cast<int>(dist.v.size()), rng);
  if (dist.kappa != 0.0) xi += dist.kappa * dist.v;
  return xi;
}

Vector project_sphere(const Vector& xi, const PerturbationSpec& spec) {
  spec.validate();
  const double n = norm(xi, spec.p);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::domain_error("cannot project a zero or non-finite vector onto a sphere");
  }
  return xi * (spec.radius / n);
}

Vector sample_ball_uniform(const PerturbationSpec& spec, int dim, Rng& rng) {
  spec.validate();
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  if (spec.p == Norm::Linf) {
    Vector eta(dim);
    for (int i = 0; i < dim; ++i) eta[i] = spec.radius * (2.0 * rng.uniform() - 1.0);
    return eta;
  }
  Vector dir = sample_gaussian(dim, rng);
  const double n = dir.norm();
  if (n == 0.0) return Vector::Zero(dim);
  const double radius = spec.radius * std::pow(rng.uniform(), 1.0 / dim);
  return dir * (radius / n);
}

Vector project_ball(const Vector& delta, Norm p, double epsilon) {
  if (p == Norm::Linf) return delta.cwiseMax(-epsilon).cwiseMin(epsilon);
  const double n = delta.norm();
  if (n <= epsilon) return delta;
  return delta * (epsilon / n);
}

Vector clip_box(const Vector& x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clip_box requires lo <= hi");
  return x.cwiseMax(lo).cwiseMin(hi);
}

Vector normalize_p(const Vector& g, Norm p) {
  if (p == Norm::Linf) return g.array().sign().matrix();
  const double n = g.norm();
  if (n == 0.0) return Vector::Zero(g.size());
  return g / n;
}

double expected_cosine(double kappa, int dim) {
  if (kappa < 0.0 || dim < 1) throw std::invalid_argument("expected_cosine needs kappa >= 0, dim >= 1");
  return kappa / std::sqrt(dim + kappa * kappa);
}

double kappa_star(int dim) {
  if (dim < 1) throw std::invalid_argument("kappa_star needs dim >= 1");
  return std::pow(static_cast<double>(dim), 0.25);
}

}  // namespace dirrisk
