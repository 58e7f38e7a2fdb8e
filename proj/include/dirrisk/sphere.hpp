#pragma once

#include "dirrisk/rng.hpp"
#include "dirrisk/types.hpp"

namespace dirrisk {

double norm(const Vector& v, Norm p);

/// Norm order plus a sphere radius or ball budget.
struct PerturbationSpec {
  Norm p = Norm::L2;
  double radius = 1.0;

  void validate() const;
};

/// Law of xi ~ N(kappa * v, I): a Gaussian shifted along the unit direction v.
struct DirectionalDistribution {
  Vector v;
  double kappa = 0.0;

  void validate() const;
};

Vector sample_gaussian(int dim, Rng& rng);

/// Returns kappa * v + z with z standard normal. The z coordinates are drawn
/// exactly as sample_gaussian draws them, so kappa = 0 reproduces it.
Vector sample_directional(const DirectionalDistribution& dist, Rng& rng);

/// Radial rescaling r * xi / ||xi||_p onto the l_p sphere of radius r.
/// Direction is preserved; this is not the nearest-point projection.
/// Throws std::domain_error for xi = 0.
Vector project_sphere(const Vector& xi, const PerturbationSpec& spec);

/// l_inf: i.i.d. uniform coordinates in [-eps, eps].
/// l_2: uniform direction times eps * U^(1/dim).
Vector sample_ball_uniform(const PerturbationSpec& spec, int dim, Rng& rng);

/// Nearest-point projection onto the closed l_p ball of radius eps.
Vector project_ball(const Vector& delta, Norm p, double epsilon);

Vector clip_box(const Vector& x, double lo, double hi);
inline Vector clip_box(const Vector& x, const Box& box) { return clip_box(x, box.lo, box.hi); }
/// Identity when no domain is configured.
inline Vector clip_domain(const Vector& x, const Domain& domain) {
  return domain ? clip_box(x, *domain) : x;
}

/// Steepest-ascent direction for a norm: sign(g) for l_inf, g/||g||_2 for l_2.
/// A zero vector maps to zero.
Vector normalize_p(const Vector& g, Norm p);

/// Approximate E[cos(xi, v)] for xi ~ N(kappa v, I_dim): kappa / sqrt(dim + kappa^2).
double expected_cosine(double kappa, int dim);

/// Reference concentration dim^(1/4).
double kappa_star(int dim);

}  // namespace dirrisk
