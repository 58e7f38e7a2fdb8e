#pragma once

#include <functional>
#include <optional>
#include <string_view>

#include "dirrisk/attacks.hpp"

namespace dirrisk {

/// Directional-noise attack configuration. `base.p` is the budget-ball norm;
/// `sample_norm` (defaults to base.p) is the norm of the sphere that the
/// directional samples are projected onto.
struct DnConfig {
  AttackConfig base;
  double kappa_adv = 100.0;
  std::optional<Norm> sample_norm;

  Norm sampling_norm() const { return sample_norm.value_or(base.p); }
  void validate() const;
};

/// Receives the name of each primitive operation as the attack performs it.
using DnTracer = std::function<void(std::string_view)>;

/// Directional noisy attack.
///
///   x_adv <- x, g <- 0
///   for t = 1..T:
///     gbar <- 0
///     for i = 1..N:
///       t = 1: eta ~ uniform in B_p(0, eps)
///       t > 1: delta <- x_adv - x, v <- delta/||delta||_2,
///              xi ~ N(kappa_adv v, I), eta <- project_sphere(xi, ||delta||_q)
///       gbar <- gbar + grad L(f(clip(x + eta)), y)
///     g <- mu g + normalize_p(gbar)
///     x_adv <- clip(Proj_{B_p(x, eps)}(x_adv + alpha g))
///
/// Draw i of iteration t uses stream.child(t).child(i), so variants that differ
/// only in kappa_adv see identical random streams. If delta is exactly zero at
/// t > 1 the iteration falls back to the uniform-ball branch.
AttackResult dn_attack(const Classifier& model, const Vector& x, int y, const DnConfig& cfg, RngStream stream,
                       const DnTracer& trace = {}, const IterateObserver& observe = {});

/// Mean of grad L(f(clip(x + eta)), y) over N directional draws around
/// delta / ||delta||_2 at sphere radius ||delta||_p. Draw i uses
/// stream.child(i). Rejects delta = 0.
Vector dn_gradient(const Classifier& model, const Vector& x, const Vector& delta, int y, double kappa_adv, Norm p,
                   int draws, RngStream stream, const Domain& domain = std::nullopt);

/// One directional draw: project_sphere(N(kappa v, I), ||delta||_p) with
/// v = delta / ||delta||_2.
Vector directional_perturbation(const Vector& delta, double kappa, Norm p, Rng& rng);

}  // namespace dirrisk
