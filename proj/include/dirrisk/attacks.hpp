#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "dirrisk/diffnet.hpp"
#include "dirrisk/sphere.hpp"

namespace dirrisk {

struct AttackConfig {
  Norm p = Norm::Linf;
  double epsilon = 8.0 / 255.0;
  int steps = 10;
  double step_size = 0.8 / 255.0;
  double momentum = 1.0;
  int inner_samples = 10;
  std::uint64_t seed = 0;
  Domain domain;
  /// Radius of the uniform ball noise used by pgn_simplified; epsilon if unset.
  std::optional<double> noise_radius;

  void validate() const;
};

struct AttackResult {
  Vector delta;
  bool success = false;
  double final_loss = 0.0;
  /// Set when the attack met an exactly zero gradient and could not move.
  bool zero_gradient = false;
};

/// Called with (0-based step index, current x_adv) after every update.
using IterateObserver = std::function<void(int, const Vector&)>;

AttackResult fgsm(const Classifier& model, const Vector& x, int y, const AttackConfig& cfg);

/// Steepest ascent without random start:
/// x <- clip(Proj_ball(x + alpha * normalize_p(grad))), `steps` times.
AttackResult pgd(const Classifier& model, const Vector& x, int y, const AttackConfig& cfg,
                 const IterateObserver& observe = {});

/// Momentum iterative FGSM: g <- mu g + grad / ||grad||_1, step alpha * normalize_p(g).
AttackResult mi_fgsm(const Classifier& model, const Vector& x, int y, const AttackConfig& cfg,
                     const IterateObserver& observe = {});

/// Mean input gradient at `draws` points clip(point + eta_i), eta_i uniform in
/// the radius-`radius` l_p ball (eta_i = 0 when radius is 0). Draw i uses
/// stream.child(i); summation runs in index order.
Vector averaged_noisy_gradient(const Classifier& model, const Vector& point, int y, Norm p, double radius,
                               int draws, const Domain& domain, RngStream stream);

/// Noise-injected momentum attack: each step averages gradients over
/// inner_samples uniform-ball neighbours of the iterate, then updates as
/// mi_fgsm. Omits the Hessian/lookahead penalty of the full PGN method.
AttackResult pgn_simplified(const Classifier& model, const Vector& x, int y, const AttackConfig& cfg,
                            RngStream stream, const IterateObserver& observe = {});

/// predict(x + delta) != y. Rejects delta outside the l_p ball of radius epsilon.
bool attack_success(const Classifier& model, const Vector& x, int y, const Vector& delta, Norm p, double epsilon);

/// Fraction of successful results. Throws on an empty list.
double asr(std::span<const AttackResult> results);

/// One JSON-lines record of an attack outcome.
std::string attack_record_json(std::size_t sample_id, const std::string& attack, Norm p, double epsilon,
                               const AttackResult& result);

/// Shared tail of every attack: package delta, success and final loss.
AttackResult finish_attack(const Classifier& model, const Vector& x, int y, const Vector& x_adv,
                           bool zero_gradient);

}  // namespace dirrisk
