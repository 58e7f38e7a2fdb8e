#include "dirrisk/attacks.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dirrisk {

void AttackConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("attack epsilon must be positive");
  if (steps < 1) throw std::invalid_argument("attack steps must be >= 1");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw std::invalid_argument("step size must be positive");
  if (!(momentum >= 0.0) || !std::isfinite(momentum)) throw std::invalid_argument("momentum must be >= 0");
  if (inner_samples < 1) throw std::invalid_argument("inner_samples must be >= 1");
  if (noise_radius && !(*noise_radius >= 0.0)) throw std::invalid_argument("noise radius must be >= 0");
  if (domain && domain->lo > domain->hi) throw std::invalid_argument("domain box needs lo <= hi");
}

AttackResult finish_attack(const Classifier& model, const Vector& x, int y, const Vector& x_adv,
                           bool zero_gradient) {
  AttackResult r;
  r.delta = x_adv - x;
  r.success = model.predict(x_adv) != y;
  r.final_loss = model.loss(x_adv, y);
  r.zero_gradient = zero_gradient;
  return r;
}

namespace {

// Ball projection around x followed by the domain clip.
Vector project_step(const Vector& x, const Vector& candidate, const AttackConfig& cfg) {
  return clip_domain(x + project_ball(candidate - x, cfg.p, cfg.epsilon), cfg.domain);
}

Vector l1_normalized(const Vector& g) {
  const double n = g.lpNorm<1>();
  return n == 0.0 ? Vector(Vector::Zero(g.size())) : Vector(g / n);
}

}  // namespace

AttackResult fgsm(const Classifier& model, const Vector& x, int y, const AttackConfig& cfg) {
  cfg.validate();
  const Vector g = model.input_gradient(x, y);
  if (g.isZero(0.0)) {
    AttackResult r = finish_attack(model, x, y, x, true);
    r.success = false;
    return r;
  }
  const Vector x_adv = clip_domain(x + cfg.epsilon * normalize_p(g, cfg.p), cfg.domain);
  return finish_attack(model, x, y, x_adv, false);
}

AttackResult pgd(const Classifier& model, const Vector& x, int y, const AttackConfig& cfg,
                 const IterateObserver& observe) {
  cfg.validate();
  Vector x_adv = x;
  bool zero_gradient = false;
  for (int t = 0; t < cfg.steps; ++t) {
    const Vector g = model.input_gradient(x_adv, y);
    zero_gradient = zero_gradient || g.isZero(0.0);
    x_adv = project_step(x, x_adv + cfg.step_size * normalize_p(g, cfg.p), cfg);
    if (observe) observe(t, x_adv);
  }
  return finish_attack(model, x, y, x_adv, zero_gradient);
}

AttackResult mi_fgsm(const Classifier& model, const Vector& x, int y, const AttackConfig& cfg,
                     const IterateObserver& observe) {
  cfg.validate();
  Vector x_adv = x;
  Vector accum = Vector::Zero(x.size());
  bool zero_gradient = false;
  for (int t = 0; t < cfg.steps; ++t) {
    const Vector g = model.input_gradient(x_adv, y);
    zero_gradient = zero_gradient || g.isZero(0.0);
    accum = cfg.momentum * accum + l1_normalized(g);
    x_adv = project_step(x, x_adv + cfg.step_size * normalize_p(accum, cfg.p), cfg);
    if (observe) observe(t, x_adv);
  }
  return finish_attack(model, x, y, x_adv, zero_gradient);
}

Vector averaged_noisy_gradient(const Classifier& model, const Vector& point, int y, Norm p, double radius,
                               int draws, const Domain& domain, RngStream stream) {
  if (draws < 1) throw std::invalid_argument("need at least one draw");
  Vector sum = Vector::Zero(point.size());
  for (int i = 0; i < draws; ++i) {
    Vector probe = point;
    if (radius > 0.0) {
      Rng rng(stream.child(static_cast<std::uint64_t>(i)));
      probe += sample_ball_uniform({p, radius}, static_cast<int>(point.size()), rng);
    }
    sum += model.input_gradient(clip_domain(probe, domain), y);
  }
  return sum / static_cast<double>(draws);
}

AttackResult pgn_simplified(const Classifier& model, const Vector& x, int y, const AttackConfig& cfg,
                            RngStream stream, const IterateObserver& observe) {
  cfg.validate();
  const double radius = cfg.noise_radius.value_or(cfg.epsilon);
  Vector x_adv = x;
  Vector accum = Vector::Zero(x.size());
  bool zero_gradient = false;
  for (int t = 0; t < cfg.steps; ++t) {
    const Vector g = averaged_noisy_gradient(model, x_adv, y, cfg.p, radius, cfg.inner_samples, cfg.domain,
                                             stream.child(static_cast<std::uint64_t>(t)));
    zero_gradient = zero_gradient || g.isZero(0.0);
    accum = cfg.momentum * accum + l1_normalized(g);
    x_adv = project_step(x, x_adv + cfg.step_size * normalize_p(accum, cfg.p), cfg);
    if (observe) observe(t, x_adv);
  }
  return finish_attack(model, x, y, x_adv, zero_gradient);
}

bool attack_success(const Classifier& model, const Vector& x, int y, const Vector& delta, Norm p, double epsilon) {
  if (norm(delta, p) > epsilon * (1.0 + 1e-9)) throw std::invalid_argument("perturbation exceeds the budget");
  return model.predict(x + delta) != y;
}

double asr(std::span<const AttackResult> results) {
  if (results.empty()) throw std::invalid_argument("asr of an empty result list");
  std::size_t hits = 0;
  for (const auto& r : results) hits += r.success ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

std::string attack_record_json(std::size_t sample_id, const std::string& attack, Norm p, double epsilon,
                               const AttackResult& result) {
  nlohmann::ordered_json j;
  j["sample_id"] = sample_id;
  j["attack"] = attack;
  j["p"] = to_string(p);
  j["epsilon"] = epsilon;
  j["success"] = result.success;
  j["delta_norm"] = norm(result.delta, p);
  j["final_loss"] = result.final_loss;
  return j.dump();
}

}  // namespace dirrisk
