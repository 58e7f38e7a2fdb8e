#include "dirrisk/dnattack.hpp"

#include <cmath>
#include <stdexcept>

namespace dirrisk {

void DnConfig::validate() const {
  base.validate();
  if (!std::isfinite(kappa_adv) || kappa_adv < 0.0) throw std::invalid_argument("kappa_adv must be finite and >= 0");
}

Vector directional_perturbation(const Vector& delta, double kappa, Norm p, Rng& rng) {
  const double length = delta.norm();
  if (!(length > 0.0)) throw std::invalid_argument("directional perturbation needs a nonzero delta");
  const Vector xi = sample_directional({delta / length, kappa}, rng);
  return project_sphere(xi, {p, norm(delta, p)});
}

Vector dn_gradient(const Classifier& model, const Vector& x, const Vector& delta, int y, double kappa_adv, Norm p,
                   int draws, RngStream stream, const Domain& domain) {
  if (draws < 1) throw std::invalid_argument("dn_gradient needs at least one draw");
  if (delta.isZero(0.0)) throw std::invalid_argument("dn_gradient needs a nonzero delta");
  Vector sum = Vector::Zero(x.size());
  for (int i = 0; i < draws; ++i) {
    Rng rng(stream.child(static_cast<std::uint64_t>(i)));
    sum += model.input_gradient(clip_domain(x + directional_perturbation(delta, kappa_adv, p, rng), domain), y);
  }
  return sum / static_cast<double>(draws);
}

AttackResult dn_attack(const Classifier& model, const Vector& x, int y, const DnConfig& cfg, RngStream stream,
                       const DnTracer& trace, const IterateObserver& observe) {
  cfg.validate();
  const AttackConfig& base = cfg.base;
  const int dim = static_cast<int>(x.size());
  const auto emit = [&trace](std::string_view op) {
    if (trace) trace(op);
  };

  Vector x_adv = x;
  Vector g = Vector::Zero(dim);
  emit("init");
  bool zero_gradient = false;

  for (int t = 1; t <= base.steps; ++t) {
    emit("iteration");
    const RngStream step_stream = stream.child(static_cast<std::uint64_t>(t));
    Vector gbar = Vector::Zero(dim);
    emit("reset_gbar");
    for (int i = 1; i <= base.inner_samples; ++i) {
      Rng rng(step_stream.child(static_cast<std::uint64_t>(i)));
      Vector eta;
      const Vector delta = x_adv - x;
      if (t == 1 || delta.isZero(0.0)) {
        eta = sample_ball_uniform({base.p, base.epsilon}, dim, rng);
        emit("sample_ball");
      } else {
        emit("delta");
        const Vector v = delta / delta.norm();
        emit("direction");
        const Vector xi = sample_directional({v, cfg.kappa_adv}, rng);
        emit("sample_directional");
        eta = project_sphere(xi, {cfg.sampling_norm(), norm(delta, cfg.sampling_norm())});
        emit("project_sphere");
      }
      const Vector x_i = clip_domain(x + eta, base.domain);
      emit("clip_input");
      gbar += model.input_gradient(x_i, y);
      emit("accumulate_gradient");
    }
    zero_gradient = zero_gradient || gbar.isZero(0.0);
    g = base.momentum * g + normalize_p(gbar, base.p);
    emit("momentum");
    x_adv = x + project_ball(x_adv + base.step_size * g - x, base.p, base.epsilon);
    emit("project_ball");
    x_adv = clip_domain(x_adv, base.domain);
    emit("clip_adv");
    if (observe) observe(t - 1, x_adv);
  }
  emit("return");
  return finish_attack(model, x, y, x_adv, zero_gradient);
}

}  // namespace dirrisk
