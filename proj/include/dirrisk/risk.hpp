#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dirrisk/diffnet.hpp"
#include "dirrisk/sphere.hpp"

namespace dirrisk {

/// Anything that maps an input to a class index. Must be safe to call
/// concurrently.
using Predictor = std::function<int(const Vector&)>;

/// Borrows the model; the classifier must outlive the predictor.
Predictor predictor_of(const Classifier& model);

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ99 = 2.5758293035489004;

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(long successes, long n, double z = kZ95);

/// Monte-Carlo estimate of a misclassification probability.
struct RiskEstimate {
  long n = 0;
  long failures = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;

  static RiskEstimate from_counts(long failures, long n);
};

/// Directional perturbation risk Pr[predict(x + eta) != y] with
/// eta = project_sphere(xi, spec), xi ~ N(kappa v, I).
///
/// Draw i uses Rng(stream.child(i)), so the result is bit-identical for any
/// worker count and draws are shared across kappa values (common random
/// numbers). With a domain, x + eta is clipped into the box before predicting.
RiskEstimate estimate_risk(const Predictor& predict, const Vector& x, int y, const Vector& v, double kappa,
                           const PerturbationSpec& spec, long n, const Domain& domain, RngStream stream,
                           int workers = 1);

/// kappa -> infinity limit: 1 if x + project_sphere(v, spec) is misclassified.
int risk_at_infinity(const Predictor& predict, const Vector& x, int y, const Vector& v,
                     const PerturbationSpec& spec, const Domain& domain = std::nullopt);

/// Direction and sphere radius at which one sample's risk is evaluated.
struct Probe {
  Vector v;
  double radius = 0.0;
};

struct RiskCurve {
  std::vector<double> kappas;
  std::vector<double> values;   // mean risk over samples
  std::vector<double> ci_low;   // Wilson 95% on the pooled counts
  std::vector<double> ci_high;
  std::vector<std::vector<double>> per_sample;  // [sample][kappa]
};

/// Mean risk over samples at each kappa. Sample s draws from stream.child(s).
RiskCurve risk_curve(const Predictor& predict, const Dataset& samples, const std::vector<Probe>& probes,
                     const std::vector<double>& kappas, Norm p, long n, const Domain& domain,
                     RngStream stream, int workers = 1);

/// Integers 0..300.
std::vector<double> default_kappa_grid();

/// First grid value whose mean risk reaches the threshold, scanning upward
/// without assuming monotonicity. nullopt means "not reached".
std::optional<double> kappa_at_threshold(const std::function<double(double)>& mean_risk_at,
                                         const std::vector<double>& grid, double threshold = 0.25);
std::optional<double> kappa_at_threshold(const RiskCurve& curve, double threshold = 0.25);

/// True iff any of T uniform radius-eps sphere perturbations flips the
/// prediction. Draw t uses stream.child(t); stops at the first flip.
bool mc_error_search(const Predictor& predict, const Vector& x, int y, const PerturbationSpec& spec, long trials,
                     const Domain& domain, RngStream stream);

/// CSV columns: kappa,mean_risk,ci_low,ci_high. Lines starting with '#' are
/// comments (written from `comment`, skipped on read).
void write_curve_csv(std::ostream& out, const RiskCurve& curve, const std::string& comment = {});
RiskCurve read_curve_csv(std::istream& in);
std::string curve_to_json(const RiskCurve& curve);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace dirrisk
