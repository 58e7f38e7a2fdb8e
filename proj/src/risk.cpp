#include "dirrisk/risk.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dirrisk/parallel.hpp"

namespace dirrisk {

Predictor predictor_of(const Classifier& model) {
  return [&model](const Vector& x) { return model.predict(x); };
}

Interval wilson_interval(long successes, long n, double z) {
  if (n <= 0 || successes < 0 || successes > n) throw std::invalid_argument("wilson_interval: bad counts");
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (phat + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
  // Clamp keeps low <= phat <= high under rounding at the endpoints.
  return {std::clamp(std::min(center - half, phat), 0.0, 1.0), std::clamp(std::max(center + half, phat), 0.0, 1.0)};
}

RiskEstimate RiskEstimate::from_counts(long failures, long n) {
  const Interval ci = wilson_interval(failures, n);
  return {n, failures, static_cast<double>(failures) / static_cast<double>(n), ci.low, ci.high};
}

namespace {

bool draw_fails(const Predictor& predict, const Vector& x, int y, const DirectionalDistribution& dist,
                const PerturbationSpec& spec, const Domain& domain, RngStream stream) {
  Rng rng(stream);
  const Vector eta = project_sphere(sample_directional(dist, rng), spec);
  return predict(clip_domain(x + eta, domain)) != y;
}

}  // namespace

RiskEstimate estimate_risk(const Predictor& predict, const Vector& x, int y, const Vector& v, double kappa,
                           const PerturbationSpec& spec, long n, const Domain& domain, RngStream stream,
                           int workers) {
  if (n < 1) throw std::invalid_argument("estimate_risk needs n >= 1");
  const DirectionalDistribution dist{v, kappa};
  dist.validate();
  spec.validate();
  if (v.size() != x.size()) throw std::invalid_argument("direction and input dimensions differ");

  long failures = 0;
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) failures += draw_fails(predict, x, y, dist, spec, domain, stream.child(i));
  } else {
    std::vector<char> failed(static_cast<std::size_t>(n), 0);
    parallel_for(failed.size(), workers, [&](std::size_t i) {
      failed[i] = draw_fails(predict, x, y, dist, spec, domain, stream.child(i)) ? 1 : 0;
    });
    for (char f : failed) failures += f;
  }
  return RiskEstimate::from_counts(failures, n);
}

int risk_at_infinity(const Predictor& predict, const Vector& x, int y, const Vector& v,
                     const PerturbationSpec& spec, const Domain& domain) {
  DirectionalDistribution{v, 0.0}.validate();
  return predict(clip_domain(x + project_sphere(v, spec), domain)) != y ? 1 : 0;
}

RiskCurve risk_curve(const Predictor& predict, const Dataset& samples, const std::vector<Probe>& probes,
                     const std::vector<double>& kappas, Norm p, long n, const Domain& domain, RngStream stream,
                     int workers) {
  if (samples.empty()) throw std::invalid_argument("risk_curve: empty dataset");
  if (probes.size() != samples.size()) throw std::invalid_argument("risk_curve: one probe per sample required");
  if (kappas.empty()) throw std::invalid_argument("risk_curve: empty kappa list");
  for (std::size_t k = 1; k < kappas.size(); ++k) {
    if (!(kappas[k] > kappas[k - 1])) throw std::invalid_argument("risk_curve: kappas must be strictly ascending");
  }

  std::vector<std::vector<long>> counts(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t s) {
    const PerturbationSpec spec{p, probes[s].radius};
    counts[s].reserve(kappas.size());
    for (double kappa : kappas) {
      counts[s].push_back(estimate_risk(predict, samples[s].x, samples[s].y, probes[s].v, kappa, spec, n, domain,
                                        stream.child(s))
                              .failures);
    }
  });

  RiskCurve curve;
  curve.kappas = kappas;
  curve.per_sample.assign(samples.size(), std::vector<double>(kappas.size()));
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    long pooled = 0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      pooled += counts[s][k];
      curve.per_sample[s][k] = static_cast<double>(counts[s][k]) / static_cast<double>(n);
    }
    const long total = n * static_cast<long>(samples.size());
    const Interval ci = wilson_interval(pooled, total);
    curve.values.push_back(static_cast<double>(pooled) / static_cast<double>(total));
    curve.ci_low.push_back(ci.low);
    curve.ci_high.push_back(ci.high);
  }
  return curve;
}

std::vector<double> default_kappa_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 300; ++k) grid.push_back(k);
  return grid;
}

std::optional<double> kappa_at_threshold(const std::function<double(double)>& mean_risk_at,
                                         const std::vector<double>& grid, double threshold) {
  if (grid.empty()) throw std::invalid_argument("kappa_at_threshold: empty grid");
  for (double kappa : grid) {
    if (mean_risk_at(kappa) >= threshold) return kappa;
  }
  return std::nullopt;
}

std::optional<double> kappa_at_threshold(const RiskCurve& curve, double threshold) {
  if (curve.kappas.empty()) throw std::invalid_argument("kappa_at_threshold: empty grid");
  for (std::size_t k = 0; k < curve.kappas.size(); ++k) {
    if (curve.values[k] >= threshold) return curve.kappas[k];
  }
  return std::nullopt;
}

bool mc_error_search(const Predictor& predict, const Vector& x, int y, const PerturbationSpec& spec, long trials,
                     const Domain& domain, RngStream stream) {
  if (trials < 1) throw std::invalid_argument("mc_error_search needs T >= 1");
  spec.validate();
  const DirectionalDistribution uniform{Vector::Unit(x.size(), 0), 0.0};
  for (long t = 0; t < trials; ++t) {
    if (draw_fails(predict, x, y, uniform, spec, domain, stream.child(t))) return true;
  }
  return false;
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw std::runtime_error("malformed number '" + text + "'");
  }
  return v;
}

void write_curve_csv(std::ostream& out, const RiskCurve& curve, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "kappa,mean_risk,ci_low,ci_high\n";
  for (std::size_t k = 0; k < curve.kappas.size(); ++k) {
    out << format_double(curve.kappas[k]) << ',' << format_double(curve.values[k]) << ','
        << format_double(curve.ci_low[k]) << ',' << format_double(curve.ci_high[k]) << '\n';
  }
}

RiskCurve read_curve_csv(std::istream& in) {
  RiskCurve curve;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "kappa,mean_risk,ci_low,ci_high") throw std::runtime_error("unexpected risk-curve header");
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell[4];
    for (auto& c : cell) {
      if (!std::getline(row, c, ',')) throw std::runtime_error("short risk-curve row: " + line);
    }
    curve.kappas.push_back(parse_double(cell[0]));
    curve.values.push_back(parse_double(cell[1]));
    curve.ci_low.push_back(parse_double(cell[2]));
    curve.ci_high.push_back(parse_double(cell[3]));
  }
  if (!header) throw std::runtime_error("risk-curve CSV has no header");
  return curve;
}

std::string curve_to_json(const RiskCurve& curve) {
  nlohmann::json j;
  j["kappa"] = curve.kappas;
  j["mean_risk"] = curve.values;
  j["ci_low"] = curve.ci_low;
  j["ci_high"] = curve.ci_high;
  j["per_sample"] = curve.per_sample;
  return j.dump(2);
}

}  // namespace dirrisk
