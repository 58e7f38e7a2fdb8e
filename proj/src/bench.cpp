#include "dirrisk/bench.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dirrisk/parallel.hpp"

namespace dirrisk {

namespace {
constexpr std::uint64_t kAttackStream = 0;
constexpr std::uint64_t kRiskStream = 1;
}  // namespace

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "fgsm") return AttackKind::Fgsm;
  if (name == "pgd") return AttackKind::Pgd;
  if (name == "mifgsm" || name == "mi-fgsm" || name == "mi_fgsm") return AttackKind::MiFgsm;
  if (name == "pgn") return AttackKind::Pgn;
  if (name == "dn") return AttackKind::Dn;
  throw std::invalid_argument("unknown attack '" + name + "' (expected fgsm, pgd, mifgsm, pgn, dn)");
}

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::Fgsm: return "fgsm";
    case AttackKind::Pgd: return "pgd";
    case AttackKind::MiFgsm: return "mifgsm";
    case AttackKind::Pgn: return "pgn";
    case AttackKind::Dn: return "dn";
  }
  return "?";
}

AttackResult run_attack(const AttackSpec& spec, const Classifier& model, const Vector& x, int y, RngStream stream) {
  switch (spec.kind) {
    case AttackKind::Fgsm: return fgsm(model, x, y, spec.config);
    case AttackKind::Pgd: return pgd(model, x, y, spec.config);
    case AttackKind::MiFgsm: return mi_fgsm(model, x, y, spec.config);
    case AttackKind::Pgn: return pgn_simplified(model, x, y, spec.config, stream);
    case AttackKind::Dn: return dn_attack(model, x, y, DnConfig{spec.config, spec.kappa_adv, spec.sample_norm}, stream);
  }
  throw std::logic_error("unhandled attack kind");
}

AttackRun run_attack_over(const AttackSpec& spec, const Classifier& model, const Dataset& data, Norm sample_norm,
                          std::uint64_t seed, int workers) {
  AttackRun run;
  run.results.resize(data.size());
  run.probes.resize(data.size());
  const RngStream base{seed, kAttackStream};
  parallel_for(data.size(), workers, [&](std::size_t s) {
    AttackResult r = run_attack(spec, model, data[s].x, data[s].y, base.child(s));
    const double length = r.delta.norm();
    if (length > 0.0) run.probes[s] = Probe{r.delta / length, norm(r.delta, sample_norm)};
    run.results[s] = std::move(r);
  });
  return run;
}

MeanRiskEvaluator::MeanRiskEvaluator(const Classifier& model, const Dataset& data,
                                     const std::vector<std::optional<Probe>>& probes, const BenchOptions& options)
    : model_(model), data_(data), probes_(probes), options_(options) {
  if (probes.size() != data.size()) throw std::invalid_argument("one probe slot per sample required");
  probed_ = static_cast<std::size_t>(std::count_if(probes.begin(), probes.end(), [](const auto& p) { return p.has_value(); }));
}

std::vector<std::optional<long>> MeanRiskEvaluator::failures(double kappa) const {
  std::vector<std::optional<long>> out(data_.size());
  const Predictor predict = predictor_of(model_);
  const RngStream base{options_.seed, kRiskStream};
  parallel_for(data_.size(), options_.workers, [&](std::size_t s) {
    if (!probes_[s]) return;
    const Probe& probe = *probes_[s];
    out[s] = estimate_risk(predict, data_[s].x, data_[s].y, probe.v, kappa, {options_.sample_norm, probe.radius},
                           options_.n, options_.domain, base.child(s))
                 .failures;
  });
  return out;
}

double MeanRiskEvaluator::operator()(double kappa) const {
  if (probed_ == 0) return 0.0;
  long total = 0;
  for (const auto& f : failures(kappa)) total += f.value_or(0);
  return static_cast<double>(total) / (static_cast<double>(options_.n) * static_cast<double>(probed_));
}

std::vector<BenchmarkRow> run_benchmark(const Classifier& model, const Dataset& data,
                                        const std::vector<AttackSpec>& attacks, const BenchOptions& options) {
  if (data.empty()) throw std::invalid_argument("benchmark needs at least one correctly classified sample");
  if (attacks.empty()) throw std::invalid_argument("benchmark needs at least one attack");
  const double kstar = options.kappa_star.value_or(kappa_star(model.input_dim()));
  std::vector<BenchmarkRow> rows;
  for (const AttackSpec& spec : attacks) {
    const AttackRun run = run_attack_over(spec, model, data, options.sample_norm, options.seed, options.workers);
    const MeanRiskEvaluator mean_risk(model, data, run.probes, options);
    BenchmarkRow row;
    row.attack = spec.name;
    row.p = spec.config.p;
    row.epsilon = spec.config.epsilon;
    row.asr = asr(run.results);
    row.n_samples = static_cast<long>(data.size());
    row.excluded = static_cast<long>(data.size() - mean_risk.probed());
    if (mean_risk.probed() > 0) {
      row.risk_at_kappa_star = mean_risk(kstar);
      row.kappa_threshold = kappa_at_threshold(mean_risk, options.kappa_grid, options.threshold);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

RiskCurve attack_risk_curve(const Classifier& model, const Dataset& data, const AttackRun& run,
                            const std::vector<double>& kappas, const BenchOptions& options) {
  const MeanRiskEvaluator evaluator(model, data, run.probes, options);
  if (evaluator.probed() == 0) throw std::invalid_argument("no sample has a defined attack direction");
  RiskCurve curve;
  curve.kappas = kappas;
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (run.probes[s]) curve.per_sample.emplace_back();
  }
  const long total = options.n * static_cast<long>(evaluator.probed());
  for (double kappa : kappas) {
    long pooled = 0;
    std::size_t row = 0;
    for (const auto& f : evaluator.failures(kappa)) {
      if (!f) continue;
      pooled += *f;
      curve.per_sample[row++].push_back(static_cast<double>(*f) / static_cast<double>(options.n));
    }
    const Interval ci = wilson_interval(pooled, total);
    curve.values.push_back(static_cast<double>(pooled) / static_cast<double>(total));
    curve.ci_low.push_back(ci.low);
    curve.ci_high.push_back(ci.high);
  }
  return curve;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman_rho needs equal lengths >= 2");
  const std::vector<double> ra = average_ranks(a), rb = average_ranks(b);
  const double mean = 0.5 * static_cast<double>(a.size() + 1);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0.0 || sbb == 0.0) throw std::domain_error("undefined correlation: zero rank variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationSeries correlation_from_risks(const std::vector<double>& kappas, std::vector<double> baseline,
                                         std::vector<std::vector<double>> per_sample) {
  CorrelationSeries series;
  series.kappas = kappas;
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    std::vector<double> column;
    for (const auto& row : per_sample) column.push_back(row.at(k));
    try {
      series.rho.push_back(spearman_rho(column, baseline));
    } catch (const std::domain_error&) {
      series.rho.push_back(std::nullopt);
    }
  }
  series.baseline = std::move(baseline);
  series.per_sample = std::move(per_sample);
  return series;
}

CorrelationSeries correlation_analysis(const Classifier& model, const Dataset& data, const AttackSpec& attack,
                                       const std::vector<double>& kappas, const BenchOptions& options) {
  const AttackRun run = run_attack_over(attack, model, data, options.sample_norm, options.seed, options.workers);
  std::vector<double> with_zero{0.0};
  with_zero.insert(with_zero.end(), kappas.begin(), kappas.end());
  std::sort(with_zero.begin(), with_zero.end());
  with_zero.erase(std::unique(with_zero.begin(), with_zero.end()), with_zero.end());
  const RiskCurve curve = attack_risk_curve(model, data, run, with_zero, options);

  std::vector<double> baseline;
  std::vector<std::vector<double>> per_sample;
  for (const auto& row : curve.per_sample) {
    baseline.push_back(row.front());
    std::vector<double> selected;
    for (double kappa : kappas) {
      const auto it = std::find(with_zero.begin(), with_zero.end(), kappa);
      selected.push_back(row[static_cast<std::size_t>(it - with_zero.begin())]);
    }
    per_sample.push_back(std::move(selected));
  }
  return correlation_from_risks(kappas, std::move(baseline), std::move(per_sample));
}

std::vector<ConfidenceRow> confidence_analysis(const Classifier& model, const Dataset& data, const AttackSpec& attack,
                                               const std::vector<double>& kappas, const BenchOptions& options) {
  std::vector<ConfidenceRow> rows;
  if (data.empty()) return rows;
  const AttackRun run = run_attack_over(attack, model, data, options.sample_norm, options.seed, options.workers);
  const MeanRiskEvaluator evaluator(model, data, run.probes, options);
  std::vector<std::vector<std::optional<long>>> by_kappa;
  for (double kappa : kappas) by_kappa.push_back(evaluator.failures(kappa));
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (!run.probes[s]) continue;
    const double conf = model.confidence(data[s].x);
    for (std::size_t k = 0; k < kappas.size(); ++k) {
      rows.push_back({s, conf, kappas[k], static_cast<double>(*by_kappa[k][s]) / static_cast<double>(options.n)});
    }
  }
  return rows;
}

AblationResult ablation_kappa_adv(const Classifier& model, const Dataset& data, const AttackSpec& base,
                                  const std::vector<double>& kappa_adv_list, const std::vector<double>& kappas,
                                  const BenchOptions& options) {
  if (kappa_adv_list.empty()) throw std::invalid_argument("ablation needs at least one kappa_adv");
  if (data.empty()) throw std::invalid_argument("ablation needs a nonempty dataset");
  AblationResult out;
  for (double kappa_adv : kappa_adv_list) {
    AttackSpec variant = base;
    variant.kind = AttackKind::Dn;
    variant.kappa_adv = kappa_adv;
    const AttackRun run = run_attack_over(variant, model, data, options.sample_norm, options.seed, options.workers);
    out.kappa_advs.push_back(kappa_adv);
    out.asr.push_back(asr(run.results));
    out.curves.push_back(attack_risk_curve(model, data, run, kappas, options));
  }
  return out;
}

Dataset correctly_classified(const Classifier& model, const Dataset& data, std::vector<std::size_t>* kept_indices) {
  Dataset kept;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (model.predict(data[i].x) != data[i].y) continue;
    kept.push_back(data[i]);
    if (kept_indices) kept_indices->push_back(i);
  }
  return kept;
}

namespace {

void write_comment(std::ostream& out, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void write_rows_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows, const std::string& comment) {
  write_comment(out, comment);
  out << "attack,p,epsilon,asr,risk_at_kappa_star,kappa_threshold,n_samples,excluded\n";
  for (const auto& r : rows) {
    out << r.attack << ',' << to_string(r.p) << ',' << format_double(r.epsilon) << ',' << format_double(r.asr) << ','
        << format_double(r.risk_at_kappa_star) << ','
        << (r.kappa_threshold ? format_double(*r.kappa_threshold) : std::string("not_reached")) << ','
        << r.n_samples << ',' << r.excluded << '\n';
  }
}

std::vector<BenchmarkRow> read_rows_csv(std::istream& in) {
  std::vector<BenchmarkRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "attack,p,epsilon,asr,risk_at_kappa_star,kappa_threshold,n_samples,excluded") {
        throw std::runtime_error("unexpected benchmark CSV header");
      }
      header = true;
      continue;
    }
    const auto c = split_csv(line);
    if (c.size() != 8) throw std::runtime_error("benchmark CSV row needs 8 cells: " + line);
    BenchmarkRow r;
    r.attack = c[0];
    r.p = parse_norm(c[1]);
    r.epsilon = parse_double(c[2]);
    r.asr = parse_double(c[3]);
    r.risk_at_kappa_star = parse_double(c[4]);
    if (c[5] != "not_reached") r.kappa_threshold = parse_double(c[5]);
    r.n_samples = std::stol(c[6]);
    r.excluded = std::stol(c[7]);
    rows.push_back(std::move(r));
  }
  if (!header) throw std::runtime_error("benchmark CSV has no header");
  return rows;
}

void write_correlation_csv(std::ostream& out, const CorrelationSeries& series, const std::string& comment) {
  write_comment(out, comment);
  out << "kappa,rho\n";
  for (std::size_t k = 0; k < series.kappas.size(); ++k) {
    out << format_double(series.kappas[k]) << ','
        << (series.rho[k] ? format_double(*series.rho[k]) : std::string("undefined")) << '\n';
  }
}

void write_confidence_csv(std::ostream& out, const std::vector<ConfidenceRow>& rows, const std::string& comment) {
  write_comment(out, comment);
  out << "sample_id,confidence,kappa,risk\n";
  for (const auto& r : rows) {
    out << r.sample_id << ',' << format_double(r.confidence) << ',' << format_double(r.kappa) << ','
        << format_double(r.risk) << '\n';
  }
}

std::string rows_to_json(const std::vector<BenchmarkRow>& rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["attack"] = r.attack;
    row["p"] = to_string(r.p);
    row["epsilon"] = r.epsilon;
    row["asr"] = r.asr;
    row["risk_at_kappa_star"] = r.risk_at_kappa_star;
    row["kappa_threshold"] = r.kappa_threshold ? nlohmann::ordered_json(*r.kappa_threshold) : nlohmann::ordered_json();
    row["n_samples"] = r.n_samples;
    row["excluded"] = r.excluded;
    j.push_back(std::move(row));
  }
  return j.dump(2);
}

std::string curves_to_svg(const std::vector<std::string>& names, const std::vector<RiskCurve>& curves,
                          const std::string& title) {
  const double width = 640, height = 400, left = 60, right = 160, top = 40, bottom = 50;
  double kmax = 1.0;
  for (const auto& c : curves) {
    if (!c.kappas.empty()) kmax = std::max(kmax, c.kappas.back());
  }
  const auto sx = [&](double k) { return left + k / kmax * (width - left - right); };
  const auto sy = [&](double r) { return top + (1.0 - r) * (height - top - bottom); };
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(kmax) << "\" y2=\"" << sy(0)
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << sy(0) << "\" x2=\"" << left << "\" y2=\"" << sy(1)
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    svg << "<text x=\"" << left - 30 << "\" y=\"" << sy(t / 4.0) + 4 << "\" font-size=\"11\">" << t / 4.0 << "</text>\n";
    svg << "<text x=\"" << sx(kmax * t / 4.0) - 8 << "\" y=\"" << sy(0) + 18 << "\" font-size=\"11\">"
        << kmax * t / 4.0 << "</text>\n";
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10 << "\" font-size=\"12\">kappa</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = colors[i % 7];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < curves[i].kappas.size(); ++k) {
      svg << sx(curves[i].kappas[k]) << ',' << sy(curves[i].values[k]) << ' ';
    }
    svg << "\"/>\n<text x=\"" << width - right + 10 << "\" y=\"" << top + 18 * (i + 1) << "\" font-size=\"12\" fill=\""
        << color << "\">" << (i < names.size() ? names[i] : std::string("curve")) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace dirrisk
