#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dirrisk/attacks.hpp"
#include "dirrisk/dnattack.hpp"
#include "dirrisk/risk.hpp"

namespace dirrisk {

enum class AttackKind { Fgsm, Pgd, MiFgsm, Pgn, Dn };

AttackKind parse_attack_kind(const std::string& name);
std::string to_string(AttackKind kind);

/// A named, fully configured attack.
struct AttackSpec {
  std::string name;
  AttackKind kind = AttackKind::Pgd;
  AttackConfig config;
  double kappa_adv = 100.0;          // DN only
  std::optional<Norm> sample_norm;   // DN only
};

/// Dispatches to the attack implementation; `stream` feeds PGN and DN.
AttackResult run_attack(const AttackSpec& spec, const Classifier& model, const Vector& x, int y, RngStream stream);

/// Per-sample attack outcomes plus the direction/radius each one induces
/// (nullopt where delta = 0 and the direction is undefined).
struct AttackRun {
  std::vector<AttackResult> results;
  std::vector<std::optional<Probe>> probes;
};

/// Sample s is attacked with stream {seed, 0}.child(s), so every attack and
/// every variant sees the same per-sample randomness.
AttackRun run_attack_over(const AttackSpec& spec, const Classifier& model, const Dataset& data, Norm sample_norm,
                          std::uint64_t seed, int workers);

struct BenchOptions {
  /// Norm of the sphere that risk samples are projected onto.
  Norm sample_norm = Norm::Linf;
  std::vector<double> kappa_grid = default_kappa_grid();
  long n = 256;
  std::uint64_t seed = 0;
  int workers = 1;
  Domain domain;
  double threshold = 0.25;
  /// Reference concentration; input_dim^(1/4) when unset.
  std::optional<double> kappa_star;
};

struct BenchmarkRow {
  std::string attack;
  Norm p = Norm::Linf;
  double epsilon = 0.0;
  double asr = 0.0;
  double risk_at_kappa_star = 0.0;
  std::optional<double> kappa_threshold;  // nullopt: threshold not reached on the grid
  long n_samples = 0;
  long excluded = 0;  // samples with delta = 0, left out of the risk columns

  friend bool operator==(const BenchmarkRow&, const BenchmarkRow&) = default;
};

/// Mean directional risk over the probed samples at one kappa, as a pooled
/// rational failures / (n * samples). Sample s draws from {seed, 1}.child(s),
/// shared by every attack (common random numbers).
class MeanRiskEvaluator {
 public:
  MeanRiskEvaluator(const Classifier& model, const Dataset& data, const std::vector<std::optional<Probe>>& probes,
                    const BenchOptions& options);

  double operator()(double kappa) const;
  /// Per-sample failure counts at kappa (nullopt for unprobed samples).
  std::vector<std::optional<long>> failures(double kappa) const;
  std::size_t probed() const { return probed_; }

 private:
  const Classifier& model_;
  const Dataset& data_;
  const std::vector<std::optional<Probe>>& probes_;
  const BenchOptions& options_;
  std::size_t probed_ = 0;
};

/// One row per attack: ASR over all samples, mean risk at kappa*, and the
/// smallest grid kappa with mean risk >= threshold. The dataset is used as
/// given; callers pass the correctly classified subset.
std::vector<BenchmarkRow> run_benchmark(const Classifier& model, const Dataset& data,
                                        const std::vector<AttackSpec>& attacks, const BenchOptions& options);

/// Spearman rank correlation with average ranks for ties. Throws
/// std::domain_error when either list has zero rank variance.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

struct CorrelationSeries {
  std::vector<double> kappas;
  std::vector<std::optional<double>> rho;  // nullopt: undefined (constant risks)
  std::vector<std::vector<double>> per_sample;  // [sample][kappa]
  std::vector<double> baseline;                 // per-sample risk at kappa = 0
};

/// Spearman rho between per-sample risks at each kappa and at kappa = 0.
CorrelationSeries correlation_analysis(const Classifier& model, const Dataset& data, const AttackSpec& attack,
                                       const std::vector<double>& kappas, const BenchOptions& options);

/// Same computation from a precomputed kappa = 0 vector and risk matrix.
CorrelationSeries correlation_from_risks(const std::vector<double>& kappas, std::vector<double> baseline,
                                         std::vector<std::vector<double>> per_sample);

struct ConfidenceRow {
  std::size_t sample_id = 0;
  double confidence = 0.0;
  double kappa = 0.0;
  double risk = 0.0;
};

/// Clean-input confidence joined with each sample's risk at each kappa.
/// Samples whose attack returned delta = 0 are skipped.
std::vector<ConfidenceRow> confidence_analysis(const Classifier& model, const Dataset& data, const AttackSpec& attack,
                                               const std::vector<double>& kappas, const BenchOptions& options);

struct AblationResult {
  std::vector<double> kappa_advs;
  std::vector<RiskCurve> curves;
  std::vector<double> asr;
};

/// One risk curve per kappa_adv for DN variants of `base`, all seed-paired.
AblationResult ablation_kappa_adv(const Classifier& model, const Dataset& data, const AttackSpec& base,
                                  const std::vector<double>& kappa_adv_list, const std::vector<double>& kappas,
                                  const BenchOptions& options);

/// Risk curve of one attack's directions over the dataset (delta = 0 samples
/// excluded), using the same streams as MeanRiskEvaluator.
RiskCurve attack_risk_curve(const Classifier& model, const Dataset& data, const AttackRun& run,
                            const std::vector<double>& kappas, const BenchOptions& options);

Dataset correctly_classified(const Classifier& model, const Dataset& data,
                             std::vector<std::size_t>* kept_indices = nullptr);

// CSV schemas (lines starting with '#' are comments):
//   benchmark:   attack,p,epsilon,asr,risk_at_kappa_star,kappa_threshold,n_samples,excluded
//   correlation: kappa,rho
//   confidence:  sample_id,confidence,kappa,risk
void write_rows_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows, const std::string& comment = {});
std::vector<BenchmarkRow> read_rows_csv(std::istream& in);
void write_correlation_csv(std::ostream& out, const CorrelationSeries& series, const std::string& comment = {});
void write_confidence_csv(std::ostream& out, const std::vector<ConfidenceRow>& rows, const std::string& comment = {});
std::string rows_to_json(const std::vector<BenchmarkRow>& rows);

/// Line plot of named curves (mean risk against kappa).
std::string curves_to_svg(const std::vector<std::string>& names, const std::vector<RiskCurve>& curves,
                          const std::string& title);

}  // namespace dirrisk
