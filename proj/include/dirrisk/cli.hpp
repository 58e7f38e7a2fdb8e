#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dirrisk/bench.hpp"
#include "dirrisk/datasets.hpp"

namespace dirrisk {

/// Invalid or incomplete experiment configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelSpec {
  std::vector<int> hidden{32, 32};
  TrainOptions train{30, 0.05, 32, 0};
  std::string path;  // load instead of training when set
};

struct RiskSettings {
  Norm sample_norm = Norm::Linf;
  long n = 256;
  std::vector<double> kappas = default_kappa_grid();
  double threshold = 0.25;
  std::size_t max_samples = 0;  // 0: every correctly classified sample
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir;
  int workers = 1;
  Norm p = Norm::Linf;
  double epsilon = 8.0 / 255.0;
  Domain domain;
  DatasetSpec dataset;
  ModelSpec model;
  std::vector<AttackSpec> attacks;
  RiskSettings risk;
  std::vector<double> ablation_kappa_adv{0.0, 10.0, 100.0};
  std::vector<long> mc_trials{10, 100};
  std::optional<double> mc_radius;
  std::optional<nlohmann::json> toy;
};

/// Default attack settings for a name such as fgsm, pgd5, pgd20, mifgsm, pgn
/// or dn under a (p, epsilon) budget.
AttackSpec default_attack(const std::string& name, Norm p, double epsilon);

/// Parses and validates; fills every default. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Canonical form: every field explicit, keys sorted.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// FNV-1a of the canonical form without `workers` and `output_dir`, so it
/// identifies what is computed rather than how it is scheduled.
std::string config_hash(const ExperimentConfig& cfg);

void cmd_train(const ExperimentConfig& cfg);
void cmd_attack(const ExperimentConfig& cfg);
void cmd_risk(const ExperimentConfig& cfg);
void cmd_bench(const ExperimentConfig& cfg);
void cmd_correlate(const ExperimentConfig& cfg);
void cmd_confidence(const ExperimentConfig& cfg);
void cmd_ablate(const ExperimentConfig& cfg);
void cmd_mc_search(const ExperimentConfig& cfg);
void cmd_toy(const ExperimentConfig& cfg);

/// Entry point of the dirrisk executable. Returns 0 on success, 2 on
/// configuration errors and 3 on runtime failures.
int run_cli(int argc, const char* const* argv);

}  // namespace dirrisk
