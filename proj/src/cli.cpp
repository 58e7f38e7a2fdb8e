#include "dirrisk/cli.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "dirrisk/parallel.hpp"
#include "dirrisk/toyoracle.hpp"

namespace dirrisk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kLayoutVersion = 1;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

Norm norm_field(const json& j, const char* key, Norm fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  const json& v = j.at(key);
  try {
    if (v.is_number()) return parse_norm(v.get<double>() == 2.0 ? "2" : "?");
    return parse_norm(v.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad norm for '") + key + "': " + e.what());
  }
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

AttackSpec default_attack(const std::string& name, Norm p, double epsilon) {
  const std::string key = lower(name);
  AttackSpec spec;
  spec.name = name;
  spec.config.p = p;
  spec.config.epsilon = epsilon;
  spec.config.momentum = 1.0;
  spec.config.inner_samples = 10;
  spec.config.steps = 10;
  if (key.rfind("pgd", 0) == 0) {
    spec.kind = AttackKind::Pgd;
    spec.config.steps = key.size() > 3 ? std::stoi(key.substr(3)) : 20;
    spec.config.step_size = p == Norm::Linf ? 2.0 / 255.0 : 0.25;
    return spec;
  }
  spec.kind = parse_attack_kind(key);
  if (spec.kind == AttackKind::Fgsm) spec.config.steps = 1;
  spec.config.step_size = epsilon / spec.config.steps;
  return spec;
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, "config", {"seed", "output_dir", "workers", "p", "epsilon", "domain", "dataset", "model", "attacks",
                           "risk", "ablation", "mc_search", "toy"});
  ExperimentConfig cfg;
  if (!j.contains("seed")) throw ConfigError("config must set 'seed'");
  cfg.seed = field<std::uint64_t>(j, "seed", 0);
  cfg.output_dir = field<std::string>(j, "output_dir", "");
  cfg.workers = field<int>(j, "workers", 1);
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  cfg.p = norm_field(j, "p", Norm::Linf);
  cfg.epsilon = field<double>(j, "epsilon", 8.0 / 255.0);
  if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (j.contains("domain") && !j.at("domain").is_null()) {
    const auto box = field<std::vector<double>>(j, "domain", {});
    if (box.size() != 2 || box[0] > box[1]) throw ConfigError("domain must be [lo, hi] with lo <= hi");
    cfg.domain = Box{box[0], box[1]};
  }

  try {
    const json ds = j.value("dataset", json::object());
    check_keys(ds, "dataset", {"generator", "dim", "classes", "size", "noise", "separation", "seed", "path", "toy", "extent"});
    cfg.dataset = dataset_spec_from_json(ds);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  if (cfg.dataset.generator == "csv_file" && !fs::exists(cfg.dataset.path)) {
    throw ConfigError("dataset file does not exist: " + cfg.dataset.path);
  }

  const json model = j.value("model", json::object());
  check_keys(model, "model", {"hidden", "epochs", "learning_rate", "batch_size", "path", "seed"});
  cfg.model.hidden = field<std::vector<int>>(model, "hidden", cfg.model.hidden);
  cfg.model.train.epochs = field<int>(model, "epochs", cfg.model.train.epochs);
  cfg.model.train.learning_rate = field<double>(model, "learning_rate", cfg.model.train.learning_rate);
  cfg.model.train.batch_size = field<int>(model, "batch_size", cfg.model.train.batch_size);
  cfg.model.train.seed = field<std::uint64_t>(model, "seed", cfg.seed);
  cfg.model.path = field<std::string>(model, "path", "");
  if (!cfg.model.path.empty() && !fs::exists(cfg.model.path)) throw ConfigError("model file does not exist: " + cfg.model.path);
  for (int h : cfg.model.hidden) {
    if (h < 1) throw ConfigError("hidden layer widths must be positive");
  }
  if (cfg.model.train.epochs < 0 || !(cfg.model.train.learning_rate > 0.0) || cfg.model.train.batch_size < 1) {
    throw ConfigError("invalid training hyperparameters");
  }

  const json attacks = j.value("attacks", json::array({"fgsm", "pgd5", "pgd20", "mifgsm", "pgn", "dn"}));
  if (!attacks.is_array() || attacks.empty()) throw ConfigError("attacks must be a nonempty list");
  for (const json& a : attacks) {
    try {
      if (a.is_string()) {
        cfg.attacks.push_back(default_attack(a.get<std::string>(), cfg.p, cfg.epsilon));
        continue;
      }
      check_keys(a, "attack", {"name", "type", "p", "epsilon", "steps", "step_size", "momentum", "inner_samples",
                               "kappa_adv", "sample_norm", "noise_radius"});
      const std::string name = field<std::string>(a, "name", "");
      if (name.empty()) throw ConfigError("every attack needs a name");
      const Norm p = norm_field(a, "p", cfg.p);
      const double eps = field<double>(a, "epsilon", cfg.epsilon);
      AttackSpec spec = default_attack(a.contains("type") ? a.at("type").get<std::string>() : name, p, eps);
      spec.name = name;
      spec.config.steps = field<int>(a, "steps", spec.config.steps);
      spec.config.step_size = field<double>(a, "step_size", spec.kind == AttackKind::Pgd
                                                                 ? spec.config.step_size
                                                                 : eps / spec.config.steps);
      spec.config.momentum = field<double>(a, "momentum", spec.config.momentum);
      spec.config.inner_samples = field<int>(a, "inner_samples", spec.config.inner_samples);
      spec.kappa_adv = field<double>(a, "kappa_adv", spec.kappa_adv);
      if (a.contains("sample_norm")) spec.sample_norm = norm_field(a, "sample_norm", p);
      if (a.contains("noise_radius")) spec.config.noise_radius = field<double>(a, "noise_radius", eps);
      cfg.attacks.push_back(std::move(spec));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("attack: ") + e.what());
    }
  }
  std::set<std::string> names;
  for (auto& spec : cfg.attacks) {
    spec.config.domain = cfg.domain;
    spec.config.seed = cfg.seed;
    try {
      DnConfig{spec.config, spec.kappa_adv, spec.sample_norm}.validate();
    } catch (const std::exception& e) {
      throw ConfigError("attack '" + spec.name + "': " + e.what());
    }
    if (!names.insert(spec.name).second) throw ConfigError("duplicate attack name '" + spec.name + "'");
  }

  const json risk = j.value("risk", json::object());
  check_keys(risk, "risk", {"n", "kappas", "threshold", "sample_norm", "max_samples"});
  cfg.risk.sample_norm = norm_field(risk, "sample_norm", cfg.p);
  cfg.risk.n = field<long>(risk, "n", cfg.risk.n);
  cfg.risk.kappas = field<std::vector<double>>(risk, "kappas", cfg.risk.kappas);
  cfg.risk.threshold = field<double>(risk, "threshold", cfg.risk.threshold);
  cfg.risk.max_samples = field<std::size_t>(risk, "max_samples", 0);
  if (cfg.risk.n < 1) throw ConfigError("risk.n must be >= 1");
  if (cfg.risk.kappas.empty()) throw ConfigError("risk.kappas must be nonempty");
  for (std::size_t k = 0; k < cfg.risk.kappas.size(); ++k) {
    if (cfg.risk.kappas[k] < 0.0 || (k > 0 && !(cfg.risk.kappas[k] > cfg.risk.kappas[k - 1]))) {
      throw ConfigError("risk.kappas must be nonnegative and strictly ascending");
    }
  }

  const json ablation = j.value("ablation", json::object());
  check_keys(ablation, "ablation", {"kappa_adv"});
  cfg.ablation_kappa_adv = field<std::vector<double>>(ablation, "kappa_adv", cfg.ablation_kappa_adv);
  if (cfg.ablation_kappa_adv.empty()) throw ConfigError("ablation.kappa_adv must be nonempty");
  for (double k : cfg.ablation_kappa_adv) {
    if (!(k >= 0.0)) throw ConfigError("ablation.kappa_adv values must be >= 0");
  }

  const json mc = j.value("mc_search", json::object());
  check_keys(mc, "mc_search", {"trials", "radius"});
  cfg.mc_trials = field<std::vector<long>>(mc, "trials", cfg.mc_trials);
  if (cfg.mc_trials.empty()) throw ConfigError("mc_search.trials must be nonempty");
  for (long t : cfg.mc_trials) {
    if (t < 1) throw ConfigError("mc_search.trials must be >= 1 (T = 0 is rejected)");
  }
  if (mc.contains("radius") && !mc.at("radius").is_null()) cfg.mc_radius = field<double>(mc, "radius", cfg.epsilon);

  if (j.contains("toy") && !j.at("toy").is_null()) {
    try {
      scenario_from_json(j.at("toy"));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("toy: ") + e.what());
    }
    cfg.toy = j.at("toy");
  }
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["workers"] = cfg.workers;
  j["p"] = to_string(cfg.p);
  j["epsilon"] = cfg.epsilon;
  j["domain"] = cfg.domain ? json::array({cfg.domain->lo, cfg.domain->hi}) : json();
  j["dataset"] = dataset_spec_to_json(cfg.dataset);
  j["model"] = {{"hidden", cfg.model.hidden},
                {"epochs", cfg.model.train.epochs},
                {"learning_rate", cfg.model.train.learning_rate},
                {"batch_size", cfg.model.train.batch_size},
                {"seed", cfg.model.train.seed},
                {"path", cfg.model.path}};
  json attacks = json::array();
  for (const auto& a : cfg.attacks) {
    json e{{"name", a.name},
           {"type", to_string(a.kind)},
           {"p", to_string(a.config.p)},
           {"epsilon", a.config.epsilon},
           {"steps", a.config.steps},
           {"step_size", a.config.step_size},
           {"momentum", a.config.momentum},
           {"inner_samples", a.config.inner_samples},
           {"kappa_adv", a.kappa_adv}};
    if (a.sample_norm) e["sample_norm"] = to_string(*a.sample_norm);
    if (a.config.noise_radius) e["noise_radius"] = *a.config.noise_radius;
    attacks.push_back(std::move(e));
  }
  j["attacks"] = std::move(attacks);
  j["risk"] = {{"sample_norm", to_string(cfg.risk.sample_norm)},
               {"n", cfg.risk.n},
               {"kappas", cfg.risk.kappas},
               {"threshold", cfg.risk.threshold},
               {"max_samples", cfg.risk.max_samples}};
  j["ablation"] = {{"kappa_adv", cfg.ablation_kappa_adv}};
  j["mc_search"] = {{"trials", cfg.mc_trials}, {"radius", cfg.mc_radius ? json(*cfg.mc_radius) : json()}};
  j["toy"] = cfg.toy ? *cfg.toy : json();
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("workers");
  j.erase("output_dir");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct Context {
  const ExperimentConfig& cfg;
  fs::path out;
  std::string hash;

  explicit Context(const ExperimentConfig& c, const char* command) : cfg(c), out(c.output_dir), hash(config_hash(c)) {
    if (out.empty()) {
      const char* root = std::getenv("DIRRISK_OUT");
      out = root ? fs::path(root) : fs::path("dirrisk-out");
    }
    fs::create_directories(out);
    json manifest{{"layout", kLayoutVersion}, {"command", command}, {"config_hash", hash}, {"config", config_to_json(c)}};
    manifest["config"].erase("workers");
    manifest["config"].erase("output_dir");
    write(std::string("manifest_") + command + ".json", manifest.dump(2) + "\n");
  }

  std::string comment() const {
    return "dirrisk layout=" + std::to_string(kLayoutVersion) + " config_hash=" + hash;
  }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    f << content;
  }

  BenchOptions bench_options() const {
    BenchOptions o;
    o.sample_norm = cfg.risk.sample_norm;
    o.kappa_grid = cfg.risk.kappas;
    o.n = cfg.risk.n;
    o.seed = cfg.seed;
    o.workers = cfg.workers;
    o.domain = cfg.domain;
    o.threshold = cfg.risk.threshold;
    return o;
  }
};

Dataset load_data(const ExperimentConfig& cfg) { return make_dataset(cfg.dataset); }

int num_classes(const Dataset& data) {
  int k = 0;
  for (const auto& s : data) k = std::max(k, s.y + 1);
  return std::max(k, 2);
}

TrainReport train_model(const ExperimentConfig& cfg, const Dataset& data) {
  if (data.empty()) throw std::runtime_error("dataset is empty");
  std::vector<int> dims{static_cast<int>(data.front().x.size())};
  dims.insert(dims.end(), cfg.model.hidden.begin(), cfg.model.hidden.end());
  dims.push_back(num_classes(data));
  return train_sgd(Classifier::random(dims, cfg.model.train.seed), data, cfg.model.train);
}

Classifier obtain_model(const ExperimentConfig& cfg, const Dataset& data) {
  if (cfg.model.path.empty()) return train_model(cfg, data).model;
  std::ifstream in(cfg.model.path);
  if (!in) throw std::runtime_error("cannot open model file " + cfg.model.path);
  return load_classifier(in);
}

// Correctly classified evaluation subset and original sample ids.
struct EvalSet {
  Dataset data;
  std::vector<std::size_t> ids;
};

EvalSet eval_set(const ExperimentConfig& cfg, const Classifier& model, const Dataset& all) {
  EvalSet set;
  set.data = correctly_classified(model, all, &set.ids);
  if (cfg.risk.max_samples > 0 && set.data.size() > cfg.risk.max_samples) {
    set.data.resize(cfg.risk.max_samples);
    set.ids.resize(cfg.risk.max_samples);
  }
  if (set.data.empty()) throw std::runtime_error("no correctly classified samples to evaluate");
  return set;
}

std::string file_safe(const std::string& name) {
  std::string s = name;
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

const AttackSpec& analysis_attack(const ExperimentConfig& cfg) {
  for (const auto& a : cfg.attacks) {
    if (a.kind == AttackKind::Dn) return a;
  }
  return cfg.attacks.front();
}

}  // namespace

void cmd_train(const ExperimentConfig& cfg) {
  Context ctx(cfg, "train");
  const Dataset data = load_data(cfg);
  const TrainReport report = train_model(cfg, data);
  std::ostringstream model_text;
  save_classifier(report.model, model_text);
  ctx.write("model.txt", model_text.str());
  json r{{"config_hash", ctx.hash},
         {"layer_dims", report.model.layer_dims()},
         {"train_accuracy", report.train_accuracy},
         {"final_loss", report.final_loss},
         {"epochs", cfg.model.train.epochs},
         {"n_train", data.size()}};
  ctx.write("train_report.json", r.dump(2) + "\n");
  std::cout << "train accuracy " << report.train_accuracy << " (" << data.size() << " samples)\n";
}

void cmd_attack(const ExperimentConfig& cfg) {
  Context ctx(cfg, "attack");
  const Dataset all = load_data(cfg);
  const Classifier model = obtain_model(cfg, all);
  const EvalSet set = eval_set(cfg, model, all);
  std::ostringstream out;
  for (const auto& spec : cfg.attacks) {
    const AttackRun run = run_attack_over(spec, model, set.data, cfg.risk.sample_norm, cfg.seed, cfg.workers);
    for (std::size_t s = 0; s < set.data.size(); ++s) {
      out << attack_record_json(set.ids[s], spec.name, spec.config.p, spec.config.epsilon, run.results[s]) << '\n';
    }
    std::cout << spec.name << ": asr " << asr(run.results) << " over " << set.data.size() << " samples\n";
  }
  ctx.write("attacks.jsonl", out.str());
}

void cmd_risk(const ExperimentConfig& cfg) {
  Context ctx(cfg, "risk");
  const Dataset all = load_data(cfg);
  const Classifier model = obtain_model(cfg, all);
  const EvalSet set = eval_set(cfg, model, all);
  const BenchOptions opts = ctx.bench_options();
  std::vector<std::string> names;
  std::vector<RiskCurve> curves;
  for (const auto& spec : cfg.attacks) {
    const AttackRun run = run_attack_over(spec, model, set.data, opts.sample_norm, cfg.seed, cfg.workers);
    RiskCurve curve = attack_risk_curve(model, set.data, run, cfg.risk.kappas, opts);
    std::ostringstream csv;
    write_curve_csv(csv, curve, ctx.comment() + " attack=" + spec.name);
    ctx.write("risk_" + file_safe(spec.name) + ".csv", csv.str());
    json j = json::parse(curve_to_json(curve));
    j["config_hash"] = ctx.hash;
    j["attack"] = spec.name;
    ctx.write("risk_" + file_safe(spec.name) + ".json", j.dump(2) + "\n");
    names.push_back(spec.name);
    curves.push_back(std::move(curve));
  }
  ctx.write("risk_curves.svg", "<!-- " + ctx.comment() + " -->\n" + curves_to_svg(names, curves, "mean directional risk"));
}

void cmd_bench(const ExperimentConfig& cfg) {
  Context ctx(cfg, "bench");
  const Dataset all = load_data(cfg);
  const Classifier model = obtain_model(cfg, all);
  const EvalSet set = eval_set(cfg, model, all);
  const auto rows = run_benchmark(model, set.data, cfg.attacks, ctx.bench_options());
  std::ostringstream csv;
  write_rows_csv(csv, rows, ctx.comment());
  ctx.write("bench.csv", csv.str());
  json summary{{"config_hash", ctx.hash},
               {"kappa_star", kappa_star(model.input_dim())},
               {"n_eval", set.data.size()},
               {"rows", json::parse(rows_to_json(rows))}};
  ctx.write("bench.json", summary.dump(2) + "\n");
  std::cout << csv.str();
}

void cmd_correlate(const ExperimentConfig& cfg) {
  Context ctx(cfg, "correlate");
  const Dataset all = load_data(cfg);
  const Classifier model = obtain_model(cfg, all);
  const EvalSet set = eval_set(cfg, model, all);
  const AttackSpec& attack = analysis_attack(cfg);
  const auto series = correlation_analysis(model, set.data, attack, cfg.risk.kappas, ctx.bench_options());
  std::ostringstream csv;
  write_correlation_csv(csv, series, ctx.comment() + " attack=" + attack.name);
  ctx.write("correlation.csv", csv.str());
  std::cout << csv.str();
}

void cmd_confidence(const ExperimentConfig& cfg) {
  Context ctx(cfg, "confidence");
  const Dataset all = load_data(cfg);
  const Classifier model = obtain_model(cfg, all);
  const EvalSet set = eval_set(cfg, model, all);
  const AttackSpec& attack = analysis_attack(cfg);
  auto rows = confidence_analysis(model, set.data, attack, cfg.risk.kappas, ctx.bench_options());
  for (auto& r : rows) r.sample_id = set.ids[r.sample_id];
  std::ostringstream csv;
  write_confidence_csv(csv, rows, ctx.comment() + " attack=" + attack.name);
  ctx.write("confidence.csv", csv.str());
}

void cmd_ablate(const ExperimentConfig& cfg) {
  Context ctx(cfg, "ablate");
  const Dataset all = load_data(cfg);
  const Classifier model = obtain_model(cfg, all);
  const EvalSet set = eval_set(cfg, model, all);
  const AttackSpec& base = analysis_attack(cfg);
  const auto result = ablation_kappa_adv(model, set.data, base, cfg.ablation_kappa_adv, cfg.risk.kappas,
                                         ctx.bench_options());
  std::ostringstream csv;
  csv << "# " << ctx.comment() << '\n' << "kappa_adv,kappa,mean_risk,ci_low,ci_high\n";
  std::vector<std::string> names;
  json summary{{"config_hash", ctx.hash}, {"variants", json::array()}};
  for (std::size_t v = 0; v < result.curves.size(); ++v) {
    const RiskCurve& c = result.curves[v];
    for (std::size_t k = 0; k < c.kappas.size(); ++k) {
      csv << format_double(result.kappa_advs[v]) << ',' << format_double(c.kappas[k]) << ','
          << format_double(c.values[k]) << ',' << format_double(c.ci_low[k]) << ',' << format_double(c.ci_high[k])
          << '\n';
    }
    names.push_back("kappa_adv=" + format_double(result.kappa_advs[v]));
    summary["variants"].push_back({{"kappa_adv", result.kappa_advs[v]}, {"asr", result.asr[v]}});
  }
  ctx.write("ablation.csv", csv.str());
  ctx.write("ablation.json", summary.dump(2) + "\n");
  ctx.write("ablation.svg", "<!-- " + ctx.comment() + " -->\n" + curves_to_svg(names, result.curves, "kappa_adv ablation"));
}

void cmd_mc_search(const ExperimentConfig& cfg) {
  Context ctx(cfg, "mc-search");
  const Dataset all = load_data(cfg);
  const Classifier model = obtain_model(cfg, all);
  const EvalSet set = eval_set(cfg, model, all);
  const PerturbationSpec spec{cfg.risk.sample_norm, cfg.mc_radius.value_or(cfg.epsilon)};
  const Predictor predict = predictor_of(model);
  const RngStream base{cfg.seed, 2};
  std::vector<std::vector<char>> flips(set.data.size());
  parallel_for(set.data.size(), cfg.workers, [&](std::size_t s) {
    for (long t : cfg.mc_trials) {
      flips[s].push_back(mc_error_search(predict, set.data[s].x, set.data[s].y, spec, t, cfg.domain, base.child(s)) ? 1 : 0);
    }
  });
  std::ostringstream csv;
  csv << "# " << ctx.comment() << "\nsample_id,trials,flipped\n";
  json summary{{"config_hash", ctx.hash}, {"radius", spec.radius}, {"p", to_string(spec.p)}, {"rates", json::array()}};
  for (std::size_t k = 0; k < cfg.mc_trials.size(); ++k) {
    long hits = 0;
    for (std::size_t s = 0; s < set.data.size(); ++s) {
      csv << set.ids[s] << ',' << cfg.mc_trials[k] << ',' << int(flips[s][k]) << '\n';
      hits += flips[s][k];
    }
    const double rate = static_cast<double>(hits) / static_cast<double>(set.data.size());
    summary["rates"].push_back({{"trials", cfg.mc_trials[k]}, {"flip_rate", rate}});
    std::cout << "T=" << cfg.mc_trials[k] << " flip rate " << rate << '\n';
  }
  ctx.write("mc_search.csv", csv.str());
  ctx.write("mc_search.json", summary.dump(2) + "\n");
}

void cmd_toy(const ExperimentConfig& cfg) {
  if (!cfg.toy) throw ConfigError("the toy command needs a 'toy' scenario (config key or --scenario)");
  Context ctx(cfg, "toy");
  const Fig2Scenario scenario = scenario_from_json(*cfg.toy);
  const Fig2Report report = replicate_fig2(scenario);
  std::ostringstream csv;
  csv << "# " << ctx.comment() << "\ndirection,vx,vy,kappa,radius,risk\n";
  for (std::size_t k = 0; k < report.risk_per_direction.size(); ++k) {
    const Point2 v = scenario.directions[k].normalized();
    csv << k << ',' << format_double(v.x()) << ',' << format_double(v.y()) << ',' << format_double(scenario.kappa) << ','
        << format_double(scenario.radius) << ',' << format_double(report.risk_per_direction[k]) << '\n';
  }
  ctx.write("toy_risks.csv", csv.str());
  ctx.write("toy_scene.svg", "<!-- " + ctx.comment() + " -->\n" + report.svg_scene);
  std::cout << csv.str();
}

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      out.push_back(parse_double(cell));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + cell + "' in list");
    }
  }
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::string> p;
  std::optional<double> epsilon;
  std::vector<std::string> attacks;
  std::optional<std::string> kappas;
  std::optional<long> n;
  std::optional<std::string> model;
  std::optional<std::string> kappa_adv;
  std::optional<std::string> trials;
  std::optional<std::string> scenario;
  std::optional<int> epochs;
  std::optional<std::size_t> max_samples;
  bool print_config = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON experiment config");
  cmd->add_option("--seed", o.seed, "master seed (required unless set in the config)");
  cmd->add_option("-o,--out", o.out, "output directory (default $DIRRISK_OUT or ./dirrisk-out)");
  cmd->add_option("-j,--workers", o.workers, "worker threads; outputs do not depend on it");
  cmd->add_option("--p", o.p, "norm: 2 or inf");
  cmd->add_option("--epsilon", o.epsilon, "budget (image scale: 4/255, 8/255 for inf; 0.5-2.0 for l2)");
  cmd->add_option("--attack", o.attacks, "attack name(s): fgsm pgd5 pgd20 mifgsm pgn dn");
  cmd->add_option("--kappas", o.kappas, "comma-separated ascending kappa grid (default 0..300)");
  cmd->add_option("--n", o.n, "Monte-Carlo draws per risk estimate (default 256)");
  cmd->add_option("--model", o.model, "load this model file instead of training");
  cmd->add_option("--kappa-adv", o.kappa_adv,
                  "DN concentration; comma list for ablate (default 100; keep kappa_adv << sqrt(D))");
  cmd->add_option("--trials", o.trials, "comma-separated T values for mc-search");
  cmd->add_option("--scenario", o.scenario, "toy scenario JSON file");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--max-samples", o.max_samples, "cap on evaluated samples");
  cmd->add_flag("--print-config", o.print_config, "print the canonical config and exit");
}

json apply_overrides(const Overrides& o, const std::string& command) {
  json j = o.config_path.empty() ? json::object() : read_json_file(o.config_path);
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["output_dir"] = *o.out;
  if (o.workers) j["workers"] = *o.workers;
  if (o.p) j["p"] = *o.p;
  if (o.epsilon) j["epsilon"] = *o.epsilon;
  if (!o.attacks.empty()) j["attacks"] = o.attacks;
  if (o.kappas) j["risk"]["kappas"] = parse_list(*o.kappas);
  if (o.n) j["risk"]["n"] = *o.n;
  if (o.max_samples) j["risk"]["max_samples"] = *o.max_samples;
  if (o.model) j["model"]["path"] = *o.model;
  if (o.epochs) j["model"]["epochs"] = *o.epochs;
  if (o.kappa_adv) {
    const auto values = parse_list(*o.kappa_adv);
    if (command == "ablate") {
      j["ablation"]["kappa_adv"] = values;
    } else if (j.contains("attacks")) {
      for (auto& a : j["attacks"]) {
        if (a.is_string() && lower(a.get<std::string>()) == "dn") a = json{{"name", a.get<std::string>()}};
        if (a.is_object() && lower(a.value("type", a.value("name", std::string()))) == "dn") a["kappa_adv"] = values.at(0);
      }
    }
  }
  if (o.trials) {
    json trials = json::array();
    for (double t : parse_list(*o.trials)) trials.push_back(static_cast<long>(t));
    j["mc_search"]["trials"] = trials;
  }
  if (o.scenario) j["toy"] = read_json_file(*o.scenario);
  return j;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"dirrisk: directional perturbation risk of adversarial attacks"};
  app.require_subcommand(1);
  Overrides o;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "train and save a classifier"},
      {"attack", "run attacks over the correctly classified subset (JSON lines)"},
      {"risk", "mean directional risk curves over kappa"},
      {"bench", "benchmark rows: ASR, mean risk at kappa*, kappa at mean risk 0.25"},
      {"correlate", "Spearman correlation of per-sample risk with the kappa = 0 risk"},
      {"confidence", "per-sample confidence joined with risk"},
      {"ablate", "DN kappa_adv ablation curves"},
      {"mc-search", "uniform Monte-Carlo error search with T draws"},
      {"toy", "2D toy scenario oracle risks and SVG scene"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = config_from_json(apply_overrides(o, command));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  if (o.print_config) {
    std::cout << config_to_json(cfg).dump(2) << '\n';
    return 0;
  }

  try {
    if (command == "train") cmd_train(cfg);
    else if (command == "attack") cmd_attack(cfg);
    else if (command == "risk") cmd_risk(cfg);
    else if (command == "bench") cmd_bench(cfg);
    else if (command == "correlate") cmd_correlate(cfg);
    else if (command == "confidence") cmd_confidence(cfg);
    else if (command == "ablate") cmd_ablate(cfg);
    else if (command == "mc-search") cmd_mc_search(cfg);
    else if (command == "toy") cmd_toy(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace dirrisk
