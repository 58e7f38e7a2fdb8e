#include "dirrisk/datasets.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dirrisk/risk.hpp"
#include "dirrisk/sphere.hpp"

namespace dirrisk {

void DatasetSpec::validate() const {
  if (generator == "csv_file") {
    if (path.empty()) throw std::invalid_argument("csv_file dataset needs a path");
    return;
  }
  if (generator == "toy2d_from_scenario") {
    if (!toy) throw std::invalid_argument("toy2d_from_scenario needs a toy classifier");
    if (size < 2 || !(extent > 0.0)) throw std::invalid_argument("toy2d dataset needs size >= 2, extent > 0");
    return;
  }
  if (generator != "gaussian_blobs" && generator != "ring_vs_disc") {
    throw std::invalid_argument("unknown dataset generator '" + generator + "'");
  }
  if (dim < 2) throw std::invalid_argument("dataset dimension must be >= 2");
  if (classes < 2) throw std::invalid_argument("dataset needs at least two classes");
  if (size < 2) throw std::invalid_argument("dataset needs at least two samples per class");
  if (!(noise >= 0.0)) throw std::invalid_argument("noise must be >= 0");
}

Dataset gaussian_blobs(int dim, int classes, int per_class, double separation, double noise, std::uint64_t seed) {
  Rng centers(RngStream{seed, 0xb10b});
  std::vector<Vector> means;
  for (int c = 0; c < classes; ++c) {
    Vector u = sample_gaussian(dim, centers);
    means.push_back(separation * u / u.norm());
  }
  Dataset data;
  const RngStream base{seed, 0xda7a};
  for (int i = 0; i < per_class; ++i) {
    for (int c = 0; c < classes; ++c) {
      Rng rng(base.child(static_cast<std::uint64_t>(i * classes + c)));
      data.push_back({means[c] + noise * sample_gaussian(dim, rng), c});
    }
  }
  return data;
}

Dataset ring_vs_disc(int dim, int per_class, double noise, std::uint64_t seed) {
  Dataset data;
  const RngStream base{seed, 0x417c};
  for (int i = 0; i < per_class; ++i) {
    for (int c = 0; c < 2; ++c) {
      Rng rng(base.child(static_cast<std::uint64_t>(2 * i + c)));
      Vector dir = sample_gaussian(dim, rng);
      dir /= dir.norm();
      const double radius = c == 0 ? rng.uniform() : 1.5 + rng.uniform();
      data.push_back({radius * dir + noise * sample_gaussian(dim, rng), c});
    }
  }
  return data;
}

Dataset toy2d_dataset(const ToyClassifier2D& toy, int count, double extent, std::uint64_t seed) {
  Dataset data;
  Rng rng(RngStream{seed, 0x2d});
  for (int i = 0; i < count; ++i) {
    Vector x(2);
    x << extent * (2 * rng.uniform() - 1), extent * (2 * rng.uniform() - 1);
    data.push_back({x, toy(x)});
  }
  return data;
}

Dataset load_dataset_csv(std::istream& in) {
  Dataset data;
  std::string line;
  bool first = true;
  long dim = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (first) {
      first = false;
      try {
        parse_double(cells.at(0));
      } catch (const std::exception&) {
        continue;  // header
      }
    }
    if (cells.size() < 2) throw std::runtime_error("dataset row needs features and a label: " + line);
    if (dim < 0) dim = static_cast<long>(cells.size()) - 1;
    if (static_cast<long>(cells.size()) - 1 != dim) throw std::runtime_error("ragged dataset row: " + line);
    LabeledSample s;
    s.x.resize(dim);
    for (long j = 0; j < dim; ++j) s.x[j] = parse_double(cells[j]);
    s.y = std::stoi(cells.back());
    if (s.y < 0 || !s.x.allFinite()) throw std::runtime_error("invalid dataset row: " + line);
    data.push_back(std::move(s));
  }
  return data;
}

void save_dataset_csv(std::ostream& out, const Dataset& data) {
  for (const auto& s : data) {
    for (Eigen::Index j = 0; j < s.x.size(); ++j) out << format_double(s.x[j]) << ',';
    out << s.y << '\n';
  }
}

Dataset make_dataset(const DatasetSpec& spec) {
  spec.validate();
  if (spec.generator == "gaussian_blobs") {
    return gaussian_blobs(spec.dim, spec.classes, spec.size, spec.separation, spec.noise, spec.seed);
  }
  if (spec.generator == "ring_vs_disc") return ring_vs_disc(spec.dim, spec.size, spec.noise, spec.seed);
  if (spec.generator == "toy2d_from_scenario") {
    return toy2d_dataset(toy_from_json(*spec.toy), spec.size, spec.extent, spec.seed);
  }
  std::ifstream in(spec.path);
  if (!in) throw std::runtime_error("cannot open dataset file " + spec.path);
  return load_dataset_csv(in);
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
  DatasetSpec s;
  s.generator = j.value("generator", s.generator);
  s.dim = j.value("dim", s.dim);
  s.classes = j.value("classes", s.classes);
  s.size = j.value("size", s.size);
  s.noise = j.value("noise", s.noise);
  s.separation = j.value("separation", s.separation);
  s.seed = j.value("seed", s.seed);
  s.path = j.value("path", s.path);
  s.extent = j.value("extent", s.extent);
  if (j.contains("toy")) s.toy = j.at("toy");
  s.validate();
  return s;
}

nlohmann::json dataset_spec_to_json(const DatasetSpec& s) {
  nlohmann::json j{{"generator", s.generator}, {"dim", s.dim},   {"classes", s.classes},
                   {"size", s.size},           {"noise", s.noise}, {"separation", s.separation},
                   {"seed", s.seed},           {"extent", s.extent}};
  if (!s.path.empty()) j["path"] = s.path;
  if (s.toy) j["toy"] = *s.toy;
  return j;
}

}  // namespace dirrisk
