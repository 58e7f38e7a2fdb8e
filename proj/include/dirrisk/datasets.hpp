#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dirrisk/toyoracle.hpp"
#include "dirrisk/types.hpp"

namespace dirrisk {

/// Synthetic or file-backed dataset description.
///
/// generator is one of gaussian_blobs, ring_vs_disc, toy2d_from_scenario,
/// csv_file. `size` counts samples per class for the generators.
struct DatasetSpec {
  std::string generator = "gaussian_blobs";
  int dim = 64;
  int classes = 2;
  int size = 500;
  double noise = 1.0;
  double separation = 3.0;
  std::uint64_t seed = 0;
  std::string path;                    // csv_file
  std::optional<nlohmann::json> toy;   // toy2d_from_scenario
  double extent = 2.0;                 // toy2d_from_scenario sampling box half-width

  void validate() const;
};

/// Gaussian clusters: class c is centered at separation * u_c for a random
/// unit vector u_c, with isotropic noise of standard deviation `noise`.
Dataset gaussian_blobs(int dim, int classes, int per_class, double separation, double noise, std::uint64_t seed);

/// Class 0 fills the unit ball, class 1 the shell 1.5 <= ||x|| <= 2.5, both
/// blurred by `noise`.
Dataset ring_vs_disc(int dim, int per_class, double noise, std::uint64_t seed);

/// Uniform points in [-extent, extent]^2 labelled by a toy classifier.
Dataset toy2d_dataset(const ToyClassifier2D& toy, int count, double extent, std::uint64_t seed);

/// Rows "f0,...,f{D-1},label"; an optional non-numeric header line is skipped.
Dataset load_dataset_csv(std::istream& in);
void save_dataset_csv(std::ostream& out, const Dataset& data);

Dataset make_dataset(const DatasetSpec& spec);

DatasetSpec dataset_spec_from_json(const nlohmann::json& j);
nlohmann::json dataset_spec_to_json(const DatasetSpec& spec);

}  // namespace dirrisk
