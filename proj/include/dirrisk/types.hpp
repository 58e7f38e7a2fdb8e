#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dirrisk {

/// Flat input-space vector (inputs, perturbations, directions, gradients).
using Vector = Eigen::VectorXd;

/// Norm order of a perturbation budget. Only l2 and l-infinity are supported.
enum class Norm { L2, Linf };

Norm parse_norm(std::string_view text);
std::string to_string(Norm p);

/// Closed coordinate-wise domain box, e.g. [0,1] for image-like data.
struct Box {
  double lo = 0.0;
  double hi = 1.0;
};

using Domain = std::optional<Box>;

struct LabeledSample {
  Vector x;
  int y = 0;
};

using Dataset = std::vector<LabeledSample>;

}  // namespace dirrisk
