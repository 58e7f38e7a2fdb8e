#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dirrisk/types.hpp"

namespace dirrisk {

using Point2 = Eigen::Vector2d;

/// Class 1 iff w . p + b >= 0.
struct HalfPlane {
  Point2 w;
  double b = 0.0;
};

/// Class 1 iff the polar angle of p - apex lies in [angle_lo, angle_hi] (mod 2 pi).
struct Wedge {
  Point2 apex;
  double angle_lo = 0.0;
  double angle_hi = 0.0;
};

/// Class 1 iff ||p - center|| <= radius.
struct Disc {
  Point2 center;
  double radius = 1.0;
};

/// Analytic two-class classifier in the plane. Class 1 is the closed region,
/// so boundary points belong to class 1.
class ToyClassifier2D {
 public:
  using Region = std::variant<HalfPlane, Wedge, Disc>;

  explicit ToyClassifier2D(Region region);

  int predict(const Point2& point) const;
  /// Predictor-compatible overload; x must be two-dimensional.
  int operator()(const Vector& x) const;

  const Region& region() const { return region_; }

 private:
  Region region_;
};

/// Density of the polar angle of xi ~ N(kappa v, I_2), measured from v.
double offset_normal_angle_density(double phi, double kappa);

/// Probability mass of that angle over [a, b] (radians relative to v,
/// a <= b <= a + 2 pi). `panels` Gauss-Legendre panels per smooth piece.
double offset_normal_arc_mass(double a, double b, double kappa, int panels);

/// Closed arc [start, start + length] of absolute polar angles.
struct Arc {
  double start = 0.0;
  double length = 0.0;
};

/// Arcs of the radius-r circle around x on which toy.predict != y. Found by
/// scanning `resolution` equally spaced angles and bisecting each change.
std::vector<Arc> failure_arcs(const ToyClassifier2D& toy, const Point2& x, int y, double r, int resolution);

/// Directional risk at D = 2, p = 2 by deterministic quadrature of the
/// misclassification indicator against the offset-normal angle density.
double oracle_risk_2d(const ToyClassifier2D& toy, const Point2& x, int y, const Point2& v, double kappa, double r,
                      int resolution = 20000);

struct Fig2Scenario {
  ToyClassifier2D toy{HalfPlane{Point2(1, 0), 0.0}};
  Point2 x = Point2::Zero();
  int y = 0;
  double radius = 1.0;
  double kappa = 5.0;
  std::vector<Point2> directions;
  int resolution = 20000;
  /// Sampled directions drawn per arrow in the SVG scene.
  int scene_samples = 48;
  std::uint64_t seed = 0;
};

struct Fig2Report {
  std::vector<double> risk_per_direction;
  std::string svg_scene;
};

/// Oracle risk of each direction plus an SVG rendering of the scene: the
/// decision region, the sphere, its failure arcs, each direction and a few
/// directional samples around it.
Fig2Report replicate_fig2(const Fig2Scenario& scenario);

ToyClassifier2D toy_from_json(const nlohmann::json& j);
nlohmann::json toy_to_json(const ToyClassifier2D& toy);
Fig2Scenario scenario_from_json(const nlohmann::json& j);

}  // namespace dirrisk
