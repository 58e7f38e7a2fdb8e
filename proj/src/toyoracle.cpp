#include "dirrisk/toyoracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <nlohmann/json.hpp>

#include "dirrisk/rng.hpp"

namespace dirrisk {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_to_pi(double a) {
  a = std::fmod(a + kPi, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a - kPi;
}

double std_normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }
double std_normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(kTwoPi); }

template <class F>
double composite_gauss(F&& f, double a, double b, int panels) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    total += boost::math::quadrature::gauss<double, 20>::integrate(f, a + k * h, a + (k + 1) * h);
  }
  return total;
}

// Mass on a piece [a, b] inside [-pi, pi].
double piece_mass(double a, double b, double kappa, int panels) {
  double mass = 0.0;
  const double front_a = std::max(a, -kPi / 2), front_b = std::min(b, kPi / 2);
  if (front_b > front_a) {
    mass += (front_b - front_a) * std::exp(-0.5 * kappa * kappa) / kTwoPi;
    if (kappa > 0.0) {
      // s = kappa sin(phi) turns the peaked term into Phi(kappa cos phi) pdf(s) ds.
      const double s_lo = std::max(kappa * std::sin(front_a), -40.0);
      const double s_hi = std::min(kappa * std::sin(front_b), 40.0);
      mass += composite_gauss(
          [kappa](double s) { return std_normal_cdf(std::sqrt(std::max(0.0, kappa * kappa - s * s))) * std_normal_pdf(s); },
          s_lo, s_hi, panels);
    }
  }
  const auto density = [kappa](double phi) { return offset_normal_angle_density(phi, kappa); };
  if (a < -kPi / 2) mass += composite_gauss(density, a, std::min(b, -kPi / 2), panels);
  if (b > kPi / 2) mass += composite_gauss(density, std::max(a, kPi / 2), b, panels);
  return mass;
}

}  // namespace

ToyClassifier2D::ToyClassifier2D(Region region) : region_(std::move(region)) {
  if (const auto* h = std::get_if<HalfPlane>(&region_)) {
    if (h->w.norm() == 0.0 || !h->w.allFinite() || !std::isfinite(h->b)) {
      throw std::invalid_argument("half-plane needs a finite nonzero normal");
    }
  } else if (const auto* w = std::get_if<Wedge>(&region_)) {
    if (!(w->angle_lo < w->angle_hi) || w->angle_hi - w->angle_lo > kTwoPi) {
      throw std::invalid_argument("wedge needs angle_lo < angle_hi <= angle_lo + 2 pi");
    }
  } else if (const auto* d = std::get_if<Disc>(&region_)) {
    if (!(d->radius > 0.0)) throw std::invalid_argument("disc radius must be positive");
  }
}

int ToyClassifier2D::predict(const Point2& p) const {
  if (const auto* h = std::get_if<HalfPlane>(&region_)) return h->w.dot(p) + h->b >= 0.0 ? 1 : 0;
  if (const auto* d = std::get_if<Disc>(&region_)) return (p - d->center).norm() <= d->radius ? 1 : 0;
  const auto& w = std::get<Wedge>(region_);
  const Point2 rel = p - w.apex;
  if (rel.isZero(0.0)) return 1;
  double theta = std::atan2(rel.y(), rel.x());
  double offset = std::fmod(theta - w.angle_lo, kTwoPi);
  if (offset < 0) offset += kTwoPi;
  return offset <= w.angle_hi - w.angle_lo ? 1 : 0;
}

int ToyClassifier2D::operator()(const Vector& x) const {
  if (x.size() != 2) throw std::invalid_argument("toy classifier input must be two-dimensional");
  return predict(Point2(x[0], x[1]));
}

double offset_normal_angle_density(double phi, double kappa) {
  const double a = kappa * std::cos(phi);
  const double sn = kappa * std::sin(phi);
  return std::exp(-0.5 * kappa * kappa) / kTwoPi + a * std_normal_cdf(a) * std_normal_pdf(sn);
}

double offset_normal_arc_mass(double a, double b, double kappa, int panels) {
  if (b < a || b - a > kTwoPi + 1e-12) throw std::invalid_argument("arc must satisfy a <= b <= a + 2 pi");
  if (panels < 1) throw std::invalid_argument("panels must be positive");
  const double length = b - a;
  const double start = wrap_to_pi(a);
  const double end = start + length;
  double mass = piece_mass(start, std::min(end, kPi), kappa, panels);
  if (end > kPi) mass += piece_mass(-kPi, end - kTwoPi, kappa, panels);
  return std::clamp(mass, 0.0, 1.0);
}

std::vector<Arc> failure_arcs(const ToyClassifier2D& toy, const Point2& x, int y, double r, int resolution) {
  if (resolution < 16) throw std::invalid_argument("resolution too small");
  const auto fails = [&](double theta) { return toy.predict(x + r * Point2(std::cos(theta), std::sin(theta))) != y; };
  const double step = kTwoPi / resolution;
  std::vector<char> state(resolution);
  for (int j = 0; j < resolution; ++j) state[j] = fails(j * step) ? 1 : 0;

  const auto refine = [&](double lo, double hi) {  // fails(lo) != fails(hi)
    const bool lo_state = fails(lo);
    for (int k = 0; k < 64; ++k) {
      const double mid = 0.5 * (lo + hi);
      (fails(mid) == lo_state ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  std::vector<double> rises, falls;
  for (int j = 0; j < resolution; ++j) {
    const int next = (j + 1) % resolution;
    if (state[j] == state[next]) continue;
    const double edge = refine(j * step, (j + 1) * step);
    (state[next] ? rises : falls).push_back(edge);
  }
  if (rises.empty()) {
    if (state[0]) return {Arc{0.0, kTwoPi}};
    return {};
  }
  // Pair each rise with the next fall in circular order.
  std::vector<Arc> arcs;
  for (double rise : rises) {
    double best = kTwoPi + 1.0;
    for (double fall : falls) {
      double d = fall - rise;
      if (d < 0) d += kTwoPi;
      best = std::min(best, d);
    }
    arcs.push_back({rise, best});
  }
  return arcs;
}

double oracle_risk_2d(const ToyClassifier2D& toy, const Point2& x, int y, const Point2& v, double kappa, double r,
                      int resolution) {
  if (std::abs(v.norm() - 1.0) > 1e-9) throw std::invalid_argument("direction must be a unit vector");
  if (!(r > 0.0) || kappa < 0.0) throw std::invalid_argument("need r > 0 and kappa >= 0");
  if (resolution < 10000) throw std::invalid_argument("oracle resolution must be at least 1e4");
  const double theta_v = std::atan2(v.y(), v.x());
  const int panels = std::max(1, resolution / 200);
  double risk = 0.0;
  for (const Arc& arc : failure_arcs(toy, x, y, r, resolution)) {
    const double a = arc.start - theta_v;
    risk += offset_normal_arc_mass(a, a + arc.length, kappa, panels);
  }
  return std::clamp(risk, 0.0, 1.0);
}

namespace {

struct View {
  double cx, cy, half;
  double sx(double x) const { return (x - cx + half) / (2 * half) * 400.0; }
  double sy(double y) const { return (cy + half - y) / (2 * half) * 400.0; }
};

std::string region_svg(const ToyClassifier2D& toy, const View& view) {
  std::ostringstream out;
  out << "<g fill=\"#f4b6b6\" fill-opacity=\"0.6\" stroke=\"#b03a3a\">";
  const double far = 8.0 * view.half;
  if (const auto* h = std::get_if<HalfPlane>(&toy.region())) {
    const Point2 n = h->w / h->w.norm();
    const Point2 base = -h->b / h->w.norm() * n;
    const Point2 t(-n.y(), n.x());
    const Point2 pts[4] = {base + far * t, base - far * t, base - far * t + far * n, base + far * t + far * n};
    out << "<polygon points=\"";
    for (const auto& p : pts) out << view.sx(p.x()) << ',' << view.sy(p.y()) << ' ';
    out << "\"/>";
  } else if (const auto* d = std::get_if<Disc>(&toy.region())) {
    out << "<circle cx=\"" << view.sx(d->center.x()) << "\" cy=\"" << view.sy(d->center.y()) << "\" r=\""
        << d->radius / (2 * view.half) * 400.0 << "\"/>";
  } else {
    const auto& w = std::get<Wedge>(toy.region());
    out << "<polygon points=\"" << view.sx(w.apex.x()) << ',' << view.sy(w.apex.y()) << ' ';
    for (int k = 0; k <= 64; ++k) {
      const double a = w.angle_lo + (w.angle_hi - w.angle_lo) * k / 64.0;
      const Point2 p = w.apex + far * Point2(std::cos(a), std::sin(a));
      out << view.sx(p.x()) << ',' << view.sy(p.y()) << ' ';
    }
    out << "\"/>";
  }
  out << "</g>\n";
  return out.str();
}

}  // namespace

Fig2Report replicate_fig2(const Fig2Scenario& sc) {
  Fig2Report report;
  for (const Point2& d : sc.directions) {
    report.risk_per_direction.push_back(oracle_risk_2d(sc.toy, sc.x, sc.y, d.normalized(), sc.kappa, sc.radius,
                                                       sc.resolution));
  }

  const View view{sc.x.x(), sc.x.y(), 2.0 * sc.radius};
  const double rpx = sc.radius / (2 * view.half) * 400.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\">\n"
      << "<rect width=\"400\" height=\"400\" fill=\"white\"/>\n"
      << region_svg(sc.toy, view) << "<circle cx=\"" << view.sx(sc.x.x()) << "\" cy=\"" << view.sy(sc.x.y())
      << "\" r=\"" << rpx << "\" fill=\"none\" stroke=\"#333\" stroke-dasharray=\"4 3\"/>\n";
  for (const Arc& arc : failure_arcs(sc.toy, sc.x, sc.y, sc.radius, sc.resolution)) {
    svg << "<polyline fill=\"none\" stroke=\"#d00\" stroke-width=\"4\" points=\"";
    for (int k = 0; k <= 48; ++k) {
      const double a = arc.start + arc.length * k / 48.0;
      svg << view.sx(sc.x.x() + sc.radius * std::cos(a)) << ',' << view.sy(sc.x.y() + sc.radius * std::sin(a)) << ' ';
    }
    svg << "\"/>\n";
  }
  const char* colors[] = {"#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t k = 0; k < sc.directions.size(); ++k) {
    const Point2 v = sc.directions[k].normalized();
    const char* color = colors[k % 4];
    Rng rng(RngStream{sc.seed, k});
    for (int s = 0; s < sc.scene_samples; ++s) {
      Point2 xi(sc.kappa * v.x() + rng.gaussian(), sc.kappa * v.y() + rng.gaussian());
      if (xi.isZero(0.0)) continue;
      const Point2 p = sc.x + sc.radius * xi.normalized();
      svg << "<circle cx=\"" << view.sx(p.x()) << "\" cy=\"" << view.sy(p.y()) << "\" r=\"2\" fill=\"" << color
          << "\" fill-opacity=\"0.5\"/>\n";
    }
    const Point2 tip = sc.x + sc.radius * v;
    svg << "<line x1=\"" << view.sx(sc.x.x()) << "\" y1=\"" << view.sy(sc.x.y()) << "\" x2=\"" << view.sx(tip.x())
        << "\" y2=\"" << view.sy(tip.y()) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << view.sx(tip.x()) + 4 << "\" y=\"" << view.sy(tip.y()) - 4 << "\" font-size=\"12\" fill=\""
        << color << "\">R=" << report.risk_per_direction[k] << "</text>\n";
  }
  svg << "<circle cx=\"" << view.sx(sc.x.x()) << "\" cy=\"" << view.sy(sc.x.y()) << "\" r=\"3\" fill=\"black\"/>\n"
      << "</svg>\n";
  report.svg_scene = svg.str();
  return report;
}

namespace {
Point2 point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected a 2-element point");
  return Point2(j[0].get<double>(), j[1].get<double>());
}
nlohmann::json point_to_json(const Point2& p) { return nlohmann::json::array({p.x(), p.y()}); }
}  // namespace

ToyClassifier2D toy_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "halfplane") return ToyClassifier2D(HalfPlane{point_from_json(j.at("w")), j.at("b").get<double>()});
  if (kind == "wedge") {
    return ToyClassifier2D(
        Wedge{point_from_json(j.at("apex")), j.at("angle_lo").get<double>(), j.at("angle_hi").get<double>()});
  }
  if (kind == "disc") return ToyClassifier2D(Disc{point_from_json(j.at("center")), j.at("radius").get<double>()});
  throw std::invalid_argument("unknown toy classifier kind '" + kind + "'");
}

nlohmann::json toy_to_json(const ToyClassifier2D& toy) {
  nlohmann::json j;
  if (const auto* h = std::get_if<HalfPlane>(&toy.region())) {
    j = {{"kind", "halfplane"}, {"w", point_to_json(h->w)}, {"b", h->b}};
  } else if (const auto* d = std::get_if<Disc>(&toy.region())) {
    j = {{"kind", "disc"}, {"center", point_to_json(d->center)}, {"radius", d->radius}};
  } else {
    const auto& w = std::get<Wedge>(toy.region());
    j = {{"kind", "wedge"}, {"apex", point_to_json(w.apex)}, {"angle_lo", w.angle_lo}, {"angle_hi", w.angle_hi}};
  }
  return j;
}

Fig2Scenario scenario_from_json(const nlohmann::json& j) {
  Fig2Scenario sc;
  sc.toy = toy_from_json(j.at("toy"));
  sc.x = point_from_json(j.at("x"));
  sc.y = j.value("y", sc.toy.predict(sc.x));
  sc.radius = j.value("radius", 1.0);
  sc.kappa = j.value("kappa", 5.0);
  sc.resolution = j.value("resolution", 20000);
  sc.scene_samples = j.value("scene_samples", 48);
  sc.seed = j.value("seed", std::uint64_t{0});
  for (const auto& d : j.at("directions")) {
    const Point2 p = point_from_json(d);
    if (p.norm() == 0.0) throw std::invalid_argument("scenario direction must be nonzero");
    sc.directions.push_back(p);
  }
  if (!(sc.radius > 0.0) || sc.kappa < 0.0) throw std::invalid_argument("scenario needs radius > 0, kappa >= 0");
  return sc;
}

}  // namespace dirrisk
