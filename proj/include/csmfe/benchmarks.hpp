#pragma once

#include "csmfe/io.hpp"
#include "csmfe/mesh.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace csmfe {

// Geometry constants (mm). Values not given in the text were read off the benchmark figures.
namespace geom {
// Cook's membrane: tapered panel, left edge clamped, shear on the right edge.
inline const Vec2 kCook[4] = {Vec2(0, 0), Vec2(48, 44), Vec2(48, 60), Vec2(0, 44)};
constexpr double kCookTraction = 32.0;
// Inhomogeneous compression, right half of a 20 x 10 block; pressure on half of the top edge.
constexpr double kInhomWidth = 10.0, kInhomHeight = 10.0, kInhomLoadedLength = 5.0, kInhomPressure = 600.0;
// Homogeneous compression, right half of a 1 x 1 block.
constexpr double kHomogWidth = 0.5, kHomogHeight = 1.0, kHomogCompression = 0.8;
// Shear block.
constexpr double kShearSize = 1.0, kShearDisp = 0.3;
// Perforated block, upper right quarter of a 1 x 1 block with a hole of diameter 0.5.
constexpr double kPerfHalf = 0.5, kPerfRadius = 0.25, kPerfTopDisp = 1.5;
// Rubber seal, right half: solid 3 x 6 profile with a hole of radius 1 on the axis at mid-height.
constexpr double kSealHalfWidth = 3.0, kSealHeight = 6.0, kSealRadius = 1.0, kSealTopDisp = 2.2;
}  // namespace geom

inline const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names = {"homog_compression", "shear_block", "inhomog_compression",
                                                 "cook",              "rubber_seal", "perforated_block"};
  return names;
}

// Structured quads mapped from the unit square, all split along the same diagonal. Alternating
// diagonals leave interior vertices whose four edges lie on two lines; those carry spurious stress
// modes for this element pair and make the global tangent singular.
class PatchMesher {
public:
  using Map = std::function<Vec2(double xi, double eta)>;

  void add_patch(const Map& map, int n_xi, int n_eta) {
    std::vector<std::vector<int>> id(n_xi + 1, std::vector<int>(n_eta + 1));
    for (int i = 0; i <= n_xi; ++i)
      for (int j = 0; j <= n_eta; ++j) id[i][j] = vertex(map(double(i) / n_xi, double(j) / n_eta));
    for (int i = 0; i < n_xi; ++i)
      for (int j = 0; j < n_eta; ++j) {
        int a = id[i][j], b = id[i + 1][j], c = id[i + 1][j + 1], d = id[i][j + 1];
        tris_.push_back({a, b, c});
        tris_.push_back({a, c, d});
      }
  }

  std::vector<Vec2>& vertices() { return verts_; }
  std::vector<std::array<int, 3>>& triangles() { return tris_; }

private:
  int vertex(const Vec2& p) {
    auto key = std::make_pair(std::llround(p.x() * 1e9), std::llround(p.y() * 1e9));
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(verts_.size());
    verts_.push_back(p);
    index_.emplace(key, id);
    return id;
  }
  std::vector<Vec2> verts_;
  std::vector<std::array<int, 3>> tris_;
  std::map<std::pair<long long, long long>, int> index_;
};

inline double min_angle_deg(const Vec2& a, const Vec2& b, const Vec2& c) {
  auto ang = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    Vec2 u = q - p, v = r - p;
    return std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v));
  };
  double m = std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
  return m * 180.0 / std::numbers::pi;
}

// Moves interior vertices at random while every incident triangle keeps positive area and a
// minimum angle of at least min(25 deg, its value before the move).
inline Mesh jitter_mesh(const Mesh& base, unsigned seed, double amplitude = 0.3, double min_angle = 25.0) {
  std::vector<Vec2> v = base.vertices;
  std::vector<std::array<int, 3>> tris = base.triangles;
  std::vector<char> on_boundary(v.size(), 0);
  for (const auto& e : base.edges)
    if (e.boundary) on_boundary[e.v0] = on_boundary[e.v1] = 1;
  std::vector<std::vector<int>> incident(v.size());
  for (int t = 0; t < static_cast<int>(tris.size()); ++t)
    for (int k : tris[t]) incident[k].push_back(t);

  auto local_quality = [&](int k) {
    double q = 180.0;
    for (int t : incident[k]) {
      const auto& tr = tris[t];
      if (signed_area(v[tr[0]], v[tr[1]], v[tr[2]]) <= 0) return -1.0;
      q = std::min(q, min_angle_deg(v[tr[0]], v[tr[1]], v[tr[2]]));
    }
    return q;
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < static_cast<int>(v.size()); ++k) {
    if (on_boundary[k] || incident[k].empty()) continue;
    double h = 1e300;
    for (int t : incident[k])
      for (int a : tris[t])
        if (a != k) h = std::min(h, (v[a] - v[k]).norm());
    double floor = std::min(min_angle, local_quality(k));
    Vec2 orig = v[k];
    double amp = amplitude * h;
    bool moved = false;
    for (int attempt = 0; attempt < 20 && !moved; ++attempt, amp *= 0.8) {
      Vec2 d(unit(rng), unit(rng));
      v[k] = orig + amp * d;
      if (local_quality(k) >= floor) moved = true;
      else v[k] = orig;
    }
  }
  return build_mesh(std::move(v), std::move(tris));
}

// Grid with n_x * n_y cells giving about `target` triangles; aspect = cell count ratio x/y.
inline std::pair<int, int> grid_for(int target, double aspect, int x_multiple = 1, double shape_weight = 0.05) {
  target = std::max(target, 2);
  std::pair<int, int> best{x_multiple, 1};
  double best_score = 1e300;
  for (int ny = 1; ny <= target; ++ny) {
    for (int nx = x_multiple; nx <= target; nx += x_multiple) {
      double cnt = 2.0 * nx * ny;
      if (cnt > 2.0 * target) break;
      double ratio = (double(nx) / ny) / aspect;
      double score = std::abs(cnt - target) / target + shape_weight * std::abs(std::log(ratio));
      if (score < best_score) {
        best_score = score;
        best = {nx, ny};
      }
    }
  }
  return best;
}

namespace detail {

inline Vec2 bilinear(const Vec2 (&c)[4], double xi, double eta) {
  return (1 - xi) * (1 - eta) * c[0] + xi * (1 - eta) * c[1] + xi * eta * c[2] + (1 - xi) * eta * c[3];
}

// Two-sided grading of [0, 1] toward both ends.
inline double graded(double t, double g) {
  double a = std::pow(t, g), b = std::pow(1 - t, g);
  return a / (a + b);
}

inline PatchMesher::Map rect(double x0, double y0, double x1, double y1) {
  return [=](double xi, double eta) { return Vec2(x0 + (x1 - x0) * xi, y0 + (y1 - y0) * eta); };
}

// Upper right quarter of a square of half-size a with a hole of radius r at `center`:
// two patches between the arc and the outer edges; eta runs from the arc outwards.
inline void add_holed_quarter(PatchMesher& pm, const Vec2& center, double a, double r, int n_arc, int n_rad,
                              double ysign) {
  const double q = std::numbers::pi / 4;
  auto arc = [=](double th) { return Vec2(r * std::cos(th), ysign * r * std::sin(th)); };
  auto right = [=](double xi, double eta) {
    Vec2 outer(a, ysign * a * xi);
    return Vec2(center + (1 - eta) * arc(q * xi) + eta * outer);
  };
  auto top = [=](double xi, double eta) {
    Vec2 outer(a * (1 - xi), ysign * a);
    return Vec2(center + (1 - eta) * arc(q + q * xi) + eta * outer);
  };
  pm.add_patch(right, n_arc, n_rad);
  pm.add_patch(top, n_arc, n_rad);
}

inline std::pair<int, int> holed_counts(int target, int quarters) {
  // triangles = quarters * 2 patches * 2 * n_arc * n_rad
  return grid_for(std::max(1, target / (2 * quarters)), 1.0);
}

}  // namespace detail

// seed == 0 gives the structured mesh; any other seed gives the jittered (irregular) variant.
inline Mesh generate_benchmark_mesh(const std::string& name, int elements, unsigned seed = 0) {
  if (elements < 1) throw Error("generate_benchmark_mesh: element count must be positive");
  PatchMesher pm;
  if (name == "cook") {
    // graded toward the edges: the corners are singular and a uniform grid converges at first order there
    auto [nx, ny] = grid_for(elements, 1.0, 1, 0.2);
    pm.add_patch(
        [](double xi, double eta) {
          return detail::bilinear(geom::kCook, detail::graded(xi, 1.75), detail::graded(eta, 1.75));
        },
        nx, ny);
  } else if (name == "inhomog_compression") {
    auto [nx, ny] = grid_for(elements, 1.0, 2);
    pm.add_patch(detail::rect(0, 0, geom::kInhomWidth, geom::kInhomHeight), nx, ny);
  } else if (name == "homog_compression") {
    auto [nx, ny] = grid_for(elements, 0.5);
    pm.add_patch(detail::rect(0, 0, geom::kHomogWidth, geom::kHomogHeight), nx, ny);
  } else if (name == "shear_block") {
    auto [nx, ny] = grid_for(elements, 1.0);
    pm.add_patch(detail::rect(0, 0, geom::kShearSize, geom::kShearSize), nx, ny);
  } else if (name == "perforated_block") {
    auto [na, nr] = detail::holed_counts(elements, 1);
    detail::add_holed_quarter(pm, Vec2(0, 0), geom::kPerfHalf, geom::kPerfRadius, na, nr, 1.0);
  } else if (name == "rubber_seal") {
    auto [na, nr] = detail::holed_counts(elements, 2);
    const double h = 0.5 * geom::kSealHeight;
    detail::add_holed_quarter(pm, Vec2(0, h), geom::kSealHalfWidth, geom::kSealRadius, na, nr, 1.0);
    detail::add_holed_quarter(pm, Vec2(0, h), geom::kSealHalfWidth, geom::kSealRadius, na, nr, -1.0);
  } else {
    throw Error("unknown benchmark '" + name + "'");
  }
  Mesh m = build_mesh(std::move(pm.vertices()), std::move(pm.triangles()));
  if (seed != 0) m = jitter_mesh(m, seed);
  return m;
}

// Average of the longest triangle edge.
inline double mesh_size(const Mesh& m) {
  double s = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    double l = 0.0;
    for (int i = 0; i < 3; ++i) l = std::max(l, m.edges[m.tri_edges[t][i]].length);
    s += l;
  }
  return m.n_triangles() ? s / m.n_triangles() : 0.0;
}

struct BenchmarkInfo {
  std::string monitor_label;  // what the headline number is
  bool headline_is_reaction = false;
  double reference_value = std::nan("");
  int reference_steps = 1;
  int default_steps = 1;
};

inline BenchmarkInfo benchmark_info(const std::string& name) {
  if (name == "cook") return {"vertical displacement of point A (mm)", false, 21.42, 1000, 100};
  if (name == "inhomog_compression") return {"vertical displacement of point A (mm)", false, 6.493, 1000, 100};
  if (name == "homog_compression") return {"top edge load (N)", true, std::nan(""), 100, 40};
  if (name == "shear_block") return {"horizontal load on top edge (N)", true, std::nan(""), 30, 10};
  if (name == "perforated_block") return {"top edge load (N)", true, 14.31, 1500, 150};
  if (name == "rubber_seal") return {"top edge load (N)", true, 110.43, 220, 110};
  throw Error("unknown benchmark '" + name + "'");
}

inline Material benchmark_material(const std::string& name, const std::string& model = "") {
  const double mu_a = 80.194, kappa_a = 400889.8;
  const double mu_b = 80.2, kappa_b = 40000.0;
  auto ogden3 = [] { return Material::ogden({0.63, 0.0012, -0.01}, {1.3, 5.0, -2.0}, 1000.0); };
  if (name == "cook") {
    if (model.empty() || model == "nh1") return Material::nh1(mu_a, kappa_a);
    if (model == "nh2") return Material::nh2(mu_a, kappa_a);
  } else if (name == "inhomog_compression") {
    if (model.empty() || model == "nh2") return Material::nh2(mu_a, kappa_a);
    if (model == "nh1") return Material::nh1(mu_a, kappa_a);
  } else if (name == "homog_compression" || name == "shear_block") {
    if (model.empty() || model == "nh1") return Material::nh1(mu_b, kappa_b);
    if (model == "nh2") return Material::nh2(mu_b, kappa_b);
  } else if (name == "perforated_block") {
    if (model.empty() || model == "nh1") return Material::nh1(10.0, 1000.0);
    if (model == "nh2") return Material::nh2(10.0, 1000.0);
  } else if (name == "rubber_seal") {
    if (model.empty() || model == "nh1") return Material::nh1(mu_a, kappa_a);
    if (model == "ogden") return ogden3();
  } else {
    throw Error("unknown benchmark '" + name + "'");
  }
  if (model == "ogden") return ogden3();
  throw Error("unknown material model '" + model + "' (use nh1, nh2 or ogden)");
}

inline ProblemConfig make_benchmark(const std::string& name, int elements, unsigned seed = 0,
                                    const std::string& model = "", int steps = 0) {
  ProblemConfig c;
  c.name = name;
  c.mesh = generate_benchmark_mesh(name, elements, seed);
  c.material = benchmark_material(name, model);
  BenchmarkInfo info = benchmark_info(name);
  c.solver.n_load_steps = steps > 0 ? steps : info.default_steps;
  auto fix = [&](Selector s, int comp, double val = 0.0) { c.constraints.push_back({s, comp, val}); };
  if (name == "cook") {
    fix(Selector::x(0), 0);
    fix(Selector::x(0), 1);
    c.tractions.push_back({Selector::x(48), Vec2(0, geom::kCookTraction), std::nullopt});
    c.monitor = {Selector::point(48, 60), 1, true};
    c.reaction = {Selector::x(0), 1, true};
  } else if (name == "inhomog_compression") {
    fix(Selector::y(0), 1);
    fix(Selector::x(0), 0);
    fix(Selector::y(geom::kInhomHeight), 0);
    c.tractions.push_back({Selector::box(0, geom::kInhomHeight, geom::kInhomLoadedLength, geom::kInhomHeight),
                           Vec2(0, -geom::kInhomPressure), std::nullopt});
    c.monitor = {Selector::point(0, geom::kInhomHeight), 1, true};
    c.reaction = {Selector::y(0), 1, true};
  } else if (name == "homog_compression") {
    fix(Selector::y(0), 1);
    fix(Selector::x(0), 0);
    fix(Selector::y(geom::kHomogHeight), 1, -geom::kHomogCompression * geom::kHomogHeight);
    c.monitor = {Selector::point(0, geom::kHomogHeight), 1, true};
    c.reaction = {Selector::y(geom::kHomogHeight), 1, true};
  } else if (name == "shear_block") {
    fix(Selector::y(0), 0);
    fix(Selector::y(0), 1);
    fix(Selector::y(geom::kShearSize), 0, geom::kShearDisp);
    fix(Selector::y(geom::kShearSize), 1);
    c.monitor = {Selector::point(0, geom::kShearSize), 0, true};
    c.reaction = {Selector::y(geom::kShearSize), 0, true};
  } else if (name == "perforated_block") {
    fix(Selector::x(0), 0);
    fix(Selector::y(0), 1);
    fix(Selector::y(geom::kPerfHalf), 0);
    fix(Selector::y(geom::kPerfHalf), 1, geom::kPerfTopDisp);
    c.monitor = {Selector::point(geom::kPerfHalf, geom::kPerfHalf), 1, true};
    c.reaction = {Selector::y(geom::kPerfHalf), 1, true};
  } else if (name == "rubber_seal") {
    fix(Selector::y(0), 0);
    fix(Selector::y(0), 1);
    fix(Selector::x(0), 0);
    fix(Selector::y(geom::kSealHeight), 0);
    fix(Selector::y(geom::kSealHeight), 1, -geom::kSealTopDisp);
    c.monitor = {Selector::point(0, geom::kSealHeight), 1, true};
    c.reaction = {Selector::y(geom::kSealHeight), 1, true};
  }
  return c;
}

inline void register_benchmark_generator() {
  mesh_generator_hook() = [](const std::string& n, int e, unsigned s) { return generate_benchmark_mesh(n, e, s); };
}

}  // namespace csmfe
