#pragma once

#include "csmfe/common.hpp"
#include "csmfe/element.hpp"
#include "csmfe/materials.hpp"
#include "csmfe/mesh.hpp"
#include "csmfe/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace csmfe {

using json = nlohmann::json;

// Point sets on the reference geometry. Tolerance is relative to the mesh diameter.
struct Selector {
  enum class Kind { All, X, Y, Box, Point, Circle };
  Kind kind = Kind::All;
  std::array<double, 4> v{0, 0, 0, 0};

  static Selector all() { return {}; }
  static Selector x(double x0) { return {Kind::X, {x0, 0, 0, 0}}; }
  static Selector y(double y0) { return {Kind::Y, {y0, 0, 0, 0}}; }
  static Selector box(double x0, double y0, double x1, double y1) { return {Kind::Box, {x0, y0, x1, y1}}; }
  static Selector point(double x0, double y0) { return {Kind::Point, {x0, y0, 0, 0}}; }
  static Selector circle(double cx, double cy, double r) { return {Kind::Circle, {cx, cy, r, 0}}; }

  bool matches(const Vec2& p, double tol) const {
    switch (kind) {
      case Kind::All: return true;
      case Kind::X: return std::abs(p.x() - v[0]) <= tol;
      case Kind::Y: return std::abs(p.y() - v[0]) <= tol;
      case Kind::Box:
        return p.x() >= v[0] - tol && p.x() <= v[2] + tol && p.y() >= v[1] - tol && p.y() <= v[3] + tol;
      case Kind::Point: return (p - Vec2(v[0], v[1])).norm() <= tol;
      case Kind::Circle: return std::abs((p - Vec2(v[0], v[1])).norm() - v[2]) <= tol;
    }
    return false;
  }
};

inline double selector_tol(const Mesh& m) { return 1e-8 * std::max(m.diameter, 1e-300); }

inline std::vector<int> select_nodes(const Mesh& m, const Selector& s) {
  std::vector<int> out;
  const double tol = selector_tol(m);
  for (int n = 0; n < m.n_nodes(); ++n)
    if (s.matches(m.node(n), tol)) out.push_back(n);
  return out;
}

// Boundary edges whose end points and mid-point all match.
inline std::vector<int> select_boundary_edges(const Mesh& m, const Selector& s) {
  std::vector<int> out;
  const double tol = selector_tol(m);
  for (int e = 0; e < m.n_edges(); ++e) {
    const Edge& ed = m.edges[e];
    if (!ed.boundary) continue;
    if (s.matches(m.vertices[ed.v0], tol) && s.matches(m.vertices[ed.v1], tol) && s.matches(ed.midpoint, tol))
      out.push_back(e);
  }
  return out;
}

// Outward unit normal of a boundary edge in the reference configuration.
inline Vec2 outward_normal(const Mesh& m, int e) {
  int t = m.edges[e].tris[0];
  for (int i = 1; i <= 3; ++i)
    if (m.tri_edges[t][i - 1] == e) return m.local_normal(t, i);
  throw Error("outward_normal: inconsistent edge table");
}

struct DirichletSpec {
  Selector select;
  int component = 0;
  double value = 0.0;
};

struct RawConstraint {
  int dof = -1;
  double value = 0.0;
};

struct TractionSpec {
  Selector select;
  Vec2 vector = Vec2::Zero();
  std::optional<double> pressure;  // dead pressure along the reference inward normal
};

struct MonitorSpec {
  Selector select = Selector::all();
  int component = 1;
  bool enabled = false;
};

struct ProblemConfig {
  std::string name = "problem";
  Mesh mesh;
  Material material = Material::nh1(1.0, 1.0);
  std::vector<DirichletSpec> constraints;
  std::vector<RawConstraint> raw_constraints;
  std::vector<TractionSpec> tractions;
  Vec2 body_force = Vec2::Zero();
  SolverConfig solver;
  MonitorSpec monitor;   // a single point
  MonitorSpec reaction;  // constrained nodes whose reactions are summed
  bool write_vtk = true;
  bool write_csv = true;
};

struct BuiltProblem {
  Problem problem;
  int monitor_dof = -1;
  std::vector<int> reaction_dofs;
  Vec2 load_resultant = Vec2::Zero();  // sum of applied tractions at load factor 1
};

inline BuiltProblem build_problem(const ProblemConfig& c) {
  BuiltProblem b;
  Problem& p = b.problem;
  p.mesh = c.mesh;
  p.dofs = build_dof_map(p.mesh);
  c.material.validate();
  p.material = c.material;
  p.body_force = c.body_force;

  std::map<int, double> fixed;
  for (size_t k = 0; k < c.constraints.size(); ++k) {
    const auto& d = c.constraints[k];
    if (d.component < 0 || d.component > 1) throw Error("constraint " + std::to_string(k) + ": component must be 0 or 1");
    auto nodes = select_nodes(p.mesh, d.select);
    if (nodes.empty()) throw Error("constraint " + std::to_string(k) + ": selector matches no node");
    for (int n : nodes) fixed[p.dofs.u_index(n, d.component)] = d.value;
  }
  for (const auto& r : c.raw_constraints) {
    if (!p.dofs.is_u(r.dof))
      throw Error("constraint on dof " + std::to_string(r.dof) + " rejected: only displacement dofs can be prescribed");
    fixed[r.dof] = r.value;
  }
  for (const auto& [dof, val] : fixed) p.constraints.push_back({dof, val});

  for (size_t k = 0; k < c.tractions.size(); ++k) {
    const auto& t = c.tractions[k];
    auto edges = select_boundary_edges(p.mesh, t.select);
    if (edges.empty()) throw Error("traction " + std::to_string(k) + ": selector matches no boundary edge");
    for (int e : edges) {
      Vec2 tr = t.pressure ? Vec2(-*t.pressure * outward_normal(p.mesh, e)) : t.vector;
      p.tractions.push_back({e, tr});
      b.load_resultant += tr * p.mesh.edges[e].length;
    }
  }

  if (c.monitor.enabled) {
    auto nodes = select_nodes(p.mesh, c.monitor.select);
    if (nodes.empty()) throw Error("monitor: selector matches no node");
    b.monitor_dof = p.dofs.u_index(nodes.front(), c.monitor.component);
  }
  if (c.reaction.enabled) {
    for (int n : select_nodes(p.mesh, c.reaction.select)) {
      int d = p.dofs.u_index(n, c.reaction.component);
      if (fixed.count(d)) b.reaction_dofs.push_back(d);
    }
    if (b.reaction_dofs.empty()) throw Error("reaction: selector matches no constrained dof");
  }
  return b;
}

// ---------------------------------------------------------------- JSON input

namespace detail {

[[noreturn]] inline void schema_error(const std::string& ptr, const std::string& msg) {
  throw Error("schema error at " + (ptr.empty() ? std::string("/") : ptr) + ": " + msg);
}

inline double get_number(const json& j, const std::string& ptr) {
  if (!j.is_number()) schema_error(ptr, "expected a number");
  return j.get<double>();
}

inline Vec2 get_vec2(const json& j, const std::string& ptr) {
  if (!j.is_array() || j.size() != 2) schema_error(ptr, "expected [x, y]");
  return Vec2(get_number(j[0], ptr + "/0"), get_number(j[1], ptr + "/1"));
}

inline int get_component(const json& j, const std::string& ptr) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "x") return 0;
    if (s == "y") return 1;
  } else if (j.is_number_integer()) {
    int c = j.get<int>();
    if (c == 0 || c == 1) return c;
  }
  schema_error(ptr, "expected \"x\", \"y\", 0 or 1");
}

inline Selector get_selector(const json& j, const std::string& ptr) {
  if (j.is_string() && j.get<std::string>() == "all") return Selector::all();
  if (!j.is_object() || j.size() != 1) schema_error(ptr, "selector must be \"all\" or an object with one key");
  auto it = j.begin();
  const std::string key = it.key();
  const std::string sub = ptr + "/" + key;
  auto arr = [&](size_t n) {
    if (!it->is_array() || it->size() != n) schema_error(sub, "expected an array of " + std::to_string(n) + " numbers");
    std::array<double, 4> v{0, 0, 0, 0};
    for (size_t k = 0; k < n; ++k) v[k] = get_number((*it)[k], sub + "/" + std::to_string(k));
    return v;
  };
  if (key == "x") return Selector::x(get_number(*it, sub));
  if (key == "y") return Selector::y(get_number(*it, sub));
  if (key == "box") {
    auto v = arr(4);
    return Selector::box(v[0], v[1], v[2], v[3]);
  }
  if (key == "point") {
    auto v = arr(2);
    return Selector::point(v[0], v[1]);
  }
  if (key == "circle") {
    auto v = arr(3);
    return Selector::circle(v[0], v[1], v[2]);
  }
  schema_error(sub, "unknown selector kind (use x, y, box, point, circle)");
}

}  // namespace detail

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline Mesh mesh_from_json(const json& j, const std::string& ptr = "") {
  if (!j.is_object()) detail::schema_error(ptr, "mesh must be an object");
  if (!j.contains("vertices") || !j["vertices"].is_array()) detail::schema_error(ptr + "/vertices", "missing array");
  if (!j.contains("triangles") || !j["triangles"].is_array()) detail::schema_error(ptr + "/triangles", "missing array");
  std::vector<Vec2> v;
  for (size_t k = 0; k < j["vertices"].size(); ++k)
    v.push_back(detail::get_vec2(j["vertices"][k], ptr + "/vertices/" + std::to_string(k)));
  std::vector<std::array<int, 3>> t;
  for (size_t k = 0; k < j["triangles"].size(); ++k) {
    const json& tj = j["triangles"][k];
    std::string tp = ptr + "/triangles/" + std::to_string(k);
    if (!tj.is_array() || tj.size() != 3) detail::schema_error(tp, "expected [i, j, k]");
    std::array<int, 3> tri{};
    for (int a = 0; a < 3; ++a) {
      if (!tj[a].is_number_integer()) detail::schema_error(tp + "/" + std::to_string(a), "expected an integer");
      tri[a] = tj[a].get<int>();
    }
    t.push_back(tri);
  }
  return build_mesh(std::move(v), std::move(t));
}

inline Mesh load_mesh(const std::string& path) { return mesh_from_json(read_json_file(path)); }

inline json mesh_to_json(const Mesh& m) {
  json j;
  j["vertices"] = json::array();
  for (const auto& p : m.vertices) j["vertices"].push_back({p.x(), p.y()});
  j["triangles"] = json::array();
  for (const auto& t : m.triangles) j["triangles"].push_back({t[0], t[1], t[2]});
  return j;
}

inline void write_mesh(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << std::setprecision(17) << mesh_to_json(m).dump() << "\n";
}

inline Material material_from_json(const json& j, const std::string& ptr) {
  if (!j.is_object()) detail::schema_error(ptr, "material must be an object");
  if (!j.contains("model") || !j["model"].is_string()) detail::schema_error(ptr + "/model", "expected nh1, nh2 or ogden");
  std::string model = j["model"].get<std::string>();
  if (!j.contains("kappa")) detail::schema_error(ptr + "/kappa", "missing");
  double kappa = detail::get_number(j["kappa"], ptr + "/kappa");
  Material m;
  if (model == "nh1" || model == "nh2") {
    if (!j.contains("mu")) detail::schema_error(ptr + "/mu", "missing");
    double mu = detail::get_number(j["mu"], ptr + "/mu");
    m = model == "nh1" ? Material::nh1(mu, kappa) : Material::nh2(mu, kappa);
  } else if (model == "ogden") {
    std::vector<double> mus, alphas;
    for (const char* key : {"mu", "alpha"}) {
      std::string kp = ptr + "/" + key;
      if (!j.contains(key) || !j[key].is_array()) detail::schema_error(kp, "expected an array");
      auto& dst = std::string(key) == "mu" ? mus : alphas;
      for (size_t k = 0; k < j[key].size(); ++k) dst.push_back(detail::get_number(j[key][k], kp + "/" + std::to_string(k)));
    }
    m = Material::ogden(mus, alphas, kappa);
  } else {
    detail::schema_error(ptr + "/model", "unknown model '" + model + "'");
  }
  try {
    m.validate();
  } catch (const Error& e) {
    detail::schema_error(ptr, e.what());
  }
  return m;
}

// Benchmark mesh generator hook, set by benchmarks.hpp so that configs can name a generator.
using MeshGenerator = std::function<Mesh(const std::string& name, int elements, unsigned seed)>;
inline MeshGenerator& mesh_generator_hook() {
  static MeshGenerator g;
  return g;
}

inline ProblemConfig problem_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  using detail::schema_error;
  if (!j.is_object()) schema_error("", "config must be an object");
  ProblemConfig c;
  if (j.contains("name")) c.name = j["name"].get<std::string>();

  if (!j.contains("mesh")) schema_error("/mesh", "missing");
  const json& mj = j["mesh"];
  if (mj.is_object() && mj.contains("file")) {
    std::filesystem::path f = mj["file"].get<std::string>();
    if (f.is_relative()) f = base_dir / f;
    c.mesh = load_mesh(f.string());
  } else if (mj.is_object() && mj.contains("benchmark")) {
    if (!mesh_generator_hook()) schema_error("/mesh/benchmark", "no benchmark generator available");
    int n = mj.contains("elements") ? mj["elements"].get<int>() : 0;
    unsigned seed = mj.contains("seed") ? mj["seed"].get<unsigned>() : 0u;
    c.mesh = mesh_generator_hook()(mj["benchmark"].get<std::string>(), n, seed);
  } else {
    c.mesh = mesh_from_json(mj, "/mesh");
  }

  if (!j.contains("material")) schema_error("/material", "missing");
  c.material = material_from_json(j["material"], "/material");
  if (c.material.type != MaterialType::Ogden && c.material.kappa / c.material.mu < 10.0)
    std::cerr << "warning: kappa/mu = " << c.material.kappa / c.material.mu << " (units are mm, MPa, N)\n";

  if (j.contains("constraints")) {
    const json& cj = j["constraints"];
    if (!cj.is_array()) schema_error("/constraints", "expected an array");
    for (size_t k = 0; k < cj.size(); ++k) {
      std::string p = "/constraints/" + std::to_string(k);
      const json& e = cj[k];
      if (!e.is_object()) schema_error(p, "expected an object");
      double val = e.contains("value") ? detail::get_number(e["value"], p + "/value") : 0.0;
      if (e.contains("dof")) {
        if (!e["dof"].is_number_integer()) schema_error(p + "/dof", "expected an integer");
        int dof = e["dof"].get<int>();
        DofMap d = build_dof_map(c.mesh);
        if (!d.is_u(dof))
          schema_error(p + "/dof", "dof " + std::to_string(dof) + " is not a displacement dof; only displacements can be prescribed");
        c.raw_constraints.push_back({dof, val});
        continue;
      }
      if (e.contains("field") && e["field"] != "u")
        schema_error(p + "/field", "only displacement (u) can be prescribed");
      if (!e.contains("select")) schema_error(p + "/select", "missing");
      if (!e.contains("component")) schema_error(p + "/component", "missing");
      c.constraints.push_back({detail::get_selector(e["select"], p + "/select"),
                               detail::get_component(e["component"], p + "/component"), val});
    }
  }
  if (j.contains("tractions")) {
    const json& tj = j["tractions"];
    if (!tj.is_array()) schema_error("/tractions", "expected an array");
    for (size_t k = 0; k < tj.size(); ++k) {
      std::string p = "/tractions/" + std::to_string(k);
      const json& e = tj[k];
      if (!e.is_object() || !e.contains("select")) schema_error(p, "expected an object with select");
      TractionSpec t;
      t.select = detail::get_selector(e["select"], p + "/select");
      if (e.contains("pressure")) t.pressure = detail::get_number(e["pressure"], p + "/pressure");
      else if (e.contains("vector")) t.vector = detail::get_vec2(e["vector"], p + "/vector");
      else schema_error(p, "expected vector or pressure");
      c.tractions.push_back(t);
    }
  }
  if (j.contains("body_force")) c.body_force = detail::get_vec2(j["body_force"], "/body_force");
  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (s.contains("load_steps")) c.solver.n_load_steps = s["load_steps"].get<int>();
    if (s.contains("tol")) c.solver.tol = detail::get_number(s["tol"], "/solver/tol");
    if (s.contains("max_iters")) c.solver.max_iters = s["max_iters"].get<int>();
    if (s.contains("retry_halve")) c.solver.retry_halve = s["retry_halve"].get<bool>();
    if (c.solver.n_load_steps < 1) schema_error("/solver/load_steps", "must be >= 1");
    if (!(c.solver.tol > 0)) schema_error("/solver/tol", "must be positive");
  }
  for (const char* key : {"monitor", "reaction"}) {
    if (!j.contains(key)) continue;
    std::string p = std::string("/") + key;
    MonitorSpec& m = std::string(key) == "monitor" ? c.monitor : c.reaction;
    m.select = detail::get_selector(j[key]["select"], p + "/select");
    m.component = detail::get_component(j[key]["component"], p + "/component");
    m.enabled = true;
  }
  if (j.contains("output")) {
    if (j["output"].contains("vtk")) c.write_vtk = j["output"]["vtk"].get<bool>();
    if (j["output"].contains("csv")) c.write_csv = j["output"]["csv"].get<bool>();
  }
  return c;
}

inline ProblemConfig load_problem(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error("config file not found: " + path);
  return problem_from_json(read_json_file(path), std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------- results

struct Sample {
  int step = 0;
  double load_factor = 0.0;
  double monitored = 0.0;
  double reaction = 0.0;
  double applied = 0.0;
};

struct ResultBundle {
  std::vector<Sample> samples;
  SolveResult solve;
  std::vector<std::array<Mat2, 13>> qp_tau;  // per element, per quadrature point
  MatX nodal_tau;                            // n_nodes x 3: tau11, tau22, tau12
  double mean_iterations() const {
    return solve.steps.empty() ? 0.0 : static_cast<double>(solve.total_iterations()) / solve.steps.size();
  }
};

inline std::vector<std::array<Mat2, 13>> quadrature_stresses(const Problem& p, const VecX& U) {
  std::vector<std::array<Mat2, 13>> out(p.mesh.n_triangles());
  const TriangleRule& rule = triangle_rule_13();
  for (int t = 0; t < p.mesh.n_triangles(); ++t) {
    ElementGeometry g(p.mesh, t);
    ElemVec x = gather(U, element_dofs(p.mesh, p.dofs, t));
    for (int q = 0; q < 13; ++q) out[t][q] = interpolation_matrices(g, x, rule.points[q].x(), rule.points[q].y()).tau;
  }
  return out;
}

// Least-squares fit of the quadrature values to a P2 field per element, averaged at shared nodes.
inline MatX extrapolate_to_nodes(const Mesh& m, const std::vector<std::array<Mat2, 13>>& qp) {
  const TriangleRule& rule = triangle_rule_13();
  Eigen::Matrix<double, 13, 6> A;
  for (int q = 0; q < 13; ++q) {
    P2Values v = lagrange_p2(rule.points[q].x(), rule.points[q].y());
    for (int n = 0; n < 6; ++n) A(q, n) = v.N[n];
  }
  Eigen::Matrix<double, 6, 13> fit = (A.transpose() * A).inverse() * A.transpose();
  MatX sum = MatX::Zero(m.n_nodes(), 3);
  VecX cnt = VecX::Zero(m.n_nodes());
  for (int t = 0; t < m.n_triangles(); ++t) {
    Eigen::Matrix<double, 13, 3> vals;
    for (int q = 0; q < 13; ++q) vals.row(q) << qp[t][q](0, 0), qp[t][q](1, 1), qp[t][q](0, 1);
    Eigen::Matrix<double, 6, 3> nod = fit * vals;
    auto nodes = m.p2_nodes(t);
    for (int n = 0; n < 6; ++n) {
      sum.row(nodes[n]) += nod.row(n);
      cnt(nodes[n]) += 1;
    }
  }
  for (int n = 0; n < m.n_nodes(); ++n)
    if (cnt(n) > 0) sum.row(n) /= cnt(n);
  return sum;
}

inline double sum_reactions(const Problem& p, const VecX& U, double lambda, const std::vector<int>& dofs) {
  if (dofs.empty()) return 0.0;
  VecX r = reactions(p, U, lambda);
  double s = 0.0;
  for (int d : dofs) s += r(d);
  return s;
}

inline ResultBundle run_problem(const BuiltProblem& b, const SolverConfig& cfg, int reaction_component = 1) {
  ResultBundle res;
  res.samples.push_back({0, 0.0, 0.0, 0.0, 0.0});
  auto cb = [&](const StepRecord& s, const VecX& U) {
    Sample smp;
    smp.step = s.step;
    smp.load_factor = s.load_factor;
    smp.monitored = b.monitor_dof >= 0 ? U(b.monitor_dof) : 0.0;
    smp.reaction = sum_reactions(b.problem, U, s.load_factor, b.reaction_dofs);
    smp.applied = s.load_factor * b.load_resultant(reaction_component);
    res.samples.push_back(smp);
  };
  res.solve = newton_solve(b.problem, cfg, cb);
  res.qp_tau = quadrature_stresses(b.problem, res.solve.U);
  res.nodal_tau = extrapolate_to_nodes(b.problem.mesh, res.qp_tau);
  return res;
}

inline void write_csv(const ResultBundle& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << "step,load_factor,monitored_displacement,reaction,applied_load\n" << std::setprecision(12);
  for (const auto& s : r.samples)
    out << s.step << "," << s.load_factor << "," << s.monitored << "," << s.reaction << "," << s.applied << "\n";
}

// Legacy ASCII unstructured grid, one quadratic triangle (type 22) per element.
inline void write_vtk(const Mesh& m, const DofMap& d, const VecX& U, const MatX& nodal_tau, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  const int nn = m.n_nodes(), nt = m.n_triangles();
  out << "# vtk DataFile Version 3.0\ncsmfe result\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << std::setprecision(12);
  out << "POINTS " << nn << " double\n";
  for (int n = 0; n < nn; ++n) out << m.node(n).x() << " " << m.node(n).y() << " 0\n";
  out << "CELLS " << nt << " " << 7 * nt << "\n";
  for (int t = 0; t < nt; ++t) {
    auto nodes = m.p2_nodes(t);
    out << 6;
    for (int n : nodes) out << " " << n;
    out << "\n";
  }
  out << "CELL_TYPES " << nt << "\n";
  for (int t = 0; t < nt; ++t) out << "22\n";
  out << "POINT_DATA " << nn << "\nVECTORS displacement double\n";
  for (int n = 0; n < nn; ++n) {
    double ux = U.size() ? U(d.u_index(n, 0)) : 0.0, uy = U.size() ? U(d.u_index(n, 1)) : 0.0;
    out << ux << " " << uy << " 0\n";
  }
  const char* names[3] = {"tau_11", "tau_22", "tau_12"};
  for (int c = 0; c < 3; ++c) {
    out << "SCALARS " << names[c] << " double 1\nLOOKUP_TABLE default\n";
    for (int n = 0; n < nn; ++n) out << (nodal_tau.rows() == nn ? nodal_tau(n, c) : 0.0) << "\n";
  }
}

}  // namespace csmfe
