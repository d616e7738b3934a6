#pragma once

#include "csmfe/common.hpp"
#include "csmfe/element.hpp"
#include "csmfe/materials.hpp"
#include "csmfe/mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#ifdef CSMFE_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <algorithm>
#include <functional>
#include <ostream>
#include <sstream>
#include <vector>

namespace csmfe {

using SpMat = Eigen::SparseMatrix<double>;

struct Constraint {
  int dof = -1;        // global displacement index
  double value = 0.0;  // prescribed total at load factor 1
};

struct EdgeLoad {
  int edge = -1;
  Vec2 traction = Vec2::Zero();  // dead traction per unit reference length at load factor 1
};

struct Problem {
  Mesh mesh;
  DofMap dofs;
  Material material;
  std::vector<Constraint> constraints;
  std::vector<EdgeLoad> tractions;
  Vec2 body_force = Vec2::Zero();
};

struct SolverConfig {
  int n_load_steps = 1;
  double tol = 1e-9;
  int max_iters = 25;
  bool retry_halve = false;
  int max_halvings = 8;
  // Round-off floor: an increment below floor_factor * tol that no longer contracts (ratio to the
  // previous increment above floor_ratio) is accepted as converged. floor_factor = 0 disables this.
  double floor_factor = 100.0;
  double floor_ratio = 0.25;
  // Start each step from the linear extrapolation of the last two converged states.
  bool extrapolate = true;
  std::ostream* log = nullptr;  // JSON lines per converged step
};

struct StepRecord {
  int step = 0;
  double load_factor = 0.0;
  int iters = 0;
  std::vector<double> increment_norms;
  bool converged = false;
  bool at_floor = false;  // accepted by the round-off floor rule
};

struct SolveResult {
  VecX U;
  std::vector<StepRecord> steps;
  bool converged = true;
  std::string message;
  int total_iterations() const {
    int n = 0;
    for (const auto& s : steps) n += s.iters;
    return n;
  }
};

inline void validate_constraints(const DofMap& d, const std::vector<Constraint>& cs) {
  for (const auto& c : cs)
    if (!d.is_u(c.dof)) throw Error("constraint on dof " + std::to_string(c.dof) + " which is not a displacement dof");
}

inline ElemVec gather(const VecX& U, const std::array<int, kElemDofs>& idx) {
  ElemVec x;
  for (int a = 0; a < kElemDofs; ++a) x(a) = U(idx[a]);
  return x;
}

// External load vector at load factor 1.
inline VecX external_forces(const Problem& p) {
  VecX f = VecX::Zero(p.dofs.total());
  std::vector<std::vector<std::pair<int, Vec2>>> per_tri(p.mesh.n_triangles());
  for (const auto& l : p.tractions) {
    if (l.edge < 0 || l.edge >= p.mesh.n_edges()) throw Error("traction on invalid edge id");
    const Edge& e = p.mesh.edges[l.edge];
    if (!e.boundary) throw Error("traction specified on interior edge " + std::to_string(l.edge));
    int t = e.tris[0];
    for (int i = 1; i <= 3; ++i)
      if (p.mesh.tri_edges[t][i - 1] == l.edge) per_tri[t].push_back({i, l.traction});
  }
  for (int t = 0; t < p.mesh.n_triangles(); ++t) {
    if (per_tri[t].empty() && p.body_force.squaredNorm() == 0.0) continue;
    ElemVec fe = element_external_forces(p.mesh, t, p.body_force, per_tri[t]);
    auto idx = element_dofs(p.mesh, p.dofs, t);
    for (int a = 0; a < kElemU; ++a) f(idx[a]) += fe(a);
  }
  return f;
}

struct Assembly {
  SpMat K;
  VecX residual;  // F_e - F_i
  VecX f_int;
};

inline Assembly assemble(const Problem& p, const VecX& U, double load_factor, bool tangent = true,
                         const VecX* f_ext = nullptr) {
  const int n = p.dofs.total();
  if (U.size() != n) throw Error("assemble: state vector has wrong size");
  const int nt = p.mesh.n_triangles();
  std::vector<ElementResult> res(nt);
  std::vector<std::array<int, kElemDofs>> idx(nt);
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < nt; ++t) {
    try {
      idx[t] = element_dofs(p.mesh, p.dofs, t);
      res[t] = element_compute(ElementGeometry(p.mesh, t), gather(U, idx[t]), p.material, tangent);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  Assembly a;
  a.f_int = VecX::Zero(n);
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < kElemDofs; ++i) a.f_int(idx[t][i]) += res[t].f_int(i);
  VecX fe = f_ext ? *f_ext : external_forces(p);
  a.residual = load_factor * fe - a.f_int;
  if (tangent) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(nt) * (2 * 12 * 16 + 24 * 24 + 2 * 24 * 16));
    for (int t = 0; t < nt; ++t)
      for (int j = 0; j < kElemDofs; ++j)
        for (int i = 0; i < kElemDofs; ++i) {
          double v = res[t].K(i, j);
          if (v != 0.0) trip.emplace_back(idx[t][i], idx[t][j], v);
        }
    a.K.resize(n, n);
    a.K.setFromTriplets(trip.begin(), trip.end());
  }
  return a;
}

// Row/column elimination with prescribed increments; eliminated rows become identity rows.
inline void apply_dirichlet(SpMat& K, VecX& rhs, const DofMap& d, const std::vector<int>& dofs,
                            const std::vector<double>& increments) {
  const int n = static_cast<int>(K.rows());
  std::vector<char> fixed(n, 0);
  VecX inc = VecX::Zero(n);
  for (size_t c = 0; c < dofs.size(); ++c) {
    if (!d.is_u(dofs[c])) throw Error("apply_dirichlet: constraint on non-displacement dof " + std::to_string(dofs[c]));
    fixed[dofs[c]] = 1;
    inc(dofs[c]) = increments[c];
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(K.nonZeros() + dofs.size());
  for (int col = 0; col < K.outerSize(); ++col)
    for (SpMat::InnerIterator it(K, col); it; ++it) {
      int row = static_cast<int>(it.row());
      if (fixed[col]) {
        if (!fixed[row]) rhs(row) -= it.value() * inc(col);
        continue;
      }
      if (fixed[row]) continue;
      trip.emplace_back(row, col, it.value());
    }
  for (int i = 0; i < n; ++i)
    if (fixed[i]) {
      trip.emplace_back(i, i, 1.0);
      rhs(i) = inc(i);
    }
  SpMat R(n, n);
  R.setFromTriplets(trip.begin(), trip.end());
  K.swap(R);
}

// Symmetric Ruiz equilibration in place; returns the scaling d with A <- diag(d) A diag(d).
// The u, alpha and gamma blocks differ in scale by the bulk modulus.
inline VecX equilibrate(SpMat& A, int passes = 5) {
  const int n = static_cast<int>(A.rows());
  A.makeCompressed();
  VecX scale = VecX::Ones(n);
  for (int pass = 0; pass < passes; ++pass) {
    VecX cmax = VecX::Zero(n);
    for (int col = 0; col < A.outerSize(); ++col)
      for (SpMat::InnerIterator it(A, col); it; ++it) cmax(col) = std::max(cmax(col), std::abs(it.value()));
    for (int i = 0; i < n; ++i) cmax(i) = cmax(i) > 0 ? 1.0 / std::sqrt(cmax(i)) : 1.0;
    for (int col = 0; col < A.outerSize(); ++col)
      for (SpMat::InnerIterator it(A, col); it; ++it) it.valueRef() *= cmax(it.row()) * cmax(col);
    scale = scale.cwiseProduct(cmax);
  }
  return scale;
}

// Direct sparse LU with symmetric equilibration and iterative refinement. Refinement stops once the
// residual reaches 1e-10 relative or stops improving; `achieved` receives the final relative residual.
// A residual above 1e-6 relative is treated as a numerically singular factorization.
inline VecX linear_solve(const SpMat& K, const VecX& rhs, double* achieved = nullptr) {
  if (K.rows() != K.cols() || K.rows() != rhs.size()) throw Error("linear_solve: dimension mismatch");
  const int n = static_cast<int>(K.rows());
  const double bn = rhs.norm();
  if (bn == 0.0) {
    if (achieved) *achieved = 0.0;
    return VecX::Zero(n);
  }
  SpMat A = K;
  VecX scale = equilibrate(A);
#ifdef CSMFE_HAVE_UMFPACK
  Eigen::UmfPackLU<SpMat> lu;
#else
  Eigen::SparseLU<SpMat> lu;
#endif
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw Error("linear_solve: factorization failed (numerically singular matrix)");
  auto solve_scaled = [&](const VecX& b) -> VecX {
    VecX sb = scale.cwiseProduct(b);
    VecX y = lu.solve(sb);
    return scale.cwiseProduct(y);
  };
  VecX x = solve_scaled(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw Error("linear_solve: solve failed");
  VecX r = rhs - K * x;
  double rel = r.norm() / bn;
  for (int it = 0; it < 6 && rel > 1e-10; ++it) {
    VecX x2 = x + solve_scaled(r);
    VecX r2 = rhs - K * x2;
    double rel2 = r2.norm() / bn;
    if (!(rel2 < rel)) break;
    x = x2;
    r = r2;
    rel = rel2;
  }
  if (achieved) *achieved = rel;
  if (!(rel <= 1e-6)) {
    std::ostringstream os;
    os << "linear_solve: relative residual " << rel << " (numerically singular matrix)";
    throw Error(os.str());
  }
  return x;
}

// Solver for the assembled saddle-point tangent. The equilibrated matrix is shifted by +delta on the
// displacement block and -delta on the stress block, which makes it quasi-definite while the
// alpha-alpha block is positive definite, so an LDL^T factorization without pivoting exists for any
// fill-reducing order. Iterative refinement against the unshifted matrix removes the shift; when it
// does not reach the target the pivoting LU of linear_solve is used instead.
class SaddleSolver {
public:
  SaddleSolver() = default;
  SaddleSolver(const DofMap& d, const std::vector<int>& fixed) { setup(d, fixed); }

  void setup(const DofMap& d, const std::vector<int>& fixed) {
    sign_ = VecX::Zero(d.total());
    for (int i = 0; i < d.n_u; ++i) sign_(i) = 1.0;
    for (int i = d.n_u + d.n_alpha; i < d.total(); ++i) sign_(i) = -1.0;
    for (int f : fixed) sign_(f) = 0.0;
    analyzed_ = false;
  }

  double delta = 1e-6;
  int lu_fallbacks = 0;

  VecX solve(const SpMat& K, const VecX& rhs, double* achieved = nullptr) {
    const int n = static_cast<int>(K.rows());
    if (sign_.size() != n) return linear_solve(K, rhs, achieved);
    const double bn = rhs.norm();
    if (bn == 0.0) {
      if (achieved) *achieved = 0.0;
      return VecX::Zero(n);
    }
    SpMat A = K;
    VecX scale = equilibrate(A);
    SpMat R(n, n);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < n; ++i)
      if (sign_(i) != 0.0) trip.emplace_back(i, i, sign_(i) * delta);
    R.setFromTriplets(trip.begin(), trip.end());
    SpMat Ar = A + R;
    Ar.makeCompressed();
    if (!analyzed_ || !same_pattern(Ar)) {
      ldlt_.analyzePattern(Ar);
      outer_.assign(Ar.outerIndexPtr(), Ar.outerIndexPtr() + n + 1);
      inner_.assign(Ar.innerIndexPtr(), Ar.innerIndexPtr() + Ar.nonZeros());
      analyzed_ = true;
    }
    ldlt_.factorize(Ar);
    if (ldlt_.info() == Eigen::Success) {
      VecX x = VecX::Zero(n);
      VecX r = rhs;
      double rel = 1.0;
      for (int it = 0; it < 12; ++it) {
        VecX sr = scale.cwiseProduct(r);
        VecX y = ldlt_.solve(sr);
        VecX x2 = x + scale.cwiseProduct(y);
        VecX r2 = rhs - K * x2;
        double rel2 = r2.norm() / bn;
        if (!std::isfinite(rel2) || !(rel2 < rel)) break;
        x = x2;
        r = r2;
        rel = rel2;
        if (rel <= 1e-12) break;
      }
      if (rel <= 1e-10) {
        if (achieved) *achieved = rel;
        return x;
      }
    }
    ++lu_fallbacks;
    return linear_solve(K, rhs, achieved);
  }

private:
  bool same_pattern(const SpMat& A) const {
    if (static_cast<size_t>(A.nonZeros()) != inner_.size() || static_cast<size_t>(A.outerSize() + 1) != outer_.size())
      return false;
    return std::equal(outer_.begin(), outer_.end(), A.outerIndexPtr()) &&
           std::equal(inner_.begin(), inner_.end(), A.innerIndexPtr());
  }

  VecX sign_;
  bool analyzed_ = false;
  std::vector<int> outer_, inner_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

inline std::string step_log_line(const StepRecord& s) {
  std::ostringstream os;
  os.precision(6);
  os << "{\"step\": " << s.step << ", \"iters\": " << s.iters << ", \"increment_norms\": [";
  for (size_t i = 0; i < s.increment_norms.size(); ++i) os << (i ? ", " : "") << s.increment_norms[i];
  os.precision(10);
  os << "], \"load_factor\": " << s.load_factor << "}";
  return os.str();
}

// One load level: Newton from U toward the equilibrium at `lambda`. Returns false on failure.
// `guess` optionally replaces U as the starting iterate.
inline bool newton_step(const Problem& p, const SolverConfig& cfg, SaddleSolver& ls, VecX& U, double lambda,
                        const VecX& fe, StepRecord& rec, const VecX* guess = nullptr) {
  std::vector<int> cd;
  for (const auto& c : p.constraints) cd.push_back(c.dof);
  rec.load_factor = lambda;
  rec.increment_norms.clear();
  VecX Utrial = guess ? *guess : U;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    Assembly a;
    try {
      a = assemble(p, Utrial, lambda, true, &fe);
    } catch (const Error&) {
      return false;
    }
    std::vector<double> inc(cd.size());
    for (size_t c = 0; c < cd.size(); ++c) inc[c] = lambda * p.constraints[c].value - Utrial(cd[c]);
    VecX rhs = a.residual;
    apply_dirichlet(a.K, rhs, p.dofs, cd, inc);
    VecX dU;
    try {
      dU = ls.solve(a.K, rhs);
    } catch (const Error&) {
      return false;
    }
    Utrial += dU;
    double nrm = dU.norm();
    rec.increment_norms.push_back(nrm);
    rec.iters = it;
    if (!std::isfinite(nrm)) return false;
    bool floor = it > 1 && nrm < cfg.floor_factor * cfg.tol &&
                 nrm > cfg.floor_ratio * rec.increment_norms[rec.increment_norms.size() - 2];
    if (nrm < cfg.tol || floor) {
      U = Utrial;
      rec.converged = true;
      rec.at_floor = !(nrm < cfg.tol);
      return true;
    }
  }
  return false;
}

using StepCallback = std::function<void(const StepRecord&, const VecX&)>;

inline SolveResult newton_solve(const Problem& p, const SolverConfig& cfg, const StepCallback& on_step = {}) {
  if (cfg.n_load_steps < 1) throw Error("newton_solve: n_load_steps must be >= 1");
  if (!(cfg.tol > 0)) throw Error("newton_solve: tol must be positive");
  validate_constraints(p.dofs, p.constraints);
  SolveResult out;
  out.U = VecX::Zero(p.dofs.total());
  const VecX fe = external_forces(p);
  std::vector<int> fixed;
  for (const auto& c : p.constraints) fixed.push_back(c.dof);
  SaddleSolver ls(p.dofs, fixed);
  double lambda = 0.0, lambda_prev = 0.0;
  VecX U_prev = out.U;
  for (int step = 1; step <= cfg.n_load_steps; ++step) {
    double target = static_cast<double>(step) / cfg.n_load_steps;
    StepRecord rec;
    rec.step = step;
    bool ok = false;
    VecX U_last = out.U;
    if (cfg.extrapolate && step > 1 && lambda > lambda_prev) {
      VecX guess = out.U + ((target - lambda) / (lambda - lambda_prev)) * (out.U - U_prev);
      ok = newton_step(p, cfg, ls, out.U, target, fe, rec, &guess);
      if (!ok) {
        // fall back to the last converged state, keeping the wasted iterations on the record
        StepRecord again;
        again.step = step;
        ok = newton_step(p, cfg, ls, out.U, target, fe, again);
        again.iters += rec.iters;
        again.increment_norms.insert(again.increment_norms.begin(), rec.increment_norms.begin(),
                                     rec.increment_norms.end());
        rec = again;
      }
    } else {
      ok = newton_step(p, cfg, ls, out.U, target, fe, rec);
    }
    if (ok) {
      lambda_prev = lambda;
      U_prev = U_last;
      lambda = target;
    } else if (cfg.retry_halve) {
      // bisect the interval [lambda, target] until it goes through
      double lo = lambda;
      int halvings = 0;
      int iters = 0;
      std::vector<double> norms;
      while (halvings <= cfg.max_halvings) {
        double dl = (target - lo) / std::pow(2.0, halvings);
        double cur = lo;
        VecX Ut = out.U;
        ok = true;
        while (cur < target - 1e-15) {
          StepRecord sub;
          double nxt = std::min(target, cur + dl);
          if (!newton_step(p, cfg, ls, Ut, nxt, fe, sub)) {
            ok = false;
            break;
          }
          iters += sub.iters;
          norms.insert(norms.end(), sub.increment_norms.begin(), sub.increment_norms.end());
          cur = nxt;
        }
        if (ok) {
          U_prev = out.U;
          lambda_prev = lambda;
          out.U = Ut;
          break;
        }
        ++halvings;
      }
      rec.iters = iters;
      rec.increment_norms = norms;
      rec.load_factor = target;
      rec.converged = ok;
      if (!ok) {
        out.converged = false;
        out.message = "no convergence at step " + std::to_string(step) + " after bisection";
        out.steps.push_back(rec);
        return out;
      }
      lambda = target;
    } else {
      out.converged = false;
      out.message = "no convergence at step " + std::to_string(step) + " (load factor " + std::to_string(target) + ")";
      out.steps.push_back(rec);
      return out;
    }
    out.steps.push_back(rec);
    if (cfg.log) *cfg.log << step_log_line(rec) << "\n";
    if (on_step) on_step(rec, out.U);
  }
  return out;
}

// Reaction forces at displacement dofs: F_i - lambda F_e.
inline VecX reactions(const Problem& p, const VecX& U, double load_factor) {
  Assembly a = assemble(p, U, load_factor, false);
  return -a.residual;
}

}  // namespace csmfe
