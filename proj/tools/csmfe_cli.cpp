#include "csmfe/benchmarks.hpp"
#include "csmfe/io.hpp"
#include "csmfe/solver.hpp"
#include "csmfe/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

using namespace csmfe;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0, kExitInput = 1, kExitNoConvergence = 2;

int finish_run(const ProblemConfig& cfg, const BuiltProblem& b, const ResultBundle& r, const std::string& out_dir,
               const std::string& stem) {
  fs::create_directories(out_dir);
  if (cfg.write_csv) write_csv(r, (fs::path(out_dir) / (stem + ".csv")).string());
  if (cfg.write_vtk)
    write_vtk(b.problem.mesh, b.problem.dofs, r.solve.U, r.nodal_tau, (fs::path(out_dir) / (stem + ".vtk")).string());
  if (!r.solve.converged) {
    std::cerr << "error: " << r.solve.message << "\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int cmd_solve(const std::string& config, const std::string& out_dir) {
  ProblemConfig cfg = load_problem(config);
  BuiltProblem b = build_problem(cfg);
  cfg.solver.log = &std::cout;
  std::fprintf(stderr, "%s: %d elements, %d dofs, %d constraints\n", cfg.name.c_str(), b.problem.mesh.n_triangles(),
               b.problem.dofs.total(), static_cast<int>(b.problem.constraints.size()));
  ResultBundle r = run_problem(b, cfg.solver, cfg.reaction.enabled ? cfg.reaction.component : cfg.monitor.component);
  const Sample& last = r.samples.back();
  std::fprintf(stderr, "final: load_factor %.6g monitored %.10g reaction %.10g mean_iters %.3f\n", last.load_factor,
               last.monitored, last.reaction, r.mean_iterations());
  return finish_run(cfg, b, r, out_dir, fs::path(config).stem().string());
}

int cmd_bench(const std::string& name, int elements, int steps, const std::string& model, unsigned seed,
              const std::string& out_dir, bool retry_halve, bool quiet) {
  ProblemConfig cfg = make_benchmark(name, elements, seed, model, steps);
  cfg.solver.retry_halve = retry_halve;
  if (!quiet) cfg.solver.log = &std::cout;
  BuiltProblem b = build_problem(cfg);
  BenchmarkInfo info = benchmark_info(name);
  std::fprintf(stderr, "%s: %d elements, %d dofs, %d load steps, mesh size %.4g\n", name.c_str(),
               b.problem.mesh.n_triangles(), b.problem.dofs.total(), cfg.solver.n_load_steps, mesh_size(b.problem.mesh));
  auto t0 = std::chrono::steady_clock::now();
  ResultBundle r = run_problem(b, cfg.solver, cfg.reaction.component);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Sample& last = r.samples.back();
  double value = info.headline_is_reaction ? std::abs(last.reaction) : std::abs(last.monitored);
  std::printf("%s elements=%d %s = %.4f", name.c_str(), b.problem.mesh.n_triangles(), info.monitor_label.c_str(), value);
  if (!std::isnan(info.reference_value)) std::printf(" (reference %.4f)", info.reference_value);
  std::printf(" mean_iters=%.2f time=%.1fs\n", r.mean_iterations(), secs);
  return finish_run(cfg, b, r, out_dir, name + "_" + std::to_string(b.problem.mesh.n_triangles()));
}

int cmd_verify(int trials, unsigned long long seed) {
  ShapefnReport rep = verify_shapefns(trials, seed);
  const char* names[4] = {"C2", "D2", "C2minus", "D2minus"};
  for (int f = 0; f < 4; ++f)
    std::printf("%-8s max duality deviation %.3e  max jump %.3e\n", names[f], rep.duality[f], rep.jump[f]);
  std::printf("rotation identity max deviation %.3e\n", rep.rotation);
  bool ok = rep.max_duality() < 1e-10 && rep.max_jump() <= 1e-12 && rep.rotation <= 1e-13;
  std::printf("%s\n", ok ? "OK" : "FAILED");
  return ok ? kExitOk : kExitInput;
}

int cmd_rank_check(const std::string& config) {
  ProblemConfig cfg = load_problem(config);
  BuiltProblem b = build_problem(cfg);
  const Problem& p = b.problem;
  VecX U = VecX::Zero(p.dofs.total());
  int bad = 0;
  double worst = 1e300;
  for (int t = 0; t < p.mesh.n_triangles(); ++t) {
    ElemMat K = element_tangent(p.mesh, t, ElemVec::Zero(), p.material);
    RankCheck rc = saddle_rank_check(K, kElemU, kElemAlpha, kElemGamma, {0, 1, 3});
    if (!rc.ok()) ++bad;
    worst = std::min(worst, rc.sigma_min_full / rc.sigma_max_full);
  }
  std::printf("element checks: %d of %d pass, worst sigma_min/sigma_max %.3e\n", p.mesh.n_triangles() - bad,
              p.mesh.n_triangles(), worst);
  bool ok = bad == 0;
  if (p.dofs.total() <= 4000) {
    Assembly a = assemble(p, U, 0.0);
    std::vector<int> fixed;
    for (const auto& c : p.constraints) fixed.push_back(c.dof);
    RankCheck rc = saddle_rank_check(MatX(a.K), p.dofs.n_u, p.dofs.n_alpha, p.dofs.n_gamma, fixed);
    std::printf("global check: gamma-u %d stack %d alpha-alpha %d full %d (sigma_min/sigma_max %.3e)\n", rc.cond_gu,
                rc.cond_stack, rc.cond_aa, rc.full_nonsingular, rc.sigma_min_full / rc.sigma_max_full);
    ok = ok && rc.ok();
  } else {
    std::printf("global check skipped (%d dofs, dense limit 4000)\n", p.dofs.total());
  }
  std::printf("%s\n", ok ? "OK" : "FAILED");
  return ok ? kExitOk : kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  register_benchmark_generator();
  CLI::App app{"Second-order compatible-strain mixed finite elements for 2D nonlinear elasticity"};
  app.require_subcommand(1);

  std::string config, out_dir = ".";
  auto* solve = app.add_subcommand("solve", "solve a problem described by a JSON config");
  solve->add_option("--config", config, "problem config (JSON)")->required();
  solve->add_option("--out", out_dir, "output directory");

  int trials = 20;
  unsigned long long seed = 1;
  auto* verify = app.add_subcommand("verify-shapefn", "check duality, jump and rotation invariants of the shape functions");
  verify->add_option("--trials", trials, "random triangles / patches per family")->check(CLI::PositiveNumber);
  verify->add_option("--seed", seed, "random seed");

  std::string name, model;
  int elements = 0, steps = 0;
  unsigned mesh_seed = 0;
  bool retry = false, quiet = false;
  auto* bench = app.add_subcommand("bench", "run a built-in benchmark");
  bench->add_option("name", name, "benchmark name")->required()->check(CLI::IsMember(benchmark_names()));
  bench->add_option("--elements", elements, "target element count")->required()->check(CLI::PositiveNumber);
  bench->add_option("--steps", steps, "load steps (default: reduced CI count)");
  bench->add_option("--material", model, "material model")->check(CLI::IsMember({"nh1", "nh2", "ogden"}));
  bench->add_option("--seed", mesh_seed, "0 = structured mesh, otherwise seed of the irregular variant");
  bench->add_option("--out", out_dir, "output directory");
  bench->add_flag("--retry-halve", retry, "bisect load steps that fail to converge");
  bench->add_flag("--quiet", quiet, "suppress per-step JSON log lines");

  auto* rank = app.add_subcommand("rank-check", "saddle-point kernel conditions at the reference state");
  rank->add_option("--config", config, "problem config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*solve) return cmd_solve(config, out_dir);
    if (*verify) return cmd_verify(trials, seed);
    if (*bench) return cmd_bench(name, elements, steps, model, mesh_seed, out_dir, retry, quiet);
    if (*rank) return cmd_rank_check(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
