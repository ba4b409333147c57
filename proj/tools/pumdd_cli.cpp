// Command-line driver for level sweeps of the PUM obstacle control problem.
//
//   pumdd --level-min 1 --level-max 4 --subdomains 4,16 --precond two-level
//
// Exit status: 0 when every cell converged, 2 when any cell is DNC, 1 on
// invalid input.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "pumdd/assembly.hpp"
#include "pumdd/experiment.hpp"
#include "pumdd/expression.hpp"

namespace {

void export_matrices(const pumdd::ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto f = pumdd::Expression::parse(cfg.source);
  const auto psi = pumdd::Expression::parse(cfg.obstacle);
  pumdd::ProblemData data;
  data.beta = cfg.beta;
  data.source = [f](pumdd::Point x) { return f(x); };
  data.obstacle = [psi](pumdd::Point x) { return psi(x); };
  data.domain = pumdd::Domain(cfg.lower, cfg.upper);
  for (const int level : cfg.levels) {
    const pumdd::PatchGrid grid(level, data.domain);
    const auto quad = pumdd::build_quadrature(grid, cfg.quadrature_order);
    const auto path = dir / ("stiffness_l" + std::to_string(level) + ".mtx");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    pumdd::write_matrix_market(pumdd::assemble_stiffness(grid, data, quad), out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level sweeps of a PUM-discretized obstacle control problem with PDAS and "
               "additive Schwarz preconditioned CG"};

  std::string config_path;
  int level_min = 1;
  int level_max = 3;
  std::string subdomains;
  std::string overlap;
  std::string precond;
  double beta = 0.0;
  std::string psi;
  std::string source;
  double c = 0.0;
  double tol = 0.0;
  std::string format;
  bool deterministic = false;
  int threads = 1;
  std::string trace;
  std::size_t max_iter = 0;
  std::size_t max_pdas_iter = 0;
  std::string export_dir;

  app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  auto* lmin = app.add_option("--level-min", level_min, "first refinement level");
  auto* lmax = app.add_option("--level-max", level_max, "last refinement level");
  auto* js = app.add_option("--subdomains", subdomains, "subdomain counts, e.g. 4,16,64");
  auto* ov = app.add_option("--overlap", overlap, "small | generous");
  auto* pc = app.add_option("--precond", precond, "none | one-level | two-level");
  auto* be = app.add_option("--beta", beta, "control cost");
  auto* ps = app.add_option("--psi", psi, "obstacle expression in x1, x2");
  auto* fs = app.add_option("--f", source, "target expression in x1, x2");
  auto* cc = app.add_option("--c", c, "PDAS parameter");
  auto* tl = app.add_option("--tol", tol, "PCG relative tolerance on ||Br||");
  auto* fm = app.add_option("--format", format, "csv | markdown");
  auto* de = app.add_flag("--deterministic,!--no-deterministic", deterministic,
                          "sum subdomain corrections in fixed order");
  auto* th = app.add_option("--threads", threads, "threads for subdomain solves");
  auto* tr = app.add_option("--trace", trace, "write the PDAS trace to this file");
  auto* mi = app.add_option("--max-iter", max_iter, "PCG iteration cap (0: 20 x dimension)");
  auto* mp = app.add_option("--max-pdas-iter", max_pdas_iter, "PDAS iteration cap");
  app.add_option("--export-matrix", export_dir,
                 "write the stiffness matrix of each level as Matrix Market into this directory");

  CLI11_PARSE(app, argc, argv);

  try {
    pumdd::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = pumdd::load_config(config_path);
    if (*lmin || *lmax) {
      const int first = *lmin ? level_min : cfg.levels.empty() ? 1 : cfg.levels.front();
      const int last = *lmax ? level_max : cfg.levels.empty() ? first : cfg.levels.back();
      cfg.levels.clear();
      for (int l = first; l <= last; ++l) cfg.levels.push_back(l);
    }
    if (*js) cfg.subdomains = pumdd::parse_int_list(subdomains);
    if (*ov) cfg.overlap = pumdd::parse_overlap(overlap);
    if (*pc) cfg.preconditioner = pumdd::parse_preconditioner(precond);
    if (*be) cfg.beta = beta;
    if (*ps) cfg.obstacle = psi;
    if (*fs) cfg.source = source;
    if (*cc) cfg.c = c;
    if (*tl) cfg.tolerance = tol;
    if (*fm) cfg.format = pumdd::parse_format(format);
    if (*de) cfg.deterministic = deterministic;
    if (*th) cfg.threads = threads;
    if (*tr) cfg.trace_path = trace;
    if (*mi) cfg.max_pcg_iterations = max_iter;
    if (*mp) cfg.max_pdas_iterations = max_pdas_iter;
    pumdd::validate(cfg);

    for (const int l : cfg.levels) {
      if (l > 6) std::cerr << "pumdd: level " << l << " is long-running\n";
    }
    if (!export_dir.empty()) export_matrices(cfg, export_dir);

    const auto reports = pumdd::run_experiment(cfg);
    std::cout << pumdd::emit_table(reports, cfg.format);
    return pumdd::any_did_not_converge(reports) ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "pumdd: " << e.what() << '\n';
    return 1;
  }
}
