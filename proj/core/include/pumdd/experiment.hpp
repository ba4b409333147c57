#pragma once

// Level sweeps of the obstacle-constrained control problem: for every level
// and subdomain count, assemble, run PDAS with the configured inner solver,
// and report the average condition number and solve time.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pumdd/pdas.hpp"
#include "pumdd/pum_space.hpp"
#include "pumdd/quadrature.hpp"
#include "pumdd/schwarz.hpp"

namespace pumdd {

enum class PreconditionerMode { none, one_level, two_level };
enum class TableFormat { csv, markdown };

PreconditionerMode parse_preconditioner(std::string_view text);
std::string_view to_string(PreconditionerMode mode);
TableFormat parse_format(std::string_view text);

struct ExperimentConfig {
  Point lower{-0.5, -0.5};
  Point upper{0.5, 0.5};
  double beta = 0.1;
  std::string obstacle = "0.01";
  std::string source = "10 * (sin(2 * pi * (x1 + 0.5)) + (x2 + 0.5))";
  double c = 1e8;
  std::vector<int> levels{1, 2, 3};
  std::vector<int> subdomains{4};
  Overlap overlap = Overlap::small;
  PreconditionerMode preconditioner = PreconditionerMode::none;
  double tolerance = 1e-15;
  /// 0 selects 20 x the reduced dimension.
  std::size_t max_pcg_iterations = 0;
  std::size_t max_pdas_iterations = 100;
  int quadrature_order = kDefaultQuadratureOrder;
  TableFormat format = TableFormat::markdown;
  bool deterministic = true;
  int threads = 1;
  /// PDAS trace destination; empty disables tracing.
  std::string trace_path;
};

/// Throws std::invalid_argument when a field is out of range or an
/// expression does not parse.
void validate(const ExperimentConfig& config);

/// Reads "key = value" lines over `base`. '#' starts a comment. Throws
/// std::invalid_argument with the line number on unknown keys or bad values.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// "1..4" or "1,2,5".
std::vector<int> parse_int_list(std::string_view text);

enum class CellStatus { ok, did_not_converge, blank };

struct TableReport {
  int level = 0;
  /// 0 when no preconditioner is used.
  int subdomains = 0;
  double average_condition = 0.0;
  double seconds = 0.0;
  CellStatus status = CellStatus::ok;
  std::size_t unknowns = 0;
  std::size_t pdas_iterations = 0;
  /// Per-solve Lanczos estimates, empty systems excluded.
  std::vector<double> condition_estimates;
  std::vector<double> solution;
  IndexSet active;
};

/// Mean of the per-solve estimates over nonempty systems; 1 when every
/// system was empty.
double average_condition(const std::vector<SolveReport>& solves);

/// Initial PDAS state on `fine` from a converged state on `coarse`: the
/// coarse active indicator is interpolated and thresholded at 1/2 to predict
/// the active set P, y is the interpolated solution with y = psi on P, and
/// the multiplier is max(0, b - A y) on P and 0 elsewhere.
ActiveState continuation_guess(const PatchGrid& fine, const SparseMatrix& a,
                               std::span<const double> b, std::span<const double> psi,
                               const PatchGrid& coarse, std::span<const double> coarse_y,
                               const IndexSet& coarse_active);

/// One report per (level, J) cell in row-major order over the configured
/// lists, or one per level without a preconditioner. Cells with
/// sqrt(J) > 2^level are blanks.
std::vector<TableReport> run_experiment(const ExperimentConfig& config,
                                        std::ostream* trace = nullptr);

/// csv: "level,J,kappa,time,flag" rows. markdown: a level-by-J grid for the
/// condition numbers and one for the times, or a level | kappa | time table
/// when every cell has J = 0.
std::string emit_table(const std::vector<TableReport>& reports, TableFormat format);

/// Inverse of the csv emitter; solutions and per-solve data are not kept.
std::vector<TableReport> parse_table_csv(std::istream& in);

bool any_did_not_converge(const std::vector<TableReport>& reports);

}  // namespace pumdd
