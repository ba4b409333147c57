#include "pumdd/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pumdd/assembly.hpp"
#include "pumdd/expression.hpp"

namespace pumdd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

int parse_int(std::string_view text) {
  text = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

double parse_double(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw std::invalid_argument("not a boolean: '" + std::string(text) + "'");
}

Point parse_point(std::string_view text) {
  const auto comma = text.find(',');
  if (comma == std::string_view::npos) {
    throw std::invalid_argument("expected 'x1, x2', got '" + std::string(text) + "'");
  }
  return {parse_double(text.substr(0, comma)), parse_double(text.substr(comma + 1))};
}

int integer_sqrt(int j) {
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(j))));
  return r * r == j ? r : -1;
}

std::string format_number(double value, const char* pattern) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

std::string_view status_text(CellStatus s) {
  switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::did_not_converge: return "DNC";
    case CellStatus::blank: return "-";
  }
  return "?";
}

}  // namespace

PreconditionerMode parse_preconditioner(std::string_view text) {
  text = trim(text);
  if (text == "none") return PreconditionerMode::none;
  if (text == "one-level") return PreconditionerMode::one_level;
  if (text == "two-level") return PreconditionerMode::two_level;
  throw std::invalid_argument("unknown preconditioner '" + std::string(text) +
                              "' (expected none, one-level or two-level)");
}

std::string_view to_string(PreconditionerMode mode) {
  switch (mode) {
    case PreconditionerMode::none: return "none";
    case PreconditionerMode::one_level: return "one-level";
    case PreconditionerMode::two_level: return "two-level";
  }
  return "?";
}

TableFormat parse_format(std::string_view text) {
  text = trim(text);
  if (text == "csv") return TableFormat::csv;
  if (text == "markdown") return TableFormat::markdown;
  throw std::invalid_argument("unknown format '" + std::string(text) +
                              "' (expected csv or markdown)");
}

std::vector<int> parse_int_list(std::string_view text) {
  text = trim(text);
  std::vector<int> out;
  if (text.empty()) return out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const int first = parse_int(text.substr(0, dots));
    const int last = parse_int(text.substr(dots + 2));
    for (int v = first; v <= last; ++v) out.push_back(v);
    return out;
  }
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_int(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

void validate(const ExperimentConfig& config) {
  (void)Domain(config.lower, config.upper);
  if (!(config.beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(config.c > 0.0)) throw std::invalid_argument("c must be positive");
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (config.max_pdas_iterations == 0) {
    throw std::invalid_argument("max_pdas_iterations must be positive");
  }
  if (config.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (config.quadrature_order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  for (const int l : config.levels) {
    if (l < 1 || l > 20) throw std::invalid_argument("level " + std::to_string(l) + " out of range");
  }
  if (config.preconditioner != PreconditionerMode::none) {
    for (const int j : config.subdomains) {
      if (j < 1 || integer_sqrt(j) < 0) {
        throw std::invalid_argument("J = " + std::to_string(j) + " is not a perfect square");
      }
    }
  }
  try {
    (void)Expression::parse(config.obstacle);
    (void)Expression::parse(config.source);
  } catch (const ExpressionError& e) {
    throw std::invalid_argument(std::string("bad expression: ") + e.what());
  }
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  ExperimentConfig cfg = std::move(base);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key(trim(view.substr(0, eq)));
    const std::string_view value = trim(view.substr(eq + 1));
    try {
      if (key == "lower") {
        cfg.lower = parse_point(value);
      } else if (key == "upper") {
        cfg.upper = parse_point(value);
      } else if (key == "beta") {
        cfg.beta = parse_double(value);
      } else if (key == "psi") {
        cfg.obstacle = std::string(value);
      } else if (key == "f") {
        cfg.source = std::string(value);
      } else if (key == "c") {
        cfg.c = parse_double(value);
      } else if (key == "levels") {
        cfg.levels = parse_int_list(value);
      } else if (key == "subdomains") {
        cfg.subdomains = parse_int_list(value);
      } else if (key == "overlap") {
        cfg.overlap = parse_overlap(value);
      } else if (key == "precond") {
        cfg.preconditioner = parse_preconditioner(value);
      } else if (key == "tol") {
        cfg.tolerance = parse_double(value);
      } else if (key == "max_iter") {
        cfg.max_pcg_iterations = static_cast<std::size_t>(parse_int(value));
      } else if (key == "max_pdas_iter") {
        cfg.max_pdas_iterations = static_cast<std::size_t>(parse_int(value));
      } else if (key == "quadrature_order") {
        cfg.quadrature_order = parse_int(value);
      } else if (key == "format") {
        cfg.format = parse_format(value);
      } else if (key == "deterministic") {
        cfg.deterministic = parse_bool(value);
      } else if (key == "threads") {
        cfg.threads = parse_int(value);
      } else if (key == "trace") {
        cfg.trace_path = std::string(value);
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

double average_condition(const std::vector<SolveReport>& solves) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : solves) {
    if (s.dimension == 0) continue;
    sum += s.condition_estimate;
    ++count;
  }
  return count == 0 ? 1.0 : sum / static_cast<double>(count);
}

ActiveState continuation_guess(const PatchGrid& fine, const SparseMatrix& a,
                               std::span<const double> b, std::span<const double> psi,
                               const PatchGrid& coarse, std::span<const double> coarse_y,
                               const IndexSet& coarse_active) {
  const std::size_t n = fine.node_count();
  ActiveState s;
  s.y = interpolate(fine, coarse, coarse_y);
  std::vector<double> indicator(coarse.node_count(), 0.0);
  for (const int p : coarse_active) indicator[static_cast<std::size_t>(p)] = 1.0;
  const std::vector<double> predicted = interpolate(fine, coarse, indicator);
  for (std::size_t p = 0; p < n; ++p) {
    if (predicted[p] >= 0.5) s.y[p] = psi[p];
  }
  const std::vector<double> ay = a.multiply(s.y);
  s.multiplier.assign(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    if (predicted[p] >= 0.5) s.multiplier[p] = std::max(0.0, b[p] - ay[p]);
  }
  return s;
}

std::vector<TableReport> run_experiment(const ExperimentConfig& config, std::ostream* trace) {
  validate(config);
  std::unique_ptr<std::ofstream> trace_file;
  if (trace == nullptr && !config.trace_path.empty()) {
    trace_file = std::make_unique<std::ofstream>(config.trace_path);
    if (!*trace_file) throw std::runtime_error("cannot open trace file '" + config.trace_path + "'");
    trace = trace_file.get();
  }

  const Expression source = Expression::parse(config.source);
  const Expression obstacle = Expression::parse(config.obstacle);
  ProblemData data;
  data.beta = config.beta;
  data.source = [source](Point x) { return source(x); };
  data.obstacle = [obstacle](Point x) { return obstacle(x); };
  data.domain = Domain(config.lower, config.upper);
  validate_problem(data);

  const bool preconditioned = config.preconditioner != PreconditionerMode::none;
  const std::vector<int> columns = preconditioned ? config.subdomains : std::vector<int>{0};

  struct Chain {
    std::unique_ptr<PatchGrid> grid;
    std::vector<double> y;
    IndexSet active;
  };
  std::vector<Chain> chains(columns.size());
  std::vector<TableReport> out;

  for (const int level : config.levels) {
    const PatchGrid grid(level, data.domain);
    const QuadratureMesh quad = build_quadrature(grid, config.quadrature_order);
    const SparseMatrix a = assemble_stiffness(grid, data, quad);
    const std::vector<double> b = assemble_load(grid, data, quad);
    const std::vector<double> psi = obstacle_vector(grid, data);

    for (std::size_t col = 0; col < columns.size(); ++col) {
      const int j = columns[col];
      TableReport report;
      report.level = level;
      report.subdomains = j;
      report.unknowns = grid.node_count();
      Chain& chain = chains[col];
      if (preconditioned && integer_sqrt(j) > grid.patches_per_axis()) {
        report.status = CellStatus::blank;
        out.push_back(std::move(report));
        continue;
      }
      const bool diagonal =
          preconditioned && (std::int64_t{1} << (2 * level)) == static_cast<std::int64_t>(j);

      ActiveState initial = ActiveState::zero(grid.node_count());
      if (chain.grid && !diagonal) {
        initial = continuation_guess(grid, a, b, psi, *chain.grid, chain.y, chain.active);
      }
      InnerSolverConfig inner;
      inner.pcg.tolerance = config.tolerance;
      inner.pcg.max_iterations = config.max_pcg_iterations;
      if (preconditioned) {
        SchwarzConfig sc;
        sc.subdomains = j;
        sc.overlap = config.overlap;
        sc.level = config.preconditioner == PreconditionerMode::two_level && !diagonal
                       ? SchwarzLevel::two_level
                       : SchwarzLevel::one_level;
        sc.options.threads = config.threads;
        sc.options.deterministic = config.deterministic;
        inner.preconditioner = make_schwarz_factory(grid, sc);
      }
      PdasOptions pdas;
      pdas.c = config.c;
      pdas.max_iterations = config.max_pdas_iterations;

      if (trace) *trace << "cell level=" << level << " J=" << j << " unknowns=" << grid.node_count() << '\n';
      const auto start = std::chrono::steady_clock::now();
      PdasResult result = pdas_solve(a, b, psi, pdas, initial, inner, trace);
      report.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

      report.pdas_iterations = result.iterations;
      report.average_condition = average_condition(result.solves);
      for (const auto& s : result.solves) {
        if (s.dimension > 0) report.condition_estimates.push_back(s.condition_estimate);
      }
      report.status = result.converged ? CellStatus::ok : CellStatus::did_not_converge;
      if (trace) {
        *trace << "cell level=" << level << " J=" << j << " status=" << status_text(report.status)
               << " average_kappa=" << report.average_condition << " seconds=" << report.seconds
               << '\n';
      }
      if (report.status == CellStatus::ok) {
        chain.grid = std::make_unique<PatchGrid>(grid);
        chain.y = result.state.y;
        chain.active = result.state.active;
      } else {
        chain = Chain{};
      }
      report.solution = std::move(result.state.y);
      report.active = std::move(result.state.active);
      out.push_back(std::move(report));
    }
  }
  return out;
}

namespace {

std::string cell_text(const TableReport& r, bool time, const char* pattern) {
  if (r.status == CellStatus::blank) return "-";
  if (r.status == CellStatus::did_not_converge) return "DNC";
  return format_number(time ? r.seconds : r.average_condition, pattern);
}

std::string emit_csv(const std::vector<TableReport>& reports) {
  std::ostringstream os;
  os << "level,J,kappa,time,flag\n";
  for (const auto& r : reports) {
    os << r.level << ',' << r.subdomains << ',' << cell_text(r, false, "%.10e") << ','
       << cell_text(r, true, "%.10e") << ',' << status_text(r.status) << '\n';
  }
  return os.str();
}

std::string emit_markdown(const std::vector<TableReport>& reports) {
  std::vector<int> levels;
  std::vector<int> columns;
  for (const auto& r : reports) {
    if (std::find(levels.begin(), levels.end(), r.level) == levels.end()) levels.push_back(r.level);
    if (std::find(columns.begin(), columns.end(), r.subdomains) == columns.end()) {
      columns.push_back(r.subdomains);
    }
  }
  std::map<std::pair<int, int>, const TableReport*> cells;
  for (const auto& r : reports) cells[{r.level, r.subdomains}] = &r;
  auto lookup = [&](int level, int j, bool time) -> std::string {
    const auto it = cells.find({level, j});
    return it == cells.end() ? "-" : cell_text(*it->second, time, "%.4e");
  };

  std::ostringstream os;
  if (columns.size() == 1 && columns.front() == 0) {
    os << "| level | kappa | t_solve |\n|---|---|---|\n";
    for (const int l : levels) {
      os << "| " << l << " | " << lookup(l, 0, false) << " | " << lookup(l, 0, true) << " |\n";
    }
    return os.str();
  }
  auto grid = [&](const char* title, bool time) {
    os << title << "\n\n| level |";
    for (const int j : columns) os << " J=" << j << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) os << "---|";
    os << '\n';
    for (const int l : levels) {
      os << "| " << l << " |";
      for (const int j : columns) os << ' ' << lookup(l, j, time) << " |";
      os << '\n';
    }
  };
  grid("Average condition number", false);
  os << '\n';
  grid("Solve time (s)", true);
  return os.str();
}

}  // namespace

std::string emit_table(const std::vector<TableReport>& reports, TableFormat format) {
  return format == TableFormat::csv ? emit_csv(reports) : emit_markdown(reports);
}

std::vector<TableReport> parse_table_csv(std::istream& in) {
  std::vector<TableReport> out;
  std::string line;
  if (!std::getline(in, line) || trim(line) != "level,J,kappa,time,flag") {
    throw std::invalid_argument("parse_table_csv: missing header");
  }
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (fields.size() != 5) throw std::invalid_argument("parse_table_csv: expected 5 fields");
    TableReport r;
    r.level = parse_int(fields[0]);
    r.subdomains = parse_int(fields[1]);
    if (fields[4] == "ok") {
      r.status = CellStatus::ok;
      r.average_condition = parse_double(fields[2]);
      r.seconds = parse_double(fields[3]);
    } else if (fields[4] == "DNC") {
      r.status = CellStatus::did_not_converge;
    } else if (fields[4] == "-") {
      r.status = CellStatus::blank;
    } else {
      throw std::invalid_argument("parse_table_csv: unknown flag '" + std::string(fields[4]) + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

bool any_did_not_converge(const std::vector<TableReport>& reports) {
  return std::any_of(reports.begin(), reports.end(),
                     [](const TableReport& r) { return r.status == CellStatus::did_not_converge; });
}

}  // namespace pumdd
