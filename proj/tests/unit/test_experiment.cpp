#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "pumdd/assembly.hpp"
#include "pumdd/experiment.hpp"

using namespace pumdd;

namespace {

ExperimentConfig config(std::vector<int> levels, std::vector<int> js, PreconditionerMode mode) {
  ExperimentConfig c;
  c.levels = std::move(levels);
  c.subdomains = std::move(js);
  c.preconditioner = mode;
  return c;
}

}  // namespace

TEST(Config, ParsesKeyValueLines) {
  std::istringstream in(R"(# example
beta = 0.2
psi = 0.01 + 0 * x1
f = x1 * x2   # trailing comment
levels = 2..4
subdomains = 4, 16
overlap = generous
precond = two-level
tol = 1e-12
max_iter = 50
format = csv
deterministic = false
threads = 2
lower = -1, -1
upper = 1, 2
)");
  const auto c = parse_config(in);
  EXPECT_EQ(c.beta, 0.2);
  EXPECT_EQ(c.source, "x1 * x2");
  EXPECT_EQ(c.levels, (std::vector<int>{2, 3, 4}));
  EXPECT_EQ(c.subdomains, (std::vector<int>{4, 16}));
  EXPECT_EQ(c.overlap, Overlap::generous);
  EXPECT_EQ(c.preconditioner, PreconditionerMode::two_level);
  EXPECT_EQ(c.tolerance, 1e-12);
  EXPECT_EQ(c.max_pcg_iterations, 50u);
  EXPECT_EQ(c.format, TableFormat::csv);
  EXPECT_FALSE(c.deterministic);
  EXPECT_EQ(c.threads, 2);
  EXPECT_EQ(c.upper.x2, 2.0);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, ReportsLineOfBadInput) {
  std::istringstream unknown("beta = 1\nwidth = 3\n");
  try {
    parse_config(unknown);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream bad_number("beta = abc\n");
  EXPECT_THROW(parse_config(bad_number), std::invalid_argument);
  std::istringstream no_equals("beta 1\n");
  EXPECT_THROW(parse_config(no_equals), std::invalid_argument);
}

TEST(Config, ValidationRejectsOutOfRangeFields) {
  auto c = config({1}, {4}, PreconditionerMode::one_level);
  c.subdomains = {8};
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = config({0}, {4}, PreconditionerMode::none);
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = config({1}, {4}, PreconditionerMode::none);
  c.tolerance = 0.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = config({1}, {4}, PreconditionerMode::none);
  c.source = "sin(";
  EXPECT_THROW(validate(c), std::invalid_argument);
  EXPECT_THROW(parse_preconditioner("three-level"), std::invalid_argument);
  EXPECT_THROW(parse_format("json"), std::invalid_argument);
}

TEST(Config, IntLists) {
  EXPECT_EQ(parse_int_list("1..3"), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(parse_int_list("4,16, 64"), (std::vector<int>{4, 16, 64}));
  EXPECT_TRUE(parse_int_list("").empty());
  EXPECT_THROW(parse_int_list("1,x"), std::invalid_argument);
}

TEST(Experiment, EmptyLevelListGivesEmptyReport) {
  EXPECT_TRUE(run_experiment(config({}, {4}, PreconditionerMode::two_level)).empty());
}

TEST(Experiment, LevelOneWithFourSubdomainsIsExact) {
  for (auto mode : {PreconditionerMode::one_level, PreconditionerMode::two_level}) {
    const auto r = run_experiment(config({1}, {4}, mode));
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].status, CellStatus::ok);
    EXPECT_NEAR(r[0].average_condition, 1.0, 1e-10);
  }
}

TEST(Experiment, UnpreconditionedConditionGrowsPerLevel) {
  const auto r = run_experiment(config({1, 2, 3}, {4}, PreconditionerMode::none));
  ASSERT_EQ(r.size(), 3u);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_EQ(r[i].subdomains, 0);
    EXPECT_EQ(r[i].status, CellStatus::ok);
  }
  EXPECT_GT(r[1].average_condition, 8.0 * r[0].average_condition);
  const double ratio = r[2].average_condition / r[1].average_condition;
  EXPECT_GE(ratio, 8.0);
  EXPECT_LE(ratio, 32.0);
}

TEST(Experiment, BlanksWhereSubdomainsExceedPatches) {
  const auto r = run_experiment(config({1, 2}, {4, 16}, PreconditionerMode::one_level));
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0].status, CellStatus::ok);
  EXPECT_EQ(r[1].status, CellStatus::blank);
  EXPECT_EQ(r[1].subdomains, 16);
  EXPECT_EQ(r[3].status, CellStatus::ok);
}

TEST(Experiment, IterationCapMarksCellsDnc) {
  auto c = config({1, 2}, {4}, PreconditionerMode::none);
  c.max_pcg_iterations = 2;
  const auto r = run_experiment(c);
  ASSERT_EQ(r.size(), 2u);
  for (const auto& cell : r) EXPECT_EQ(cell.status, CellStatus::did_not_converge);
  EXPECT_TRUE(any_did_not_converge(r));
  const std::string md = emit_table(r, TableFormat::markdown);
  EXPECT_NE(md.find("DNC"), std::string::npos);
}

TEST(Experiment, AverageMatchesTraceKappas) {
  std::ostringstream trace;
  const auto r = run_experiment(config({1, 2, 3}, {4}, PreconditionerMode::two_level), &trace);
  // Mean of the nonempty kappa values logged per cell.
  std::istringstream lines(trace.str());
  std::string line;
  std::vector<std::vector<double>> per_cell;
  const std::regex solve(R"(dimension=(\d+) .*kappa=([^ ]+))");
  while (std::getline(lines, line)) {
    if (line.rfind("cell level=", 0) == 0 && line.find("unknowns=") != std::string::npos) {
      per_cell.emplace_back();
    }
    std::smatch m;
    if (std::regex_search(line, m, solve) && std::stoul(m[1]) > 0) {
      per_cell.back().push_back(std::stod(m[2]));
    }
  }
  ASSERT_EQ(per_cell.size(), r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    double mean = 0.0;
    for (double k : per_cell[i]) mean += k;
    mean /= static_cast<double>(per_cell[i].size());
    EXPECT_NEAR(r[i].average_condition, mean, 1e-5 * mean);
    EXPECT_EQ(r[i].condition_estimates.size(), per_cell[i].size());
  }
}

TEST(Experiment, DeterministicRerunsAreBitwiseIdentical) {
  auto c = config({1, 2, 3}, {4, 16}, PreconditionerMode::two_level);
  c.threads = 3;
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].condition_estimates, b[i].condition_estimates);
    EXPECT_EQ(a[i].solution, b[i].solution);
  }
}

TEST(Experiment, ContinuationDoesNotSlowPdas) {
  auto c = config({1, 2, 3, 4}, {4}, PreconditionerMode::one_level);
  const auto chained = run_experiment(c);
  for (int level : {3, 4}) {
    const auto cold = run_experiment(config({level}, {4}, PreconditionerMode::one_level));
    const auto& warm = chained[static_cast<std::size_t>(level - 1)];
    EXPECT_LE(warm.pdas_iterations, cold[0].pdas_iterations + 1) << "level " << level;
    EXPECT_EQ(warm.active, cold[0].active);
  }
}

TEST(Experiment, ContinuationGuessKeepsPredictedSetOnObstacle) {
  ProblemData d;
  d.source = [](Point x) { return 10.0 * (x.x1 + 1.0); };
  d.obstacle = [](Point) { return 0.01; };
  const PatchGrid coarse(1, d.domain);
  const PatchGrid fine(2, d.domain);
  const auto q = build_quadrature(fine);
  const auto a = assemble_stiffness(fine, d, q);
  const auto b = assemble_load(fine, d, q);
  const auto psi = obstacle_vector(fine, d);
  std::vector<double> yc(coarse.node_count(), 0.005);
  const IndexSet active{5, 6};
  for (int p : active) yc[p] = 0.01;
  const auto s = continuation_guess(fine, a, b, psi, coarse, yc, active);
  for (std::size_t p = 0; p < s.y.size(); ++p) {
    if (s.multiplier[p] != 0.0) EXPECT_EQ(s.y[p], psi[p]);
    EXPECT_GE(s.multiplier[p], 0.0);
    EXPECT_LE(s.y[p], psi[p] + 1e-15);
  }
}

TEST(Emit, CsvRoundTrip) {
  const auto r = run_experiment(config({1, 2}, {4, 16}, PreconditionerMode::two_level));
  const std::string csv = emit_table(r, TableFormat::csv);
  std::istringstream in(csv);
  const auto back = parse_table_csv(in);
  ASSERT_EQ(back.size(), r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_EQ(back[i].level, r[i].level);
    EXPECT_EQ(back[i].subdomains, r[i].subdomains);
    EXPECT_EQ(back[i].status, r[i].status);
    if (r[i].status == CellStatus::ok) {
      EXPECT_NEAR(back[i].average_condition, r[i].average_condition, 1e-9 * r[i].average_condition);
    }
  }
  std::istringstream bad("level,J\n");
  EXPECT_THROW(parse_table_csv(bad), std::invalid_argument);
}

TEST(Emit, SingleCellMarkdown) {
  TableReport cell;
  cell.level = 3;
  cell.subdomains = 0;
  cell.average_condition = 12345.0;
  cell.seconds = 0.5;
  const std::string md = emit_table({cell}, TableFormat::markdown);
  EXPECT_EQ(md, "| level | kappa | t_solve |\n|---|---|---|\n| 3 | 1.2345e+04 | 5.0000e-01 |\n");
}

TEST(Emit, GridMarkdownHasConditionAndTimeTables) {
  std::vector<TableReport> cells(4);
  cells[0] = {1, 4, 1.0, 0.1, CellStatus::ok};
  cells[1] = {1, 16, 0.0, 0.0, CellStatus::blank};
  cells[2] = {2, 4, 5.0, 0.2, CellStatus::ok};
  cells[3] = {2, 16, 0.0, 0.0, CellStatus::did_not_converge};
  const std::string md = emit_table(cells, TableFormat::markdown);
  EXPECT_NE(md.find("| level | J=4 | J=16 |"), std::string::npos);
  EXPECT_NE(md.find("| 1 | 1.0000e+00 | - |"), std::string::npos);
  EXPECT_NE(md.find("| 2 | 5.0000e+00 | DNC |"), std::string::npos);
  EXPECT_NE(md.find("| 2 | 2.0000e-01 | DNC |"), std::string::npos);
  EXPECT_NE(md.find("Solve time"), std::string::npos);
}

TEST(Experiment, TraceFileIsWritten) {
  auto c = config({1}, {4}, PreconditionerMode::none);
  c.trace_path = ::testing::TempDir() + "pumdd_trace.txt";
  run_experiment(c);
  std::ifstream in(c.trace_path);
  std::stringstream s;
  s << in.rdbuf();
  EXPECT_NE(s.str().find("pdas iter=1"), std::string::npos);
}
