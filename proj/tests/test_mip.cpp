#include <doctest.h>

#include <sstream>

#include "flowtree/formulations.hpp"
#include "flowtree/harness.hpp"
#include "flowtree/mip.hpp"

using namespace flowtree;

namespace {

MipModel knapsack_like() {
  MipModel m;
  int x1 = m.lp.add_variable(0, 1, 1.0);
  int x2 = m.lp.add_variable(0, 1, 1.0);
  m.lp.add_row({{x1, 1.0}, {x2, 1.0}}, RowSense::LessEqual, 1.5);
  m.is_integer = {true, true};
  m.var_names = {"x1", "x2"};
  return m;
}

}  // namespace

TEST_CASE("already-integral relaxations finish at the root") {
  MipModel m;
  int x = m.lp.add_variable(0, 1, 1.0);
  m.lp.add_row({{x, 1.0}}, RowSense::LessEqual, 1.0);
  m.is_integer = {true};
  m.var_names = {"x"};
  SolveReport rep = solve_mip(m);
  CHECK(rep.termination == Termination::Optimal);
  CHECK(rep.incumbent == doctest::Approx(1.0));
  CHECK(rep.nodes == 1);  // no branching beyond the root
  CHECK(rep.gap == 0.0);
}

TEST_CASE("fractional knapsack rounds down to one item") {
  SolveReport rep = solve_mip(knapsack_like());
  CHECK(rep.termination == Termination::Optimal);
  CHECK(rep.incumbent == doctest::Approx(1.0));
  CHECK(rep.nodes > 1);
  CHECK(rep.gap == 0.0);
}

TEST_CASE("an always-empty lazy callback behaves as plain branch and bound") {
  SolveReport plain = solve_mip(knapsack_like());
  MipModel lazy = register_lazy(knapsack_like(),
                                [](const std::vector<double>&) {
                                  return std::vector<LinearRow>{};
                                });
  SolveReport with = solve_mip(lazy);
  CHECK(plain.incumbent == with.incumbent);
  CHECK(plain.nodes == with.nodes);
  CHECK(plain.best_bound == with.best_bound);
}

TEST_CASE("a violated lazy cut forces a re-solve instead of fathoming") {
  MipModel m;
  int x1 = m.lp.add_variable(0, 1, 1.0);
  int x2 = m.lp.add_variable(0, 1, 1.0);
  m.is_integer = {true, true};
  m.var_names = {"x1", "x2"};
  (void)x1;
  (void)x2;
  int calls_with_cut = 0;
  int calls_total = 0;
  m = register_lazy(std::move(m), [&](const std::vector<double>& x) {
    ++calls_total;
    std::vector<LinearRow> cuts;
    if (x[0] + x[1] > 1.0 + 1e-6) {
      ++calls_with_cut;
      cuts.push_back(LinearRow{{{0, 1.0}, {1, 1.0}}, RowSense::LessEqual, 1.0});
    }
    return cuts;
  });
  SolveReport rep = solve_mip(m);
  CHECK(rep.termination == Termination::Optimal);
  CHECK(rep.incumbent == doctest::Approx(1.0));  // (1,1) was cut off
  CHECK(calls_with_cut == 1);
  CHECK(calls_total >= 2);  // the re-solve ends at another integral point
  CHECK(rep.lazy_cuts_added == 1);
  CHECK(rep.incumbent_x[0] + rep.incumbent_x[1] <= 1.0 + 1e-6);
}

TEST_CASE("a callback returning a satisfied cut is reported as a bug") {
  MipModel m;
  m.lp.add_variable(0, 1, 1.0);
  m.is_integer = {true};
  m.var_names = {"x"};
  m = register_lazy(std::move(m), [](const std::vector<double>&) {
    // x <= 1 holds at every point of the model: never a valid lazy answer.
    return std::vector<LinearRow>{LinearRow{{{0, 1.0}}, RowSense::LessEqual, 1.0}};
  });
  CHECK_THROWS_WITH_AS(solve_mip(m),
                       doctest::Contains("satisfied at the separation point"),
                       std::runtime_error);
}

TEST_CASE("a throwing callback aborts the solve with context") {
  MipModel m;
  m.lp.add_variable(0, 1, 1.0);
  m.is_integer = {true};
  m.var_names = {"x"};
  m = register_lazy(std::move(m), [](const std::vector<double>&) -> std::vector<LinearRow> {
    throw std::runtime_error("boom");
  });
  CHECK_THROWS_WITH_AS(solve_mip(m), doctest::Contains("lazy callback failed"),
                       std::runtime_error);
}

TEST_CASE("node limits terminate with a valid bound") {
  BinaryDataset ds;
  for (int i = 0; i < 8; ++i) {
    ds.features.push_back({static_cast<uint8_t>(i & 1),
                           static_cast<uint8_t>((i >> 1) & 1),
                           static_cast<uint8_t>((i >> 2) & 1)});
    ds.labels.push_back((i ^ (i >> 1)) & 1);
  }
  ds.class_names = {"A", "B"};
  ds.feature_names = {"f0", "f1", "f2"};
  FormulationConfig cfg;
  cfg.depth = 2;
  FlowModel model = build_flowoct(ds, cfg);
  SolveLimits limits;
  limits.max_nodes = 2;
  SolveReport rep = solve_mip(model.mip, limits);
  CHECK(rep.termination == Termination::NodeLimit);
  CHECK(rep.nodes <= 2);
  if (rep.has_incumbent) CHECK(rep.best_bound >= rep.incumbent - 1e-9);
}

TEST_CASE("solver results are deterministic across runs") {
  BinaryDataset ds;
  ds.features = {{0, 1}, {1, 0}, {1, 1}, {0, 0}, {1, 0}, {0, 1}};
  ds.labels = {0, 1, 0, 1, 0, 1};
  ds.class_names = {"A", "B"};
  ds.feature_names = {"f0", "f1"};
  FormulationConfig cfg;
  cfg.depth = 2;
  FlowModel model = build_flowoct(ds, cfg);
  SolveReport a = solve_mip(model.mip);
  FlowModel model2 = build_flowoct(ds, cfg);
  SolveReport b = solve_mip(model2.mip);
  CHECK(a.incumbent == b.incumbent);
  CHECK(a.nodes == b.nodes);
  CHECK(a.incumbent_x == b.incumbent_x);
}

TEST_CASE("the node log tracks a non-increasing bound") {
  BinaryDataset ds;
  ds.features = {{0, 1}, {1, 0}, {1, 1}, {0, 0}, {1, 0}, {0, 1}, {1, 1}, {0, 0}};
  ds.labels = {0, 1, 0, 1, 0, 0, 1, 0};
  ds.class_names = {"A", "B"};
  ds.feature_names = {"f0", "f1"};
  FormulationConfig cfg;
  cfg.depth = 2;
  FlowModel model = build_flowoct(ds, cfg);
  std::ostringstream log;
  SolveLimits limits;
  limits.node_log = &log;
  SolveReport rep = solve_mip(model.mip, limits);
  CHECK(rep.termination == Termination::Optimal);

  // Parse "bound=..." from each record; the best-first bound never rises.
  std::istringstream in(log.str());
  std::string line;
  double last = 1e300;
  int records = 0;
  while (std::getline(in, line)) {
    auto pos = line.find("bound=");
    REQUIRE(pos != std::string::npos);
    double bound = std::stod(line.substr(pos + 6));
    CHECK(bound <= last + 1e-9);
    last = bound;
    ++records;
  }
  CHECK(records == rep.nodes);
}

TEST_CASE("flowoct agrees with exhaustive enumeration on a toy instance") {
  BinaryDataset ds;
  ds.features = {{0, 1}, {1, 0}, {1, 1}, {0, 0}};
  ds.labels = {0, 1, 1, 0};
  ds.class_names = {"A", "B"};
  ds.feature_names = {"f0", "f1"};
  EnumerationResult oracle = enumerate_all_trees(ds, 2);
  FormulationConfig cfg;
  cfg.depth = 2;
  FlowModel model = build_flowoct(ds, cfg);
  SolveReport rep = solve_mip(model.mip);
  CHECK(rep.termination == Termination::Optimal);
  CHECK(rep.incumbent == doctest::Approx(oracle.best_correct).epsilon(1e-9));
}
