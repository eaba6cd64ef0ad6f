#include <doctest.h>

#include <sstream>

#include "flowtree/benders.hpp"
#include "flowtree/formulations.hpp"
#include "flowtree/harness.hpp"
#include "flowtree/lp_export.hpp"

using namespace flowtree;

namespace {

BinaryDataset toy(std::vector<std::vector<uint8_t>> rows, std::vector<int> labels,
                  int num_classes = 2) {
  BinaryDataset ds;
  ds.features = std::move(rows);
  ds.labels = std::move(labels);
  for (int k = 0; k < num_classes; ++k)
    ds.class_names.push_back(std::string(1, static_cast<char>('A' + k)));
  for (size_t f = 0; f < ds.features[0].size(); ++f)
    ds.feature_names.push_back("f" + std::to_string(f));
  return ds;
}

BinaryDataset conflicting_pair() { return toy({{0}, {0}}, {0, 1}); }

int count_rows(const LinearProgram& lp, RowSense sense, double rhs) {
  int c = 0;
  for (const auto& row : lp.rows)
    if (row.sense == sense && row.rhs == rhs) ++c;
  return c;
}

}  // namespace

TEST_CASE("flowoct variable count: 9 b + 14 w + 56 z at depth 2") {
  BinaryDataset ds = toy({{0, 0, 1}, {0, 1, 0}, {1, 0, 0}, {1, 1, 1}}, {0, 1, 1, 0});
  FormulationConfig cfg;
  cfg.depth = 2;
  FlowModel m = build_flowoct(ds, cfg);
  CHECK(m.layout.num_arcs == 14);  // 1 + 3*3 + 4
  CHECK(m.mip.lp.num_vars == 79);
  CHECK(m.layout.w_offset == 9);
  CHECK(m.layout.z_offset == 9 + 14);
  // z variables are continuous, b and w integral.
  for (int j = 0; j < m.layout.z_offset; ++j) CHECK(m.mip.is_integer[j]);
  for (int j = m.layout.z_offset; j < m.mip.lp.num_vars; ++j)
    CHECK_FALSE(m.mip.is_integer[j]);
}

TEST_CASE("flowoct conservation rows: one per node per datapoint") {
  BinaryDataset ds = toy({{0}}, {0});
  FormulationConfig cfg;
  cfg.depth = 1;
  FlowModel m = build_flowoct(ds, cfg);
  // 3 structural (= 1) rows and 3 conservation (= 0) rows for the datapoint.
  CHECK(count_rows(m.mip.lp, RowSense::Equal, 1.0) == 3);
  CHECK(count_rows(m.mip.lp, RowSense::Equal, 0.0) == 3);
}

TEST_CASE("flowoct row count roughly doubles when the depth grows by one") {
  BinaryDataset ds = toy({{0, 1}, {1, 0}, {1, 1}, {0, 0}}, {0, 1, 1, 0});
  FormulationConfig c2, c3;
  c2.depth = 2;
  c3.depth = 3;
  double r2 = static_cast<double>(build_flowoct(ds, c2).mip.lp.rows.size());
  double r3 = static_cast<double>(build_flowoct(ds, c3).mip.lp.rows.size());
  CHECK(r3 / r2 > 1.7);
  CHECK(r3 / r2 < 2.4);
}

TEST_CASE("benders master variable count is arc-free: 45 b + 14 w + 100 g") {
  BinaryDataset ds;
  for (int i = 0; i < 100; ++i) {
    std::vector<uint8_t> row(15, 0);
    row[i % 15] = 1;
    ds.features.push_back(row);
    ds.labels.push_back(i % 2);
  }
  ds.class_names = {"A", "B"};
  for (int f = 0; f < 15; ++f) ds.feature_names.push_back("f" + std::to_string(f));
  FormulationConfig cfg;
  cfg.depth = 2;
  cfg.family = Family::Benders;
  MasterModel m = build_benders_master(ds, cfg);
  CHECK(m.mip.lp.num_vars == 45 + 14 + 100);
  CHECK(m.mip.lp.rows.size() == 7);  // structural only; cuts arrive lazily
}

TEST_CASE("at lambda = 1 the master prefers the empty tree") {
  BinaryDataset ds = toy({{0, 1}, {1, 0}}, {0, 1});
  FormulationConfig cfg;
  cfg.depth = 2;
  cfg.lambda = 1.0;
  cfg.family = Family::Benders;
  MasterModel m = build_benders_master(ds, cfg);
  TreeTopology topo(cfg.depth);
  MipModel mip = register_lazy(std::move(m.mip),
                               make_benders_callback(topo, ds, m.layout));
  mip.evaluator = make_benders_evaluator(topo, ds, m.layout, cfg.lambda);
  SolveReport rep = solve_mip(mip);
  CHECK(rep.termination == Termination::Optimal);
  CHECK(rep.incumbent == doctest::Approx(0.0));
  TreeSolution sol = decode_tree(rep.incumbent_x, m.layout);
  CHECK(sol.num_splits() == 0);
}

TEST_CASE("benders g values match the decoded tree's routing") {
  BinaryDataset ds = conflicting_pair();
  FormulationConfig cfg;
  cfg.depth = 1;
  cfg.family = Family::Benders;
  MasterModel m = build_benders_master(ds, cfg);
  TreeTopology topo(cfg.depth);
  MipModel mip = register_lazy(std::move(m.mip),
                               make_benders_callback(topo, ds, m.layout));
  mip.evaluator = make_benders_evaluator(topo, ds, m.layout, cfg.lambda);
  SolveReport rep = solve_mip(mip);
  CHECK(rep.termination == Termination::Optimal);
  CHECK(rep.incumbent == doctest::Approx(1.0));  // one of the two must lose
  TreeSolution sol = decode_tree(rep.incumbent_x, m.layout);
  for (int i = 0; i < ds.num_rows(); ++i) {
    int g = g_eval(topo, sol, ds.features[i], ds.labels[i]);
    CHECK(rep.incumbent_x[m.layout.g_index(i)] == doctest::Approx(g));
  }
}

TEST_CASE("oct has one assignment variable per datapoint-leaf pair") {
  BinaryDataset ds = conflicting_pair();
  FormulationConfig cfg;
  cfg.depth = 1;
  cfg.family = Family::Oct;
  OctModel m = build_oct(ds, cfg);
  CHECK(m.layout.zeta_offset - m.layout.w_offset == 2 * 2);  // w block
  CHECK(m.layout.d_offset - m.layout.zeta_offset == 2 * 2);  // zeta block: I*L
  CHECK(m.mip.lp.objective_constant == doctest::Approx(2.0));
}

TEST_CASE("oct resolves the two-point conflict with one misclassification") {
  BinaryDataset ds = conflicting_pair();
  FormulationConfig cfg;
  cfg.depth = 1;
  cfg.family = Family::Oct;
  OctModel m = build_oct(ds, cfg);
  SolveReport rep = solve_mip(m.mip);
  CHECK(rep.termination == Termination::Optimal);
  CHECK(rep.incumbent == doctest::Approx(1.0));
}

TEST_CASE("oct and flowoct optima agree with the oracle on tiny instances") {
  std::vector<BinaryDataset> instances = {
      conflicting_pair(),
      toy({{0, 1}, {1, 0}, {1, 1}, {0, 0}}, {0, 1, 1, 0}),  // xor labels
      toy({{0}, {1}, {0}, {1}}, {0, 1, 1, 0}),
      toy({{0, 0}, {0, 1}, {1, 0}}, {0, 1, 1}),
  };
  for (const BinaryDataset& ds : instances) {
    for (int depth = 1; depth <= 2; ++depth) {
      EnumerationResult oracle = enumerate_all_trees(ds, depth);
      FormulationConfig cfg;
      cfg.depth = depth;
      SolveReport flow = solve_mip(build_flowoct(ds, cfg).mip);
      cfg.family = Family::Oct;
      SolveReport oct = solve_mip(build_oct(ds, cfg).mip);
      REQUIRE(flow.termination == Termination::Optimal);
      REQUIRE(oct.termination == Termination::Optimal);
      CHECK(flow.incumbent == doctest::Approx(oracle.best_correct).epsilon(1e-9));
      CHECK(oct.incumbent == doctest::Approx(oracle.best_correct).epsilon(1e-9));
    }
  }
}

TEST_CASE("relaxation dominance: flowoct is at most oct at lambda = 0") {
  std::vector<BinaryDataset> instances = {
      conflicting_pair(),
      toy({{0, 1}, {1, 0}, {1, 1}, {0, 0}}, {0, 1, 1, 0}),
      toy({{0, 0, 1}, {0, 1, 0}, {1, 0, 0}, {1, 1, 1}, {1, 0, 1}}, {0, 1, 1, 0, 1}),
  };
  for (const BinaryDataset& ds : instances) {
    for (int depth = 1; depth <= 2; ++depth) {
      FormulationConfig cfg;
      cfg.depth = depth;
      LpSolution flow = solve_lp(build_flowoct(ds, cfg).mip.lp);
      cfg.family = Family::Oct;
      LpSolution oct = solve_lp(build_oct(ds, cfg).mip.lp);
      REQUIRE(flow.optimal());
      REQUIRE(oct.optimal());
      CHECK(flow.objective <= oct.objective + 1e-6);
    }
  }
}

TEST_CASE("multi-cut families follow the greedy one-per-class rule") {
  TreeTopology topo(1);
  // No datapoint has x_f = 1 -> no cut for that feature.
  BinaryDataset none = toy({{0, 0}, {0, 0}}, {0, 1});
  auto cuts_none = generate_multi_cuts(none, topo);
  CHECK(cuts_none.empty());

  // Two same-class datapoints with x_f = 1: a singleton family.
  BinaryDataset same = toy({{1}, {1}}, {0, 0});
  auto cuts_same = generate_multi_cuts(same, topo);
  REQUIRE(cuts_same.size() == 1);
  CHECK(cuts_same[0].node == 1);
  CHECK(cuts_same[0].feature == 0);
  CHECK(cuts_same[0].datapoints == std::vector<int>{0});

  // Labels A, B, A: the family keeps the first of each class.
  BinaryDataset aba = toy({{1}, {1}, {1}}, {0, 1, 0});
  auto cuts_aba = generate_multi_cuts(aba, topo);
  REQUIRE(cuts_aba.size() == 1);
  CHECK(cuts_aba[0].datapoints == std::vector<int>{0, 1});
}

TEST_CASE("multi-cuts only target nodes whose children are both leaves") {
  BinaryDataset ds = toy({{1, 0}, {1, 1}}, {0, 1});
  TreeTopology deep(2);
  auto cuts = generate_multi_cuts(ds, deep);
  CHECK(!cuts.empty());
  for (const MultiCut& cut : cuts) {
    CHECK(deep.is_leaf(deep.left(cut.node)));
    CHECK(deep.is_leaf(deep.right(cut.node)));
  }
}

TEST_CASE("multi-cuts keep the optimum and never lift the relaxation") {
  std::vector<BinaryDataset> instances = {
      toy({{0, 1}, {1, 0}, {1, 1}, {0, 0}}, {0, 1, 1, 0}),
      toy({{1}, {1}, {0}}, {0, 1, 0}),
      toy({{1, 1}, {1, 0}, {0, 1}, {0, 0}, {1, 1}}, {0, 1, 0, 1, 1}),
  };
  for (const BinaryDataset& ds : instances) {
    for (int depth = 1; depth <= 2; ++depth) {
      FormulationConfig plain;
      plain.depth = depth;
      FormulationConfig strengthened = plain;
      strengthened.enable_multi_cuts = true;
      SolveReport ip_plain = solve_mip(build_flowoct(ds, plain).mip);
      SolveReport ip_cut = solve_mip(build_flowoct(ds, strengthened).mip);
      CHECK(ip_plain.incumbent == doctest::Approx(ip_cut.incumbent).epsilon(1e-9));
      LpSolution lp_plain = solve_lp(build_flowoct(ds, plain).mip.lp);
      LpSolution lp_cut = solve_lp(build_flowoct(ds, strengthened).mip.lp);
      CHECK(lp_cut.objective <= lp_plain.objective + 1e-6);
    }
  }
}

TEST_CASE("every generated multi-cut holds at every integral feasible tree") {
  BinaryDataset ds = toy({{1, 0}, {1, 1}, {0, 1}, {1, 0}}, {0, 1, 0, 1});
  int depth = 2;
  TreeTopology topo(depth);
  auto cuts = generate_multi_cuts(ds, topo);
  REQUIRE(!cuts.empty());
  // Enumerate all equality-feasible trees; a correctly classified datapoint
  // sends its unit flow along its routing path, so z[i, left(n)] = 1 exactly
  // when that path crosses the left child of n.
  std::vector<int> digit(topo.num_internal() + topo.num_leaves(), 0);
  int F = ds.num_features(), K = ds.num_classes();
  for (;;) {
    TreeSolution sol = TreeSolution::zeros(depth, F, K);
    for (NodeId n = 1; n <= topo.num_internal(); ++n) {
      int d = digit[n - 1];
      if (d < F)
        sol.b[n][d] = 1;
      else
        sol.w[n][d - F] = 1;
    }
    for (NodeId n = topo.num_internal() + 1; n <= topo.num_nodes(); ++n)
      sol.w[n][digit[n - 1]] = 1;
    for (const MultiCut& cut : cuts) {
      int lhs = 0;
      for (int i : cut.datapoints) {
        if (!g_eval(topo, sol, ds.features[i], ds.labels[i])) continue;
        RouteResult r = route(topo, sol, ds.features[i]);
        for (NodeId n = r.terminal; n > 1; n = topo.ancestor(n))
          if (topo.ancestor(n) == cut.node && topo.left(cut.node) == n) ++lhs;
      }
      REQUIRE(lhs + sol.b[cut.node][cut.feature] <= 1);
    }
    int pos = static_cast<int>(digit.size()) - 1;
    while (pos >= 0) {
      int radix = pos < topo.num_internal() ? F + K : K;
      if (++digit[pos] < radix) break;
      digit[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
}

TEST_CASE("lp export carries the documented sections and names") {
  BinaryDataset ds = conflicting_pair();
  FormulationConfig cfg;
  cfg.depth = 1;
  FlowModel m = build_flowoct(ds, cfg);
  std::string text = to_lp_string(m.mip);
  CHECK(text.find("Maximize") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  CHECK(text.find("General") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
  CHECK(text.find("b_1_0") != std::string::npos);
  CHECK(text.find("w_2_0") != std::string::npos);
  CHECK(text.find("z_0_s_1") != std::string::npos);

  cfg.family = Family::Oct;
  std::string oct_text = to_lp_string(build_oct(ds, cfg).mip);
  CHECK(oct_text.find("zeta_0_2") != std::string::npos);
  // The objective constant is written as a literal term.
  CHECK(oct_text.find("+ 2") != std::string::npos);
}

TEST_CASE("config validation rejects bad depth and lambda") {
  FormulationConfig cfg;
  cfg.depth = 0;
  CHECK_THROWS(cfg.check_valid());
  cfg.depth = 2;
  cfg.lambda = 1.5;
  CHECK_THROWS(cfg.check_valid());
  cfg.lambda = 0.5;
  CHECK_NOTHROW(cfg.check_valid());
}
