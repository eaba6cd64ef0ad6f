#include "flowtree/formulations.hpp"

#include <cmath>
#include <stdexcept>

namespace flowtree {

std::string family_name(Family f) {
  switch (f) {
    case Family::FlowOct: return "flowoct";
    case Family::Benders: return "benders";
    case Family::Oct: return "oct";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "flowoct") return Family::FlowOct;
  if (name == "benders") return Family::Benders;
  if (name == "oct") return Family::Oct;
  throw std::invalid_argument("unknown formulation family: " + name);
}

void FormulationConfig::check_valid() const {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("lambda must lie in [0,1]");
}

namespace {

std::string arc_name(const TreeTopology& topo, int arc) {
  const Arc& a = topo.arcs()[arc];
  std::string tail = a.tail == 0 ? "s" : std::to_string(a.tail);
  std::string head = a.head == -1 ? "t" : std::to_string(a.head);
  return tail + "_" + head;
}

}  // namespace

FlowModel build_flowoct(const BinaryDataset& ds, const FormulationConfig& cfg) {
  cfg.check_valid();
  ds.check_valid();
  TreeTopology topo(cfg.depth);
  int F = ds.num_features(), K = ds.num_classes(), I = ds.num_rows();
  int N = topo.num_internal(), T = topo.num_nodes();

  FlowModel out;
  FlowLayout& L = out.layout;
  L.depth = cfg.depth;
  L.num_features = F;
  L.num_classes = K;
  L.num_rows = I;
  L.num_arcs = topo.num_arcs();
  L.w_offset = N * F;
  L.z_offset = L.w_offset + T * K;
  L.num_vars = L.z_offset + I * L.num_arcs;

  MipModel& mip = out.mip;
  for (NodeId n = 1; n <= N; ++n)
    for (int f = 0; f < F; ++f) {
      mip.lp.add_variable(0.0, 1.0, -cfg.lambda);
      mip.is_integer.push_back(true);
      mip.var_names.push_back("b_" + std::to_string(n) + "_" + std::to_string(f));
    }
  for (NodeId n = 1; n <= T; ++n)
    for (int k = 0; k < K; ++k) {
      mip.lp.add_variable(0.0, 1.0, 0.0);
      mip.is_integer.push_back(true);
      mip.var_names.push_back("w_" + std::to_string(n) + "_" + std::to_string(k));
    }
  for (int i = 0; i < I; ++i)
    for (int arc = 0; arc < L.num_arcs; ++arc) {
      bool to_sink = topo.arcs()[arc].head == -1;
      mip.lp.add_variable(0.0, 1.0, to_sink ? 1.0 - cfg.lambda : 0.0);
      mip.is_integer.push_back(false);  // max-flow structure: relaxation exact
      mip.var_names.push_back("z_" + std::to_string(i) + "_" + arc_name(topo, arc));
    }

  // Node assignment: branch or label at internal nodes, label at leaves.
  for (NodeId n = 1; n <= T; ++n) {
    std::vector<std::pair<int, double>> row;
    if (topo.is_internal(n))
      for (int f = 0; f < F; ++f) row.push_back({L.b_index(n, f), 1.0});
    for (int k = 0; k < K; ++k) row.push_back({L.w_index(n, k), 1.0});
    mip.lp.add_row(std::move(row), RowSense::Equal, 1.0);
  }

  for (int i = 0; i < I; ++i) {
    const auto& x = ds.features[i];
    int y = ds.labels[i];
    // Flow conservation; the source arc bound (<= 1) lives on the variable.
    for (NodeId n = 1; n <= T; ++n) {
      int in_arc = n == 1 ? topo.source_arc()
                          : (topo.ancestor(n) * 2 == n
                                 ? topo.left_arc(topo.ancestor(n))
                                 : topo.right_arc(topo.ancestor(n)));
      std::vector<std::pair<int, double>> row{{L.z_index(i, in_arc), 1.0}};
      if (topo.is_internal(n)) {
        row.push_back({L.z_index(i, topo.left_arc(n)), -1.0});
        row.push_back({L.z_index(i, topo.right_arc(n)), -1.0});
      }
      row.push_back({L.z_index(i, topo.sink_arc(n)), -1.0});
      mip.lp.add_row(std::move(row), RowSense::Equal, 0.0);
    }
    // Branching capacity: left needs a selected feature with x_f = 0,
    // right one with x_f = 1.
    for (NodeId n = 1; n <= N; ++n) {
      std::vector<std::pair<int, double>> lrow{{L.z_index(i, topo.left_arc(n)), 1.0}};
      std::vector<std::pair<int, double>> rrow{{L.z_index(i, topo.right_arc(n)), 1.0}};
      for (int f = 0; f < F; ++f) {
        if (x[f] == 0)
          lrow.push_back({L.b_index(n, f), -1.0});
        else
          rrow.push_back({L.b_index(n, f), -1.0});
      }
      mip.lp.add_row(std::move(lrow), RowSense::LessEqual, 0.0);
      mip.lp.add_row(std::move(rrow), RowSense::LessEqual, 0.0);
    }
    // Sink arcs only open at nodes predicting the datapoint's class.
    for (NodeId n = 1; n <= T; ++n)
      mip.lp.add_row({{L.z_index(i, topo.sink_arc(n)), 1.0}, {L.w_index(n, y), -1.0}},
                     RowSense::LessEqual, 0.0);
  }

  if (cfg.enable_multi_cuts) {
    for (const MultiCut& cut : generate_multi_cuts(ds, topo)) {
      std::vector<std::pair<int, double>> row;
      for (int i : cut.datapoints)
        row.push_back({L.z_index(i, topo.left_arc(cut.node)), 1.0});
      row.push_back({L.b_index(cut.node, cut.feature), 1.0});
      mip.lp.add_row(std::move(row), RowSense::LessEqual, 1.0);
    }
  }
  return out;
}

MasterModel build_benders_master(const BinaryDataset& ds, const FormulationConfig& cfg) {
  cfg.check_valid();
  ds.check_valid();
  TreeTopology topo(cfg.depth);
  int F = ds.num_features(), K = ds.num_classes(), I = ds.num_rows();
  int N = topo.num_internal(), T = topo.num_nodes();

  MasterModel out;
  MasterLayout& L = out.layout;
  L.depth = cfg.depth;
  L.num_features = F;
  L.num_classes = K;
  L.num_rows = I;
  L.w_offset = N * F;
  L.g_offset = L.w_offset + T * K;
  L.num_vars = L.g_offset + I;

  MipModel& mip = out.mip;
  for (NodeId n = 1; n <= N; ++n)
    for (int f = 0; f < F; ++f) {
      mip.lp.add_variable(0.0, 1.0, -cfg.lambda);
      mip.is_integer.push_back(true);
      mip.var_names.push_back("b_" + std::to_string(n) + "_" + std::to_string(f));
    }
  for (NodeId n = 1; n <= T; ++n)
    for (int k = 0; k < K; ++k) {
      mip.lp.add_variable(0.0, 1.0, 0.0);
      mip.is_integer.push_back(true);
      mip.var_names.push_back("w_" + std::to_string(n) + "_" + std::to_string(k));
    }
  for (int i = 0; i < I; ++i) {
    mip.lp.add_variable(0.0, 1.0, 1.0 - cfg.lambda);
    mip.is_integer.push_back(false);
    mip.var_names.push_back("g_" + std::to_string(i));
  }

  for (NodeId n = 1; n <= T; ++n) {
    std::vector<std::pair<int, double>> row;
    if (topo.is_internal(n))
      for (int f = 0; f < F; ++f) row.push_back({L.b_index(n, f), 1.0});
    for (int k = 0; k < K; ++k) row.push_back({L.w_index(n, k), 1.0});
    mip.lp.add_row(std::move(row), RowSense::Equal, 1.0);
  }
  return out;
}

OctModel build_oct(const BinaryDataset& ds, const FormulationConfig& cfg) {
  cfg.check_valid();
  ds.check_valid();
  TreeTopology topo(cfg.depth);
  int F = ds.num_features(), K = ds.num_classes(), I = ds.num_rows();
  int N = topo.num_internal(), NL = topo.num_leaves();
  int first_leaf = N + 1;
  double big_m = static_cast<double>(I);

  OctModel out;
  OctLayout& L = out.layout;
  L.depth = cfg.depth;
  L.num_features = F;
  L.num_classes = K;
  L.num_rows = I;
  L.num_leaves = NL;
  L.first_leaf = first_leaf;
  L.w_offset = N * F;
  L.zeta_offset = L.w_offset + NL * K;
  L.d_offset = L.zeta_offset + I * NL;
  L.v_offset = L.d_offset + N;
  L.l_offset = L.v_offset + N;
  L.loss_offset = L.l_offset + NL;
  L.p_offset = L.loss_offset + NL;
  L.pk_offset = L.p_offset + NL;
  L.num_vars = L.pk_offset + NL * K;

  MipModel& mip = out.mip;
  mip.lp.objective_constant = (1.0 - cfg.lambda) * I;
  auto add = [&](double lb, double ub, double obj, bool integer, std::string name) {
    mip.lp.add_variable(lb, ub, obj);
    mip.is_integer.push_back(integer);
    mip.var_names.push_back(std::move(name));
  };
  for (NodeId n = 1; n <= N; ++n)
    for (int f = 0; f < F; ++f)
      add(0, 1, 0, true, "b_" + std::to_string(n) + "_" + std::to_string(f));
  for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n)
    for (int k = 0; k < K; ++k)
      add(0, 1, 0, true, "w_" + std::to_string(n) + "_" + std::to_string(k));
  for (int i = 0; i < I; ++i)
    for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n)
      add(0, 1, 0, true, "zeta_" + std::to_string(i) + "_" + std::to_string(n));
  for (NodeId n = 1; n <= N; ++n)
    add(0, 1, -cfg.lambda, true, "d_" + std::to_string(n));
  for (NodeId n = 1; n <= N; ++n)
    add(0, 1, 0, false, "v_" + std::to_string(n));
  for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n)
    add(0, 1, 0, true, "l_" + std::to_string(n));
  for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n)
    add(0, big_m, -(1.0 - cfg.lambda), false, "Lmis_" + std::to_string(n));
  for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n)
    add(0, big_m, 0, false, "P_" + std::to_string(n));
  for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n)
    for (int k = 0; k < K; ++k)
      add(0, big_m, 0, false, "Pk_" + std::to_string(n) + "_" + std::to_string(k));

  // Misclassification count at each leaf, big-M gated by the leaf label.
  for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n)
    for (int k = 0; k < K; ++k) {
      mip.lp.add_row({{L.loss_index(n), 1.0},
                      {L.p_index(n), -1.0},
                      {L.pk_index(n, k), 1.0},
                      {L.w_index(n, k), -big_m}},
                     RowSense::GreaterEqual, -big_m);
      mip.lp.add_row({{L.loss_index(n), 1.0},
                      {L.p_index(n), -1.0},
                      {L.pk_index(n, k), 1.0},
                      {L.w_index(n, k), -big_m}},
                     RowSense::LessEqual, 0.0);
    }
  // Definitions of per-leaf counts.
  for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n)
    for (int k = 0; k < K; ++k) {
      std::vector<std::pair<int, double>> row{{L.pk_index(n, k), 1.0}};
      for (int i = 0; i < I; ++i)
        if (ds.labels[i] == k) row.push_back({L.zeta_index(i, n), -1.0});
      mip.lp.add_row(std::move(row), RowSense::Equal, 0.0);
    }
  for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n) {
    std::vector<std::pair<int, double>> row{{L.p_index(n), 1.0}};
    for (int i = 0; i < I; ++i) row.push_back({L.zeta_index(i, n), -1.0});
    mip.lp.add_row(std::move(row), RowSense::Equal, 0.0);
  }
  for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n) {
    std::vector<std::pair<int, double>> row{{L.l_index(n), 1.0}};
    for (int k = 0; k < K; ++k) row.push_back({L.w_index(n, k), -1.0});
    mip.lp.add_row(std::move(row), RowSense::Equal, 0.0);
  }
  // Unlabeled leaves take no datapoints.
  for (int i = 0; i < I; ++i)
    for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n)
      mip.lp.add_row({{L.zeta_index(i, n), 1.0}, {L.l_index(n), -1.0}},
                     RowSense::LessEqual, 0.0);
  // Every datapoint lands in exactly one leaf.
  for (int i = 0; i < I; ++i) {
    std::vector<std::pair<int, double>> row;
    for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n)
      row.push_back({L.zeta_index(i, n), 1.0});
    mip.lp.add_row(std::move(row), RowSense::Equal, 1.0);
  }
  // Routing consistency along right- and left-branch ancestors.
  for (int i = 0; i < I; ++i) {
    const auto& x = ds.features[i];
    for (NodeId n = first_leaf; n <= topo.num_nodes(); ++n) {
      for (NodeId mnode : topo.right_branch_ancestors(n)) {
        std::vector<std::pair<int, double>> row;
        for (int f = 0; f < F; ++f)
          if (x[f] == 1) row.push_back({L.b_index(mnode, f), 1.0});
        row.push_back({L.v_index(mnode), -1.0});
        row.push_back({L.zeta_index(i, n), -1.0});
        mip.lp.add_row(std::move(row), RowSense::GreaterEqual, -1.0);
      }
      for (NodeId mnode : topo.left_branch_ancestors(n)) {
        std::vector<std::pair<int, double>> row;
        for (int f = 0; f < F; ++f)
          if (x[f] == 1) row.push_back({L.b_index(mnode, f), 1.0});
        row.push_back({L.v_index(mnode), -1.0});
        row.push_back({L.zeta_index(i, n), 2.0});
        mip.lp.add_row(std::move(row), RowSense::LessEqual, 1.0);
      }
    }
  }
  // A splitting node picks exactly one feature; cutoffs only where splitting;
  // children may split only when the parent does.
  for (NodeId n = 1; n <= N; ++n) {
    std::vector<std::pair<int, double>> row;
    for (int f = 0; f < F; ++f) row.push_back({L.b_index(n, f), 1.0});
    row.push_back({L.d_index(n), -1.0});
    mip.lp.add_row(std::move(row), RowSense::Equal, 0.0);
  }
  for (NodeId n = 1; n <= N; ++n)
    mip.lp.add_row({{L.v_index(n), 1.0}, {L.d_index(n), -1.0}},
                   RowSense::LessEqual, 0.0);
  for (NodeId n = 2; n <= N; ++n)
    mip.lp.add_row({{L.d_index(n), 1.0}, {L.d_index(topo.ancestor(n)), -1.0}},
                   RowSense::LessEqual, 0.0);
  return out;
}

std::vector<MultiCut> generate_multi_cuts(const BinaryDataset& ds,
                                          const TreeTopology& topo) {
  std::vector<MultiCut> cuts;
  int K = ds.num_classes();
  for (NodeId n = 1; n <= topo.num_internal(); ++n) {
    if (!topo.is_leaf(topo.left(n)) || !topo.is_leaf(topo.right(n))) continue;
    for (int f = 0; f < ds.num_features(); ++f) {
      MultiCut cut{n, f, {}};
      std::vector<char> seen(K, 0);
      for (int i = 0; i < ds.num_rows(); ++i) {
        if (ds.features[i][f] != 1 || seen[ds.labels[i]]) continue;
        seen[ds.labels[i]] = 1;
        cut.datapoints.push_back(i);
      }
      if (!cut.datapoints.empty()) cuts.push_back(std::move(cut));
    }
  }
  return cuts;
}

namespace {

TreeSolution decode_bw(const std::vector<double>& x, int depth, int F, int K,
                       int w_offset) {
  TreeSolution sol = TreeSolution::zeros(depth, F, K);
  int N = (1 << depth) - 1, T = (1 << (depth + 1)) - 1;
  for (NodeId n = 1; n <= N; ++n)
    for (int f = 0; f < F; ++f)
      sol.b[n][f] = x[(n - 1) * F + f] > 0.5 ? 1 : 0;
  for (NodeId n = 1; n <= T; ++n)
    for (int k = 0; k < K; ++k)
      sol.w[n][k] = x[w_offset + (n - 1) * K + k] > 0.5 ? 1 : 0;
  return sol;
}

}  // namespace

TreeSolution decode_tree(const std::vector<double>& x, const FlowLayout& layout) {
  return decode_bw(x, layout.depth, layout.num_features, layout.num_classes,
                   layout.w_offset);
}

TreeSolution decode_tree(const std::vector<double>& x, const MasterLayout& layout) {
  return decode_bw(x, layout.depth, layout.num_features, layout.num_classes,
                   layout.w_offset);
}

OctSolution decode_oct(const std::vector<double>& x, const OctLayout& layout) {
  OctSolution sol;
  sol.depth = layout.depth;
  sol.num_features = layout.num_features;
  int N = (1 << layout.depth) - 1;
  sol.branch_feature.assign(N + 1, -1);
  sol.cutoff.assign(N + 1, 0.0);
  for (NodeId n = 1; n <= N; ++n) {
    sol.cutoff[n] = x[layout.v_index(n)];
    if (x[layout.d_index(n)] > 0.5) {
      for (int f = 0; f < layout.num_features; ++f)
        if (x[layout.b_index(n, f)] > 0.5) {
          sol.branch_feature[n] = f;
          break;
        }
      ++sol.num_splits;
    }
  }
  sol.leaf_label.assign(layout.num_leaves, -1);
  for (int lf = 0; lf < layout.num_leaves; ++lf)
    for (int k = 0; k < layout.num_classes; ++k)
      if (x[layout.w_index(layout.first_leaf + lf, k)] > 0.5) {
        sol.leaf_label[lf] = k;
        break;
      }
  return sol;
}

int route_oct(const TreeTopology& topo, const OctSolution& sol,
              const std::vector<uint8_t>& x) {
  NodeId n = 1;
  while (topo.is_internal(n)) {
    double test = 0.0;
    int f = sol.branch_feature[n];
    if (f >= 0) test = static_cast<double>(x[f]);
    n = test < sol.cutoff[n] ? topo.left(n) : topo.right(n);
  }
  return sol.leaf_label[n - (topo.num_internal() + 1)];
}

}  // namespace flowtree
