#pragma once

#include <string>
#include <vector>

#include "flowtree/dataset.hpp"
#include "flowtree/mip.hpp"
#include "flowtree/tree.hpp"

namespace flowtree {

enum class Family { FlowOct, Benders, Oct };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

struct FormulationConfig {
  int depth = 2;
  double lambda = 0.0;
  Family family = Family::FlowOct;
  bool enable_multi_cuts = false;

  void check_valid() const;
};

// Variable layouts. Block order is fixed: b, then w, then the per-datapoint
// block (z, g or zeta), then any auxiliaries; lexicographic inside a block.

struct FlowLayout {
  int depth, num_features, num_classes, num_rows, num_arcs;
  int b_index(NodeId n, int f) const { return (n - 1) * num_features + f; }
  int w_index(NodeId n, int k) const {
    return w_offset + (n - 1) * num_classes + k;
  }
  int z_index(int i, int arc) const { return z_offset + i * num_arcs + arc; }
  int w_offset, z_offset, num_vars;
};

struct MasterLayout {
  int depth, num_features, num_classes, num_rows;
  int b_index(NodeId n, int f) const { return (n - 1) * num_features + f; }
  int w_index(NodeId n, int k) const {
    return w_offset + (n - 1) * num_classes + k;
  }
  int g_index(int i) const { return g_offset + i; }
  int w_offset, g_offset, num_vars;
};

struct OctLayout {
  int depth, num_features, num_classes, num_rows, num_leaves, first_leaf;
  int b_index(NodeId n, int f) const { return (n - 1) * num_features + f; }
  // w and the leaf-indexed auxiliaries exist for leaves only.
  int w_index(NodeId n, int k) const {
    return w_offset + (n - first_leaf) * num_classes + k;
  }
  int zeta_index(int i, NodeId n) const {
    return zeta_offset + i * num_leaves + (n - first_leaf);
  }
  int d_index(NodeId n) const { return d_offset + (n - 1); }
  int v_index(NodeId n) const { return v_offset + (n - 1); }
  int l_index(NodeId n) const { return l_offset + (n - first_leaf); }
  int loss_index(NodeId n) const { return loss_offset + (n - first_leaf); }
  int p_index(NodeId n) const { return p_offset + (n - first_leaf); }
  int pk_index(NodeId n, int k) const {
    return pk_offset + (n - first_leaf) * num_classes + k;
  }
  int w_offset, zeta_offset, d_offset, v_offset, l_offset, loss_offset,
      p_offset, pk_offset, num_vars;
};

struct FlowModel {
  MipModel mip;
  FlowLayout layout;
};
struct MasterModel {
  MipModel mip;
  MasterLayout layout;
};
struct OctModel {
  MipModel mip;
  OctLayout layout;
};

// Flow formulation: b/w binary, per-datapoint arc flows continuous in [0,1];
// objective (1-lambda) * (flow into the sink) - lambda * (number of splits).
FlowModel build_flowoct(const BinaryDataset& ds, const FormulationConfig& cfg);

// Decomposed master: b/w binary, g continuous in [0,1], no subproblem rows;
// those arrive as lazy cuts from the separation procedure.
MasterModel build_benders_master(const BinaryDataset& ds, const FormulationConfig& cfg);

// Big-M baseline over leaf-assignment indicators, specialized to binary data,
// with the minimum-leaf-size parameter fixed to zero.
OctModel build_oct(const BinaryDataset& ds, const FormulationConfig& cfg);

// One a-priori strengthening cut per (bottom internal node, feature): the
// greedily built set H holds the lowest-indexed datapoint of each class with
// x_f = 1, and at most one member of H can be routed left when branching
// on f there.
struct MultiCut {
  NodeId node;
  int feature;
  std::vector<int> datapoints;  // H, ascending
};

std::vector<MultiCut> generate_multi_cuts(const BinaryDataset& ds,
                                          const TreeTopology& topo);

// Rounded (b, w) of an integral point under either layout.
TreeSolution decode_tree(const std::vector<double>& x, const FlowLayout& layout);
TreeSolution decode_tree(const std::vector<double>& x, const MasterLayout& layout);

// OCT keeps its own routing convention: a node that does not split sends
// everything right, which the cutoff test encodes as v = 0.
struct OctSolution {
  int depth, num_features;
  std::vector<int> branch_feature;  // per internal node, -1 when d_n = 0
  std::vector<double> cutoff;       // v_n
  std::vector<int> leaf_label;      // per leaf position, -1 when unlabeled
  int num_splits = 0;
};

OctSolution decode_oct(const std::vector<double>& x, const OctLayout& layout);

int route_oct(const TreeTopology& topo, const OctSolution& sol,
              const std::vector<uint8_t>& x);  // returns predicted class or -1

}  // namespace flowtree
