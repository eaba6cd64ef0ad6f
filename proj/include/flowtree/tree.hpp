#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace flowtree {

// Nodes of a complete binary tree of depth d, numbered heap-style:
// root = 1, children of n are 2n and 2n+1. Internal nodes are 1..2^d-1,
// leaves are 2^d..2^(d+1)-1. Two extra graph nodes: a source s feeding the
// root and a sink t reachable from every tree node.
using NodeId = int;

struct Arc {
  // tail == 0 encodes the source s; head == -1 encodes the sink t.
  NodeId tail;
  NodeId head;
};

class TreeTopology {
 public:
  explicit TreeTopology(int depth);

  int depth() const { return depth_; }
  int num_internal() const { return (1 << depth_) - 1; }
  int num_leaves() const { return 1 << depth_; }
  int num_nodes() const { return (1 << (depth_ + 1)) - 1; }

  bool is_internal(NodeId n) const { return n >= 1 && n < (1 << depth_); }
  bool is_leaf(NodeId n) const {
    return n >= (1 << depth_) && n <= num_nodes();
  }
  NodeId left(NodeId n) const { return 2 * n; }
  NodeId right(NodeId n) const { return 2 * n + 1; }
  NodeId ancestor(NodeId n) const { return n / 2; }

  // Ancestors of n reached by following a left (resp. right) branch on the
  // root-to-n path.
  std::vector<NodeId> left_branch_ancestors(NodeId n) const;
  std::vector<NodeId> right_branch_ancestors(NodeId n) const;

  // Arc list, fixed order: (s,1), then (n,left(n)),(n,right(n)) for each
  // internal n ascending, then (n,t) for every tree node ascending.
  // Count: 1 + 3*|internal| + |leaves|.
  const std::vector<Arc>& arcs() const { return arcs_; }
  int num_arcs() const { return static_cast<int>(arcs_.size()); }
  int source_arc() const { return 0; }
  int left_arc(NodeId n) const;   // arc id of (n, left(n))
  int right_arc(NodeId n) const;  // arc id of (n, right(n))
  int sink_arc(NodeId n) const;   // arc id of (n, t)

 private:
  int depth_;
  std::vector<Arc> arcs_;
};

// Integral branching/labelling decisions. b is indexed [node][feature] over
// internal nodes, w is [node][class] over all tree nodes (node index 1-based,
// slot 0 unused). In equality mode every internal node carries exactly one
// branching feature or one label and every leaf exactly one label; in relaxed
// mode ("H<=") each sum may also be zero, which produces dead-end nodes.
struct TreeSolution {
  int depth = 0;
  int num_features = 0;
  int num_classes = 0;
  bool relaxed = false;  // true: H<= mode (sums may be 0)
  std::vector<std::vector<uint8_t>> b;  // [1..2^d-1][0..F-1]
  std::vector<std::vector<uint8_t>> w;  // [1..2^(d+1)-1][0..K-1]

  static TreeSolution zeros(int depth, int num_features, int num_classes,
                            bool relaxed = false);

  int branch_feature(NodeId n) const;  // -1 if node n does not branch
  int label(NodeId n) const;           // -1 if node n carries no label
  int num_splits() const;

  // Throws std::invalid_argument when the equality (or <=) structure is
  // violated.
  void check_valid(const TreeTopology& topo) const;
};

// Routing result per datapoint: the node where routing stopped and the
// class predicted there (nullopt at a dead-end node of a relaxed solution).
struct RouteResult {
  NodeId terminal;
  std::optional<int> predicted_class;
};

RouteResult route(const TreeTopology& topo, const TreeSolution& sol,
                  const std::vector<uint8_t>& x);

// 1 iff datapoint (x, y) is correctly classified by sol; equals the max-flow
// value of the per-datapoint subproblem.
int g_eval(const TreeTopology& topo, const TreeSolution& sol,
           const std::vector<uint8_t>& x, int y);

// Per-datapoint arc capacities c(b, w): c[s,1] = 1,
// c[n,left] = sum_{f: x_f = 0} b[n,f], c[n,right] = sum_{f: x_f = 1} b[n,f],
// c[n,t] = w[n, y]. Entries follow TreeTopology arc order.
struct ArcCapacities {
  std::vector<int> cap;  // by arc id
};

ArcCapacities arc_capacities(const TreeTopology& topo, const TreeSolution& sol,
                             const std::vector<uint8_t>& x, int y);

struct MaxFlowResult {
  int value;
  std::vector<int> arc_flow;  // by arc id
};

// Brute-force max flow: enumerates every source-to-sink path (one per tree
// node) and takes the best single unit path. Valid because capacities are
// 0/1 and the source arc caps total flow at 1.
MaxFlowResult max_flow_bruteforce(const TreeTopology& topo,
                                  const ArcCapacities& caps);

struct MinCutResult {
  int value;
  std::vector<uint8_t> q;  // arc id -> in cut
  std::vector<uint8_t> p;  // node id -> in source set (index 0 = s, always 1)
};

// Brute-force min cut: enumerates all bipartitions with s on one side and t
// on the other. Deterministic: first strictly better cut in ascending
// bitmask order wins. Depth <= 3 only (2^15 subsets).
MinCutResult min_cut_bruteforce(const TreeTopology& topo,
                                const ArcCapacities& caps);

}  // namespace flowtree
