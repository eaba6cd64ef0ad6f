#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flowtree/dataset.hpp"
#include "flowtree/formulations.hpp"
#include "flowtree/mip.hpp"
#include "flowtree/tree.hpp"

namespace flowtree {

// A min-cut certificate for one datapoint plus its linearization over
// (b, w, g): g_i <= sum of the b terms + sum of w[n, y^i] over w_nodes.
// The raw q indicators are retained for audit.
struct BendersCut {
  int datapoint = -1;
  int label = -1;                               // y^i
  std::vector<NodeId> path;                     // tree nodes of the source set
  std::vector<uint8_t> q;                       // arc id -> in cut
  std::vector<std::pair<NodeId, int>> b_terms;  // (node, feature)
  std::vector<NodeId> w_nodes;
  TreeSolution source;                          // master point behind the cut

  // One-line debug record: datapoint, path, rhs terms.
  std::string debug_line() const;
};

struct SeparationOutcome {
  enum class Verdict { NoCut, Cut };
  Verdict verdict = Verdict::NoCut;
  std::optional<BendersCut> cut;
  std::vector<NodeId> visited;  // path walked from the root
  int steps = 0;                // loop iterations, <= depth + 1
};

// Walks from the root along the unique capacity-1 arc. Reaching an open sink
// arc proves every subproblem inequality holds; reaching a node with no
// outgoing capacity yields the violated min cut. Requires integral (b, w)
// with at most one assignment per node; g_i = 0 short-circuits to NoCut.
SeparationOutcome separate(const TreeTopology& topo, const TreeSolution& sol,
                           const BinaryDataset& ds, int i, double g_i);

// Per-datapoint fan-out, ascending index.
std::vector<BendersCut> separate_all(const TreeTopology& topo,
                                     const TreeSolution& sol,
                                     const BinaryDataset& ds,
                                     const std::vector<double>& g);

// Independent reconstruction of the cut coefficients from the walked path
// (the closed form over branch features f(n)); tests match it against the
// linearized q.
struct CutTerms {
  std::vector<std::pair<NodeId, int>> b_terms;
  std::vector<NodeId> w_nodes;
};
CutTerms closed_form_terms(const TreeTopology& topo, const TreeSolution& sol,
                           const std::vector<uint8_t>& x,
                           const std::vector<NodeId>& path);

LinearRow cut_to_row(const BendersCut& cut, const MasterLayout& layout);

// Facet certificate: builds the standard point families on the cut's face
// (baseline, label perturbations, off-path activations, on-path removals and
// swaps, per-datapoint classification points), checks each lies in the
// relaxed feasible set and satisfies the cut with equality, and computes the
// exact affine rank. Requires a cut generated from an equality-feasible
// master point with no internal labels.
struct FacetReport {
  bool facet_confirmed = false;
  long rank = 0;
  long expected_rank = 0;
  int num_points = 0;
};

FacetReport verify_facet(const TreeTopology& topo, const BinaryDataset& ds,
                         const BendersCut& cut);

// Glue for the branch-and-bound engine.
MipModel::LazyCallback make_benders_callback(const TreeTopology& topo,
                                             const BinaryDataset& ds,
                                             const MasterLayout& layout);
MipModel::PrimalEvaluator make_benders_evaluator(const TreeTopology& topo,
                                                 const BinaryDataset& ds,
                                                 const MasterLayout& layout,
                                                 double lambda);

}  // namespace flowtree
