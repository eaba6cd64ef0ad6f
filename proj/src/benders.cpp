#include "flowtree/benders.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace flowtree {

std::string BendersCut::debug_line() const {
  std::ostringstream out;
  out << "cut i=" << datapoint << " path=";
  for (size_t i = 0; i < path.size(); ++i) {
    if (i) out << '>';
    out << path[i];
  }
  out << " rhs:";
  for (NodeId n : w_nodes) out << " w[" << n << "," << label << "]";
  for (const auto& [n, f] : b_terms) out << " b[" << n << "," << f << "]";
  return out.str();
}

namespace {

// Capacity triple of node n for datapoint (x, y); leaves have no child arcs.
struct NodeCaps {
  int left = 0, right = 0, sink = 0;
};

NodeCaps node_caps(const TreeTopology& topo, const TreeSolution& sol,
                   const std::vector<uint8_t>& x, int y, NodeId n) {
  NodeCaps c;
  if (topo.is_internal(n)) {
    for (int f = 0; f < sol.num_features; ++f) {
      if (!sol.b[n][f]) continue;
      if (x[f] == 0)
        ++c.left;
      else
        ++c.right;
    }
  }
  c.sink = sol.w[n][y];
  return c;
}

}  // namespace

SeparationOutcome separate(const TreeTopology& topo, const TreeSolution& sol,
                           const BinaryDataset& ds, int i, double g_i) {
  SeparationOutcome out;
  if (g_i < 0.5) return out;  // zero-valued rows can violate nothing

  const std::vector<uint8_t>& x = ds.features[i];
  int y = ds.labels[i];
  std::vector<uint8_t> q(topo.num_arcs(), 0);
  NodeId n = 1;
  for (;;) {
    ++out.steps;
    out.visited.push_back(n);
    NodeCaps c = node_caps(topo, sol, x, y, n);
    if (c.left > 1 || c.right > 1 || c.left + c.right + c.sink > 1)
      throw std::invalid_argument(
          "separate: node " + std::to_string(n) +
          " has more than one unit of outgoing capacity (invalid master point)");
    if (c.left == 1) {
      q[topo.right_arc(n)] = 1;
      q[topo.sink_arc(n)] = 1;
      n = topo.left(n);
    } else if (c.right == 1) {
      q[topo.left_arc(n)] = 1;
      q[topo.sink_arc(n)] = 1;
      n = topo.right(n);
    } else if (c.sink == 0) {
      // Dead end: every outgoing arc of the path is in a zero-capacity cut.
      if (topo.is_internal(n)) {
        q[topo.left_arc(n)] = 1;
        q[topo.right_arc(n)] = 1;
      }
      q[topo.sink_arc(n)] = 1;
      break;
    } else {
      return out;  // sink reachable: correctly classified, no violated row
    }
  }

  BendersCut cut;
  cut.datapoint = i;
  cut.label = y;
  cut.path = out.visited;
  cut.q = std::move(q);
  cut.source = sol;
  // Linearize the cut capacities: a left arc in the cut contributes the
  // x_f = 0 branch variables, a right arc the x_f = 1 ones, a sink arc the
  // node's w for the datapoint's class.
  for (NodeId pn : cut.path) {
    if (topo.is_internal(pn)) {
      bool lq = cut.q[topo.left_arc(pn)], rq = cut.q[topo.right_arc(pn)];
      for (int f = 0; f < sol.num_features; ++f) {
        if ((x[f] == 0 && lq) || (x[f] == 1 && rq))
          cut.b_terms.push_back({pn, f});
      }
    }
    if (cut.q[topo.sink_arc(pn)]) cut.w_nodes.push_back(pn);
  }
  out.verdict = SeparationOutcome::Verdict::Cut;
  out.cut = std::move(cut);
  return out;
}

std::vector<BendersCut> separate_all(const TreeTopology& topo,
                                     const TreeSolution& sol,
                                     const BinaryDataset& ds,
                                     const std::vector<double>& g) {
  std::vector<BendersCut> cuts;
  for (int i = 0; i < ds.num_rows(); ++i) {
    SeparationOutcome out = separate(topo, sol, ds, i, g[i]);
    if (out.verdict == SeparationOutcome::Verdict::Cut) cuts.push_back(*out.cut);
  }
  return cuts;
}

CutTerms closed_form_terms(const TreeTopology& topo, const TreeSolution& sol,
                           const std::vector<uint8_t>& x,
                           const std::vector<NodeId>& path) {
  CutTerms terms;
  for (size_t p = 0; p < path.size(); ++p) {
    NodeId n = path[p];
    bool terminal = p + 1 == path.size();
    if (!terminal) {
      // Branching node of the walk: every feature routing the datapoint the
      // other way belongs to the cut.
      int fn = sol.branch_feature(n);
      for (int f = 0; f < sol.num_features; ++f)
        if (x[f] != x[fn]) terms.b_terms.push_back({n, f});
    } else if (topo.is_internal(n)) {
      for (int f = 0; f < sol.num_features; ++f) terms.b_terms.push_back({n, f});
    }
    terms.w_nodes.push_back(n);
  }
  return terms;
}

LinearRow cut_to_row(const BendersCut& cut, const MasterLayout& layout) {
  LinearRow row;
  row.sense = RowSense::LessEqual;
  row.rhs = 0.0;
  row.coeffs.push_back({layout.g_index(cut.datapoint), 1.0});
  for (const auto& [n, f] : cut.b_terms)
    row.coeffs.push_back({layout.b_index(n, f), -1.0});
  for (NodeId n : cut.w_nodes)
    row.coeffs.push_back({layout.w_index(n, cut.label), -1.0});
  return row;
}

namespace {

// Exact integer rank via fraction-free (Bareiss) elimination.
long integer_rank(std::vector<std::vector<__int128>>& mat) {
  if (mat.empty()) return 0;
  int rows = static_cast<int>(mat.size());
  int cols = static_cast<int>(mat[0].size());
  __int128 prev = 1;
  int rank = 0;
  for (int col = 0; col < cols && rank < rows; ++col) {
    int piv = -1;
    for (int r = rank; r < rows; ++r)
      if (mat[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    std::swap(mat[rank], mat[piv]);
    for (int r = rank + 1; r < rows; ++r) {
      for (int c = col + 1; c < cols; ++c)
        mat[r][c] = (mat[r][c] * mat[rank][col] - mat[r][col] * mat[rank][c]) / prev;
      mat[r][col] = 0;
    }
    prev = mat[rank][col];
    ++rank;
  }
  return rank;
}

struct FacetSpace {
  const TreeTopology& topo;
  int F, K, I, N, first_leaf, leaves;
  int dim() const { return N * F + leaves * K + I; }
  int b_col(NodeId n, int f) const { return (n - 1) * F + f; }
  int w_col(NodeId n, int k) const { return N * F + (n - first_leaf) * K + k; }
  int g_col(int i) const { return N * F + leaves * K + i; }
};

struct FacetPoint {
  std::vector<int> coords;  // over FacetSpace columns, all 0/1 entries
  std::string family;       // for diagnostics
};

}  // namespace

FacetReport verify_facet(const TreeTopology& topo, const BinaryDataset& ds,
                         const BendersCut& cut) {
  const TreeSolution& src = cut.source;
  src.check_valid(topo);
  for (NodeId n = 1; n <= topo.num_internal(); ++n)
    if (src.label(n) >= 0)
      throw std::invalid_argument(
          "verify_facet: source point labels internal node " + std::to_string(n));
  if (cut.path.empty() || !topo.is_leaf(cut.path.back()))
    throw std::invalid_argument("verify_facet: cut path must end at a leaf");

  const int i = cut.datapoint;
  const int yi = cut.label;
  const NodeId leaf_i = cut.path.back();
  FacetSpace sp{topo,
                src.num_features,
                src.num_classes,
                ds.num_rows(),
                topo.num_internal(),
                topo.num_internal() + 1,
                topo.num_leaves()};

  std::vector<NodeId> path_internal(cut.path.begin(), cut.path.end() - 1);
  std::vector<char> on_path(topo.num_internal() + 1, 0);
  for (NodeId n : path_internal) on_path[n] = 1;

  // Leaf each datapoint is routed to under the source point (full branching
  // makes every terminal a leaf).
  std::vector<NodeId> leaf_of(sp.I);
  for (int j = 0; j < sp.I; ++j) {
    RouteResult r = route(topo, src, ds.features[j]);
    if (!topo.is_leaf(r.terminal))
      throw std::invalid_argument("verify_facet: source point is not fully branching");
    leaf_of[j] = r.terminal;
  }

  auto baseline = [&] {
    FacetPoint p;
    p.coords.assign(sp.dim(), 0);
    for (NodeId n : path_internal) p.coords[sp.b_col(n, src.branch_feature(n))] = 1;
    return p;
  };
  auto with_offpath = [&](FacetPoint p) {
    for (NodeId n = 1; n <= sp.N; ++n)
      if (!on_path[n]) {
        int f = src.branch_feature(n);
        if (f >= 0) p.coords[sp.b_col(n, f)] = 1;
      }
    return p;
  };

  std::vector<FacetPoint> points;
  {
    FacetPoint p = baseline();
    p.family = "baseline";
    points.push_back(p);
  }
  // Label perturbations at the leaves.
  for (NodeId n = sp.first_leaf; n <= topo.num_nodes(); ++n)
    for (int k = 0; k < sp.K; ++k) {
      if (k == yi) continue;
      FacetPoint p = baseline();
      p.coords[sp.w_col(n, k)] = 1;
      p.family = "off-class label (row 2)";
      points.push_back(p);
    }
  for (NodeId n = sp.first_leaf; n <= topo.num_nodes(); ++n) {
    if (n == leaf_i) continue;
    FacetPoint p = baseline();
    p.coords[sp.w_col(n, yi)] = 1;
    p.family = "own-class label elsewhere (row 3)";
    points.push_back(p);
  }
  {
    FacetPoint p = baseline();
    p.coords[sp.w_col(leaf_i, yi)] = 1;
    p.coords[sp.g_col(i)] = 1;
    p.family = "correct label at the datapoint leaf (row 4)";
    points.push_back(p);
  }
  // Off-path branch activations.
  for (NodeId n = 1; n <= sp.N; ++n) {
    if (on_path[n]) continue;
    for (int f = 0; f < sp.F; ++f) {
      FacetPoint p = baseline();
      p.coords[sp.b_col(n, f)] = 1;
      p.family = "off-path activation (row 5)";
      points.push_back(p);
    }
  }
  // On-path branch removals and swaps.
  const std::vector<uint8_t>& xi = ds.features[i];
  for (NodeId n : path_internal) {
    int fn = src.branch_feature(n);
    {
      FacetPoint p = baseline();
      p.coords[sp.b_col(n, fn)] = 0;
      p.family = "path branch removal (row 6)";
      points.push_back(p);
    }
    for (int f = 0; f < sp.F; ++f) {
      if (f == fn) continue;
      if (xi[f] == xi[fn]) {
        FacetPoint p = baseline();
        p.coords[sp.b_col(n, fn)] = 0;
        p.coords[sp.b_col(n, f)] = 1;
        p.family = "same-direction swap (row 7)";
        points.push_back(p);
      } else {
        // The datapoint deviates at n; keeping the off-path branching and
        // labelling every other leaf with its class keeps the point feasible
        // while the rhs rises by one.
        FacetPoint p = with_offpath(baseline());
        p.coords[sp.b_col(n, fn)] = 0;
        p.coords[sp.b_col(n, f)] = 1;
        for (NodeId leaf = sp.first_leaf; leaf <= topo.num_nodes(); ++leaf)
          if (leaf != leaf_i) p.coords[sp.w_col(leaf, yi)] = 1;
        p.coords[sp.g_col(i)] = 1;
        p.family = "path-changing swap (row 8)";
        points.push_back(p);
      }
    }
  }
  // One point per other datapoint, correctly classified under the full tree.
  for (int j = 0; j < sp.I; ++j) {
    if (j == i) continue;
    int yj = ds.labels[j];
    FacetPoint p = with_offpath(baseline());
    p.coords[sp.w_col(leaf_of[j], yj)] = 1;
    p.coords[sp.g_col(j)] = 1;
    if (yj == yi && leaf_of[j] == leaf_i) {
      p.coords[sp.g_col(i)] = 1;
      p.family = "shared-leaf classmate (row 11)";
    } else {
      p.family = yj == yi ? "same class, other leaf (row 10)"
                          : "different class (row 9)";
    }
    points.push_back(p);
  }

  FacetReport rep;
  rep.num_points = static_cast<int>(points.size());
  rep.expected_rank = sp.dim() - 1;
  if (rep.num_points != sp.dim())
    throw std::logic_error("verify_facet: point family count mismatch");

  // Membership in the relaxed feasible set and equality on the cut.
  for (const FacetPoint& p : points) {
    TreeSolution sol = TreeSolution::zeros(topo.depth(), sp.F, sp.K, true);
    for (NodeId n = 1; n <= sp.N; ++n)
      for (int f = 0; f < sp.F; ++f) sol.b[n][f] = p.coords[sp.b_col(n, f)];
    for (NodeId n = sp.first_leaf; n <= topo.num_nodes(); ++n)
      for (int k = 0; k < sp.K; ++k) sol.w[n][k] = p.coords[sp.w_col(n, k)];
    sol.check_valid(topo);
    for (int j = 0; j < sp.I; ++j) {
      int gj = p.coords[sp.g_col(j)];
      if (gj > g_eval(topo, sol, ds.features[j], ds.labels[j]))
        throw std::logic_error("verify_facet: point family '" + p.family +
                               "' leaves the relaxed feasible set (datapoint " +
                               std::to_string(j) + ")");
    }
    int rhs = 0;
    for (const auto& [n, f] : cut.b_terms) rhs += sol.b[n][f];
    for (NodeId n : cut.w_nodes)
      if (topo.is_leaf(n)) rhs += sol.w[n][yi];
    if (p.coords[sp.g_col(i)] != rhs)
      throw std::logic_error("verify_facet: point family '" + p.family +
                             "' misses the cut face (g=" +
                             std::to_string(p.coords[sp.g_col(i)]) +
                             " rhs=" + std::to_string(rhs) + ")");
  }

  std::vector<std::vector<__int128>> diffs;
  for (size_t k = 1; k < points.size(); ++k) {
    std::vector<__int128> row(sp.dim());
    for (int c = 0; c < sp.dim(); ++c)
      row[c] = points[k].coords[c] - points[0].coords[c];
    diffs.push_back(std::move(row));
  }
  rep.rank = integer_rank(diffs);
  rep.facet_confirmed = rep.rank == rep.expected_rank;
  return rep;
}

MipModel::LazyCallback make_benders_callback(const TreeTopology& topo,
                                             const BinaryDataset& ds,
                                             const MasterLayout& layout) {
  return [topo, ds, layout](const std::vector<double>& x) {
    TreeSolution sol = decode_tree(x, layout);
    std::vector<LinearRow> rows;
    for (int i = 0; i < ds.num_rows(); ++i) {
      SeparationOutcome out = separate(topo, sol, ds, i, x[layout.g_index(i)]);
      if (out.verdict == SeparationOutcome::Verdict::Cut)
        rows.push_back(cut_to_row(*out.cut, layout));
    }
    return rows;
  };
}

MipModel::PrimalEvaluator make_benders_evaluator(const TreeTopology& topo,
                                                 const BinaryDataset& ds,
                                                 const MasterLayout& layout,
                                                 double lambda) {
  return [topo, ds, layout, lambda](const std::vector<double>& x)
             -> std::optional<EvaluatedPoint> {
    TreeSolution sol = decode_tree(x, layout);
    EvaluatedPoint pt;
    pt.x = x;
    int correct = 0;
    for (int i = 0; i < ds.num_rows(); ++i) {
      int g = g_eval(topo, sol, ds.features[i], ds.labels[i]);
      correct += g;
      pt.x[layout.g_index(i)] = g;
    }
    for (NodeId n = 1; n <= topo.num_internal(); ++n)
      for (int f = 0; f < sol.num_features; ++f)
        pt.x[layout.b_index(n, f)] = sol.b[n][f];
    for (NodeId n = 1; n <= topo.num_nodes(); ++n)
      for (int k = 0; k < sol.num_classes; ++k)
        pt.x[layout.w_index(n, k)] = sol.w[n][k];
    pt.objective = (1.0 - lambda) * correct - lambda * sol.num_splits();
    return pt;
  };
}

}  // namespace flowtree
