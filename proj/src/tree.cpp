#include "flowtree/tree.hpp"

#include <algorithm>

namespace flowtree {

TreeTopology::TreeTopology(int depth) : depth_(depth) {
  if (depth < 1) throw std::invalid_argument("tree depth must be >= 1");
  if (depth > 25) throw std::invalid_argument("tree depth too large");
  arcs_.push_back({0, 1});  // (s, 1)
  for (NodeId n = 1; n <= num_internal(); ++n) {
    arcs_.push_back({n, left(n)});
    arcs_.push_back({n, right(n)});
  }
  for (NodeId n = 1; n <= num_nodes(); ++n) {
    arcs_.push_back({n, -1});  // (n, t)
  }
}

std::vector<NodeId> TreeTopology::left_branch_ancestors(NodeId n) const {
  std::vector<NodeId> out;
  while (n > 1) {
    NodeId a = ancestor(n);
    if (left(a) == n) out.push_back(a);
    n = a;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<NodeId> TreeTopology::right_branch_ancestors(NodeId n) const {
  std::vector<NodeId> out;
  while (n > 1) {
    NodeId a = ancestor(n);
    if (right(a) == n) out.push_back(a);
    n = a;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

int TreeTopology::left_arc(NodeId n) const {
  if (!is_internal(n)) throw std::invalid_argument("left_arc: not internal");
  return 1 + 2 * (n - 1);
}

int TreeTopology::right_arc(NodeId n) const {
  if (!is_internal(n)) throw std::invalid_argument("right_arc: not internal");
  return 1 + 2 * (n - 1) + 1;
}

int TreeTopology::sink_arc(NodeId n) const {
  if (n < 1 || n > num_nodes()) throw std::invalid_argument("sink_arc: bad node");
  return 1 + 2 * num_internal() + (n - 1);
}

TreeSolution TreeSolution::zeros(int depth, int num_features, int num_classes,
                                 bool relaxed) {
  TreeSolution s;
  s.depth = depth;
  s.num_features = num_features;
  s.num_classes = num_classes;
  s.relaxed = relaxed;
  int internal = (1 << depth) - 1;
  int total = (1 << (depth + 1)) - 1;
  s.b.assign(internal + 1, std::vector<uint8_t>(num_features, 0));
  s.w.assign(total + 1, std::vector<uint8_t>(num_classes, 0));
  return s;
}

int TreeSolution::branch_feature(NodeId n) const {
  if (n < 1 || n >= static_cast<int>(b.size())) return -1;
  for (int f = 0; f < num_features; ++f)
    if (b[n][f]) return f;
  return -1;
}

int TreeSolution::label(NodeId n) const {
  if (n < 1 || n >= static_cast<int>(w.size())) return -1;
  for (int k = 0; k < num_classes; ++k)
    if (w[n][k]) return k;
  return -1;
}

int TreeSolution::num_splits() const {
  int s = 0;
  for (const auto& row : b)
    for (uint8_t v : row) s += v;
  return s;
}

void TreeSolution::check_valid(const TreeTopology& topo) const {
  if (depth != topo.depth())
    throw std::invalid_argument("solution depth mismatch");
  for (NodeId n = 1; n <= topo.num_nodes(); ++n) {
    int sum = 0;
    if (topo.is_internal(n))
      for (int f = 0; f < num_features; ++f) sum += b[n][f];
    for (int k = 0; k < num_classes; ++k) sum += w[n][k];
    if (relaxed ? sum > 1 : sum != 1)
      throw std::invalid_argument("node assignment constraint violated at node " +
                                  std::to_string(n));
  }
}

RouteResult route(const TreeTopology& topo, const TreeSolution& sol,
                  const std::vector<uint8_t>& x) {
  if (static_cast<int>(x.size()) != sol.num_features)
    throw std::invalid_argument("route: feature vector size mismatch");
  NodeId n = 1;
  for (;;) {
    if (topo.is_internal(n)) {
      int f = sol.branch_feature(n);
      if (f >= 0) {
        n = x[f] == 0 ? topo.left(n) : topo.right(n);
        continue;
      }
    }
    int k = sol.label(n);
    if (k >= 0) return {n, k};
    return {n, std::nullopt};  // dead end (relaxed solutions only)
  }
}

int g_eval(const TreeTopology& topo, const TreeSolution& sol,
           const std::vector<uint8_t>& x, int y) {
  RouteResult r = route(topo, sol, x);
  return (r.predicted_class && *r.predicted_class == y) ? 1 : 0;
}

ArcCapacities arc_capacities(const TreeTopology& topo, const TreeSolution& sol,
                             const std::vector<uint8_t>& x, int y) {
  ArcCapacities caps;
  caps.cap.assign(topo.num_arcs(), 0);
  caps.cap[topo.source_arc()] = 1;
  for (NodeId n = 1; n <= topo.num_internal(); ++n) {
    int cl = 0, cr = 0;
    for (int f = 0; f < sol.num_features; ++f) {
      if (!sol.b[n][f]) continue;
      if (x[f] == 0)
        ++cl;
      else
        ++cr;
    }
    caps.cap[topo.left_arc(n)] = cl;
    caps.cap[topo.right_arc(n)] = cr;
  }
  for (NodeId n = 1; n <= topo.num_nodes(); ++n)
    caps.cap[topo.sink_arc(n)] = sol.w[n][y];
  return caps;
}

MaxFlowResult max_flow_bruteforce(const TreeTopology& topo,
                                  const ArcCapacities& caps) {
  // Any unit of flow follows s -> 1 -> ... -> n -> t for some tree node n,
  // so the max flow (capped at 1 by the source arc) is the best such path.
  MaxFlowResult best{0, std::vector<int>(topo.num_arcs(), 0)};
  for (NodeId n = 1; n <= topo.num_nodes() && best.value == 0; ++n) {
    int cap = std::min(caps.cap[topo.source_arc()], caps.cap[topo.sink_arc(n)]);
    std::vector<int> path_arcs = {topo.source_arc(), topo.sink_arc(n)};
    NodeId c = n;
    while (c > 1 && cap > 0) {
      NodeId a = topo.ancestor(c);
      int arc = (topo.left(a) == c) ? topo.left_arc(a) : topo.right_arc(a);
      cap = std::min(cap, caps.cap[arc]);
      path_arcs.push_back(arc);
      c = a;
    }
    if (cap > 0) {
      best.value = cap;
      for (int arc : path_arcs) best.arc_flow[arc] = cap;
    }
  }
  return best;
}

MinCutResult min_cut_bruteforce(const TreeTopology& topo,
                                const ArcCapacities& caps) {
  int nn = topo.num_nodes();
  if (nn > 20)
    throw std::invalid_argument("min_cut_bruteforce: tree too deep for enumeration");
  MinCutResult best;
  best.value = -1;
  for (uint32_t mask = 0; mask < (1u << nn); ++mask) {
    // Source set = {s} union {n : bit n-1 set}; t never in the set.
    auto in_s = [&](NodeId n) { return n == 0 || (mask >> (n - 1)) & 1u; };
    int value = 0;
    for (int a = 0; a < topo.num_arcs(); ++a) {
      const Arc& arc = topo.arcs()[a];
      bool tail_in = in_s(arc.tail);
      bool head_in = arc.head != -1 && in_s(arc.head);
      if (tail_in && !head_in) value += caps.cap[a];
    }
    if (best.value < 0 || value < best.value) {
      best.value = value;
      best.q.assign(topo.num_arcs(), 0);
      best.p.assign(nn + 1, 0);
      best.p[0] = 1;
      for (NodeId n = 1; n <= nn; ++n) best.p[n] = in_s(n) ? 1 : 0;
      for (int a = 0; a < topo.num_arcs(); ++a) {
        const Arc& arc = topo.arcs()[a];
        bool tail_in = in_s(arc.tail);
        bool head_in = arc.head != -1 && in_s(arc.head);
        if (tail_in && !head_in) best.q[a] = 1;
      }
      if (best.value == 0) break;  // cannot improve
    }
  }
  return best;
}

}  // namespace flowtree
