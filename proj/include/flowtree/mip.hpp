#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flowtree/linprog.hpp"

namespace flowtree {

// A feasible point handed back by a primal evaluator, together with its
// exact objective value. Used to harvest incumbents at integral nodes whose
// lazy cuts are still violated (the evaluator must only return points that
// satisfy the full model including every cut the callback can generate).
struct EvaluatedPoint {
  double objective;
  std::vector<double> x;
};

// Linear model plus integrality marks and optional row-generation hooks.
struct MipModel {
  LinearProgram lp;
  std::vector<bool> is_integer;         // per variable
  std::vector<std::string> var_names;   // per variable, LP-format-safe

  // Called at LP-integral nodes with the current point; returns violated
  // rows to append (empty = the point satisfies every lazy constraint).
  using LazyCallback =
      std::function<std::vector<LinearRow>(const std::vector<double>&)>;
  // Optional: builds a feasible completion of an integral point.
  using PrimalEvaluator =
      std::function<std::optional<EvaluatedPoint>(const std::vector<double>&)>;

  LazyCallback lazy;
  PrimalEvaluator evaluator;
};

// Attaches a lazy-cut callback; the solver then accepts an incumbent only
// when the callback returns no cut at it.
MipModel register_lazy(MipModel model, MipModel::LazyCallback callback);

struct SolveLimits {
  double time_seconds = 1e30;
  long max_nodes = 1000000000L;
  std::ostream* node_log = nullptr;  // newline-delimited per-node records
  // Tie-break among equal-bound open nodes: false = oldest first (FIFO),
  // true = newest first (dives to integral points sooner).
  bool tie_break_lifo = false;
};

enum class Termination { Optimal, TimeLimit, NodeLimit };

struct SolveReport {
  double incumbent = 0.0;  // objective of best integer-feasible point
  bool has_incumbent = false;
  double best_bound = 0.0;
  double gap = 0.0;  // |bound - incumbent| / max(1, |incumbent|)
  long nodes = 0;    // LP-solved nodes, root included
  double wall_seconds = 0.0;
  Termination termination = Termination::Optimal;
  std::vector<double> incumbent_x;
  long lazy_cuts_added = 0;
};

// Best-bound branch and bound over binary/integer variables with lazy rows
// appended at integral nodes. Deterministic: most-fractional branching with
// lowest-index ties, the "=1" child queued ahead of its sibling.
SolveReport solve_mip(const MipModel& model, const SolveLimits& limits = {});

}  // namespace flowtree
