#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace flowtree {

enum class RowSense : uint8_t { LessEqual, Equal, GreaterEqual };

struct LinearRow {
  std::vector<std::pair<int, double>> coeffs;  // (variable, coefficient)
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

// Dense-bounded linear program, maximization. Every structural variable
// carries finite bounds (the formulations keep everything in [0,1]).
struct LinearProgram {
  int num_vars = 0;
  std::vector<double> objective;
  double objective_constant = 0.0;
  std::vector<double> lower, upper;
  std::vector<LinearRow> rows;

  int add_variable(double lb, double ub, double obj);
  int add_row(LinearRow row);
  int add_row(std::vector<std::pair<int, double>> coeffs, RowSense sense, double rhs);
};

struct LpSolution {
  enum class Status { Optimal, Infeasible };
  Status status = Status::Infeasible;
  std::vector<double> primal;         // structural values
  double objective = 0.0;             // includes objective_constant
  std::vector<double> row_duals;      // one per row (0 for rows slack at opt)
  std::vector<double> reduced_costs;  // one per structural variable
  std::vector<double> farkas;         // row multipliers when infeasible
  long iterations = 0;

  bool optimal() const { return status == Status::Optimal; }
};

// Optimality audit, recomputed from scratch against the model:
//   primal_infeasibility: worst row/bound violation,
//   dual_infeasibility:   worst sign violation of reduced costs vs.
//                         the variable's bound status,
//   duality_gap:          |primal objective - dual objective|.
struct LpAudit {
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double duality_gap = 0.0;
};

LpAudit audit_solution(const LinearProgram& lp, const LpSolution& sol);

// Global audit hook: when enabled, every optimal solve is re-verified from
// scratch and the worst residuals are accumulated (single-threaded use).
struct AuditStats {
  long solves = 0;
  double max_primal = 0.0;
  double max_dual = 0.0;
  double max_gap = 0.0;
};
void enable_lp_audit(bool on);
void reset_lp_audit();
const AuditStats& lp_audit_stats();

// For an infeasible LP: max_{l<=x<=u} (sum_i y_i a_i) x  minus  sum_i y_i b_i;
// a valid certificate makes this strictly negative.
double farkas_margin(const LinearProgram& lp, const std::vector<double>& y);

inline constexpr double kFeasTol = 1e-7;
inline constexpr double kGapTol = 1e-6;
inline constexpr double kIntTol = 1e-6;

struct RatioPick;

// Bounded-variable revised primal simplex with a composite (artificial-free)
// phase 1. Dantzig pricing with a Bland's-rule fallback after degenerate
// stalls. Inequality rows are activated lazily: the engine optimizes over a
// working row set and pulls in violated rows until none remain, so solutions
// are optimal for the full model while the factorized basis stays small.
//
// The engine is persistent: callers may tighten/relax variable bounds or
// append rows between solves and re-solve warm from the current basis.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& lp);

  void set_bounds(int var, double lb, double ub);
  int add_row(const LinearRow& row);  // returns row id
  const LinearProgram& program() const { return lp_; }

  LpSolution solve();

  long total_iterations() const { return total_iterations_; }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  enum class VarState : uint8_t { Basic, AtLower, AtUpper, InactiveSlack };

  // Column-major copy of the matrix; slack j of row r is variable n_ + r
  // with a unit coefficient.
  struct Column {
    std::vector<std::pair<int, double>> entries;  // (row id, coefficient)
  };

  LinearProgram lp_;
  int n_ = 0;                       // structural variable count
  std::vector<Column> cols_;        // structural columns only
  std::vector<double> slack_lb_, slack_ub_;

  std::vector<int> active_rows_;    // row id per basis position
  std::vector<int> row_pos_;        // row id -> basis position or -1
  std::vector<int> basic_;          // basis position -> variable id
  std::vector<int> pos_of_;         // variable id -> basis position or -1
  std::vector<VarState> state_;     // variable id -> state
  std::vector<double> value_;       // variable id -> current value
  std::vector<double> binv_;        // dense row-major, m x m
  bool basis_ready_ = false;
  bool values_dirty_ = false;
  long total_iterations_ = 0;
  std::vector<double> farkas_;      // per active position, set on infeasibility

  int m() const { return static_cast<int>(active_rows_.size()); }
  double lb(int var) const { return var < n_ ? lp_.lower[var] : slack_lb_[var - n_]; }
  double ub(int var) const { return var < n_ ? lp_.upper[var] : slack_ub_[var - n_]; }
  void push_slack_bounds(RowSense sense);

  void reset_basis();
  void crash_basis();
  void activate_row(int row);
  void activate_rows(const std::vector<int>& rows);
  void recompute_basics();
  double recompute_drift();  // refresh basics, return the worst movement
  // Rebuilds B^{-1} from the current basis columns (singleton-triangular
  // passes plus a dense fallback block); repairs numerically dependent
  // columns by swapping in row slacks. Then refreshes the basic values.
  void refactorize();
  double row_activity(int row) const;
  bool scan_and_activate_violated();
  void ftran(int var, std::vector<double>& alpha) const;
  void btran(const std::vector<double>& rhs, std::vector<double>& y) const;
  void pivot(int entering, int leaving_pos, const std::vector<double>& alpha);
  bool gj_eliminate(int pos, const std::vector<std::pair<int, double>>& col,
                    std::vector<double>& alpha);
  double price_column(int var, const std::vector<double>& y) const;
  void apply_step(int enter, double dir, double step, const RatioPick& pick,
                  const std::vector<double>& alpha);

  // Returns true when primal-feasible; false when infeasibility was proven
  // (farkas_ filled).
  bool phase1(long& iters);
  void phase2(long& iters);
  void phase2_inner(long& iters, bool perturb);
  double perturbed_cost(int j) const;

  // Re-solve path after bound changes or appended rows: those edits keep the
  // reduced costs feasible, so the dual simplex usually walks back to primal
  // feasibility in few pivots. Heavy dual degeneracy can still make it
  // wander, so it runs under a pivot budget with the composite primal phase
  // as the fallback.
  enum class DualOutcome { Feasible, Infeasible, OverBudget };
  bool dual_feasible();
  DualOutcome dual_simplex(long& iters, long budget);

  LpSolution extract(bool feasible);
};

// One-shot convenience wrapper.
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace flowtree
