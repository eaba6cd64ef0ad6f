#include "flowtree/mip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace flowtree {

MipModel register_lazy(MipModel model, MipModel::LazyCallback callback) {
  model.lazy = std::move(callback);
  return model;
}

namespace {

struct Node {
  double bound;
  long seq;
  int depth;
  std::vector<std::pair<int, int>> fixes;  // (variable, 0 or 1 bound value)
};

struct NodeOrder {
  bool lifo;
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;  // max-heap on bound
    return lifo ? a.seq < b.seq : a.seq > b.seq;
  }
};

double fractionality(double x) {
  double f = x - std::floor(x);
  return std::min(f, 1.0 - f);
}

}  // namespace

SolveReport solve_mip(const MipModel& model, const SolveLimits& limits) {
  if (static_cast<int>(model.is_integer.size()) != model.lp.num_vars)
    throw std::invalid_argument("solve_mip: is_integer size mismatch");
  for (int j = 0; j < model.lp.num_vars; ++j)
    if (model.is_integer[j] && (model.lp.lower[j] < -kIntTol ||
                                model.lp.upper[j] > 1.0 + kIntTol))
      throw std::invalid_argument("solve_mip: integer variables must live in [0,1]");

  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  SimplexSolver engine(model.lp);
  std::vector<double> lb0 = model.lp.lower, ub0 = model.lp.upper;
  std::vector<int> int_vars;
  for (int j = 0; j < model.lp.num_vars; ++j)
    if (model.is_integer[j]) int_vars.push_back(j);

  NodeOrder order{limits.tie_break_lifo};
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open(order);
  long seq = 0;
  open.push({std::numeric_limits<double>::infinity(), seq++, 0, {}});

  SolveReport rep;
  rep.best_bound = std::numeric_limits<double>::infinity();
  double incumbent = -std::numeric_limits<double>::infinity();
  std::vector<double> incumbent_x;
  bool has_inc = false;
  std::vector<std::pair<int, int>> current_fixes;

  auto harvest = [&](const std::vector<double>& x) {
    if (!model.evaluator) return;
    auto ev = model.evaluator(x);
    if (ev && (!has_inc || ev->objective > incumbent + 1e-12)) {
      incumbent = ev->objective;
      incumbent_x = ev->x;
      has_inc = true;
    }
  };

  Termination term = Termination::Optimal;
  while (!open.empty()) {
    if (elapsed() > limits.time_seconds) {
      term = Termination::TimeLimit;
      break;
    }
    if (rep.nodes >= limits.max_nodes) {
      term = Termination::NodeLimit;
      break;
    }
    Node node = open.top();
    if (has_inc && node.bound <= incumbent + 1e-9) break;  // best-first: done
    open.pop();

    // Move the engine from the previous node's bounds to this node's.
    for (const auto& [v, _] : current_fixes) engine.set_bounds(v, lb0[v], ub0[v]);
    for (const auto& [v, val] : node.fixes)
      engine.set_bounds(v, static_cast<double>(val), static_cast<double>(val));
    current_fixes = node.fixes;

    ++rep.nodes;
    LpSolution sol = engine.solve();
    bool pruned = false;
    double lpval = 0.0;
    int branch_var = -1;

    for (;;) {
      if (!sol.optimal()) {
        pruned = true;
        break;
      }
      lpval = sol.objective;
      if (has_inc && lpval <= incumbent + 1e-9) {
        pruned = true;
        break;
      }
      branch_var = -1;
      double worst = kIntTol;
      for (int j : int_vars) {
        double f = fractionality(sol.primal[j]);
        if (f > worst) {
          worst = f;
          branch_var = j;
        }
      }
      if (branch_var >= 0) break;  // fractional: branch below

      if (model.lazy) {
        std::vector<LinearRow> cuts;
        try {
          cuts = model.lazy(sol.primal);
        } catch (const std::exception& e) {
          throw std::runtime_error(std::string("lazy callback failed: ") + e.what());
        }
        if (!cuts.empty()) {
          for (const LinearRow& cut : cuts) {
            double act = 0.0;
            for (const auto& [j, v] : cut.coeffs) act += v * sol.primal[j];
            bool violated = cut.sense == RowSense::LessEqual
                                ? act > cut.rhs + 1e-9
                                : (cut.sense == RowSense::GreaterEqual
                                       ? act < cut.rhs - 1e-9
                                       : std::abs(act - cut.rhs) > 1e-9);
            if (!violated)
              throw std::runtime_error(
                  "lazy callback returned a cut satisfied at the separation "
                  "point (would loop)");
            engine.add_row(cut);
            ++rep.lazy_cuts_added;
          }
          harvest(sol.primal);
          sol = engine.solve();
          continue;  // re-check bound/integrality with the cuts in place
        }
      }
      // Integral and lazily feasible: candidate incumbent.
      if (model.evaluator) {
        harvest(sol.primal);
      } else if (!has_inc || lpval > incumbent + 1e-12) {
        incumbent = lpval;
        incumbent_x = sol.primal;
        has_inc = true;
      }
      pruned = true;
      break;
    }

    if (limits.node_log) {
      *limits.node_log << "node=" << rep.nodes << " depth=" << node.depth
                       << " bound="
                       << (std::isfinite(node.bound) ? node.bound : lpval)
                       << " incumbent=";
      if (has_inc)
        *limits.node_log << incumbent;
      else
        *limits.node_log << "none";
      *limits.node_log << " cuts=" << rep.lazy_cuts_added << "\n";
    }
    if (pruned) continue;

    // Branch on the most fractional variable; the "=1" child is explored
    // first under either tie-break mode.
    Node one{lpval, 0, node.depth + 1, node.fixes};
    one.fixes.push_back({branch_var, 1});
    Node zero{lpval, 0, node.depth + 1, node.fixes};
    zero.fixes.push_back({branch_var, 0});
    if (limits.tie_break_lifo) {
      zero.seq = seq++;
      one.seq = seq++;
    } else {
      one.seq = seq++;
      zero.seq = seq++;
    }
    open.push(std::move(one));
    open.push(std::move(zero));
  }

  double open_max = -std::numeric_limits<double>::infinity();
  if (term != Termination::Optimal) {
    while (!open.empty()) {
      open_max = std::max(open_max, open.top().bound);
      open.pop();
    }
  }

  rep.termination = term;
  rep.has_incumbent = has_inc;
  rep.incumbent = has_inc ? incumbent : 0.0;
  rep.incumbent_x = incumbent_x;
  if (term == Termination::Optimal) {
    rep.best_bound = rep.incumbent;
    rep.gap = 0.0;
  } else {
    rep.best_bound = std::max(open_max, has_inc ? incumbent : open_max);
    rep.gap = has_inc ? std::abs(rep.best_bound - incumbent) /
                            std::max(1.0, std::abs(incumbent))
                      : std::numeric_limits<double>::infinity();
  }
  rep.wall_seconds = elapsed();
  return rep;
}

}  // namespace flowtree
