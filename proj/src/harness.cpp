#include "flowtree/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "flowtree/lp_export.hpp"

namespace flowtree {

void RunSpec::check_valid() const {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (time_limit_seconds <= 0) throw std::invalid_argument("time limit must be > 0");
  if (lambdas.empty()) throw std::invalid_argument("lambda grid must be non-empty");
  for (double l : lambdas)
    if (l < 0 || l > 1) throw std::invalid_argument("lambda must lie in [0,1]");
}

namespace {

double percent(int correct, int total) {
  return total > 0 ? 100.0 * correct / total : 0.0;
}

struct TrainedModel {
  RunResult result;
  // Exactly one of these is meaningful, by family.
  TreeSolution tree;
  OctSolution oct;
};

int tree_correct(const TreeTopology& topo, const TreeSolution& sol,
                 const BinaryDataset& ds) {
  int c = 0;
  for (int i = 0; i < ds.num_rows(); ++i)
    c += g_eval(topo, sol, ds.features[i], ds.labels[i]);
  return c;
}

int oct_correct(const TreeTopology& topo, const OctSolution& sol,
                const BinaryDataset& ds) {
  int c = 0;
  for (int i = 0; i < ds.num_rows(); ++i)
    c += route_oct(topo, sol, ds.features[i]) == ds.labels[i] ? 1 : 0;
  return c;
}

TrainedModel solve_family(const BinaryDataset& ds, const RunSpec& spec,
                          double lambda) {
  FormulationConfig cfg;
  cfg.depth = spec.depth;
  cfg.lambda = lambda;
  cfg.family = spec.family;
  cfg.enable_multi_cuts = spec.multi_cuts;

  TreeTopology topo(spec.depth);
  SolveLimits limits;
  limits.time_seconds = spec.time_limit_seconds;
  limits.max_nodes = spec.max_nodes;
  limits.tie_break_lifo = spec.tie_break_lifo;
  std::ofstream node_log;
  if (!spec.node_log_path.empty()) {
    node_log.open(spec.node_log_path, std::ios::app);
    if (!node_log) throw std::runtime_error("cannot write " + spec.node_log_path);
    limits.node_log = &node_log;
  }

  TrainedModel out;
  RunResult& res = out.result;
  res.family = spec.family;
  res.depth = spec.depth;
  res.lambda = lambda;

  MipModel mip;
  MasterLayout master_layout{};
  FlowLayout flow_layout{};
  OctLayout oct_layout{};
  switch (spec.family) {
    case Family::FlowOct: {
      FlowModel m = build_flowoct(ds, cfg);
      mip = std::move(m.mip);
      flow_layout = m.layout;
      break;
    }
    case Family::Benders: {
      MasterModel m = build_benders_master(ds, cfg);
      master_layout = m.layout;
      mip = register_lazy(std::move(m.mip),
                          make_benders_callback(topo, ds, master_layout));
      mip.evaluator = make_benders_evaluator(topo, ds, master_layout, lambda);
      break;
    }
    case Family::Oct: {
      OctModel m = build_oct(ds, cfg);
      mip = std::move(m.mip);
      oct_layout = m.layout;
      break;
    }
  }
  if (!spec.export_lp_path.empty()) {
    std::ofstream lp_out(spec.export_lp_path);
    if (!lp_out) throw std::runtime_error("cannot write " + spec.export_lp_path);
    write_lp(lp_out, mip);
  }

  SolveReport rep = solve_mip(mip, limits);
  if (!rep.has_incumbent)
    throw std::runtime_error("solver returned no feasible tree within the limits");
  res.gap = rep.gap;
  res.nodes = rep.nodes;
  res.lazy_cuts = rep.lazy_cuts_added;
  res.wall_seconds = rep.wall_seconds;
  res.termination = rep.termination;

  if (spec.family == Family::Oct) {
    out.oct = decode_oct(rep.incumbent_x, oct_layout);
    res.correct = oct_correct(topo, out.oct, ds);
    res.splits = out.oct.num_splits;
  } else {
    out.tree = spec.family == Family::FlowOct
                   ? decode_tree(rep.incumbent_x, flow_layout)
                   : decode_tree(rep.incumbent_x, master_layout);
    res.correct = tree_correct(topo, out.tree, ds);
    res.splits = out.tree.num_splits();
  }
  res.objective = (1.0 - lambda) * res.correct - lambda * res.splits;
  res.train_accuracy = percent(res.correct, ds.num_rows());
  return out;
}

}  // namespace

RunResult train_on(const BinaryDataset& ds, const RunSpec& spec, double lambda) {
  spec.check_valid();
  TreeTopology topo(spec.depth);
  TrainedModel m = solve_family(ds, spec, lambda);
  m.result.tree_text =
      spec.family == Family::Oct
          ? render_oct_tree(topo, m.oct, ds.feature_names, ds.class_names)
          : render_tree(topo, m.tree, ds.feature_names, ds.class_names);
  return m.result;
}

RunResult train(const RunSpec& spec) {
  spec.check_valid();
  BinaryDataset ds = load_csv(spec.data_path, spec.label_column).data;
  return train_on(ds, spec, spec.lambdas.front());
}

RunResult lambda_sweep(const RunSpec& spec) {
  spec.check_valid();
  BinaryDataset ds = load_csv(spec.data_path, spec.label_column).data;
  SplitSpec split_spec;
  split_spec.seed = spec.seed;
  SplitResult parts = split(ds, split_spec);
  TreeTopology topo(spec.depth);

  double best_val = -1.0;
  double best_lambda = spec.lambdas.front();
  double total_seconds = 0.0;
  for (double lambda : spec.lambdas) {
    TrainedModel m = solve_family(parts.train, spec, lambda);
    total_seconds += m.result.wall_seconds;
    int val_correct =
        spec.family == Family::Oct
            ? oct_correct(topo, m.oct, parts.validation)
            : tree_correct(topo, m.tree, parts.validation);
    double val_acc = percent(val_correct, parts.validation.num_rows());
    if (val_acc > best_val + 1e-12) {  // ties keep the smaller lambda
      best_val = val_acc;
      best_lambda = lambda;
    }
  }

  std::vector<int> final_rows = parts.train_rows;
  final_rows.insert(final_rows.end(), parts.validation_rows.begin(),
                    parts.validation_rows.end());
  std::sort(final_rows.begin(), final_rows.end());
  BinaryDataset final_ds = ds.subset(final_rows);
  TrainedModel final_model = solve_family(final_ds, spec, best_lambda);
  total_seconds += final_model.result.wall_seconds;

  RunResult res = final_model.result;
  res.validation_accuracy = best_val;
  int test_correct = spec.family == Family::Oct
                         ? oct_correct(topo, final_model.oct, parts.test)
                         : tree_correct(topo, final_model.tree, parts.test);
  res.test_accuracy = percent(test_correct, parts.test.num_rows());
  res.wall_seconds = total_seconds;
  res.tree_text =
      spec.family == Family::Oct
          ? render_oct_tree(topo, final_model.oct, ds.feature_names, ds.class_names)
          : render_tree(topo, final_model.tree, ds.feature_names, ds.class_names);
  return res;
}

EnumerationResult enumerate_all_trees(const BinaryDataset& ds, int depth,
                                      long long cap) {
  ds.check_valid();
  TreeTopology topo(depth);
  int F = ds.num_features(), K = ds.num_classes();
  int N = topo.num_internal(), L = topo.num_leaves();

  long double total_ld = 1.0L;
  for (int n = 0; n < N; ++n) total_ld *= (F + K);
  for (int n = 0; n < L; ++n) total_ld *= K;
  if (total_ld > static_cast<long double>(cap))
    throw std::invalid_argument(
        "enumerate_all_trees: assignment count exceeds the cap; use a smaller instance");

  EnumerationResult out;
  out.best = TreeSolution::zeros(depth, F, K);
  out.best_correct = -1;
  // Mixed-radix counter, internal nodes first: digit < F branches on that
  // feature, otherwise digit - F is the node label. Ascending order makes
  // the first winner the lexicographically smallest assignment.
  std::vector<int> digit(N + L, 0);
  TreeSolution sol = TreeSolution::zeros(depth, F, K);
  for (;;) {
    for (NodeId n = 1; n <= N; ++n) {
      std::fill(sol.b[n].begin(), sol.b[n].end(), 0);
      std::fill(sol.w[n].begin(), sol.w[n].end(), 0);
      int d = digit[n - 1];
      if (d < F)
        sol.b[n][d] = 1;
      else
        sol.w[n][d - F] = 1;
    }
    for (NodeId n = N + 1; n <= N + L; ++n) {
      std::fill(sol.w[n].begin(), sol.w[n].end(), 0);
      sol.w[n][digit[n - 1]] = 1;
    }
    ++out.assignments;
    int correct = 0;
    for (int i = 0; i < ds.num_rows(); ++i)
      correct += g_eval(topo, sol, ds.features[i], ds.labels[i]);
    if (correct > out.best_correct) {
      out.best_correct = correct;
      out.best = sol;
    }
    int pos = N + L - 1;
    while (pos >= 0) {
      int radix = pos < N ? F + K : K;
      if (++digit[pos] < radix) break;
      digit[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return out;
}

namespace {

void render_node(const TreeTopology& topo, const TreeSolution& sol,
                 const std::vector<std::string>& feature_names,
                 const std::vector<std::string>& class_names, NodeId n,
                 int indent, std::ostringstream& out) {
  out << std::string(indent * 2, ' ') << "node " << n << ": ";
  int f = topo.is_internal(n) ? sol.branch_feature(n) : -1;
  int k = sol.label(n);
  if (f >= 0) {
    out << "branch " << feature_names[f] << "\n";
    render_node(topo, sol, feature_names, class_names, topo.left(n), indent + 1, out);
    render_node(topo, sol, feature_names, class_names, topo.right(n), indent + 1, out);
  } else if (k >= 0) {
    out << "label " << class_names[k] << "\n";
  } else {
    out << "dead-end\n";
  }
}

}  // namespace

std::string render_tree(const TreeTopology& topo, const TreeSolution& sol,
                        const std::vector<std::string>& feature_names,
                        const std::vector<std::string>& class_names) {
  std::ostringstream out;
  render_node(topo, sol, feature_names, class_names, 1, 0, out);
  return out.str();
}

std::string render_oct_tree(const TreeTopology& topo, const OctSolution& sol,
                            const std::vector<std::string>& feature_names,
                            const std::vector<std::string>& class_names) {
  std::ostringstream out;
  for (NodeId n = 1; n <= topo.num_nodes(); ++n) {
    out << "node " << n << ": ";
    if (topo.is_internal(n)) {
      int f = sol.branch_feature[n];
      if (f >= 0)
        out << "branch " << feature_names[f] << " (cutoff " << sol.cutoff[n] << ")";
      else
        out << "pass-through right";
    } else {
      int k = sol.leaf_label[n - topo.num_internal() - 1];
      if (k >= 0)
        out << "label " << class_names[k];
      else
        out << "unlabeled";
    }
    out << "\n";
  }
  return out.str();
}

std::string serialize_result(const RunResult& result) {
  std::ostringstream out;
  out << "formulation: " << family_name(result.family) << "\n";
  out << "depth: " << result.depth << "\n";
  out << "lambda: " << result.lambda << "\n";
  out << "objective: " << result.objective << "\n";
  out << "correct: " << result.correct << "\n";
  out << "splits: " << result.splits << "\n";
  out << "train_accuracy: " << result.train_accuracy << "\n";
  if (result.validation_accuracy)
    out << "validation_accuracy: " << *result.validation_accuracy << "\n";
  if (result.test_accuracy) out << "test_accuracy: " << *result.test_accuracy << "\n";
  out << "gap: " << result.gap << "\n";
  out << "nodes: " << result.nodes << "\n";
  out << "lazy_cuts: " << result.lazy_cuts << "\n";
  out << "time_seconds: " << result.wall_seconds << "\n";
  out << "termination: "
      << (result.termination == Termination::Optimal
              ? "optimal"
              : (result.termination == Termination::TimeLimit ? "time_limit"
                                                              : "node_limit"))
      << "\n";
  out << "tree:\n" << result.tree_text;
  return out.str();
}

}  // namespace flowtree
