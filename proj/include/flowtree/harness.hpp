#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flowtree/benders.hpp"
#include "flowtree/dataset.hpp"
#include "flowtree/formulations.hpp"
#include "flowtree/mip.hpp"

namespace flowtree {

struct RunSpec {
  std::string data_path;
  std::string label_column;  // empty: last column
  Family family = Family::FlowOct;
  int depth = 2;
  std::vector<double> lambdas = {0.0};  // singleton for train, grid for sweep
  double time_limit_seconds = 60.0;
  long max_nodes = 1000000000L;
  uint64_t seed = 0;
  bool multi_cuts = false;
  std::string out_path;        // empty: stdout only
  std::string export_lp_path;  // empty: no export
  std::string node_log_path;   // empty: no per-node log
  bool tie_break_lifo = false;

  void check_valid() const;
};

struct RunResult {
  Family family = Family::FlowOct;
  int depth = 0;
  double lambda = 0.0;  // chosen by validation for sweeps
  double objective = 0.0;
  int correct = 0;  // on the data the final model was trained on
  int splits = 0;
  double train_accuracy = 0.0;  // percent
  std::optional<double> validation_accuracy;
  std::optional<double> test_accuracy;
  double gap = 0.0;
  long nodes = 0;
  long lazy_cuts = 0;
  double wall_seconds = 0.0;
  Termination termination = Termination::Optimal;
  std::string tree_text;
};

// Model solved on one dataset at one lambda: builds the formulation, runs
// branch and bound (with the separation callback for the decomposed family),
// and recomputes the exact objective from the decoded tree.
RunResult train_on(const BinaryDataset& ds, const RunSpec& spec, double lambda);

// Loads the dataset and trains on all of it with the single lambda.
RunResult train(const RunSpec& spec);

// The cross-validation protocol: split 50/25/25 by the spec seed, train per
// grid lambda, pick the lambda with the best validation accuracy (ties to
// the smaller), retrain on train+validation, report test accuracy.
RunResult lambda_sweep(const RunSpec& spec);

// Exhaustive oracle over all equality-feasible (b, w): every internal node
// either branches on one feature or takes one label, every leaf takes one
// label. Scores the number of correctly classified rows (lambda = 0).
struct EnumerationResult {
  long long assignments = 0;
  int best_correct = 0;
  TreeSolution best;
};

EnumerationResult enumerate_all_trees(const BinaryDataset& ds, int depth,
                                      long long cap = 10000000);

// Key/value result document plus the nested tree records; stable and
// diffable. Format described in the README.
std::string serialize_result(const RunResult& result);

std::string render_tree(const TreeTopology& topo, const TreeSolution& sol,
                        const std::vector<std::string>& feature_names,
                        const std::vector<std::string>& class_names);
std::string render_oct_tree(const TreeTopology& topo, const OctSolution& sol,
                            const std::vector<std::string>& feature_names,
                            const std::vector<std::string>& class_names);

}  // namespace flowtree
