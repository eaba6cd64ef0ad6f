#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "flowtree/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"flowtree: provably optimal depth-bounded classification trees "
               "on binary features"};

  flowtree::RunSpec spec;
  std::string formulation = "flowoct";
  double lambda = 0.0;
  bool lambda_grid = false;

  app.add_option("--data", spec.data_path, "input CSV (header row, comma separated)")
      ->required();
  app.add_option("--label", spec.label_column,
                 "label column name (default: last column)");
  app.add_option("--formulation", formulation, "flowoct | benders | oct")
      ->check(CLI::IsMember({"flowoct", "benders", "oct"}));
  app.add_option("--depth", spec.depth, "tree depth (>= 1)")->required();
  auto* lam = app.add_option("--lambda", lambda, "regularization weight in [0,1]");
  auto* grid = app.add_flag("--lambda-grid", lambda_grid,
                            "sweep lambda over 0.0,0.1,...,0.9 with a "
                            "50/25/25 train/validation/test split");
  lam->excludes(grid);
  app.add_option("--time-limit", spec.time_limit_seconds, "seconds per solve")
      ->default_val(60.0);
  app.add_option("--seed", spec.seed, "split/shuffle seed")->default_val(0);
  app.add_flag("--multi-cuts", spec.multi_cuts,
               "add the a-priori multi-point strengthening cuts (flowoct)");
  app.add_option("--export-lp", spec.export_lp_path,
                 "write the built model in LP text format before solving");
  app.add_option("--out", spec.out_path, "write the result document here");
  app.add_option("--node-log", spec.node_log_path,
                 "write one line per branch-and-bound node");

  CLI11_PARSE(app, argc, argv);

  try {
    spec.family = flowtree::family_from_name(formulation);
    flowtree::RunResult result;
    if (lambda_grid) {
      spec.lambdas.clear();
      for (int j = 0; j <= 9; ++j) spec.lambdas.push_back(0.1 * j);
      result = flowtree::lambda_sweep(spec);
    } else {
      spec.lambdas = {lambda};
      result = flowtree::train(spec);
    }
    std::string doc = flowtree::serialize_result(result);
    if (!spec.out_path.empty()) {
      std::ofstream out(spec.out_path);
      if (!out) throw std::runtime_error("cannot write " + spec.out_path);
      out << doc;
    }
    std::cout << doc;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
