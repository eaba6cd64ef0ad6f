#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "flowtree/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"flowtree-datagen: deterministic benchmark CSV generators"};

  std::string name;
  std::string out_path;
  uint64_t seed = 0;
  int rows = 0;
  app.add_option("--name", name, "monk1 | monk2 | monk3 | balance-scale")
      ->required()
      ->check(CLI::IsMember({"monk1", "monk2", "monk3", "balance-scale"}));
  app.add_option("--out", out_path, "output CSV path")->required();
  app.add_option("--seed", seed, "sampling seed (monk tasks)")->default_val(0);
  app.add_option("--rows", rows,
                 "override the sample size (monk tasks; default: the "
                 "published training-set size)");

  CLI11_PARSE(app, argc, argv);

  try {
    std::string csv;
    if (name == "balance-scale") {
      csv = flowtree::balance_scale_csv();
    } else {
      int task = name[4] - '0';
      static const int default_rows[] = {0, 124, 169, 122};
      csv = flowtree::monk_csv(task, rows > 0 ? rows : default_rows[task], seed);
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << csv;
    std::cout << "wrote " << out_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
