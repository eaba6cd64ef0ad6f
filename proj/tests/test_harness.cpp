#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "flowtree/harness.hpp"
#include "flowtree/synthetic.hpp"

using namespace flowtree;

namespace {

BinaryDataset toy(std::vector<std::vector<uint8_t>> rows, std::vector<int> labels) {
  BinaryDataset ds;
  ds.features = std::move(rows);
  ds.labels = std::move(labels);
  ds.class_names = {"A", "B"};
  for (size_t f = 0; f < ds.features[0].size(); ++f)
    ds.feature_names.push_back("f" + std::to_string(f));
  return ds;
}

std::string write_temp_csv(const std::string& text, const std::string& name) {
  std::string path = std::string("/tmp/flowtree_") + name + ".csv";
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("enumeration counts (|F|+|K|)^N * K^L assignments") {
  BinaryDataset ds = toy({{0}, {1}}, {0, 1});
  EnumerationResult r = enumerate_all_trees(ds, 1);
  CHECK(r.assignments == 12);  // (1+2) * 2 * 2
  CHECK(r.best_correct == 2);
}

TEST_CASE("the conflicting pair caps at one correct row; training hits 50%") {
  BinaryDataset ds = toy({{0}, {0}}, {0, 1});
  EnumerationResult oracle = enumerate_all_trees(ds, 1);
  CHECK(oracle.best_correct == 1);

  RunSpec spec;
  spec.depth = 1;
  for (Family fam : {Family::FlowOct, Family::Benders, Family::Oct}) {
    spec.family = fam;
    RunResult res = train_on(ds, spec, 0.0);
    CHECK(res.train_accuracy == doctest::Approx(50.0));
    CHECK(res.objective == doctest::Approx(1.0));
    CHECK(res.gap == 0.0);
  }
}

TEST_CASE("a separable four-point instance is classified perfectly at depth 2") {
  BinaryDataset ds = toy({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 0, 1, 1});
  EnumerationResult oracle = enumerate_all_trees(ds, 2);
  CHECK(oracle.best_correct == 4);
  RunSpec spec;
  spec.depth = 2;
  spec.family = Family::Benders;
  RunResult res = train_on(ds, spec, 0.0);
  CHECK(res.correct == 4);
  CHECK(res.train_accuracy == doctest::Approx(100.0));
}

TEST_CASE("at lambda = 1 training returns the unsplit majority tree") {
  BinaryDataset ds = toy({{0, 1}, {1, 0}, {1, 1}}, {0, 0, 1});
  RunSpec spec;
  spec.depth = 2;
  spec.family = Family::FlowOct;
  RunResult res = train_on(ds, spec, 1.0);
  CHECK(res.splits == 0);
  // Majority class A covers two of the three rows.
  CHECK(res.train_accuracy == doctest::Approx(100.0 * 2 / 3));
}

TEST_CASE("oracle optimum is non-decreasing in depth") {
  BinaryDataset ds = toy({{0, 1}, {1, 0}, {1, 1}, {0, 0}, {1, 0}}, {0, 1, 1, 0, 0});
  int last = -1;
  for (int depth = 1; depth <= 3; ++depth) {
    EnumerationResult r = enumerate_all_trees(ds, depth);
    CHECK(r.best_correct >= last);
    last = r.best_correct;
  }
}

TEST_CASE("enumeration cap rejects oversized instances") {
  BinaryDataset ds = toy({{0}, {1}}, {0, 1});
  CHECK_THROWS(enumerate_all_trees(ds, 1, /*cap=*/4));
}

TEST_CASE("reported accuracy decodes back to the correct count") {
  BinaryDataset ds = toy({{0, 1}, {1, 0}, {1, 1}, {0, 0}, {1, 1}, {0, 1}, {1, 0}},
                         {0, 1, 1, 0, 0, 1, 1});
  RunSpec spec;
  spec.depth = 2;
  spec.family = Family::FlowOct;
  RunResult res = train_on(ds, spec, 0.0);
  double decoded = res.train_accuracy * ds.num_rows() / 100.0;
  CHECK(std::lround(decoded) == res.correct);
}

TEST_CASE("training results are deterministic") {
  BinaryDataset ds = toy({{0, 1}, {1, 0}, {1, 1}, {0, 0}}, {0, 1, 1, 0});
  RunSpec spec;
  spec.depth = 2;
  spec.family = Family::Benders;
  RunResult a = train_on(ds, spec, 0.0);
  RunResult b = train_on(ds, spec, 0.0);
  CHECK(a.objective == b.objective);
  CHECK(a.nodes == b.nodes);
  CHECK(a.tree_text == b.tree_text);
}

TEST_CASE("train() loads from disk and serializes a result document") {
  std::string path = write_temp_csv("f,y\n0,A\n1,B\n0,A\n1,B\n", "train_basic");
  RunSpec spec;
  spec.data_path = path;
  spec.depth = 1;
  spec.family = Family::FlowOct;
  RunResult res = train(spec);
  CHECK(res.train_accuracy == doctest::Approx(100.0));
  std::string doc = serialize_result(res);
  CHECK(doc.find("formulation: flowoct") != std::string::npos);
  CHECK(doc.find("train_accuracy: 100") != std::string::npos);
  CHECK(doc.find("termination: optimal") != std::string::npos);
  CHECK(doc.find("tree:") != std::string::npos);
  CHECK(doc.find("branch f") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("time-limited runs still return a result with a recorded gap") {
  BinaryDataset monk = load_monk(1, 1);
  RunSpec spec;
  spec.depth = 2;
  spec.family = Family::Benders;
  spec.time_limit_seconds = 0.05;  // far too little: forces the limit path
  RunResult res = train_on(monk, spec, 0.0);
  CHECK(res.termination == Termination::TimeLimit);
  CHECK(res.gap > 0.0);
  CHECK(res.train_accuracy >= 0.0);
}

TEST_CASE("the sweep runs the grid plus a final refit and breaks ties down") {
  // Tiny but splittable dataset: 8 rows.
  std::string csv = "f0,f1,y\n";
  for (int i = 0; i < 8; ++i) {
    int a = i & 1, b = (i >> 1) & 1;
    csv += std::to_string(a) + "," + std::to_string(b) + "," +
           (a == 1 ? "B" : "A") + "\n";
  }
  std::string path = write_temp_csv(csv, "sweep");
  RunSpec spec;
  spec.data_path = path;
  spec.depth = 1;
  spec.family = Family::FlowOct;
  spec.lambdas = {0.0, 0.5};
  spec.seed = 3;
  RunResult res = lambda_sweep(spec);
  // The rule a=1 -> B is depth-1 learnable, so both lambdas validate equally
  // and the tie goes to the smaller one.
  CHECK(res.lambda == 0.0);
  REQUIRE(res.validation_accuracy.has_value());
  REQUIRE(res.test_accuracy.has_value());
  CHECK(*res.validation_accuracy == doctest::Approx(100.0));
  CHECK(*res.test_accuracy == doctest::Approx(100.0));
  std::remove(path.c_str());
}

TEST_CASE("a singleton grid equals train-then-refit on train+validation") {
  std::string csv = "f0,y\n";
  for (int i = 0; i < 8; ++i)
    csv += std::to_string(i & 1) + "," + ((i & 1) ? "B" : "A") + "\n";
  std::string path = write_temp_csv(csv, "singleton");
  RunSpec spec;
  spec.data_path = path;
  spec.depth = 1;
  spec.family = Family::FlowOct;
  spec.lambdas = {0.0};
  spec.seed = 1;
  RunResult res = lambda_sweep(spec);
  CHECK(res.lambda == 0.0);
  CHECK(*res.test_accuracy == doctest::Approx(100.0));
  std::remove(path.c_str());
}

TEST_CASE("invalid run specs are rejected") {
  RunSpec spec;
  spec.depth = 0;
  CHECK_THROWS(spec.check_valid());
  spec.depth = 1;
  spec.time_limit_seconds = 0;
  CHECK_THROWS(spec.check_valid());
  spec.time_limit_seconds = 1;
  spec.lambdas = {1.5};
  CHECK_THROWS(spec.check_valid());
}
