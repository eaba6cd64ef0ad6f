#include <doctest.h>

#include <algorithm>

#include "flowtree/dataset.hpp"
#include "flowtree/synthetic.hpp"

using namespace flowtree;

TEST_CASE("generated monk1 matches the published shape") {
  LoadResult r = load_csv_text(monk_csv(1, 124, 1));
  CHECK(r.data.num_rows() == 124);
  CHECK(r.data.num_features() == 15);
  CHECK(r.data.num_classes() == 2);
  CHECK(r.warnings.empty());
}

TEST_CASE("balance-scale is reproduced exactly") {
  LoadResult r = load_csv_text(balance_scale_csv());
  CHECK(r.data.num_rows() == 625);
  CHECK(r.data.num_features() == 20);
  CHECK(r.data.num_classes() == 3);
  // 288 each of L and R, 49 balanced.
  int counts[3] = {0, 0, 0};
  for (int y : r.data.labels) counts[y]++;
  std::vector<int> sorted(counts, counts + 3);
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted[0] == 49);
  CHECK(sorted[1] == 288);
  CHECK(sorted[2] == 288);
}

TEST_CASE("already-binary numeric input is kept as-is") {
  LoadResult r = load_csv_text("f,y\n0,A\n1,B\n");
  CHECK(r.data.num_rows() == 2);
  CHECK(r.data.num_features() == 1);
  CHECK(r.data.num_classes() == 2);
  CHECK(r.data.features[0][0] == 0);
  CHECK(r.data.features[1][0] == 1);
  CHECK(r.data.class_names == std::vector<std::string>{"A", "B"});
}

TEST_CASE("three-plus-valued columns one-hot with one column per value") {
  LoadResult r = load_csv_text("c,y\nred,A\ngreen,B\nblue,A\nred,B\n");
  CHECK(r.data.num_features() == 3);
  CHECK(r.data.feature_names ==
        std::vector<std::string>{"c=red", "c=green", "c=blue"});
  for (int i = 0; i < 4; ++i) {
    int ones = 0;
    for (uint8_t v : r.data.features[i]) ones += v;
    CHECK(ones == 1);  // one-hot invariant
  }
}

TEST_CASE("label column can be chosen by name and classes keep file order") {
  LoadResult r = load_csv_text("y,f\nB,0\nA,1\nB,1\n", "y");
  CHECK(r.data.class_names == std::vector<std::string>{"B", "A"});
  CHECK(r.data.labels == std::vector<int>{0, 1, 0});
  CHECK_THROWS(load_csv_text("y,f\nB,0\n", "missing"));
}

TEST_CASE("constant columns are retained and flagged") {
  LoadResult r = load_csv_text("c,f,y\nsame,0,A\nsame,1,B\n");
  CHECK(r.data.num_features() == 2);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("constant") != std::string::npos);
}

TEST_CASE("non-binary numeric columns are rejected") {
  CHECK_THROWS(load_csv_text("f,y\n0.5,A\n1.5,B\n"));
  // Integer-coded categories with small cardinality are fine...
  CHECK_NOTHROW(load_csv_text("f,y\n1,A\n2,B\n3,A\n"));
  // ...but a wide integer range asks for discretization.
  std::string wide = "f,y\n";
  for (int i = 0; i < 20; ++i) wide += std::to_string(i) + ",A\n";
  wide += "99,B\n";
  CHECK_THROWS(load_csv_text(wide));
}

TEST_CASE("missing files and empty inputs raise errors") {
  CHECK_THROWS(load_csv("/nonexistent/path.csv"));
  CHECK_THROWS(load_csv_text(""));
  CHECK_THROWS(load_csv_text("a,y\n"));
}

TEST_CASE("split reproduces the floor/remainder sizes") {
  LoadResult monk = load_csv_text(monk_csv(1, 124, 1));
  SplitSpec spec;
  spec.seed = 7;
  SplitResult parts = split(monk.data, spec);
  CHECK(parts.train.num_rows() == 62);
  CHECK(parts.validation.num_rows() == 31);
  CHECK(parts.test.num_rows() == 31);

  LoadResult tiny = load_csv_text("f,y\n0,A\n1,B\n0,B\n1,A\n");
  SplitSpec s2;
  s2.seed = 0;
  SplitResult p2 = split(tiny.data, s2);
  CHECK(p2.train.num_rows() == 2);
  CHECK(p2.validation.num_rows() == 1);
  CHECK(p2.test.num_rows() == 1);
}

TEST_CASE("split is deterministic and partitions the rows") {
  BinaryDataset ds = load_csv_text(monk_csv(2, 169, 3)).data;
  SplitSpec spec;
  spec.seed = 42;
  SplitResult a = split(ds, spec);
  SplitResult b = split(ds, spec);
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.validation_rows == b.validation_rows);
  CHECK(a.test_rows == b.test_rows);

  // Round-trip: the three parts together are exactly the original rows.
  std::vector<int> all = a.train_rows;
  all.insert(all.end(), a.validation_rows.begin(), a.validation_rows.end());
  all.insert(all.end(), a.test_rows.begin(), a.test_rows.end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < ds.num_rows(); ++i) REQUIRE(all[i] == i);
  for (size_t i = 0; i < a.train_rows.size(); ++i)
    CHECK(a.train.features[i] == ds.features[a.train_rows[i]]);
}

TEST_CASE("degenerate splits are rejected") {
  BinaryDataset tiny = load_csv_text("f,y\n0,A\n1,B\n").data;
  SplitSpec spec;  // 0.5/0.25/0.25 over two rows: empty parts
  CHECK_THROWS(split(tiny, spec));

  SplitSpec full;
  full.train_fraction = 1.0;
  full.validation_fraction = 0.0;
  full.test_fraction = 0.0;
  SplitResult parts = split(tiny, full);
  CHECK(parts.train.num_rows() == 2);
  CHECK(parts.validation.num_rows() == 0);

  SplitSpec bad;
  bad.train_fraction = 0.5;
  bad.validation_fraction = 0.6;
  bad.test_fraction = -0.1;
  CHECK_THROWS(split(tiny, bad));
}

TEST_CASE("loading the same text twice is bit-identical") {
  std::string csv = monk_csv(3, 122, 5);
  LoadResult a = load_csv_text(csv);
  LoadResult b = load_csv_text(csv);
  CHECK(a.data.features == b.data.features);
  CHECK(a.data.labels == b.data.labels);
  CHECK(a.data.feature_names == b.data.feature_names);
}

TEST_CASE("dataset invariants are enforced") {
  BinaryDataset ds;
  CHECK_THROWS(ds.check_valid());  // empty
  ds.features = {{0, 1}};
  ds.labels = {0};
  ds.feature_names = {"a", "b"};
  ds.class_names = {"A"};
  CHECK_THROWS(ds.check_valid());  // single class
  ds.class_names = {"A", "B"};
  CHECK_NOTHROW(ds.check_valid());
  ds.features[0][0] = 2;
  CHECK_THROWS(ds.check_valid());  // non-binary entry
}
