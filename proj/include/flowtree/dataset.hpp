#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flowtree {

// Binary-feature classification data: every feature entry is 0/1, labels are
// indices into class_names (order of first appearance).
struct BinaryDataset {
  std::vector<std::vector<uint8_t>> features;  // |I| x |F|
  std::vector<int> labels;                     // |I|, values in [0, |K|)
  std::vector<std::string> class_names;        // |K|
  std::vector<std::string> feature_names;      // |F|

  int num_rows() const { return static_cast<int>(features.size()); }
  int num_features() const { return static_cast<int>(feature_names.size()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  // Throws std::invalid_argument if any invariant fails
  // (entries 0/1, labels in range, |I| >= 1, |F| >= 1, |K| >= 2).
  void check_valid() const;

  BinaryDataset subset(const std::vector<int>& row_indices) const;
};

struct LoadResult {
  BinaryDataset data;
  std::vector<std::string> warnings;  // e.g. constant columns
};

// Reads a comma-separated UTF-8 file with a header row. No quoting support.
// Encoding of non-label columns:
//   - values all in {0,1}: kept as a single binary column (identity),
//   - two distinct values: single binary column (first-seen value -> 0),
//   - 3..10 distinct values: one-hot, one column per value named col=value,
//   - a single constant value: one all-ones column, flagged in warnings,
//   - more than 10 distinct integer values or any non-integer numeric value:
//     error asking for pre-discretization.
// label_column empty selects the last column.
LoadResult load_csv(const std::string& path, const std::string& label_column = "");

// Same parsing applied to in-memory text (used by tests and the generators).
LoadResult load_csv_text(const std::string& text, const std::string& label_column = "");

struct SplitSpec {
  double train_fraction = 0.5;
  double validation_fraction = 0.25;
  double test_fraction = 0.25;
  uint64_t seed = 0;

  void check_valid() const;
};

struct SplitResult {
  BinaryDataset train;
  BinaryDataset validation;
  BinaryDataset test;
  std::vector<int> train_rows;  // original row indices, ascending
  std::vector<int> validation_rows;
  std::vector<int> test_rows;
};

// Deterministic partition by a seeded shuffle. Part sizes are
// floor(fraction * |I|) with all leftover rows assigned to train. A part
// whose fraction is positive but receives zero rows is an error.
SplitResult split(const BinaryDataset& ds, const SplitSpec& spec);

// Portable Fisher-Yates permutation of 0..n-1 (std::shuffle is not
// reproducible across standard libraries).
std::vector<int> shuffled_indices(int n, uint64_t seed);

}  // namespace flowtree
