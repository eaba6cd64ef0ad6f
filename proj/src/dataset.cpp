#include "flowtree/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace flowtree {

void BinaryDataset::check_valid() const {
  if (num_rows() < 1) throw std::invalid_argument("dataset has no rows");
  if (num_features() < 1) throw std::invalid_argument("dataset has no features");
  if (num_classes() < 2) throw std::invalid_argument("dataset needs >= 2 classes");
  if (static_cast<int>(labels.size()) != num_rows())
    throw std::invalid_argument("label count mismatch");
  for (const auto& row : features) {
    if (static_cast<int>(row.size()) != num_features())
      throw std::invalid_argument("feature row width mismatch");
    for (uint8_t v : row)
      if (v != 0 && v != 1) throw std::invalid_argument("non-binary feature entry");
  }
  for (int y : labels)
    if (y < 0 || y >= num_classes())
      throw std::invalid_argument("label index out of range");
}

BinaryDataset BinaryDataset::subset(const std::vector<int>& row_indices) const {
  BinaryDataset out;
  out.class_names = class_names;
  out.feature_names = feature_names;
  out.features.reserve(row_indices.size());
  out.labels.reserve(row_indices.size());
  for (int r : row_indices) {
    out.features.push_back(features.at(r));
    out.labels.push_back(labels.at(r));
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool is_integer_token(const std::string& s) {
  if (s.empty()) return false;
  size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

bool is_numeric_token(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace

LoadResult load_csv_text(const std::string& text, const std::string& label_column) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv input");
  std::vector<std::string> header = split_line(line);
  int ncol = static_cast<int>(header.size());

  int label_idx = ncol - 1;
  if (!label_column.empty()) {
    auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end())
      throw std::runtime_error("label column '" + label_column + "' not found");
    label_idx = static_cast<int>(it - header.begin());
  }

  std::vector<std::vector<std::string>> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row = split_line(line);
    if (static_cast<int>(row.size()) != ncol)
      throw std::runtime_error("csv row with wrong column count");
    cells.push_back(std::move(row));
  }
  if (cells.empty()) throw std::runtime_error("csv has no data rows");
  int nrow = static_cast<int>(cells.size());

  LoadResult result;
  BinaryDataset& ds = result.data;

  // Label mapping in first-appearance order.
  ds.labels.reserve(nrow);
  for (int r = 0; r < nrow; ++r) {
    const std::string& v = cells[r][label_idx];
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), v);
    int k;
    if (it == ds.class_names.end()) {
      k = static_cast<int>(ds.class_names.size());
      ds.class_names.push_back(v);
    } else {
      k = static_cast<int>(it - ds.class_names.begin());
    }
    ds.labels.push_back(k);
  }

  ds.features.assign(nrow, {});
  for (int c = 0; c < ncol; ++c) {
    if (c == label_idx) continue;
    std::vector<std::string> distinct;
    bool all01 = true;
    bool all_integer = true;
    bool any_numeric_noninteger = false;
    for (int r = 0; r < nrow; ++r) {
      const std::string& v = cells[r][c];
      if (v != "0" && v != "1") all01 = false;
      if (!is_integer_token(v)) {
        all_integer = false;
        if (is_numeric_token(v)) any_numeric_noninteger = true;
      }
      if (std::find(distinct.begin(), distinct.end(), v) == distinct.end())
        distinct.push_back(v);
    }
    if (any_numeric_noninteger)
      throw std::runtime_error("column '" + header[c] +
                               "' holds non-binary numeric data; pre-discretize it");
    if (all01) {
      ds.feature_names.push_back(header[c]);
      for (int r = 0; r < nrow; ++r)
        ds.features[r].push_back(cells[r][c] == "1" ? 1 : 0);
      if (distinct.size() == 1)
        result.warnings.push_back("column '" + header[c] + "' is constant");
      continue;
    }
    if (all_integer && distinct.size() > 10)
      throw std::runtime_error("column '" + header[c] +
                               "' holds non-binary numeric data; pre-discretize it");
    if (distinct.size() == 1) {
      result.warnings.push_back("column '" + header[c] + "' is constant");
      ds.feature_names.push_back(header[c] + "=" + distinct[0]);
      for (int r = 0; r < nrow; ++r) ds.features[r].push_back(1);
    } else if (distinct.size() == 2) {
      // Two-valued categorical columns become one binary column, which is
      // what the standard one-hot feature counts for these benchmarks use.
      ds.feature_names.push_back(header[c] + "=" + distinct[1]);
      for (int r = 0; r < nrow; ++r)
        ds.features[r].push_back(cells[r][c] == distinct[1] ? 1 : 0);
    } else {
      for (const std::string& v : distinct) {
        ds.feature_names.push_back(header[c] + "=" + v);
        for (int r = 0; r < nrow; ++r)
          ds.features[r].push_back(cells[r][c] == v ? 1 : 0);
      }
    }
  }

  ds.check_valid();
  return result;
}

LoadResult load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_csv_text(buf.str(), label_column);
}

void SplitSpec::check_valid() const {
  if (train_fraction <= 0) throw std::invalid_argument("train fraction must be > 0");
  if (validation_fraction < 0 || test_fraction < 0)
    throw std::invalid_argument("split fractions must be nonnegative");
  double sum = train_fraction + validation_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
}

std::vector<int> shuffled_indices(int n, uint64_t seed) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

SplitResult split(const BinaryDataset& ds, const SplitSpec& spec) {
  spec.check_valid();
  int n = ds.num_rows();
  int n_val = static_cast<int>(std::floor(spec.validation_fraction * n));
  int n_test = static_cast<int>(std::floor(spec.test_fraction * n));
  int n_train = n - n_val - n_test;  // leftover rows go to train
  if (n_train < 1) throw std::invalid_argument("train split would be empty");
  if (spec.validation_fraction > 0 && n_val == 0)
    throw std::invalid_argument("validation split would be empty; dataset too small");
  if (spec.test_fraction > 0 && n_test == 0)
    throw std::invalid_argument("test split would be empty; dataset too small");

  std::vector<int> perm = shuffled_indices(n, spec.seed);
  SplitResult out;
  out.train_rows.assign(perm.begin(), perm.begin() + n_train);
  out.validation_rows.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  out.test_rows.assign(perm.begin() + n_train + n_val, perm.end());
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.validation_rows.begin(), out.validation_rows.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  out.train = ds.subset(out.train_rows);
  if (n_val > 0) out.validation = ds.subset(out.validation_rows);
  if (n_test > 0) out.test = ds.subset(out.test_rows);
  // Zero-row parts keep column metadata for downstream accuracy reporting.
  if (n_val == 0) {
    out.validation.class_names = ds.class_names;
    out.validation.feature_names = ds.feature_names;
  }
  if (n_test == 0) {
    out.test.class_names = ds.class_names;
    out.test.feature_names = ds.feature_names;
  }
  return out;
}

}  // namespace flowtree
