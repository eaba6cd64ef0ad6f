#include "flowtree/synthetic.hpp"

#include <array>
#include <sstream>
#include <stdexcept>

namespace flowtree {

namespace {

struct MonkRow {
  std::array<int, 6> a;
  int label;
};

int monk_label(int task, const std::array<int, 6>& a) {
  switch (task) {
    case 1:
      return (a[0] == a[1] || a[4] == 1) ? 1 : 0;
    case 2: {
      int ones = 0;
      for (int v : a) ones += (v == 1);
      return ones == 2 ? 1 : 0;
    }
    case 3:
      return ((a[4] == 3 && a[3] == 1) || (a[4] != 4 && a[1] != 3)) ? 1 : 0;
    default:
      throw std::invalid_argument("monk task must be 1, 2 or 3");
  }
}

}  // namespace

std::string monk_csv(int task, int rows, uint64_t seed) {
  static const std::array<int, 6> levels = {3, 3, 2, 3, 4, 2};
  std::vector<MonkRow> domain;
  std::array<int, 6> a{};
  // Enumerate all 432 attribute combinations in odometer order.
  for (a[0] = 1; a[0] <= levels[0]; ++a[0])
    for (a[1] = 1; a[1] <= levels[1]; ++a[1])
      for (a[2] = 1; a[2] <= levels[2]; ++a[2])
        for (a[3] = 1; a[3] <= levels[3]; ++a[3])
          for (a[4] = 1; a[4] <= levels[4]; ++a[4])
            for (a[5] = 1; a[5] <= levels[5]; ++a[5])
              domain.push_back({a, monk_label(task, a)});
  if (rows < 1 || rows > static_cast<int>(domain.size()))
    throw std::invalid_argument("monk sample size out of range");

  std::vector<int> perm = shuffled_indices(static_cast<int>(domain.size()),
                                           0x9e3779b97f4a7c15ull ^ (seed + task));
  std::vector<MonkRow> sample;
  for (int i = 0; i < rows; ++i) sample.push_back(domain[perm[i]]);

  if (task == 3) {
    // The original monk3 training data carries ~5% class noise.
    int flips = rows / 20;
    std::vector<int> noise = shuffled_indices(rows, seed * 7919 + 13);
    for (int i = 0; i < flips; ++i)
      sample[noise[i]].label = 1 - sample[noise[i]].label;
  }

  std::ostringstream out;
  out << "a1,a2,a3,a4,a5,a6,class\n";
  for (const MonkRow& r : sample) {
    for (int v : r.a) out << v << ',';
    out << r.label << '\n';
  }
  return out.str();
}

std::string balance_scale_csv() {
  std::ostringstream out;
  out << "left_weight,left_distance,right_weight,right_distance,class\n";
  for (int lw = 1; lw <= 5; ++lw)
    for (int ld = 1; ld <= 5; ++ld)
      for (int rw = 1; rw <= 5; ++rw)
        for (int rd = 1; rd <= 5; ++rd) {
          int l = lw * ld, r = rw * rd;
          const char* cls = l > r ? "L" : (l < r ? "R" : "B");
          out << lw << ',' << ld << ',' << rw << ',' << rd << ',' << cls << '\n';
        }
  return out.str();
}

BinaryDataset load_monk(int task, uint64_t seed) {
  static const int sizes[] = {0, 124, 169, 122};
  return load_csv_text(monk_csv(task, sizes[task], seed)).data;
}

}  // namespace flowtree
