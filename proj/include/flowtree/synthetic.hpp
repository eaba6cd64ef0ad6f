#pragma once

#include <cstdint>
#include <string>

#include "flowtree/dataset.hpp"

namespace flowtree {

// Deterministic generators for the classic benchmark families used in the
// tests. The monk tasks are defined over six categorical attributes
// a1..a6 with 3,3,2,3,4,2 levels (432 combinations); each generator labels
// the full domain by the task's rule and samples a fixed-size subset with a
// seeded shuffle. balance_scale_csv enumerates its complete 625-row domain,
// so it reproduces the published dataset exactly.
//
//   monk1: y = 1 iff a1 == a2 or a5 == 1           (124 rows)
//   monk2: y = 1 iff exactly two of a_i == 1       (169 rows)
//   monk3: y = 1 iff (a5 == 3 and a4 == 1) or (a5 != 4 and a2 != 3),
//          with 5% of sampled labels flipped       (122 rows)
//
// Output is CSV text: header a1,...,a6,class (label last).
std::string monk_csv(int task, int rows, uint64_t seed);

inline std::string monk1_csv(uint64_t seed = 1) { return monk_csv(1, 124, seed); }
inline std::string monk2_csv(uint64_t seed = 2) { return monk_csv(2, 169, seed); }
inline std::string monk3_csv(uint64_t seed = 3) { return monk_csv(3, 122, seed); }

std::string balance_scale_csv();

// Convenience: generate, then run the standard CSV pipeline.
BinaryDataset load_monk(int task, uint64_t seed = 0);

}  // namespace flowtree
