#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "flowtree/mip.hpp"

namespace flowtree {

// Classic LP text format, keywords: Maximize / Subject To / Bounds /
// General / End. Objective constants are written as a literal term.
// Variable names must already be LP-safe (the model builders guarantee it).
void write_lp(std::ostream& out, const LinearProgram& lp,
              const std::vector<std::string>& names,
              const std::vector<bool>* integer_marks = nullptr);

void write_lp(std::ostream& out, const MipModel& model);

std::string to_lp_string(const MipModel& model);

}  // namespace flowtree
