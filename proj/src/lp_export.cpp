#include "flowtree/lp_export.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace flowtree {

namespace {

void write_term(std::ostream& out, double coef, const std::string& name,
                bool& first) {
  if (coef == 0.0) return;
  if (first) {
    if (coef < 0) out << "- ";
    first = false;
  } else {
    out << (coef < 0 ? " - " : " + ");
  }
  double a = std::abs(coef);
  if (a != 1.0) out << a << ' ';
  out << name;
}

}  // namespace

void write_lp(std::ostream& out, const LinearProgram& lp,
              const std::vector<std::string>& names,
              const std::vector<bool>* integer_marks) {
  if (static_cast<int>(names.size()) != lp.num_vars)
    throw std::invalid_argument("write_lp: name count mismatch");

  out << "Maximize\n obj:";
  bool first = true;
  out << ' ';
  for (int j = 0; j < lp.num_vars; ++j) write_term(out, lp.objective[j], names[j], first);
  if (lp.objective_constant != 0.0) {
    if (first)
      out << lp.objective_constant;
    else
      out << (lp.objective_constant < 0 ? " - " : " + ")
          << std::abs(lp.objective_constant);
    first = false;
  }
  if (first) out << "0 " << names[0];
  out << "\nSubject To\n";
  for (size_t r = 0; r < lp.rows.size(); ++r) {
    const LinearRow& row = lp.rows[r];
    out << " c" << r << ":";
    bool f2 = true;
    out << ' ';
    for (const auto& [j, v] : row.coeffs) write_term(out, v, names[j], f2);
    if (f2) out << "0 " << names[0];
    switch (row.sense) {
      case RowSense::LessEqual: out << " <= "; break;
      case RowSense::Equal: out << " = "; break;
      case RowSense::GreaterEqual: out << " >= "; break;
    }
    out << row.rhs << "\n";
  }
  out << "Bounds\n";
  for (int j = 0; j < lp.num_vars; ++j)
    out << ' ' << lp.lower[j] << " <= " << names[j] << " <= " << lp.upper[j] << "\n";
  if (integer_marks) {
    bool any = false;
    for (bool b : *integer_marks) any = any || b;
    if (any) {
      out << "General\n";
      for (int j = 0; j < lp.num_vars; ++j)
        if ((*integer_marks)[j]) out << ' ' << names[j] << "\n";
    }
  }
  out << "End\n";
}

void write_lp(std::ostream& out, const MipModel& model) {
  write_lp(out, model.lp, model.var_names, &model.is_integer);
}

std::string to_lp_string(const MipModel& model) {
  std::ostringstream out;
  write_lp(out, model);
  return out.str();
}

}  // namespace flowtree
