#pragma once

#include <string>
#include <vector>

#include "lageffect/estimator.hpp"

namespace lageffect {

// Table-style rendering: one decimal place, switching to two when the
// magnitude would round away (|v| < 0.095), matching rows like
// "0.04 (0.01, 0.09)" and "2.0 (0.3, 3.6)".
std::string format_table_value(double v);

// ".02" style; "<.01" below 0.005.
std::string format_p_value(double p);

// "0.04 (0.01, 0.09)"
std::string format_effect_cell(double estimate, double ci_low, double ci_high);

// "0.04 (0.01, 0.09), P .02"
std::string format_effect_row(double estimate, double ci_low, double ci_high, double p);

struct ReportRow {
  std::string variable;
  WaldReport wald;
};

// TSV with columns variable, estimate, ci_low, ci_high, p_value, display.
std::string render_report_tsv(const std::vector<ReportRow>& rows);

}  // namespace lageffect
