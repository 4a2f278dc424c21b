#include "lageffect/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace lageffect {

std::string format_table_value(double v) {
  char buf[40];
  if (std::abs(v) < 0.095) {
    std::snprintf(buf, sizeof(buf), "%.2f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.1f", v);
  }
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string format_p_value(double p) {
  if (p < 0.005) return "<.01";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", p);
  std::string s = buf;
  if (s.size() > 1 && s[0] == '0') s.erase(0, 1);  // ".02" not "0.02"
  return s;
}

std::string format_effect_cell(double estimate, double ci_low, double ci_high) {
  return format_table_value(estimate) + " (" + format_table_value(ci_low) + ", " +
         format_table_value(ci_high) + ")";
}

std::string format_effect_row(double estimate, double ci_low, double ci_high, double p) {
  return format_effect_cell(estimate, ci_low, ci_high) + ", P " + format_p_value(p);
}

std::string render_report_tsv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "variable\testimate\tci_low\tci_high\tp_value\tdisplay\n";
  char buf[40];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (const auto& row : rows) {
    out << row.variable << '\t' << num(row.wald.estimate) << '\t' << num(row.wald.ci_low)
        << '\t' << num(row.wald.ci_high) << '\t' << num(row.wald.p_value) << '\t'
        << format_effect_row(row.wald.estimate, row.wald.ci_low, row.wald.ci_high,
                             row.wald.p_value)
        << '\n';
  }
  return out.str();
}

}  // namespace lageffect
