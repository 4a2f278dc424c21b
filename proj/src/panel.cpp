#include "lageffect/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace lageffect {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& what, long line_no) {
  char* end = nullptr;
  const std::string t = strip(s);
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw Error(errc::non_finite_value,
                "line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

long long PanelSet::total_jobs() const {
  long long n = 0;
  for (const auto& p : panels) n += p.size();
  return n;
}

int PanelSet::column_index(const std::string& name) const {
  for (int j = 0; j < static_cast<int>(column_names.size()); ++j) {
    if (column_names[j] == name) return j;
  }
  return -1;
}

void PanelSet::validate() const {
  const int d = feature_dimension();
  std::unordered_set<std::string> seen;
  for (const auto& panel : panels) {
    if (panel.jobs.empty()) {
      throw Error(errc::no_rows, "panel '" + panel.id + "' has no jobs");
    }
    if (!seen.insert(panel.id).second) {
      throw Error(errc::non_contiguous_index, "duplicate panel_id '" + panel.id + "'");
    }
    for (const auto& job : panel.jobs) {
      if (job.x.size() != d) {
        throw Error(errc::non_finite_value,
                    "panel '" + panel.id + "': feature dimension mismatch");
      }
      if (job.a != 0 && job.a != 1) {
        throw Error(errc::non_binary_decision,
                    "panel '" + panel.id + "': decision not in {0,1}");
      }
      if (!std::isfinite(job.y) || !job.x.allFinite()) {
        throw Error(errc::non_finite_value, "panel '" + panel.id + "': non-finite value");
      }
    }
  }
}

PanelSet parse_panels(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(errc::io_error, "empty input");
  auto header = split_csv_line(line);
  for (auto& h : header) h = strip(h);

  auto find_col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(errc::missing_column, "required column '" + name + "'");
    return static_cast<int>(it - header.begin());
  };
  const int col_panel = find_col("panel_id");
  const int col_index = find_col("job_index");
  const int col_a = find_col("a");
  const int col_y = find_col("y");

  PanelSet out;
  std::vector<int> feature_cols;
  for (int j = 0; j < static_cast<int>(header.size()); ++j) {
    if (j == col_panel || j == col_index || j == col_a || j == col_y) continue;
    feature_cols.push_back(j);
    out.column_names.push_back(header[j]);
  }
  const int d = static_cast<int>(feature_cols.size());

  struct Row {
    long index;
    Job job;
  };
  // Keyed by panel_id in first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> grouped;

  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != static_cast<int>(header.size())) {
      throw Error(errc::io_error,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    Row row;
    row.index = static_cast<long>(parse_double(fields[col_index], "job_index", line_no));
    const double a_val = parse_double(fields[col_a], "a", line_no);
    if (a_val != 0.0 && a_val != 1.0) {
      throw Error(errc::non_binary_decision,
                  "line " + std::to_string(line_no) + ": a = '" + fields[col_a] + "'");
    }
    row.job.a = static_cast<int>(a_val);
    row.job.y = parse_double(fields[col_y], "y", line_no);
    if (!std::isfinite(row.job.y)) {
      throw Error(errc::non_finite_value, "line " + std::to_string(line_no) + ": y not finite");
    }
    row.job.x.resize(d);
    for (int j = 0; j < d; ++j) {
      row.job.x[j] = parse_double(fields[feature_cols[j]], header[feature_cols[j]], line_no);
      if (!std::isfinite(row.job.x[j])) {
        throw Error(errc::non_finite_value,
                    "line " + std::to_string(line_no) + ": column '" +
                        header[feature_cols[j]] + "' not finite");
      }
    }
    const std::string id = strip(fields[col_panel]);
    auto [it, fresh] = grouped.try_emplace(id);
    if (fresh) order.push_back(id);
    it->second.push_back(std::move(row));
  }

  for (const auto& id : order) {
    auto& rows = grouped[id];
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.index < b.index; });
    Panel panel;
    panel.id = id;
    for (long k = 0; k < static_cast<long>(rows.size()); ++k) {
      if (rows[k].index != k + 1) {
        throw Error(errc::non_contiguous_index,
                    "panel '" + id + "': job_index " + std::to_string(rows[k].index) +
                        " where " + std::to_string(k + 1) + " expected");
      }
      panel.jobs.push_back(std::move(rows[k].job));
    }
    out.panels.push_back(std::move(panel));
  }
  out.validate();
  return out;
}

PanelSet parse_panels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");
  return parse_panels(in);
}

namespace {
std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void write_panels(const PanelSet& panels, std::ostream& out) {
  out << "panel_id,job_index,a,y";
  for (const auto& name : panels.column_names) out << ',' << name;
  out << '\n';
  for (const auto& panel : panels.panels) {
    for (int k = 0; k < panel.size(); ++k) {
      const Job& job = panel.jobs[k];
      out << panel.id << ',' << (k + 1) << ',' << job.a << ',' << fmt17(job.y);
      for (int j = 0; j < job.x.size(); ++j) out << ',' << fmt17(job.x[j]);
      out << '\n';
    }
  }
}

void write_panels_file(const PanelSet& panels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(errc::io_error, "cannot open '" + path + "' for writing");
  write_panels(panels, out);
}

}  // namespace lageffect
