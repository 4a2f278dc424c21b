#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "lageffect/error.hpp"

namespace lageffect {

// One processed job: context features, a binary decision, an outcome.
// Arrival times are intentionally absent; estimation only ever sees jobs
// that exist, so "the future job exists" is encoded by sequence length.
struct Job {
  Eigen::VectorXd x;
  int a = 0;
  double y = 0.0;
};

// One independent cluster (a shift/day); jobs are in processing order.
struct Panel {
  std::string id;
  std::vector<Job> jobs;

  int size() const { return static_cast<int>(jobs.size()); }
};

struct PanelSet {
  std::vector<Panel> panels;
  std::vector<std::string> column_names;  // names of the x components

  int feature_dimension() const { return static_cast<int>(column_names.size()); }
  int n_panels() const { return static_cast<int>(panels.size()); }
  long long total_jobs() const;
  int column_index(const std::string& name) const;  // -1 when absent

  // Structural invariants: K >= 1, consistent x dimension, binary a,
  // finite values, unique panel ids.
  void validate() const;
};

// CSV schema: header `panel_id,job_index,a,y,<feature columns...>`.
// job_index is 1-based and contiguous within each panel; rows may arrive in
// any order and are grouped/sorted here.
PanelSet parse_panels(std::istream& in);
PanelSet parse_panels_file(const std::string& path);

// Writes the same schema back; numeric fields use 17 significant digits so
// a parse/serialize round trip is value-exact.
void write_panels(const PanelSet& panels, std::ostream& out);
void write_panels_file(const PanelSet& panels, const std::string& path);

}  // namespace lageffect
