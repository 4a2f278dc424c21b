#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "lageffect/panel.hpp"

namespace lageffect {

// One component of the conditioning vector R_k. Terms reference dataset
// columns of the current job (index k), the future job (index k+lag),
// lagged decisions, or polynomial / truncated-power spline transforms of
// a column with explicit knots.
struct Term {
  enum class Kind { Current, Future, LaggedAction, LaggedActionPad, Poly, Spline };

  Kind kind = Kind::Current;
  std::string column;  // for Current/Future/Poly/Spline
  bool future = false; // Poly/Spline: transform of a future column
  int lag_slots = 0;   // LaggedAction(+Pad): j >= 1 meaning A_{k-j}
  int degree = 1;      // Poly/Spline
  double knot = 0.0;   // Spline

  // Grammar: name | fut(name) | lag(j) | lagpad(j) | poly(name,d) |
  // poly(fut(name),d) | spline(name,d,knot) | spline(fut(name),d,knot)
  static Term parse(const std::string& text);
  std::string to_string() const;

  bool operator==(const Term& other) const;
};

// Evaluates a term at (panel, k) with the given lag; k is 1-based and the
// referenced jobs (k, k+lag, k-j) must exist except for lagged actions,
// which pad with 0 before the panel start.
double evaluate_term(const Term& term, const std::vector<std::string>& column_names,
                     const Panel& panel, int k, int lag);

std::vector<Term> parse_terms(const std::string& comma_separated);

// Declarative definition of R_k, S_k subset of R_k, and the bases used by the
// working models. The effect basis f(S_k) and baseline basis g(R_k) both
// carry an implicit leading constant; `f_basis` / `g_base` select which term
// positions additionally enter (identity over all terms by default).
struct FeatureSpec {
  int lag = 1;
  std::vector<Term> r_terms;
  std::vector<int> s_indices;           // positions of S_k within expanded R_k
  int n_lagged_actions = 0;             // appends lag(1..i) + lagpad(1..i) to R_k
  std::vector<int> f_basis;             // positions into s; empty list allowed (constant-only f)
  bool f_identity = true;               // default: f = [1, s...]
  std::vector<int> g_base;              // positions into r
  bool g_identity = true;               // default: g = [1, r...]

  // r_terms plus the lagged-action block implied by n_lagged_actions.
  std::vector<Term> expanded_r_terms() const;
  std::vector<int> f_positions() const; // resolved f basis positions
  std::vector<int> g_positions() const;

  void validate(const PanelSet& panels) const;
};

// One (k, k+lag) pair flattened for estimation.
struct EstimationRow {
  int panel_index = 0;     // ordinal within the PanelSet
  std::string panel_id;
  int k = 0;               // 1-based current-job index
  Eigen::VectorXd r;
  Eigen::VectorXd s;
  double a = 0.0;
  double y_future = 0.0;
};

struct RowSet {
  std::vector<EstimationRow> rows;
  int n_panels = 0;              // all panels, including those with K <= lag
  std::vector<Term> r_terms;     // expanded terms the r vectors were built from
  std::vector<int> s_indices;

  // Half-open [begin, end) spans into `rows`, one per panel that
  // contributed at least one row, ordered by panel ordinal.
  std::vector<std::pair<int, int>> panel_spans() const;
};

// Emits one row per panel per k = 1..K-lag (none when K <= lag).
// Lagged-action terms with j >= k are padded with 0; their pad indicator is 1.
RowSet build_rows(const PanelSet& panels, const FeatureSpec& spec);

}  // namespace lageffect
