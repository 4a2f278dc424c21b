#include "lageffect/feature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace lageffect {

namespace {

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits "head(arg1,arg2,...)" respecting nested parentheses.
bool split_call(const std::string& text, std::string& head, std::vector<std::string>& args) {
  auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') return false;
  head = strip(text.substr(0, open));
  const std::string inner = text.substr(open + 1, text.size() - open - 2);
  int depth = 0;
  std::string cur;
  for (char c : inner) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      args.push_back(strip(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!strip(cur).empty() || !args.empty()) args.push_back(strip(cur));
  return true;
}

std::string knot_string(double knot) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", knot);
  return buf;
}

}  // namespace

Term Term::parse(const std::string& raw) {
  const std::string text = strip(raw);
  if (text.empty()) throw Error(errc::invalid_config, "empty feature term");
  std::string head;
  std::vector<std::string> args;
  if (!split_call(text, head, args)) {
    Term t;
    t.kind = Kind::Current;
    t.column = text;
    return t;
  }
  auto want = [&](size_t n) {
    if (args.size() != n) {
      throw Error(errc::invalid_config,
                  "term '" + text + "': expected " + std::to_string(n) + " arguments");
    }
  };
  auto column_of = [&](const std::string& arg, Term& t) {
    std::string h2;
    std::vector<std::string> a2;
    if (split_call(arg, h2, a2)) {
      if (h2 != "fut" || a2.size() != 1) {
        throw Error(errc::invalid_config, "term '" + text + "': bad column '" + arg + "'");
      }
      t.future = true;
      t.column = a2[0];
    } else {
      t.column = arg;
    }
  };
  Term t;
  if (head == "fut") {
    want(1);
    t.kind = Kind::Future;
    t.column = args[0];
  } else if (head == "lag") {
    want(1);
    t.kind = Kind::LaggedAction;
    t.lag_slots = std::stoi(args[0]);
    if (t.lag_slots < 1) throw Error(errc::invalid_config, "lag(j) needs j >= 1");
  } else if (head == "lagpad") {
    want(1);
    t.kind = Kind::LaggedActionPad;
    t.lag_slots = std::stoi(args[0]);
    if (t.lag_slots < 1) throw Error(errc::invalid_config, "lagpad(j) needs j >= 1");
  } else if (head == "poly") {
    want(2);
    t.kind = Kind::Poly;
    column_of(args[0], t);
    t.degree = std::stoi(args[1]);
    if (t.degree < 1) throw Error(errc::invalid_config, "poly degree must be >= 1");
  } else if (head == "spline") {
    want(3);
    t.kind = Kind::Spline;
    column_of(args[0], t);
    t.degree = std::stoi(args[1]);
    if (t.degree != 2 && t.degree != 3) {
      throw Error(errc::invalid_config, "spline degree must be 2 or 3");
    }
    t.knot = std::stod(args[2]);
  } else {
    throw Error(errc::invalid_config, "unknown term '" + text + "'");
  }
  return t;
}

std::string Term::to_string() const {
  switch (kind) {
    case Kind::Current: return column;
    case Kind::Future: return "fut(" + column + ")";
    case Kind::LaggedAction: return "lag(" + std::to_string(lag_slots) + ")";
    case Kind::LaggedActionPad: return "lagpad(" + std::to_string(lag_slots) + ")";
    case Kind::Poly:
      return "poly(" + (future ? "fut(" + column + ")" : column) + "," +
             std::to_string(degree) + ")";
    case Kind::Spline:
      return "spline(" + (future ? "fut(" + column + ")" : column) + "," +
             std::to_string(degree) + "," + knot_string(knot) + ")";
  }
  return "?";
}

bool Term::operator==(const Term& other) const {
  return kind == other.kind && column == other.column && future == other.future &&
         lag_slots == other.lag_slots && degree == other.degree && knot == other.knot;
}

namespace {

int require_column(const std::vector<std::string>& names, const std::string& name) {
  for (int j = 0; j < static_cast<int>(names.size()); ++j) {
    if (names[j] == name) return j;
  }
  throw Error(errc::spec_column_unknown, "column '" + name + "'");
}

}  // namespace

double evaluate_term(const Term& term, const std::vector<std::string>& column_names,
                     const Panel& panel, int k, int lag) {
  switch (term.kind) {
    case Term::Kind::Current:
      return panel.jobs[k - 1].x[require_column(column_names, term.column)];
    case Term::Kind::Future:
      return panel.jobs[k + lag - 1].x[require_column(column_names, term.column)];
    case Term::Kind::LaggedAction: {
      const int j = k - term.lag_slots;
      return j >= 1 ? static_cast<double>(panel.jobs[j - 1].a) : 0.0;
    }
    case Term::Kind::LaggedActionPad:
      return k - term.lag_slots >= 1 ? 0.0 : 1.0;
    case Term::Kind::Poly: {
      const int c = require_column(column_names, term.column);
      const double v = term.future ? panel.jobs[k + lag - 1].x[c] : panel.jobs[k - 1].x[c];
      return std::pow(v, term.degree);
    }
    case Term::Kind::Spline: {
      const int c = require_column(column_names, term.column);
      const double v = term.future ? panel.jobs[k + lag - 1].x[c] : panel.jobs[k - 1].x[c];
      const double u = v - term.knot;
      return u > 0.0 ? std::pow(u, term.degree) : 0.0;
    }
  }
  return 0.0;
}

std::vector<Term> parse_terms(const std::string& comma_separated) {
  std::vector<Term> out;
  int depth = 0;
  std::string cur;
  auto flush = [&]() {
    const std::string t = strip(cur);
    if (!t.empty()) out.push_back(Term::parse(t));
    cur.clear();
  };
  for (char c : comma_separated) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

std::vector<Term> FeatureSpec::expanded_r_terms() const {
  std::vector<Term> out = r_terms;
  for (int j = 1; j <= n_lagged_actions; ++j) {
    Term lag_term;
    lag_term.kind = Term::Kind::LaggedAction;
    lag_term.lag_slots = j;
    Term pad_term;
    pad_term.kind = Term::Kind::LaggedActionPad;
    pad_term.lag_slots = j;
    if (std::find(out.begin(), out.end(), lag_term) == out.end()) out.push_back(lag_term);
    if (std::find(out.begin(), out.end(), pad_term) == out.end()) out.push_back(pad_term);
  }
  // Every explicit lag(j) gets its pad indicator so the boundary k <= j is
  // absorbed by the models rather than aliased with "prior job got 0".
  const size_t fixed = out.size();
  for (size_t i = 0; i < fixed; ++i) {
    if (out[i].kind != Term::Kind::LaggedAction) continue;
    Term pad_term;
    pad_term.kind = Term::Kind::LaggedActionPad;
    pad_term.lag_slots = out[i].lag_slots;
    if (std::find(out.begin(), out.end(), pad_term) == out.end()) out.push_back(pad_term);
  }
  return out;
}

std::vector<int> FeatureSpec::f_positions() const {
  if (!f_identity) return f_basis;
  std::vector<int> all(s_indices.size());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

std::vector<int> FeatureSpec::g_positions() const {
  if (!g_identity) return g_base;
  std::vector<int> all(expanded_r_terms().size());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

void FeatureSpec::validate(const PanelSet& panels) const {
  if (lag < 1) throw Error(errc::invalid_config, "lag must be >= 1");
  const auto terms = expanded_r_terms();
  for (const auto& t : terms) {
    if (t.kind == Term::Kind::LaggedAction || t.kind == Term::Kind::LaggedActionPad) continue;
    if (panels.column_index(t.column) < 0) {
      throw Error(errc::spec_column_unknown, "column '" + t.column + "' not in dataset");
    }
  }
  const int nr = static_cast<int>(terms.size());
  for (int idx : s_indices) {
    if (idx < 0 || idx >= nr) {
      throw Error(errc::invalid_config, "s_terms index out of range");
    }
  }
  for (int idx : f_positions()) {
    if (idx < 0 || idx >= static_cast<int>(s_indices.size())) {
      throw Error(errc::invalid_config, "f_basis index out of range");
    }
  }
  for (int idx : g_positions()) {
    if (idx < 0 || idx >= nr) throw Error(errc::invalid_config, "g_base index out of range");
  }
}

std::vector<std::pair<int, int>> RowSet::panel_spans() const {
  std::vector<std::pair<int, int>> spans;
  int begin = 0;
  for (int i = 1; i <= static_cast<int>(rows.size()); ++i) {
    if (i == static_cast<int>(rows.size()) || rows[i].panel_index != rows[begin].panel_index) {
      spans.emplace_back(begin, i);
      begin = i;
    }
  }
  return spans;
}

namespace {

// Term with dataset columns resolved to indices.
struct ResolvedTerm {
  Term term;
  int column_index = -1;

  double evaluate(const Panel& panel, int k, int lag) const {
    switch (term.kind) {
      case Term::Kind::Current:
        return panel.jobs[k - 1].x[column_index];
      case Term::Kind::Future:
        return panel.jobs[k + lag - 1].x[column_index];
      case Term::Kind::LaggedAction: {
        const int j = k - term.lag_slots;
        return j >= 1 ? static_cast<double>(panel.jobs[j - 1].a) : 0.0;
      }
      case Term::Kind::LaggedActionPad:
        return k - term.lag_slots >= 1 ? 0.0 : 1.0;
      case Term::Kind::Poly: {
        const double v = term.future ? panel.jobs[k + lag - 1].x[column_index]
                                     : panel.jobs[k - 1].x[column_index];
        return std::pow(v, term.degree);
      }
      case Term::Kind::Spline: {
        const double v = term.future ? panel.jobs[k + lag - 1].x[column_index]
                                     : panel.jobs[k - 1].x[column_index];
        const double u = v - term.knot;
        return u > 0.0 ? std::pow(u, term.degree) : 0.0;
      }
    }
    return 0.0;
  }
};

}  // namespace

RowSet build_rows(const PanelSet& panels, const FeatureSpec& spec) {
  spec.validate(panels);
  RowSet out;
  out.n_panels = panels.n_panels();
  out.r_terms = spec.expanded_r_terms();
  out.s_indices = spec.s_indices;

  std::vector<ResolvedTerm> plan;
  plan.reserve(out.r_terms.size());
  for (const auto& t : out.r_terms) {
    ResolvedTerm rt;
    rt.term = t;
    if (t.kind != Term::Kind::LaggedAction && t.kind != Term::Kind::LaggedActionPad) {
      rt.column_index = panels.column_index(t.column);
    }
    plan.push_back(rt);
  }

  const int nr = static_cast<int>(plan.size());
  const int ns = static_cast<int>(spec.s_indices.size());
  for (int pi = 0; pi < panels.n_panels(); ++pi) {
    const Panel& panel = panels.panels[pi];
    const int K = panel.size();
    for (int k = 1; k <= K - spec.lag; ++k) {
      EstimationRow row;
      row.panel_index = pi;
      row.panel_id = panel.id;
      row.k = k;
      row.r.resize(nr);
      for (int j = 0; j < nr; ++j) row.r[j] = plan[j].evaluate(panel, k, spec.lag);
      row.s.resize(ns);
      for (int j = 0; j < ns; ++j) row.s[j] = row.r[spec.s_indices[j]];
      row.a = panel.jobs[k - 1].a;
      row.y_future = panel.jobs[k + spec.lag - 1].y;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace lageffect
