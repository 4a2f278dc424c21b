#include <doctest.h>

#include <sstream>

#include "lageffect/feature.hpp"
#include "lageffect/panel.hpp"

using namespace lageffect;

namespace {

PanelSet parse(const std::string& csv) {
  std::istringstream in(csv);
  return parse_panels(in);
}

}  // namespace

TEST_CASE("parse_panels maps rows to panels") {
  const auto panels = parse(
      "panel_id,job_index,a,y,age\n"
      "d1,1,1,10.5,30\n"
      "d1,2,0,11.0,40\n"
      "d1,3,1,9.25,50\n");
  REQUIRE(panels.n_panels() == 1);
  CHECK(panels.panels[0].size() == 3);
  CHECK(panels.feature_dimension() == 1);
  CHECK(panels.panels[0].jobs[1].a == 0);
  CHECK(panels.panels[0].jobs[2].x[0] == 50.0);
}

TEST_CASE("parse_panels accepts shuffled rows and groups by panel") {
  const auto panels = parse(
      "panel_id,job_index,a,y,age\n"
      "d2,1,0,1,1\n"
      "d1,2,1,2,2\n"
      "d1,1,0,3,3\n");
  REQUIRE(panels.n_panels() == 2);
  CHECK(panels.panels[0].id == "d2");
  CHECK(panels.panels[1].jobs[0].y == 3.0);
}

TEST_CASE("parse_panels rejects gaps in job_index") {
  try {
    parse("panel_id,job_index,a,y,age\n"
          "d1,1,0,1,1\n"
          "d1,3,0,1,1\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::non_contiguous_index);
  }
}

TEST_CASE("parse_panels rejects duplicate job_index") {
  CHECK_THROWS_AS(parse("panel_id,job_index,a,y,age\n"
                        "d1,1,0,1,1\n"
                        "d1,1,0,1,1\n"),
                  Error);
}

TEST_CASE("parse_panels rejects non-binary decisions") {
  try {
    parse("panel_id,job_index,a,y,age\nd1,1,2,1,1\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::non_binary_decision);
  }
}

TEST_CASE("parse_panels rejects missing required columns") {
  try {
    parse("panel_id,job_index,y,age\nd1,1,1,1\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_column);
  }
}

TEST_CASE("parse_panels rejects non-finite values") {
  CHECK_THROWS_AS(parse("panel_id,job_index,a,y,age\nd1,1,0,nan,1\n"), Error);
}

TEST_CASE("csv round trip is value-exact") {
  const auto panels = parse(
      "panel_id,job_index,a,y,age\n"
      "d1,1,1,0.1,3.141592653589793\n"
      "d1,2,0,-7.25e-12,1e300\n");
  std::ostringstream out;
  write_panels(panels, out);
  const auto again = parse(out.str());
  for (int k = 0; k < 2; ++k) {
    CHECK(again.panels[0].jobs[k].y == panels.panels[0].jobs[k].y);
    CHECK(again.panels[0].jobs[k].x[0] == panels.panels[0].jobs[k].x[0]);
  }
}

TEST_CASE("build_rows emits K - lag rows per panel") {
  const auto panels = parse(
      "panel_id,job_index,a,y,age\n"
      "d1,1,1,1,10\n"
      "d1,2,0,2,20\n"
      "d1,3,1,3,30\n"
      "d2,1,0,4,40\n");
  FeatureSpec spec;
  spec.lag = 1;
  spec.r_terms = parse_terms("age, fut(age)");
  const RowSet rows = build_rows(panels, spec);
  REQUIRE(rows.rows.size() == 2);  // d1 contributes k=1,2; d2 has K <= lag
  CHECK(rows.n_panels == 2);
  CHECK(rows.rows[0].r[0] == 10.0);
  CHECK(rows.rows[0].r[1] == 20.0);
  CHECK(rows.rows[0].y_future == 2.0);
  CHECK(rows.rows[1].a == 0.0);

  // Row count identity over a lag that exhausts both panels.
  FeatureSpec spec3 = spec;
  spec3.lag = 3;
  CHECK(build_rows(panels, spec3).rows.empty());
}

TEST_CASE("lagged actions pad with indicator before the panel start") {
  const auto panels = parse(
      "panel_id,job_index,a,y,age\n"
      "d1,1,1,1,10\n"
      "d1,2,0,2,20\n"
      "d1,3,1,3,30\n"
      "d1,4,1,4,40\n"
      "d1,5,0,5,50\n");
  FeatureSpec spec;
  spec.lag = 2;
  spec.r_terms = parse_terms("age");
  spec.n_lagged_actions = 2;
  const RowSet rows = build_rows(panels, spec);
  REQUIRE(rows.rows.size() == 3);
  // Expanded terms: age, lag(1), lagpad(1), lag(2), lagpad(2).
  const auto& r1 = rows.rows[0].r;  // k = 1: no previous jobs
  CHECK(r1[1] == 0.0);
  CHECK(r1[2] == 1.0);
  CHECK(r1[3] == 0.0);
  CHECK(r1[4] == 1.0);
  const auto& r3 = rows.rows[2].r;  // k = 3: a2 = 0, a1 = 1
  CHECK(r3[1] == 0.0);
  CHECK(r3[2] == 0.0);
  CHECK(r3[3] == 1.0);
  CHECK(r3[4] == 0.0);
}

TEST_CASE("selecting s positions matches direct evaluation") {
  const auto panels = parse(
      "panel_id,job_index,a,y,age,census\n"
      "d1,1,1,1,10,3\n"
      "d1,2,0,2,20,4\n"
      "d1,3,1,3,30,5\n");
  FeatureSpec spec;
  spec.lag = 1;
  spec.r_terms = parse_terms("age, census, fut(census), spline(age,2,15)");
  spec.s_indices = {2, 0};
  const RowSet rows = build_rows(panels, spec);
  for (const auto& row : rows.rows) {
    CHECK(row.s[0] == row.r[2]);
    CHECK(row.s[1] == row.r[0]);
  }
  // Spline transform: (age - 15)_+^2.
  CHECK(rows.rows[0].r[3] == 0.0);
  CHECK(rows.rows[1].r[3] == 25.0);
}

TEST_CASE("unknown spec column is rejected") {
  const auto panels = parse("panel_id,job_index,a,y,age\nd1,1,0,1,1\nd1,2,0,1,1\n");
  FeatureSpec spec;
  spec.r_terms = parse_terms("height");
  try {
    build_rows(panels, spec);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::spec_column_unknown);
  }
}

TEST_CASE("term grammar round trips") {
  for (const std::string text :
       {"age", "fut(age)", "lag(2)", "lagpad(1)", "poly(age,2)", "poly(fut(age),3)",
        "spline(age,2,30)", "spline(fut(age),3,46)"}) {
    CHECK(Term::parse(text).to_string() == text);
  }
}
