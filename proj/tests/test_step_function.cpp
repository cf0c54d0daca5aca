#include <catch2/catch_amalgamated.hpp>

#include "gfp/grid.hpp"
#include "gfp/step_function.hpp"

using namespace gfp;

TEST_CASE("step function validation") {
  CHECK_THROWS_AS(StepFunction({0.0, 0.5}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(StepFunction({0.1, 1.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(StepFunction({0.0, 0.9}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(StepFunction({0.0, 0.5, 0.5, 1.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_NOTHROW(StepFunction({0.0, 0.5, 1.0}, {1.0, -2.0}));
}

TEST_CASE("indicator sampling follows the [0,t) convention") {
  const StepFunction e = StepFunction::indicator(0.5);
  CHECK(e.value_rc(0.0) == 1.0);
  CHECK(e.value_rc(0.25) == 1.0);
  CHECK(e.value_rc(0.5) == 0.0);  // vanishes at the cutoff
  CHECK(e.value_rc(0.75) == 0.0);
  CHECK(e.value_rc(1.0) == 0.0);

  const StepFunction full = StepFunction::indicator(1.0);
  CHECK(full.value_rc(0.0) == 1.0);
  CHECK(full.value_rc(0.999) == 1.0);
  CHECK(full.value_rc(1.0) == 0.0);

  const StepFunction zero = StepFunction::indicator(0.0);
  CHECK(zero.value_rc(0.0) == 0.0);
  CHECK(zero.integral() == 0.0);
}

TEST_CASE("left and right continuous samples") {
  const StepFunction e({0.0, 0.25, 0.75, 1.0}, {1.0, 2.0, 3.0});
  CHECK(e.value_lc(0.25) == 1.0);
  CHECK(e.value_rc(0.25) == 2.0);
  CHECK(e.value_lc(1.0) == 3.0);
  CHECK(e.value_lc(0.1) == 1.0);
  CHECK(e.integral() == Catch::Approx(0.25 * 1 + 0.5 * 2 + 0.25 * 3));
}

TEST_CASE("node samples and cell values on a grid") {
  const Grid g = make_grid(4);
  const StepFunction e({0.0, 0.5, 1.0}, {2.0, -1.0});
  const GridFunction ns = e.node_samples(g);
  CHECK(ns(0) == 2.0);
  CHECK(ns(1) == 2.0);
  CHECK(ns(2) == -1.0);  // right-continuous at the jump
  CHECK(ns(3) == -1.0);
  CHECK(ns(4) == 0.0);   // always 0 at t=1
  const auto cells = e.cell_values(g);
  CHECK(cells == std::vector<double>{2.0, 2.0, -1.0, -1.0});
}

TEST_CASE("breakpoint indices require on-grid breakpoints") {
  const Grid g = make_grid(8);
  const StepFunction on({0.0, 0.25, 1.0}, {1.0, 0.0});
  CHECK(breakpoint_indices(on, g) == std::vector<int>{0, 2, 8});
  const StepFunction off({0.0, 0.3, 1.0}, {1.0, 0.0});
  CHECK_THROWS_AS(breakpoint_indices(off, g), std::invalid_argument);
}

TEST_CASE("snapping moves breakpoints to nearest nodes") {
  const Grid g = make_grid(8);
  const StepFunction e({0.0, 0.3, 1.0}, {1.0, 5.0});
  const StepFunction s = snap_to_grid(e, g);
  CHECK(s.breakpoints() == std::vector<double>{0.0, 0.25, 1.0});
  CHECK(s.values() == std::vector<double>{1.0, 5.0});

  // both interior breakpoints snap to the same node: interval collapses
  const StepFunction tight({0.0, 0.26, 0.27, 1.0}, {1.0, 7.0, 2.0});
  const StepFunction st = snap_to_grid(tight, g);
  CHECK(st.breakpoints() == std::vector<double>{0.0, 0.25, 1.0});
  CHECK(st.values() == std::vector<double>{1.0, 2.0});
}

TEST_CASE("combine steps merges breakpoints and sums values") {
  const StepFunction a = StepFunction::indicator(0.5);
  const StepFunction b = StepFunction::indicator(0.75);
  const double coeff[] = {2.0, -1.0};
  const StepFunction out = combine_steps(coeff, std::vector<StepFunction>{a, b});
  CHECK(out.breakpoints() == std::vector<double>{0.0, 0.5, 0.75, 1.0});
  CHECK(out.value_lc(0.3) == 1.0);   // 2*1 - 1*1
  CHECK(out.value_lc(0.6) == -1.0);  // 2*0 - 1*1
  CHECK(out.value_lc(0.9) == 0.0);
}

TEST_CASE("step times grid function pairing is exact in the step factor") {
  const Grid g = make_grid(8);
  const StepFunction e = StepFunction::indicator(0.5);
  // <1_u, y> = int_0^u y for piecewise-linear y; with y = t this is u^2/2
  CHECK(step_l2_inner(e, g.nodes, g) == Catch::Approx(0.125).margin(1e-15));
  const GridFunction ones = GridFunction::Ones(g.node_count());
  CHECK(step_l2_inner(e, ones, g) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("total variation and sup norm") {
  const StepFunction e({0.0, 0.5, 1.0}, {2.0, -1.0});
  CHECK(e.max_abs() == 2.0);
  CHECK(e.total_variation() == 2.0 + 3.0 + 1.0);
}
