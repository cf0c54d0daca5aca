#include <catch2/catch_amalgamated.hpp>

#include "gfp/grid.hpp"

using namespace gfp;

TEST_CASE("make_grid basics") {
  const Grid g = make_grid(2);
  REQUIRE(g.n == 2);
  CHECK(g.nodes(0) == 0.0);
  CHECK(g.nodes(1) == 0.5);
  CHECK(g.nodes(2) == 1.0);
  CHECK(g.weights(0) == 0.25);
  CHECK(g.weights(1) == 0.5);
  CHECK(g.weights(2) == 0.25);

  const Grid g4 = make_grid(4);
  for (int i = 0; i <= 4; ++i) CHECK(g4.nodes(i) == Catch::Approx(i / 4.0));

  CHECK_THROWS_AS(make_grid(1), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0), std::invalid_argument);
}

TEST_CASE("weights sum to one") {
  for (int n : {2, 3, 7, 64, 1000}) {
    const Grid g = make_grid(n);
    const double tol = 8.0 * std::numeric_limits<double>::epsilon() * n;
    CHECK(std::abs(g.weights.sum() - 1.0) <= tol);
  }
}

TEST_CASE("quadrature exact on affine functions") {
  const Grid g = make_grid(17);
  GridFunction ones = GridFunction::Ones(g.node_count());
  CHECK(quadrature(ones, g) == Catch::Approx(1.0).margin(1e-15));

  GridFunction lin = g.nodes;
  CHECK(quadrature(lin, g) == Catch::Approx(0.5).margin(1e-14));

  // a + b t integrates to a + b/2
  GridFunction affine = 2.0 * GridFunction::Ones(g.node_count()) - 3.0 * g.nodes;
  CHECK(quadrature(affine, g) == Catch::Approx(2.0 - 1.5).margin(1e-14));
}

TEST_CASE("quadrature of t^2 at n=128") {
  const Grid g = make_grid(128);
  GridFunction f = g.nodes.cwiseProduct(g.nodes);
  CHECK(std::abs(quadrature(f, g) - 1.0 / 3.0) < 1e-4);
}

TEST_CASE("quadrature rejects length mismatch") {
  const Grid g = make_grid(4);
  GridFunction f = GridFunction::Zero(3);
  CHECK_THROWS_AS(quadrature(f, g), std::invalid_argument);
}

TEST_CASE("refinement convergence on smooth integrands") {
  // |I_n - I_2n| <= C / n^2 for three-times-differentiable integrands
  auto value = [](int n, auto&& fn) {
    const Grid g = make_grid(n);
    GridFunction f(g.node_count());
    for (int i = 0; i <= g.n; ++i) f(i) = fn(g.nodes(i));
    return quadrature(f, g);
  };
  for (int n : {16, 32, 64, 128}) {
    const double sq = std::abs(value(n, [](double t) { return t * t; }) -
                               value(2 * n, [](double t) { return t * t; }));
    CHECK(sq <= 1.0 / (n * n));
    const double ex = std::abs(value(n, [](double t) { return std::exp(t); }) -
                               value(2 * n, [](double t) { return std::exp(t); }));
    CHECK(ex <= 1.0 / (n * n));
  }
}

TEST_CASE("node lookup") {
  const Grid g = make_grid(8);
  CHECK(g.node_index(0.5) == 4);
  CHECK(g.node_index(0.0) == 0);
  CHECK(g.node_index(1.0) == 8);
  CHECK(g.node_index(0.3) == -1);
  CHECK(g.nearest_node(0.3) == 2);    // 0.3*8 = 2.4
  CHECK(g.nearest_node(0.3125) == 2); // tie 2.5 resolves toward 0
  CHECK(g.nearest_node(0.33) == 3);   // 2.64
}
