// Synthetic heterophilic graph generators.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "grafflp/synth.hpp"

using namespace grafflp;

TEST_CASE("2x2 grid is the complete graph on 4 nodes") {
  const Graph g = generate_grid_graph(2, 2, 0.3, 1);
  CHECK(g.num_nodes == 4);
  CHECK(g.edges.size() == 6);
  CHECK(g.feature_dim() == 7);
}

TEST_CASE("mine rate zero is perfectly homophilic") {
  const Graph g = generate_grid_graph(10, 10, 0.0, 2);
  for (int y : g.labels) CHECK(y == 0);
  CHECK(*edge_homophily(g) == 1.0);
  // all counts are zero -> every node carries the first one-hot bucket
  for (int i = 0; i < g.num_nodes; ++i) CHECK(g.features.at(i, 0) == 1.0);
}

TEST_CASE("interior nodes of a big grid have 8 neighbors") {
  const Graph g = generate_grid_graph(5, 5, 0.5, 3);
  CHECK(g.degrees[2 * 5 + 2] == 8);
  CHECK(g.degrees[0] == 3);       // corner
  CHECK(g.degrees[2] == 5);       // edge midpoint
}

TEST_CASE("grid homophily approaches p^2 + (1-p)^2") {
  // At mine rate 0.2 the i.i.d. label model gives 0.68 exactly in expectation.
  double mean = 0.0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const Graph g = generate_grid_graph(100, 100, 0.2, 100 + s);
    mean += *edge_homophily(g);
  }
  mean /= seeds;
  CHECK(std::abs(mean - 0.68) < 0.02);
}

TEST_CASE("grid generation is deterministic per seed") {
  const Graph a = generate_grid_graph(8, 8, 0.25, 9);
  const Graph b = generate_grid_graph(8, 8, 0.25, 9);
  CHECK(a.labels == b.labels);
  CHECK(a.edges == b.edges);
}

TEST_CASE("chain without shortcuts is a path") {
  const Graph g = generate_chain_graph(5, 0.0, 3, 1);
  CHECK(g.edges.size() == 4);
  for (int i = 0; i + 1 < 5; ++i) {
    CHECK(make_key_set(g.edges).contains(edge_key(Edge{i, i + 1})));
  }
}

TEST_CASE("all-distinct classes force zero homophily on the path") {
  const Graph g = generate_chain_graph(6, 0.0, 6, 2);
  CHECK(*edge_homophily(g) == 0.0);
}

TEST_CASE("long cyclic chain with shortcuts stays heterophilic") {
  const Graph g = generate_chain_graph(1000, 0.05, 18, 3);
  CHECK(g.edges.size() == 999 + 50);
  CHECK(*edge_homophily(g) < 0.1);
}
