#pragma once

#include <cstdint>

#include "grafflp/graph.hpp"

namespace grafflp {

/// Lattice with 8-neighborhood connectivity. Labels are i.i.d.
/// Bernoulli(mine_rate); node features one-hot encode the number of mined
/// neighbors, clamped at 6, giving a 7-dim feature vector.
Graph generate_grid_graph(int rows, int cols, double mine_rate, uint64_t seed);

/// Path 0-1-...-(n-1) plus floor(shortcut_rate * n) uniform random extra
/// edges. Labels cycle over num_classes (adjacent path nodes always differ
/// when num_classes > 1); features are standard normal.
Graph generate_chain_graph(int n, double shortcut_rate, int num_classes, uint64_t seed,
                           int feature_dim = 8);

}  // namespace grafflp
