#include "grafflp/synth.hpp"

#include <algorithm>
#include <stdexcept>

#include "grafflp/rng.hpp"
#include "grafflp/split.hpp"

namespace grafflp {

Graph generate_grid_graph(int rows, int cols, double mine_rate, uint64_t seed) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("generate_grid_graph: empty grid");
  if (mine_rate < 0.0 || mine_rate > 1.0) {
    throw std::invalid_argument("generate_grid_graph: mine_rate outside [0, 1]");
  }
  const int n = rows * cols;
  auto id = [cols](int r, int c) { return r * cols + c; };

  std::vector<std::pair<int, int>> pairs;
  // Forward half of the 8-neighborhood; symmetrization adds the rest.
  constexpr int kOffsets[4][2] = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      for (const auto& off : kOffsets) {
        const int rr = r + off[0];
        const int cc = c + off[1];
        if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
        pairs.emplace_back(id(r, c), id(rr, cc));
      }
    }
  }

  Rng rng(seed);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = rng.bernoulli(mine_rate) ? 1 : 0;

  // Features: one-hot of the mined-neighbor count, clamped into 7 buckets.
  constexpr int kFeatureDim = 7;
  std::vector<int> mine_count(n, 0);
  for (const auto& [a, b] : pairs) {
    mine_count[a] += labels[b];
    mine_count[b] += labels[a];
  }
  Tensor2 features(n, kFeatureDim);
  for (int i = 0; i < n; ++i) {
    features.at(i, std::min(mine_count[i], kFeatureDim - 1)) = 1.0;
  }
  Graph g = build_graph(pairs, std::move(features), std::move(labels));
  g.num_classes = 2;  // mine / clear even if a tiny sample misses one class
  return g;
}

Graph generate_chain_graph(int n, double shortcut_rate, int num_classes, uint64_t seed,
                           int feature_dim) {
  if (n < 2) throw std::invalid_argument("generate_chain_graph: need at least 2 nodes");
  if (num_classes < 1) throw std::invalid_argument("generate_chain_graph: num_classes < 1");
  if (shortcut_rate < 0.0) throw std::invalid_argument("generate_chain_graph: negative rate");

  EdgeList path;
  path.reserve(n - 1);
  for (int i = 0; i + 1 < n; ++i) path.push_back(Edge{i, i + 1});

  const auto num_shortcuts = static_cast<size_t>(shortcut_rate * double(n));
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(path.size() + num_shortcuts);
  for (const Edge& e : path) pairs.emplace_back(e.u, e.v);
  if (num_shortcuts > 0) {
    const EdgeList extras = sample_negatives(n, num_shortcuts, path, seed ^ 0x5bf0'3635ULL);
    for (const Edge& e : extras) pairs.emplace_back(e.u, e.v);
  }

  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % num_classes;

  Rng rng(seed);
  Tensor2 features(n, feature_dim);
  for (double& v : features.data) v = rng.normal();

  Graph g = build_graph(pairs, std::move(features), std::move(labels));
  g.num_classes = num_classes;
  return g;
}

}  // namespace grafflp
