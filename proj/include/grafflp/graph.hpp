#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "grafflp/tensor.hpp"

namespace grafflp {

/// Undirected edge, stored with u < v.
struct Edge {
  int u = 0;
  int v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

using EdgeList = std::vector<Edge>;

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

inline uint64_t edge_key(const Edge& e) {
  return (static_cast<uint64_t>(e.u) << 32) | static_cast<uint32_t>(e.v);
}

using EdgeKeySet = std::unordered_set<uint64_t>;

inline EdgeKeySet make_key_set(const EdgeList& edges) {
  EdgeKeySet s;
  s.reserve(edges.size() * 2);
  for (const Edge& e : edges) s.insert(edge_key(e));
  return s;
}

/// Immutable node/edge container. Edges are undirected, deduplicated,
/// self-loop free, sorted, and stored once. Degrees count raw neighbors
/// (no self-loops).
struct Graph {
  int num_nodes = 0;
  int num_classes = 0;
  Tensor2 features;          // num_nodes x feature_dim
  std::vector<int> labels;   // class ids in [0, num_classes)
  EdgeList edges;            // u < v, sorted, unique
  std::vector<int> degrees;  // |Gamma(i)|

  int feature_dim() const { return features.cols; }
};

/// Symmetric normalized operator with self-loops, CSR layout.
/// Entry (i, j) is scale[i] * scale[j] with scale[i] = 1/sqrt(deg_i + 1),
/// present for every edge and on the whole diagonal.
struct NormalizedAdjacency {
  int n = 0;
  std::vector<int> row_ptr;  // size n + 1
  std::vector<int> col;
  std::vector<double> val;
  std::vector<double> scale;  // 1/sqrt(deg_i + 1)
};

struct EdgePartition {
  EdgeList hm;  // endpoints share a label
  EdgeList ht;  // endpoints differ
};

/// Builds a Graph from possibly-directed, possibly-duplicated input pairs.
/// Self-loops are dropped, pairs are symmetrized and deduplicated.
Graph build_graph(const std::vector<std::pair<int, int>>& edge_list, Tensor2 features,
                  std::vector<int> labels);

NormalizedAdjacency normalized_adjacency(const Graph& g);

/// Same operator over an explicit edge subset (message-passing graphs use
/// strictly fewer edges than the full graph).
NormalizedAdjacency normalized_adjacency(int num_nodes, const EdgeList& edges);

/// Degree-scaled feature difference across (i, j): scale[j]*H[j] - scale[i]*H[i].
std::vector<double> edge_gradient(const Tensor2& h, const NormalizedAdjacency& adj, int i, int j);

/// Sum of squared edge-gradient norms, each undirected edge counted once.
double dirichlet_energy(const Tensor2& h, const NormalizedAdjacency& adj, const EdgeList& edges);

/// sum_i <h_i, Omega h_i> - sum over nonzeros (i,j) of adj of a_ij <h_i, W h_j>.
/// Omega and W must be symmetric d x d; diagnostic only.
double parametrized_dirichlet_energy(const Tensor2& h, const Tensor2& omega, const Tensor2& w,
                                     const NormalizedAdjacency& adj);

/// Fraction of edges joining same-class nodes. nullopt on an empty edge set.
std::optional<double> edge_homophily(const Graph& g);

/// Class-imbalance-corrected homophily. nullopt when the correction
/// denominator degenerates (all degree mass in one class, or no edges).
std::optional<double> adjusted_homophily(const Graph& g);

EdgePartition partition_by_class(const EdgeList& edges, const std::vector<int>& labels);

}  // namespace grafflp
