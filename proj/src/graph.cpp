#include "grafflp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace grafflp {

Graph build_graph(const std::vector<std::pair<int, int>>& edge_list, Tensor2 features,
                  std::vector<int> labels) {
  const int n = features.rows;
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("build_graph: labels length " + std::to_string(labels.size()) +
                                " != feature rows " + std::to_string(n));
  }
  EdgeKeySet seen;
  seen.reserve(edge_list.size() * 2);
  EdgeList edges;
  edges.reserve(edge_list.size());
  for (const auto& [a, b] : edge_list) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      throw std::invalid_argument("build_graph: edge (" + std::to_string(a) + "," +
                                  std::to_string(b) + ") out of range for " + std::to_string(n) +
                                  " nodes");
    }
    if (a == b) continue;
    const Edge e = make_edge(a, b);
    if (seen.insert(edge_key(e)).second) edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end());

  Graph g;
  g.num_nodes = n;
  g.features = std::move(features);
  g.labels = std::move(labels);
  g.edges = std::move(edges);
  g.degrees.assign(n, 0);
  for (const Edge& e : g.edges) {
    ++g.degrees[e.u];
    ++g.degrees[e.v];
  }
  int max_label = -1;
  for (int y : g.labels) {
    if (y < 0) throw std::invalid_argument("build_graph: negative class id");
    max_label = std::max(max_label, y);
  }
  g.num_classes = max_label + 1;
  return g;
}

NormalizedAdjacency normalized_adjacency(int num_nodes, const EdgeList& edges) {
  std::vector<int> deg(num_nodes, 0);
  for (const Edge& e : edges) {
    ++deg[e.u];
    ++deg[e.v];
  }
  NormalizedAdjacency adj;
  adj.n = num_nodes;
  adj.scale.resize(num_nodes);
  for (int i = 0; i < num_nodes; ++i) adj.scale[i] = 1.0 / std::sqrt(double(deg[i]) + 1.0);

  // Row counts: every neighbor plus the self-loop.
  adj.row_ptr.assign(num_nodes + 1, 0);
  for (const Edge& e : edges) {
    ++adj.row_ptr[e.u + 1];
    ++adj.row_ptr[e.v + 1];
  }
  for (int i = 0; i < num_nodes; ++i) adj.row_ptr[i + 1] += 1;  // self-loop
  for (int i = 0; i < num_nodes; ++i) adj.row_ptr[i + 1] += adj.row_ptr[i];

  const size_t nnz = adj.row_ptr[num_nodes];
  adj.col.resize(nnz);
  adj.val.resize(nnz);
  std::vector<int> cursor(adj.row_ptr.begin(), adj.row_ptr.end() - 1);
  auto put = [&](int i, int j) {
    const int k = cursor[i]++;
    adj.col[k] = j;
    adj.val[k] = adj.scale[i] * adj.scale[j];
  };
  for (int i = 0; i < num_nodes; ++i) put(i, i);
  for (const Edge& e : edges) {
    put(e.u, e.v);
    put(e.v, e.u);
  }
  // Sorted columns make lookups and equality checks deterministic.
  for (int i = 0; i < num_nodes; ++i) {
    const int lo = adj.row_ptr[i];
    const int hi = adj.row_ptr[i + 1];
    std::vector<std::pair<int, double>> row(hi - lo);
    for (int k = lo; k < hi; ++k) row[k - lo] = {adj.col[k], adj.val[k]};
    std::sort(row.begin(), row.end());
    for (int k = lo; k < hi; ++k) {
      adj.col[k] = row[k - lo].first;
      adj.val[k] = row[k - lo].second;
    }
  }
  return adj;
}

NormalizedAdjacency normalized_adjacency(const Graph& g) {
  return normalized_adjacency(g.num_nodes, g.edges);
}

std::vector<double> edge_gradient(const Tensor2& h, const NormalizedAdjacency& adj, int i, int j) {
  if (i < 0 || j < 0 || i >= adj.n || j >= adj.n) {
    throw std::invalid_argument("edge_gradient: node index out of range");
  }
  const double si = adj.scale[i];
  const double sj = adj.scale[j];
  const double* hi = h.row(i);
  const double* hj = h.row(j);
  std::vector<double> out(h.cols);
  for (int d = 0; d < h.cols; ++d) out[d] = sj * hj[d] - si * hi[d];
  return out;
}

double dirichlet_energy(const Tensor2& h, const NormalizedAdjacency& adj, const EdgeList& edges) {
  double total = 0.0;
  for (const Edge& e : edges) {
    const double si = adj.scale[e.u];
    const double sj = adj.scale[e.v];
    const double* hi = h.row(e.u);
    const double* hj = h.row(e.v);
    double acc = 0.0;
    for (int d = 0; d < h.cols; ++d) {
      const double g = sj * hj[d] - si * hi[d];
      acc += g * g;
    }
    total += acc;
  }
  return total;
}

double parametrized_dirichlet_energy(const Tensor2& h, const Tensor2& omega, const Tensor2& w,
                                     const NormalizedAdjacency& adj) {
  const int d = h.cols;
  require_shape(omega, d, d, "parametrized_dirichlet_energy: omega");
  require_shape(w, d, d, "parametrized_dirichlet_energy: w");
  if (h.rows != adj.n) {
    throw std::invalid_argument("parametrized_dirichlet_energy: h rows != adjacency size");
  }
  double self_term = 0.0;
  for (int i = 0; i < h.rows; ++i) {
    const double* hi = h.row(i);
    for (int a = 0; a < d; ++a) {
      double acc = 0.0;
      const double* wrow = omega.row(a);
      for (int b = 0; b < d; ++b) acc += wrow[b] * hi[b];
      self_term += hi[a] * acc;
    }
  }
  double pair_term = 0.0;
  for (int i = 0; i < adj.n; ++i) {
    const double* hi = h.row(i);
    for (int k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
      const int j = adj.col[k];
      const double a_ij = adj.val[k];
      const double* hj = h.row(j);
      double acc = 0.0;
      for (int a = 0; a < d; ++a) {
        const double* wrow = w.row(a);
        double inner = 0.0;
        for (int b = 0; b < d; ++b) inner += wrow[b] * hj[b];
        acc += hi[a] * inner;
      }
      pair_term += a_ij * acc;
    }
  }
  return self_term - pair_term;
}

std::optional<double> edge_homophily(const Graph& g) {
  if (g.edges.empty()) return std::nullopt;
  size_t same = 0;
  for (const Edge& e : g.edges) same += g.labels[e.u] == g.labels[e.v] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(g.edges.size());
}

std::optional<double> adjusted_homophily(const Graph& g) {
  const auto xi = edge_homophily(g);
  if (!xi) return std::nullopt;
  std::vector<double> class_degree(g.num_classes, 0.0);
  for (int i = 0; i < g.num_nodes; ++i) class_degree[g.labels[i]] += g.degrees[i];
  const double two_e = 2.0 * static_cast<double>(g.edges.size());
  double correction = 0.0;
  for (double dk : class_degree) correction += (dk / two_e) * (dk / two_e);
  const double denom = 1.0 - correction;
  if (denom <= 0.0) return std::nullopt;  // all degree mass in one class
  return (*xi - correction) / denom;
}

EdgePartition partition_by_class(const EdgeList& edges, const std::vector<int>& labels) {
  EdgePartition p;
  for (const Edge& e : edges) {
    (labels[e.u] == labels[e.v] ? p.hm : p.ht).push_back(e);
  }
  return p;
}

}  // namespace grafflp
