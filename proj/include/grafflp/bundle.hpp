#pragma once

#include <string>

#include "grafflp/graph.hpp"

namespace grafflp {

/// Graph bundle directory layout:
///   edges.tsv     one undirected edge per line, two zero-based indices
///   features.csv  N rows of feature_dim comma-separated reals
///   labels.txt    N class ids, one per line
///   meta.json     { name, num_nodes, feature_dim, num_classes }
void save_bundle(const std::string& dir, const Graph& g, const std::string& name);

Graph load_bundle(const std::string& dir);

}  // namespace grafflp
