#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "grafflp/graph.hpp"

namespace grafflp {

enum class Role { kTrain, kVal, kTest };

const char* role_name(Role r);
Role parse_role(const std::string& name);

struct SplitConfig {
  double train_ratio = 0.8;
  double val_ratio = 0.1;
  double test_ratio = 0.1;
  /// Fraction of the train pool held out as supervision positives.
  double disjoint_train_fraction = 0.2;
  /// Frozen negatives per role, as a multiple of that role's positives.
  double negative_pool_ratio = 1.0;
  uint64_t seed = 0;
};

struct RoleEdges {
  EdgeList message_passing;
  EdgeList positives;
  EdgeList negatives;
};

/// Transductive split with nested message-passing sets:
///   val MP = train MP + train positives, test MP = val MP + val positives.
struct EdgeSplit {
  RoleEdges train;
  RoleEdges val;
  RoleEdges test;
  SplitConfig config;

  const RoleEdges& role(Role r) const;
};

/// Shuffles the undirected edges by seed and carves out supervision
/// positives: floor(ratio * |E|) for val and test, the nearest integer of
/// disjoint_train_fraction * pool for train, remainder to train message
/// passing. Frozen negatives per role are sampled excluding every graph edge.
EdgeSplit transductive_split(const Graph& g, const SplitConfig& cfg);

/// Uniform sample of `count` distinct unordered non-self pairs, excluding
/// `exclusion`. Throws when fewer than `count` candidates exist.
EdgeList sample_negatives(int num_nodes, size_t count, const EdgeList& exclusion, uint64_t seed);

struct EvalSet {
  EdgeList edges;
  std::vector<double> labels;  // 1.0 positives first, then 0.0 negatives
};

/// Balanced evaluation set: all role positives plus an equal number of the
/// role's frozen negatives. Throws when the role lacks negatives.
EvalSet make_eval_set(const RoleEdges& role);

NormalizedAdjacency role_adjacency(const Graph& g, const EdgeSplit& split, Role r);

// Manifest I/O (JSON): per-role edge arrays plus the config echo.
void save_split_manifest(const std::string& path, const EdgeSplit& split);
EdgeSplit load_split_manifest(const std::string& path);

}  // namespace grafflp
