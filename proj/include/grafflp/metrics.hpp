#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "grafflp/graph.hpp"
#include "grafflp/model.hpp"

namespace grafflp {

/// Rank-based AUROC with ties credited 0.5 (the Mann-Whitney statistic).
/// Labels are 0/1; higher scores rank toward class 1. nullopt when only one
/// class is present.
std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels);

struct FiveNumber {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Five-number summary; quartiles use linear interpolation between closest
/// ranks. Throws on an empty input.
FiveNumber distribution_summary(std::vector<double> values);

/// Squared edge-gradient norm per listed edge at one state.
std::vector<double> squared_gradient_norms(const Tensor2& h, const NormalizedAdjacency& adj,
                                           const EdgeList& edges);

enum class Mix { kHm, kHt };

struct GsLayer {
  std::optional<double> gs;
  std::optional<double> gs_hm_hm;
  std::optional<double> gs_ht_ht;
  FiveNumber pos;
  FiveNumber neg;
};

struct GsTrace {
  std::vector<GsLayer> layers;  // one entry per trace state H^0..H^L
};

/// Separability of positive vs negative edges by squared gradient norm at
/// every trace state. Negatives are the ranked-high class: a value of 1
/// means every negative norm exceeds every positive norm.
GsTrace gradient_separability(const LayerTrace& trace, const NormalizedAdjacency& adj,
                              const EdgeList& pos_edges, const EdgeList& neg_edges,
                              const std::vector<int>& labels);

/// Class-mix-restricted separability: positives filtered to mix `u`,
/// negatives to mix `v`. nullopt layers when a filtered side is empty.
std::vector<std::optional<double>> gs_subset(const LayerTrace& trace,
                                             const NormalizedAdjacency& adj,
                                             const EdgeList& pos_edges, const EdgeList& neg_edges,
                                             const std::vector<int>& labels, Mix u, Mix v);

struct ClassMixAuc {
  std::optional<double> hm_hm;
  std::optional<double> hm_ht;
  std::optional<double> ht_hm;
  std::optional<double> ht_ht;
};

/// Model-score AUROC restricted to homophilic/heterophilic subsets, standard
/// orientation (positive edges are class 1).
ClassMixAuc class_mix_auc(std::span<const double> pos_scores, std::span<const double> neg_scores,
                          const EdgeList& pos_edges, const EdgeList& neg_edges,
                          const std::vector<int>& labels);

/// CSV: layer, gs, gs_hm_hm, gs_ht_ht, pos_q0..q4, neg_q0..q4. Undefined
/// values print as NA.
void write_gs_csv(std::ostream& out, const GsTrace& trace);

}  // namespace grafflp
