#include "grafflp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace grafflp {

std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auroc: size mismatch");
  const size_t n = scores.size();
  size_t num_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("auroc: labels must be 0/1");
    num_pos += y;
  }
  const size_t num_neg = n - num_pos;
  if (num_pos == 0 || num_neg == 0) return std::nullopt;

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups, 1-based.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (double(i + 1) + double(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - double(num_pos) * double(num_pos + 1) / 2.0;
  return u / (double(num_pos) * double(num_neg));
}

FiveNumber distribution_summary(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("distribution_summary: empty input");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    const double pos = p * double(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = static_cast<size_t>(std::ceil(pos));
    const double frac = pos - double(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  return FiveNumber{values.front(), quantile(0.25), quantile(0.5), quantile(0.75),
                    values.back()};
}

std::vector<double> squared_gradient_norms(const Tensor2& h, const NormalizedAdjacency& adj,
                                           const EdgeList& edges) {
  std::vector<double> norms;
  norms.reserve(edges.size());
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
    norms.push_back(acc);
  }
  return norms;
}

namespace {

/// GS at one state: negatives are the ranked-high class.
std::optional<double> gs_value(const std::vector<double>& pos_norms,
                               const std::vector<double>& neg_norms) {
  if (pos_norms.empty() || neg_norms.empty()) return std::nullopt;
  std::vector<double> scores = pos_norms;
  scores.insert(scores.end(), neg_norms.begin(), neg_norms.end());
  std::vector<int> labels(pos_norms.size(), 0);
  labels.resize(scores.size(), 1);
  return auroc(scores, labels);
}

EdgeList filter_mix(const EdgeList& edges, const std::vector<int>& labels, Mix mix) {
  EdgeList out;
  for (const Edge& e : edges) {
    const bool hm = labels[e.u] == labels[e.v];
    if ((mix == Mix::kHm) == hm) out.push_back(e);
  }
  return out;
}

}  // namespace

GsTrace gradient_separability(const LayerTrace& trace, const NormalizedAdjacency& adj,
                              const EdgeList& pos_edges, const EdgeList& neg_edges,
                              const std::vector<int>& labels) {
  if (pos_edges.empty() || neg_edges.empty()) {
    throw std::invalid_argument("gradient_separability: empty edge set");
  }
  const EdgeList pos_hm = filter_mix(pos_edges, labels, Mix::kHm);
  const EdgeList pos_ht = filter_mix(pos_edges, labels, Mix::kHt);
  const EdgeList neg_hm = filter_mix(neg_edges, labels, Mix::kHm);
  const EdgeList neg_ht = filter_mix(neg_edges, labels, Mix::kHt);

  GsTrace gs;
  for (const Tensor2& h : trace.states) {
    GsLayer layer;
    const auto pos_norms = squared_gradient_norms(h, adj, pos_edges);
    const auto neg_norms = squared_gradient_norms(h, adj, neg_edges);
    layer.gs = gs_value(pos_norms, neg_norms);
    layer.gs_hm_hm = gs_value(squared_gradient_norms(h, adj, pos_hm),
                              squared_gradient_norms(h, adj, neg_hm));
    layer.gs_ht_ht = gs_value(squared_gradient_norms(h, adj, pos_ht),
                              squared_gradient_norms(h, adj, neg_ht));
    layer.pos = distribution_summary(pos_norms);
    layer.neg = distribution_summary(neg_norms);
    gs.layers.push_back(std::move(layer));
  }
  return gs;
}

std::vector<std::optional<double>> gs_subset(const LayerTrace& trace,
                                             const NormalizedAdjacency& adj,
                                             const EdgeList& pos_edges, const EdgeList& neg_edges,
                                             const std::vector<int>& labels, Mix u, Mix v) {
  const EdgeList pos = filter_mix(pos_edges, labels, u);
  const EdgeList neg = filter_mix(neg_edges, labels, v);
  std::vector<std::optional<double>> out;
  for (const Tensor2& h : trace.states) {
    out.push_back(gs_value(squared_gradient_norms(h, adj, pos),
                           squared_gradient_norms(h, adj, neg)));
  }
  return out;
}

ClassMixAuc class_mix_auc(std::span<const double> pos_scores, std::span<const double> neg_scores,
                          const EdgeList& pos_edges, const EdgeList& neg_edges,
                          const std::vector<int>& labels) {
  if (pos_scores.size() != pos_edges.size() || neg_scores.size() != neg_edges.size()) {
    throw std::invalid_argument("class_mix_auc: score/edge size mismatch");
  }
  auto mix_auc = [&](Mix u, Mix v) -> std::optional<double> {
    std::vector<double> scores;
    std::vector<int> lab;
    for (size_t i = 0; i < pos_edges.size(); ++i) {
      const bool hm = labels[pos_edges[i].u] == labels[pos_edges[i].v];
      if ((u == Mix::kHm) == hm) {
        scores.push_back(pos_scores[i]);
        lab.push_back(1);
      }
    }
    for (size_t i = 0; i < neg_edges.size(); ++i) {
      const bool hm = labels[neg_edges[i].u] == labels[neg_edges[i].v];
      if ((v == Mix::kHm) == hm) {
        scores.push_back(neg_scores[i]);
        lab.push_back(0);
      }
    }
    if (scores.empty()) return std::nullopt;
    return auroc(scores, lab);
  };
  return ClassMixAuc{mix_auc(Mix::kHm, Mix::kHm), mix_auc(Mix::kHm, Mix::kHt),
                     mix_auc(Mix::kHt, Mix::kHm), mix_auc(Mix::kHt, Mix::kHt)};
}

void write_gs_csv(std::ostream& out, const GsTrace& trace) {
  out << "layer,gs,gs_hm_hm,gs_ht_ht,pos_q0,pos_q1,pos_q2,pos_q3,pos_q4,"
         "neg_q0,neg_q1,neg_q2,neg_q3,neg_q4\n";
  auto field = [&](const std::optional<double>& v) {
    if (v) {
      out << "," << *v;
    } else {
      out << ",NA";
    }
  };
  for (size_t t = 0; t < trace.layers.size(); ++t) {
    const GsLayer& l = trace.layers[t];
    out << t;
    field(l.gs);
    field(l.gs_hm_hm);
    field(l.gs_ht_ht);
    for (const FiveNumber& f : {l.pos, l.neg}) {
      out << "," << f.min << "," << f.q1 << "," << f.median << "," << f.q3 << "," << f.max;
    }
    out << "\n";
  }
}

}  // namespace grafflp
