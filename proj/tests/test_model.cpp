// Forward pipelines, readouts, parameter counting, and the reverse pass.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "grafflp/graph.hpp"
#include "grafflp/model.hpp"
#include "grafflp/rng.hpp"

using namespace grafflp;

namespace {

struct Instance {
  Graph g;
  NormalizedAdjacency adj;
  EdgeList query;           // mix of edges and non-edges
  std::vector<double> labels;
};

Instance random_instance(int n, int d0, double p, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) pairs.emplace_back(i, j);
    }
  }
  if (pairs.empty()) pairs.emplace_back(0, 1);
  Tensor2 x(n, d0);
  for (double& v : x.data) v = rng.normal();
  std::vector<int> labels(n);
  for (int& y : labels) y = rng.below_int(2);
  Instance inst{build_graph(pairs, std::move(x), std::move(labels)), {}, {}, {}};
  inst.adj = normalized_adjacency(inst.g);
  for (int k = 0; k < n; ++k) {
    int a = rng.below_int(n);
    int b = rng.below_int(n);
    if (a == b) continue;
    inst.query.push_back(make_edge(a, b));
    inst.labels.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
  }
  return inst;
}

GraffConfig small_config(ModelKind kind, Readout readout) {
  GraffConfig cfg;
  cfg.layers = kind == ModelKind::kMlp ? 0 : 3;
  cfg.tau = 0.25;
  cfg.hidden_dim = 8;
  cfg.encoder_dropout = 0.1;
  cfg.decoder_layers = 1;
  cfg.decoder_dim = 8;
  cfg.decoder_dropout = 0.1;
  cfg.readout = readout;
  return cfg;
}

/// Worst-coordinate gradient check of the whole model on one instance.
/// Dropout masks are redrawn from the same seed on every evaluation, so the
/// loss is a deterministic function of the parameters even in train mode.
double model_grad_check(ModelKind kind, GraffConfig cfg, bool train_mode, uint64_t seed) {
  const Instance inst = random_instance(10, 4, 0.3, seed);
  ModelParams params = init_model(kind, cfg, inst.g.feature_dim(), seed + 1);
  // Check at a generic point: zero-initialized biases can park dead units
  // exactly on the relu kink, where finite differences disagree with the
  // zero-subgradient convention.
  Rng jitter(seed + 3);
  for (ParamView& v : trainable_views(params)) {
    for (size_t i = 0; i < v.size; ++i) v.data[i] += 0.05 * jitter.normal();
  }
  ModelParams grads = zeros_like(params);

  Rng grad_rng(seed + 2);
  loss_and_gradients(params, inst.adj, inst.g.features, inst.query, inst.labels, train_mode,
                     &grad_rng, grads);
  auto loss_fn = [&]() {
    ModelParams scratch = zeros_like(params);
    Rng rng(seed + 2);
    return loss_and_gradients(params, inst.adj, inst.g.features, inst.query, inst.labels,
                              train_mode, &rng, scratch);
  };
  return grad_check(loss_fn, trainable_views(params), trainable_views(grads), 1e-5);
}

}  // namespace

TEST_CASE("encode reproduces input through identity weights") {
  GraffConfig cfg = small_config(ModelKind::kMlp, Readout::kHadamard);
  cfg.hidden_dim = 3;
  cfg.encoder_dropout = 0.0;
  ModelParams p = init_model(ModelKind::kMlp, cfg, 3, 0);
  p.enc_w.fill(0.0);
  for (int i = 0; i < 3; ++i) p.enc_w.at(i, i) = 1.0;
  std::fill(p.enc_b.begin(), p.enc_b.end(), 0.0);

  Rng rng(1);
  Tensor2 x(5, 3);
  for (double& v : x.data) v = rng.normal();
  const Tensor2 h0 = encode(x, p, false, nullptr);
  for (size_t i = 0; i < x.data.size(); ++i) CHECK(h0.data[i] == doctest::Approx(x.data[i]));

  p.enc_w.fill(0.0);
  const Tensor2 zero = encode(x, p, false, nullptr);
  for (double v : zero.data) CHECK(v == 0.0);
  CHECK(zero.rows == 5);
  CHECK(zero.cols == 3);
}

TEST_CASE("graff step: zero parameters leave the state unchanged") {
  const Instance inst = random_instance(6, 4, 0.4, 5);
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kGradient);
  ModelParams p = init_model(ModelKind::kGraff, cfg, 4, 0);
  p.w.m.fill(0.0);
  std::fill(p.w.q.begin(), p.w.q.end(), 0.0);
  std::fill(p.w.r.begin(), p.w.r.end(), 0.0);
  p.source_w.m.fill(0.0);
  std::fill(p.omega.begin(), p.omega.end(), 0.0);

  Rng rng(2);
  Tensor2 h(6, cfg.hidden_dim);
  for (double& v : h.data) v = rng.normal();
  const Tensor2 out = graff_step(h, h, inst.adj, p, 0.5);
  for (size_t i = 0; i < h.data.size(); ++i) CHECK(out.data[i] == h.data[i]);
}

TEST_CASE("graff step: hand-computed single-edge update") {
  // omega = 0, W = I, source off, A entries all 1/2, tau = 1/2.
  const NormalizedAdjacency adj = normalized_adjacency(2, {Edge{0, 1}});
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kGradient);
  cfg.hidden_dim = 2;
  cfg.source_term = false;
  ModelParams p = init_model(ModelKind::kGraff, cfg, 2, 0);
  p.w.m.fill(0.0);
  std::fill(p.w.q.begin(), p.w.q.end(), 0.0);
  p.w.r = {1.0, 1.0};  // realized W = I
  std::fill(p.omega.begin(), p.omega.end(), 0.0);

  Tensor2 h(2, 2);
  h.at(0, 0) = 1.0;
  h.at(1, 0) = 1.0;
  const Tensor2 out = graff_step(h, h, adj, p, 0.5);
  CHECK(out.at(0, 0) == doctest::Approx(1.5));
  CHECK(out.at(1, 0) == doctest::Approx(1.5));
  CHECK(out.at(0, 1) == 0.0);
  CHECK(out.at(1, 1) == 0.0);
}

TEST_CASE("graff step: negative preactivations are clamped away") {
  const NormalizedAdjacency adj = normalized_adjacency(2, {Edge{0, 1}});
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kGradient);
  cfg.hidden_dim = 2;
  cfg.source_term = false;
  ModelParams p = init_model(ModelKind::kGraff, cfg, 2, 0);
  p.w.m.fill(0.0);
  std::fill(p.w.q.begin(), p.w.q.end(), 0.0);
  p.w.r = {0.0, 0.0};
  p.omega = {5.0, 5.0};  // -H Omega < 0 everywhere for positive H

  Tensor2 h(2, 2, 1.0);
  const Tensor2 out = graff_step(h, h, adj, p, 0.5);
  for (size_t i = 0; i < h.data.size(); ++i) CHECK(out.data[i] == h.data[i]);
}

TEST_CASE("forward trace length and composition") {
  const Instance inst = random_instance(7, 4, 0.4, 8);
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kGradient);
  ModelParams p = init_model(ModelKind::kGraff, cfg, 4, 3);
  const LayerTrace trace = forward_trace(p, inst.adj, inst.g.features);
  CHECK(trace.states.size() == size_t(cfg.layers + 1));
  CHECK(trace.layer_count() == size_t(cfg.layers));

  // L = 1 equals encode followed by one step
  cfg.layers = 1;
  ModelParams p1 = init_model(ModelKind::kGraff, cfg, 4, 3);
  const LayerTrace t1 = forward_trace(p1, inst.adj, inst.g.features);
  const Tensor2 h0 = encode(inst.g.features, p1, false, nullptr);
  const Tensor2 h1 = graff_step(h0, h0, inst.adj, p1, cfg.tau);
  REQUIRE(t1.states.size() == 2);
  for (size_t i = 0; i < h1.data.size(); ++i) {
    CHECK(t1.states[1].data[i] == doctest::Approx(h1.data[i]).epsilon(1e-14));
  }
}

TEST_CASE("permutation equivariance of the message-passing forwards") {
  const int n = 8;
  const Instance inst = random_instance(n, 4, 0.5, 13);
  Rng rng(4);
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);

  std::vector<std::pair<int, int>> ppairs;
  for (const Edge& e : inst.g.edges) ppairs.emplace_back(perm[e.u], perm[e.v]);
  Tensor2 px(n, inst.g.feature_dim());
  std::vector<int> plabels(n);
  for (int i = 0; i < n; ++i) {
    plabels[perm[i]] = inst.g.labels[i];
    for (int j = 0; j < inst.g.feature_dim(); ++j) px.at(perm[i], j) = inst.g.features.at(i, j);
  }
  const Graph pg = build_graph(ppairs, std::move(px), std::move(plabels));
  const NormalizedAdjacency padj = normalized_adjacency(pg);

  for (ModelKind kind : {ModelKind::kGraff, ModelKind::kGcn}) {
    GraffConfig cfg = small_config(kind, Readout::kGradient);
    const ModelParams p = init_model(kind, cfg, inst.g.feature_dim(), 17);
    const LayerTrace base = forward_trace(p, inst.adj, inst.g.features);
    const LayerTrace permuted = forward_trace(p, padj, pg.features);
    const Tensor2& z = base.states.back();
    const Tensor2& pz = permuted.states.back();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < z.cols; ++j) {
        CHECK(pz.at(perm[i], j) == doctest::Approx(z.at(i, j)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("hadamard readout") {
  const std::vector<double> zi{1.0, 2.0};
  const std::vector<double> zj{3.0, -1.0};
  const auto r = readout_hadamard(zi, zj);
  CHECK(r == std::vector<double>{3.0, -2.0});
  const auto swapped = readout_hadamard(zj, zi);
  CHECK(r == swapped);
  const auto zero = readout_hadamard(zi, std::vector<double>{0.0, 0.0});
  CHECK(zero == std::vector<double>{0.0, 0.0});
}

TEST_CASE("gradient readout: squared edge gradient identity") {
  const Instance inst = random_instance(9, 4, 0.4, 19);
  Rng rng(6);
  Tensor2 h(9, 5);
  for (double& v : h.data) v = rng.normal();

  for (const Edge& e : inst.g.edges) {
    const auto r = readout_gradient(h, inst.adj, e.u, e.v);
    const auto r_swapped = readout_gradient(h, inst.adj, e.v, e.u);
    double sum = 0.0;
    for (size_t d = 0; d < r.size(); ++d) {
      CHECK(r[d] >= 0.0);
      CHECK(r[d] == r_swapped[d]);
      sum += r[d];
    }
    const auto grad = edge_gradient(h, inst.adj, e.u, e.v);
    double norm = 0.0;
    for (double v : grad) norm += v * v;
    CHECK(sum == doctest::Approx(norm).epsilon(1e-12));
  }

  // identical rows at equal degrees read out to zero
  const NormalizedAdjacency pair = normalized_adjacency(2, {Edge{0, 1}});
  Tensor2 same(2, 3, 0.4);
  for (double v : readout_gradient(same, pair, 0, 1)) CHECK(v == 0.0);
}

TEST_CASE("decode: depth zero is a single linear map") {
  GraffConfig cfg = small_config(ModelKind::kMlp, Readout::kHadamard);
  cfg.decoder_layers = 0;
  cfg.hidden_dim = 4;
  ModelParams p = init_model(ModelKind::kMlp, cfg, 4, 21);
  REQUIRE(p.dec_w.size() == 1);
  const std::vector<double> z{1.0, -0.5, 2.0, 0.25};
  double expect = p.dec_b[0][0];
  for (int i = 0; i < 4; ++i) expect += z[i] * p.dec_w[0].at(i, 0);
  CHECK(decode(z, p) == doctest::Approx(expect).epsilon(1e-14));

  // zero input and zero biases give probability one half
  p.dec_w[0].fill(0.0);
  p.dec_b[0][0] = 0.0;
  CHECK(decode(z, p) == 0.0);
  CHECK(sigmoid(decode(z, p)) == 0.5);
}

TEST_CASE("predict_edges is deterministic and in (0,1)") {
  const Instance inst = random_instance(10, 4, 0.4, 23);
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kGradient);
  const ModelParams p = init_model(ModelKind::kGraff, cfg, 4, 29);
  const auto a = predict_edges(p, inst.adj, inst.g.features, inst.query);
  const auto b = predict_edges(p, inst.adj, inst.g.features, inst.query);
  CHECK(a == b);
  for (double v : a) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(a.size() == inst.query.size());
}

TEST_CASE("predict_edges matches manual composition on a 4-node toy") {
  const Instance inst = random_instance(4, 3, 0.9, 31);
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kHadamard);
  cfg.layers = 2;
  const ModelParams p = init_model(ModelKind::kGraff, cfg, 3, 37);

  const Tensor2 h0 = encode(inst.g.features, p, false, nullptr);
  Tensor2 h = h0;
  for (int t = 0; t < cfg.layers; ++t) h = graff_step(h, h0, inst.adj, p, cfg.tau);

  const EdgeList query{make_edge(0, 1), make_edge(2, 3)};
  const auto probs = predict_edges(p, inst.adj, inst.g.features, query);
  for (size_t e = 0; e < query.size(); ++e) {
    std::vector<double> zi(h.row(query[e].u), h.row(query[e].u) + h.cols);
    std::vector<double> zj(h.row(query[e].v), h.row(query[e].v) + h.cols);
    const auto r = readout_hadamard(zi, zj);
    CHECK(probs[e] == doctest::Approx(sigmoid(decode(r, p))).epsilon(1e-12));
  }
}

TEST_CASE("gcn: depth zero degenerates to the encoder output") {
  const Instance inst = random_instance(6, 4, 0.5, 41);
  GraffConfig cfg = small_config(ModelKind::kGcn, Readout::kHadamard);
  cfg.layers = 0;
  const ModelParams p = init_model(ModelKind::kGcn, cfg, 4, 43);
  const LayerTrace trace = forward_trace(p, inst.adj, inst.g.features);
  REQUIRE(trace.states.size() == 1);
  const Tensor2 h0 = encode(inst.g.features, p, false, nullptr);
  for (size_t i = 0; i < h0.data.size(); ++i) CHECK(trace.states[0].data[i] == h0.data[i]);
}

TEST_CASE("gcn: 2-node sanity against a hand computation") {
  const NormalizedAdjacency adj = normalized_adjacency(2, {Edge{0, 1}});
  GraffConfig cfg = small_config(ModelKind::kGcn, Readout::kHadamard);
  cfg.layers = 1;
  cfg.hidden_dim = 2;
  cfg.encoder_dropout = 0.0;
  ModelParams p = init_model(ModelKind::kGcn, cfg, 2, 47);
  p.enc_w.fill(0.0);
  p.enc_w.at(0, 0) = 1.0;
  p.enc_w.at(1, 1) = 1.0;
  p.gcn_w[0].fill(0.0);
  p.gcn_w[0].at(0, 0) = 1.0;
  p.gcn_w[0].at(1, 1) = 1.0;
  std::fill(p.gcn_b[0].begin(), p.gcn_b[0].end(), 0.0);

  Tensor2 x(2, 2);
  x.at(0, 0) = 2.0;  // H^1 = relu(A H0), A all 1/2 -> every entry (2+0)/2 = 1... column 0 only
  const LayerTrace trace = forward_trace(p, adj, x);
  CHECK(trace.states[1].at(0, 0) == doctest::Approx(1.0));
  CHECK(trace.states[1].at(1, 0) == doctest::Approx(1.0));
  CHECK(trace.states[1].at(0, 1) == 0.0);
}

TEST_CASE("mlp ignores the edge set entirely") {
  const Instance inst = random_instance(8, 4, 0.4, 53);
  GraffConfig cfg = small_config(ModelKind::kMlp, Readout::kHadamard);
  const ModelParams p = init_model(ModelKind::kMlp, cfg, 4, 59);

  const NormalizedAdjacency dense = inst.adj;
  const NormalizedAdjacency empty = normalized_adjacency(8, {});
  const LayerTrace a = forward_trace(p, dense, inst.g.features);
  const LayerTrace b = forward_trace(p, empty, inst.g.features);
  REQUIRE(a.states.size() == 1);
  CHECK(a.states[0].data == b.states[0].data);
  CHECK(a.states[0].rows == 8);
  CHECK(a.states[0].cols == cfg.hidden_dim);

  // linear-stack oracle: eval output is exactly X * We + be
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < cfg.hidden_dim; ++j) {
      double expect = p.enc_b[j];
      for (int k = 0; k < inst.g.feature_dim(); ++k) {
        expect += inst.g.features.at(i, k) * p.enc_w.at(k, j);
      }
      CHECK(a.states[0].at(i, j) == doctest::Approx(expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("parameter counts: depth independence and width scaling") {
  auto count_for = [](ModelKind kind, int layers, int dh) {
    GraffConfig cfg = small_config(kind, Readout::kGradient);
    cfg.layers = layers;
    cfg.hidden_dim = dh;
    return param_count(init_model(kind, cfg, 7, 0));
  };
  const long graff_l3 = count_for(ModelKind::kGraff, 3, 8);
  for (int l : {1, 5, 7, 9, 12}) CHECK(count_for(ModelKind::kGraff, l, 8) == graff_l3);

  // gcn is exactly affine in depth
  const long g1 = count_for(ModelKind::kGcn, 1, 8);
  const long g2 = count_for(ModelKind::kGcn, 2, 8);
  const long slope = g2 - g1;
  for (int l : {3, 5, 9}) CHECK(count_for(ModelKind::kGcn, l, 8) == g1 + slope * (l - 1));

  // message-passing block scales about 4x when the width doubles
  GraffConfig narrow = small_config(ModelKind::kGraff, Readout::kGradient);
  GraffConfig wide = narrow;
  wide.hidden_dim = 2 * narrow.hidden_dim;
  auto mp_params = [](const GraffConfig& cfg) {
    ModelParams m = init_model(ModelKind::kGraff, cfg, 7, 0);
    return static_cast<double>(m.omega.size() + m.w.m.size() + m.w.q.size() + m.w.r.size() +
                               m.source_w.m.size());
  };
  const double ratio = mp_params(wide) / mp_params(narrow);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("weight sharing: one storage feeds every step") {
  const Instance inst = random_instance(6, 4, 0.5, 61);
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kHadamard);
  ModelParams p = init_model(ModelKind::kGraff, cfg, 4, 67);
  const LayerTrace before = forward_trace(p, inst.adj, inst.g.features);
  p.w.m.at(0, 1) += 0.5;  // single shared mutation
  const LayerTrace after = forward_trace(p, inst.adj, inst.g.features);
  // every message-passing state shifts, not just one layer
  for (size_t t = 1; t < before.states.size(); ++t) {
    double diff = 0.0;
    for (size_t i = 0; i < before.states[t].data.size(); ++i) {
      diff += std::abs(before.states[t].data[i] - after.states[t].data[i]);
    }
    CHECK(diff > 0.0);
  }
}

TEST_CASE("linear flow never increases the parametrized energy") {
  int failures = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const Instance inst = random_instance(10, 4, 0.3, 900 + seed);
    GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kGradient);
    cfg.hidden_dim = 4;
    cfg.source_term = false;
    ModelParams p = init_model(ModelKind::kGraff, cfg, 4, seed);
    Rng rng(seed + 7);
    for (double& v : p.omega) v = rng.normal();
    for (double& v : p.w.q) v = rng.normal();
    for (double& v : p.w.r) v = rng.normal();

    Tensor2 h(10, 4);
    for (double& v : h.data) v = rng.normal();

    Tensor2 omega_dense(4, 4);
    for (int i = 0; i < 4; ++i) omega_dense.at(i, i) = p.omega[i];
    const Tensor2 w_real = realize_symmetric_dd(p.w);

    const double before = parametrized_dirichlet_energy(h, omega_dense, w_real, inst.adj);
    const Tensor2 stepped = graff_step(h, h, inst.adj, p, 1e-4, Activation::kIdentity);
    const double after = parametrized_dirichlet_energy(stepped, omega_dense, w_real, inst.adj);
    if (after > before + 1e-12 * std::abs(before)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("gradient check: gradient-flow model, both readouts") {
  for (Readout readout : {Readout::kGradient, Readout::kHadamard}) {
    const double err =
        model_grad_check(ModelKind::kGraff, small_config(ModelKind::kGraff, readout),
                         /*train_mode=*/true, readout == Readout::kGradient ? 100 : 200);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("gradient check: plain-symmetric ablation and disabled source") {
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kGradient);
  cfg.w_param = WParametrization::kPlainSymmetric;
  cfg.source_term = false;
  CHECK(model_grad_check(ModelKind::kGraff, cfg, true, 300) < 1e-4);
}

TEST_CASE("gradient check: convolutional and feature-only baselines") {
  CHECK(model_grad_check(ModelKind::kGcn, small_config(ModelKind::kGcn, Readout::kGradient),
                         true, 400) < 1e-4);
  CHECK(model_grad_check(ModelKind::kMlp, small_config(ModelKind::kMlp, Readout::kHadamard),
                         true, 500) < 1e-4);
}

TEST_CASE("gradient check: batch-norm decoder in train mode") {
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kGradient);
  cfg.batch_norm = true;
  cfg.decoder_layers = 2;
  CHECK(model_grad_check(ModelKind::kGraff, cfg, true, 600) < 1e-4);
}

TEST_CASE("batch norm eval mode uses running averages") {
  GraffConfig cfg = small_config(ModelKind::kMlp, Readout::kHadamard);
  cfg.batch_norm = true;
  cfg.encoder_dropout = 0.0;
  cfg.decoder_dropout = 0.0;
  const Instance inst = random_instance(8, 4, 0.5, 71);
  ModelParams p = init_model(ModelKind::kMlp, cfg, 4, 73);

  const auto before = predict_edges(p, inst.adj, inst.g.features, inst.query);
  // a train-mode pass moves the running statistics, changing eval outputs
  ModelParams grads = zeros_like(p);
  Rng rng(3);
  loss_and_gradients(p, inst.adj, inst.g.features, inst.query, inst.labels, true, &rng, grads);
  const auto after = predict_edges(p, inst.adj, inst.g.features, inst.query);
  double diff = 0.0;
  for (size_t i = 0; i < before.size(); ++i) diff += std::abs(before[i] - after[i]);
  CHECK(diff > 0.0);
}

TEST_CASE("checkpoint round-trip preserves every tensor and the config") {
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kGradient);
  cfg.batch_norm = true;
  ModelParams p = init_model(ModelKind::kGraff, cfg, 5, 79);
  p.dec_bn[0].running_mean[0] = 0.37;  // buffer content must survive too

  const std::string path =
      (std::filesystem::temp_directory_path() / "grafflp_ckpt.txt").string();
  save_checkpoint(path, p);
  ModelParams back = load_checkpoint(path);
  CHECK(back.kind == p.kind);
  CHECK(back.cfg.readout == p.cfg.readout);
  CHECK(back.cfg.layers == p.cfg.layers);
  CHECK(back.cfg.batch_norm == p.cfg.batch_norm);
  CHECK(back.input_dim == p.input_dim);

  auto a = state_views(p);
  auto b = state_views(back);
  REQUIRE(a.size() == b.size());
  for (size_t t = 0; t < a.size(); ++t) {
    REQUIRE(a[t].size == b[t].size);
    for (size_t i = 0; i < a[t].size; ++i) CHECK(a[t].data[i] == b[t].data[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("config validation rejects bad shapes") {
  GraffConfig cfg = small_config(ModelKind::kGraff, Readout::kGradient);
  cfg.layers = 0;
  CHECK_THROWS_AS(validate_config(cfg, ModelKind::kGraff), std::invalid_argument);
  cfg.layers = 3;
  cfg.tau = 0.0;
  CHECK_THROWS_AS(validate_config(cfg, ModelKind::kGraff), std::invalid_argument);
  cfg.tau = 0.25;
  cfg.hidden_dim = 0;
  CHECK_THROWS_AS(validate_config(cfg, ModelKind::kGraff), std::invalid_argument);
}
