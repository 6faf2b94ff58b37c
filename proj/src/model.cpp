#include "grafflp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace grafflp {

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kGraff: return "graff";
    case ModelKind::kGcn: return "gcn";
    case ModelKind::kMlp: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "graff") return ModelKind::kGraff;
  if (s == "gcn") return ModelKind::kGcn;
  if (s == "mlp") return ModelKind::kMlp;
  throw std::invalid_argument("unknown model kind: " + s);
}

const char* readout_name(Readout r) {
  return r == Readout::kHadamard ? "hadamard" : "gradient";
}

Readout parse_readout(const std::string& s) {
  if (s == "hadamard") return Readout::kHadamard;
  if (s == "gradient") return Readout::kGradient;
  throw std::invalid_argument("unknown readout: " + s);
}

void validate_config(const GraffConfig& cfg, ModelKind kind) {
  const int min_layers = kind == ModelKind::kGraff ? 1 : 0;
  if (cfg.layers < min_layers) throw std::invalid_argument("config: layer count too small");
  if (cfg.tau <= 0.0) throw std::invalid_argument("config: tau must be positive");
  if (cfg.hidden_dim < 1 || cfg.decoder_dim < 1) {
    throw std::invalid_argument("config: widths must be >= 1");
  }
  if (cfg.decoder_layers < 0) throw std::invalid_argument("config: negative decoder depth");
  for (double rate : {cfg.encoder_dropout, cfg.decoder_dropout}) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("config: dropout outside [0, 1)");
  }
}

namespace {

Tensor2 glorot(int fan_in, int fan_out, Rng& rng) {
  Tensor2 t(fan_in, fan_out);
  const double a = std::sqrt(6.0 / double(fan_in + fan_out));
  for (double& v : t.data) v = rng.uniform(-a, a);
  return t;
}

BatchNormLayer make_bn(int dim) {
  BatchNormLayer bn;
  bn.gamma.assign(dim, 1.0);
  bn.beta.assign(dim, 0.0);
  bn.running_mean.assign(dim, 0.0);
  bn.running_var.assign(dim, 1.0);
  return bn;
}

}  // namespace

ModelParams init_model(ModelKind kind, const GraffConfig& cfg, int input_dim, uint64_t seed) {
  validate_config(cfg, kind);
  if (input_dim < 1) throw std::invalid_argument("init_model: input_dim < 1");
  Rng rng(seed);
  ModelParams p;
  p.kind = kind;
  p.cfg = cfg;
  p.input_dim = input_dim;

  const int dh = cfg.hidden_dim;
  p.enc_w = glorot(input_dim, dh, rng);
  p.enc_b.assign(dh, 0.0);

  if (kind == ModelKind::kGraff) {
    p.omega.assign(dh, 0.0);
    p.w = make_symmetric_dd(dh, cfg.w_param);
    p.w.m = glorot(dh, dh, rng);
    if (cfg.source_term) {
      p.source_w = make_symmetric_dd(dh, WParametrization::kPlainSymmetric);
      p.source_w.m = glorot(dh, dh, rng);
    }
  } else if (kind == ModelKind::kGcn) {
    for (int l = 0; l < cfg.layers; ++l) {
      p.gcn_w.push_back(glorot(dh, dh, rng));
      p.gcn_b.emplace_back(dh, 0.0);
    }
  }

  const int d_readout = dh;
  if (cfg.decoder_layers == 0) {
    p.dec_w.push_back(glorot(d_readout, 1, rng));
    p.dec_b.emplace_back(1, 0.0);
  } else {
    p.dec_w.push_back(glorot(d_readout, cfg.decoder_dim, rng));
    p.dec_b.emplace_back(cfg.decoder_dim, 0.0);
    for (int l = 1; l < cfg.decoder_layers; ++l) {
      p.dec_w.push_back(glorot(cfg.decoder_dim, cfg.decoder_dim, rng));
      p.dec_b.emplace_back(cfg.decoder_dim, 0.0);
    }
    p.dec_w.push_back(glorot(cfg.decoder_dim, 1, rng));
    p.dec_b.emplace_back(1, 0.0);
    if (cfg.batch_norm) {
      for (int l = 0; l < cfg.decoder_layers; ++l) p.dec_bn.push_back(make_bn(cfg.decoder_dim));
    }
  }
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  z.enc_w.fill(0.0);
  std::fill(z.enc_b.begin(), z.enc_b.end(), 0.0);
  std::fill(z.omega.begin(), z.omega.end(), 0.0);
  z.w.m.fill(0.0);
  std::fill(z.w.q.begin(), z.w.q.end(), 0.0);
  std::fill(z.w.r.begin(), z.w.r.end(), 0.0);
  z.source_w.m.fill(0.0);
  for (auto& t : z.gcn_w) t.fill(0.0);
  for (auto& b : z.gcn_b) std::fill(b.begin(), b.end(), 0.0);
  for (auto& t : z.dec_w) t.fill(0.0);
  for (auto& b : z.dec_b) std::fill(b.begin(), b.end(), 0.0);
  for (auto& bn : z.dec_bn) {
    std::fill(bn.gamma.begin(), bn.gamma.end(), 0.0);
    std::fill(bn.beta.begin(), bn.beta.end(), 0.0);
  }
  return z;
}

std::vector<ParamView> trainable_views(ModelParams& p) {
  std::vector<ParamView> views;
  auto add_mat = [&](const std::string& name, Tensor2& t) {
    if (!t.empty()) views.push_back({name, t.data.data(), t.data.size()});
  };
  auto add_vec = [&](const std::string& name, std::vector<double>& v) {
    if (!v.empty()) views.push_back({name, v.data(), v.size()});
  };
  add_mat("enc_w", p.enc_w);
  add_vec("enc_b", p.enc_b);
  add_vec("omega", p.omega);
  add_mat("w.m", p.w.m);
  add_vec("w.q", p.w.q);
  add_vec("w.r", p.w.r);
  add_mat("source.m", p.source_w.m);
  for (size_t l = 0; l < p.gcn_w.size(); ++l) {
    add_mat("gcn_w" + std::to_string(l), p.gcn_w[l]);
    add_vec("gcn_b" + std::to_string(l), p.gcn_b[l]);
  }
  for (size_t l = 0; l < p.dec_w.size(); ++l) {
    add_mat("dec_w" + std::to_string(l), p.dec_w[l]);
    add_vec("dec_b" + std::to_string(l), p.dec_b[l]);
  }
  for (size_t l = 0; l < p.dec_bn.size(); ++l) {
    add_vec("bn" + std::to_string(l) + ".gamma", p.dec_bn[l].gamma);
    add_vec("bn" + std::to_string(l) + ".beta", p.dec_bn[l].beta);
  }
  return views;
}

std::vector<ParamView> state_views(ModelParams& p) {
  std::vector<ParamView> views = trainable_views(p);
  for (size_t l = 0; l < p.dec_bn.size(); ++l) {
    views.push_back({"bn" + std::to_string(l) + ".running_mean",
                     p.dec_bn[l].running_mean.data(), p.dec_bn[l].running_mean.size()});
    views.push_back({"bn" + std::to_string(l) + ".running_var", p.dec_bn[l].running_var.data(),
                     p.dec_bn[l].running_var.size()});
  }
  return views;
}

namespace {

struct NamedTensor {
  std::string name;
  double* data;
  int rows;
  int cols;
};

/// Checkpoint payload with 2-D shapes; vectors are 1 x n rows.
std::vector<NamedTensor> checkpoint_tensors(ModelParams& p) {
  std::vector<NamedTensor> out;
  auto add_mat = [&](const std::string& name, Tensor2& t) {
    if (!t.empty()) out.push_back({name, t.data.data(), t.rows, t.cols});
  };
  auto add_vec = [&](const std::string& name, std::vector<double>& v) {
    if (!v.empty()) out.push_back({name, v.data(), 1, static_cast<int>(v.size())});
  };
  add_mat("enc_w", p.enc_w);
  add_vec("enc_b", p.enc_b);
  add_vec("omega", p.omega);
  add_mat("w.m", p.w.m);
  add_vec("w.q", p.w.q);
  add_vec("w.r", p.w.r);
  add_mat("source.m", p.source_w.m);
  for (size_t l = 0; l < p.gcn_w.size(); ++l) {
    add_mat("gcn_w" + std::to_string(l), p.gcn_w[l]);
    add_vec("gcn_b" + std::to_string(l), p.gcn_b[l]);
  }
  for (size_t l = 0; l < p.dec_w.size(); ++l) {
    add_mat("dec_w" + std::to_string(l), p.dec_w[l]);
    add_vec("dec_b" + std::to_string(l), p.dec_b[l]);
  }
  for (size_t l = 0; l < p.dec_bn.size(); ++l) {
    const std::string base = "bn" + std::to_string(l);
    add_vec(base + ".gamma", p.dec_bn[l].gamma);
    add_vec(base + ".beta", p.dec_bn[l].beta);
    add_vec(base + ".running_mean", p.dec_bn[l].running_mean);
    add_vec(base + ".running_var", p.dec_bn[l].running_var);
  }
  return out;
}

}  // namespace

long param_count(const ModelParams& p) {
  long total = 0;
  auto views = trainable_views(const_cast<ModelParams&>(p));
  for (const ParamView& v : views) total += static_cast<long>(v.size);
  return total;
}

Tensor2 encode(const Tensor2& x, const ModelParams& p, bool train_mode, Rng* rng) {
  Tensor2 lin = linear(x, p.enc_w, p.enc_b);
  return dropout(lin, p.cfg.encoder_dropout, train_mode, rng);
}

namespace {

/// -H Omega contribution, columns scaled by the diagonal.
void subtract_col_scaled(Tensor2& target, const Tensor2& h, const std::vector<double>& omega) {
  for (int i = 0; i < h.rows; ++i) {
    const double* hrow = h.row(i);
    double* trow = target.row(i);
    for (int j = 0; j < h.cols; ++j) trow[j] -= hrow[j] * omega[j];
  }
}

Tensor2 graff_preactivation(const Tensor2& h, const NormalizedAdjacency& adj,
                            const std::vector<double>& omega, const Tensor2& w_real,
                            const Tensor2* source_times_h0) {
  Tensor2 p = spmm(adj, matmul(h, w_real));
  subtract_col_scaled(p, h, omega);
  if (source_times_h0) add_inplace(p, *source_times_h0, -1.0);
  return p;
}

Tensor2 apply_activation(Tensor2 pre, Activation act, std::vector<uint8_t>* mask) {
  if (act == Activation::kIdentity) {
    if (mask) mask->assign(pre.data.size(), 1);
    return pre;
  }
  if (mask) return relu_with_mask(pre, *mask);
  return relu(pre);
}

}  // namespace

Tensor2 graff_step(const Tensor2& h, const Tensor2& h0, const NormalizedAdjacency& adj,
                   const ModelParams& p, double tau, Activation act) {
  const Tensor2 w_real = realize_symmetric_dd(p.w);
  Tensor2 src_h0;
  const Tensor2* src_ptr = nullptr;
  if (p.cfg.source_term && !p.source_w.m.empty()) {
    src_h0 = matmul(h0, realize_symmetric_dd(p.source_w));
    src_ptr = &src_h0;
  }
  Tensor2 pre = graff_preactivation(h, adj, p.omega, w_real, src_ptr);
  Tensor2 a = apply_activation(std::move(pre), act, nullptr);
  Tensor2 out = h;
  add_inplace(out, a, tau);
  return out;
}

LayerTrace forward_trace(const ModelParams& p, const NormalizedAdjacency& adj, const Tensor2& x,
                         bool train_mode, Rng* rng) {
  LayerTrace trace;
  Tensor2 h0 = encode(x, p, train_mode, rng);
  trace.states.push_back(std::move(h0));
  if (p.kind == ModelKind::kMlp) return trace;

  if (p.kind == ModelKind::kGraff) {
    const Tensor2 w_real = realize_symmetric_dd(p.w);
    Tensor2 src_h0;
    const Tensor2* src_ptr = nullptr;
    if (p.cfg.source_term && !p.source_w.m.empty()) {
      src_h0 = matmul(trace.states[0], realize_symmetric_dd(p.source_w));
      src_ptr = &src_h0;
    }
    for (int t = 0; t < p.cfg.layers; ++t) {
      Tensor2 pre = graff_preactivation(trace.states.back(), adj, p.omega, w_real, src_ptr);
      Tensor2 a = apply_activation(std::move(pre), Activation::kRelu, nullptr);
      Tensor2 next = trace.states.back();
      add_inplace(next, a, p.cfg.tau);
      trace.states.push_back(std::move(next));
    }
    return trace;
  }

  // Convolutional baseline: per-layer unshared weights, no residual.
  for (int l = 0; l < p.cfg.layers; ++l) {
    Tensor2 pre = spmm(adj, matmul(trace.states.back(), p.gcn_w[l]));
    const std::vector<double>& b = p.gcn_b[l];
    for (int i = 0; i < pre.rows; ++i) {
      double* row = pre.row(i);
      for (int j = 0; j < pre.cols; ++j) row[j] += b[j];
    }
    trace.states.push_back(relu(pre));
  }
  return trace;
}

std::vector<double> readout_hadamard(std::span<const double> zi, std::span<const double> zj) {
  if (zi.size() != zj.size()) throw std::invalid_argument("readout_hadamard: size mismatch");
  std::vector<double> out(zi.size());
  for (size_t d = 0; d < zi.size(); ++d) out[d] = zi[d] * zj[d];
  return out;
}

std::vector<double> readout_gradient(const Tensor2& h_final, const NormalizedAdjacency& adj, int i,
                                     int j) {
  std::vector<double> g = edge_gradient(h_final, adj, i, j);
  for (double& v : g) v = v * v;
  return g;
}

Tensor2 readout_batch(const Tensor2& z, const NormalizedAdjacency& adj, const EdgeList& edges,
                      Readout kind) {
  Tensor2 out(static_cast<int>(edges.size()), z.cols);
  for (size_t e = 0; e < edges.size(); ++e) {
    const int i = edges[e].u;
    const int j = edges[e].v;
    const double* zi = z.row(i);
    const double* zj = z.row(j);
    double* row = out.row(static_cast<int>(e));
    if (kind == Readout::kHadamard) {
      for (int d = 0; d < z.cols; ++d) row[d] = zi[d] * zj[d];
    } else {
      const double si = adj.scale[i];
      const double sj = adj.scale[j];
      for (int d = 0; d < z.cols; ++d) {
        const double g = sj * zj[d] - si * zi[d];
        row[d] = g * g;
      }
    }
  }
  return out;
}

namespace {

void readout_backward(const Tensor2& z, const NormalizedAdjacency& adj, const EdgeList& edges,
                      Readout kind, const Tensor2& d_r, Tensor2& dz) {
  for (size_t e = 0; e < edges.size(); ++e) {
    const int i = edges[e].u;
    const int j = edges[e].v;
    const double* zi = z.row(i);
    const double* zj = z.row(j);
    const double* dr = d_r.row(static_cast<int>(e));
    double* dzi = dz.row(i);
    double* dzj = dz.row(j);
    if (kind == Readout::kHadamard) {
      for (int d = 0; d < z.cols; ++d) {
        dzi[d] += zj[d] * dr[d];
        dzj[d] += zi[d] * dr[d];
      }
    } else {
      const double si = adj.scale[i];
      const double sj = adj.scale[j];
      for (int d = 0; d < z.cols; ++d) {
        const double g = sj * zj[d] - si * zi[d];
        const double dg = 2.0 * g * dr[d];
        dzj[d] += sj * dg;
        dzi[d] -= si * dg;
      }
    }
  }
}

struct BnCache {
  std::vector<double> inv_std;
  Tensor2 xhat;
};

Tensor2 bn_forward(BatchNormLayer& bn, const Tensor2& u, bool train_mode, BnCache* cache) {
  const int rows = u.rows;
  const int dim = u.cols;
  Tensor2 out(rows, dim);
  if (!train_mode) {
    for (int j = 0; j < dim; ++j) {
      const double inv = 1.0 / std::sqrt(bn.running_var[j] + bn.eps);
      for (int i = 0; i < rows; ++i) {
        out.at(i, j) = bn.gamma[j] * (u.at(i, j) - bn.running_mean[j]) * inv + bn.beta[j];
      }
    }
    return out;
  }
  if (rows < 1) throw std::invalid_argument("batch norm: empty batch");
  if (cache) {
    cache->inv_std.assign(dim, 0.0);
    cache->xhat = Tensor2(rows, dim);
  }
  for (int j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (int i = 0; i < rows; ++i) mean += u.at(i, j);
    mean /= rows;
    double var = 0.0;
    for (int i = 0; i < rows; ++i) {
      const double c = u.at(i, j) - mean;
      var += c * c;
    }
    var /= rows;
    const double inv = 1.0 / std::sqrt(var + bn.eps);
    for (int i = 0; i < rows; ++i) {
      const double xh = (u.at(i, j) - mean) * inv;
      if (cache) cache->xhat.at(i, j) = xh;
      out.at(i, j) = bn.gamma[j] * xh + bn.beta[j];
    }
    if (cache) cache->inv_std[j] = inv;
    const double var_running = rows > 1 ? var * double(rows) / double(rows - 1) : var;
    bn.running_mean[j] = (1.0 - bn.momentum) * bn.running_mean[j] + bn.momentum * mean;
    bn.running_var[j] = (1.0 - bn.momentum) * bn.running_var[j] + bn.momentum * var_running;
  }
  return out;
}

Tensor2 bn_backward(const BatchNormLayer& bn, const BnCache& cache, const Tensor2& d_out,
                    std::vector<double>& d_gamma, std::vector<double>& d_beta) {
  const int rows = d_out.rows;
  const int dim = d_out.cols;
  Tensor2 du(rows, dim);
  for (int j = 0; j < dim; ++j) {
    double sum_d = 0.0;
    double sum_dx = 0.0;
    for (int i = 0; i < rows; ++i) {
      const double dxh = d_out.at(i, j) * bn.gamma[j];
      sum_d += dxh;
      sum_dx += dxh * cache.xhat.at(i, j);
      d_gamma[j] += d_out.at(i, j) * cache.xhat.at(i, j);
      d_beta[j] += d_out.at(i, j);
    }
    const double inv = cache.inv_std[j];
    for (int i = 0; i < rows; ++i) {
      const double dxh = d_out.at(i, j) * bn.gamma[j];
      du.at(i, j) = inv * (dxh - sum_d / rows - cache.xhat.at(i, j) * sum_dx / rows);
    }
  }
  return du;
}

struct DecoderTape {
  std::vector<Tensor2> inputs;  // input to each linear layer
  std::vector<BnCache> bn;
  std::vector<std::vector<uint8_t>> relu_masks;
  std::vector<std::vector<uint8_t>> drop_masks;
};

std::vector<double> decoder_forward(ModelParams& p, const Tensor2& r, bool train_mode, Rng* rng,
                                    DecoderTape* tape) {
  const int hidden = p.cfg.decoder_layers;
  Tensor2 a = r;
  for (int l = 0; l < hidden; ++l) {
    if (tape) tape->inputs.push_back(a);
    Tensor2 u = linear(a, p.dec_w[l], p.dec_b[l]);
    if (p.cfg.batch_norm) {
      BnCache cache;
      u = bn_forward(p.dec_bn[l], u, train_mode, tape ? &cache : nullptr);
      if (tape) tape->bn.push_back(std::move(cache));
    }
    std::vector<uint8_t> mask;
    a = relu_with_mask(u, mask);
    if (tape) tape->relu_masks.push_back(std::move(mask));
    std::vector<uint8_t> dmask;
    a = dropout(a, p.cfg.decoder_dropout, train_mode, rng, tape ? &dmask : nullptr);
    if (tape) tape->drop_masks.push_back(std::move(dmask));
  }
  if (tape) tape->inputs.push_back(a);
  Tensor2 logits = linear(a, p.dec_w[hidden], p.dec_b[hidden]);
  return std::vector<double>(logits.data.begin(), logits.data.end());
}

/// Returns the gradient w.r.t. the readout rows; accumulates decoder grads.
Tensor2 decoder_backward(const ModelParams& p, const DecoderTape& tape,
                         std::span<const double> d_logits, ModelParams& grads) {
  const int hidden = p.cfg.decoder_layers;
  Tensor2 d(static_cast<int>(d_logits.size()), 1);
  std::copy(d_logits.begin(), d_logits.end(), d.data.begin());

  Tensor2 d_prev;
  Tensor2 dw;
  std::vector<double> db;
  linear_backward(tape.inputs[hidden], p.dec_w[hidden], d, &d_prev, &dw, &db);
  add_inplace(grads.dec_w[hidden], dw);
  for (size_t i = 0; i < db.size(); ++i) grads.dec_b[hidden][i] += db[i];

  for (int l = hidden - 1; l >= 0; --l) {
    dropout_backward(tape.drop_masks[l], p.cfg.decoder_dropout, d_prev);
    relu_backward(tape.relu_masks[l], d_prev);
    if (p.cfg.batch_norm) {
      d_prev = bn_backward(p.dec_bn[l], tape.bn[l], d_prev, grads.dec_bn[l].gamma,
                           grads.dec_bn[l].beta);
    }
    Tensor2 d_in;
    linear_backward(tape.inputs[l], p.dec_w[l], d_prev, &d_in, &dw, &db);
    add_inplace(grads.dec_w[l], dw);
    for (size_t i = 0; i < db.size(); ++i) grads.dec_b[l][i] += db[i];
    d_prev = std::move(d_in);
  }
  return d_prev;
}

void zero_params(ModelParams& p) {
  for (ParamView& v : trainable_views(p)) std::fill(v.data, v.data + v.size, 0.0);
}

}  // namespace

double decode(std::span<const double> z_edge, const ModelParams& p) {
  Tensor2 r(1, static_cast<int>(z_edge.size()));
  std::copy(z_edge.begin(), z_edge.end(), r.data.begin());
  auto logits =
      decoder_forward(const_cast<ModelParams&>(p), r, /*train_mode=*/false, nullptr, nullptr);
  return logits[0];
}

std::vector<double> predict_edges(const ModelParams& p, const NormalizedAdjacency& adj,
                                  const Tensor2& x, const EdgeList& edges) {
  const LayerTrace trace = forward_trace(p, adj, x);
  const Tensor2 r = readout_batch(trace.states.back(), adj, edges, p.cfg.readout);
  auto logits = decoder_forward(const_cast<ModelParams&>(p), r, false, nullptr, nullptr);
  for (double& v : logits) v = sigmoid(v);
  return logits;
}

double loss_and_gradients(ModelParams& p, const NormalizedAdjacency& adj, const Tensor2& x,
                          const EdgeList& edges, std::span<const double> labels, bool train_mode,
                          Rng* rng, ModelParams& grads) {
  zero_params(grads);

  // --- forward ---
  Tensor2 x_lin = linear(x, p.enc_w, p.enc_b);
  std::vector<uint8_t> enc_mask;
  Tensor2 h0 = dropout(x_lin, p.cfg.encoder_dropout, train_mode, rng, &enc_mask);

  std::vector<Tensor2> states;
  states.push_back(std::move(h0));
  std::vector<std::vector<uint8_t>> step_masks;

  Tensor2 w_real;
  Tensor2 src_real;
  Tensor2 src_h0;
  const bool use_source =
      p.kind == ModelKind::kGraff && p.cfg.source_term && !p.source_w.m.empty();
  if (p.kind == ModelKind::kGraff) {
    w_real = realize_symmetric_dd(p.w);
    if (use_source) {
      src_real = realize_symmetric_dd(p.source_w);
      src_h0 = matmul(states[0], src_real);
    }
    for (int t = 0; t < p.cfg.layers; ++t) {
      Tensor2 pre = graff_preactivation(states.back(), adj, p.omega, w_real,
                                        use_source ? &src_h0 : nullptr);
      std::vector<uint8_t> mask;
      Tensor2 a = relu_with_mask(pre, mask);
      step_masks.push_back(std::move(mask));
      Tensor2 next = states.back();
      add_inplace(next, a, p.cfg.tau);
      states.push_back(std::move(next));
    }
  } else if (p.kind == ModelKind::kGcn) {
    for (int l = 0; l < p.cfg.layers; ++l) {
      Tensor2 pre = spmm(adj, matmul(states.back(), p.gcn_w[l]));
      const std::vector<double>& b = p.gcn_b[l];
      for (int i = 0; i < pre.rows; ++i) {
        double* row = pre.row(i);
        for (int j = 0; j < pre.cols; ++j) row[j] += b[j];
      }
      std::vector<uint8_t> mask;
      states.push_back(relu_with_mask(pre, mask));
      step_masks.push_back(std::move(mask));
    }
  }

  const Tensor2& z = states.back();
  const Tensor2 r = readout_batch(z, adj, edges, p.cfg.readout);
  DecoderTape tape;
  const std::vector<double> logits = decoder_forward(p, r, train_mode, rng, &tape);
  const BceResult bce = bce_with_logits(logits, labels);

  // --- backward ---
  const Tensor2 d_r = decoder_backward(p, tape, bce.d_logits, grads);

  Tensor2 dz(z.rows, z.cols);
  readout_backward(z, adj, edges, p.cfg.readout, d_r, dz);

  Tensor2 dh0;
  if (p.kind == ModelKind::kMlp) {
    dh0 = std::move(dz);
  } else if (p.kind == ModelKind::kGraff) {
    Tensor2 g = std::move(dz);
    Tensor2 d_w_real(w_real.rows, w_real.cols);
    Tensor2 q_sum(g.rows, g.cols);
    for (int t = p.cfg.layers - 1; t >= 0; --t) {
      Tensor2 q = g;
      for (double& v : q.data) v *= p.cfg.tau;
      relu_backward(step_masks[t], q);
      add_inplace(q_sum, q);

      Tensor2 rr = spmm(adj, q);  // adjacency is symmetric
      add_inplace(d_w_real, matmul_at(states[t], rr));
      // dH^t = G (residual) + R W^T - Q diag(omega)
      add_inplace(g, matmul_bt(rr, w_real));
      for (int i = 0; i < g.rows; ++i) {
        const double* qrow = q.row(i);
        const double* hrow = states[t].row(i);
        double* grow = g.row(i);
        for (int j = 0; j < g.cols; ++j) {
          grow[j] -= qrow[j] * p.omega[j];
          grads.omega[j] -= hrow[j] * qrow[j];
        }
      }
    }
    if (use_source) {
      add_inplace(g, matmul_bt(q_sum, src_real), -1.0);
      Tensor2 d_src = matmul_at(states[0], q_sum);
      for (double& v : d_src.data) v = -v;
      realize_symmetric_dd_backward(p.source_w, src_real, d_src, grads.source_w);
    }
    realize_symmetric_dd_backward(p.w, w_real, d_w_real, grads.w);
    dh0 = std::move(g);
  } else {
    Tensor2 g = std::move(dz);
    for (int l = p.cfg.layers - 1; l >= 0; --l) {
      relu_backward(step_masks[l], g);
      for (int i = 0; i < g.rows; ++i) {
        const double* grow = g.row(i);
        for (int j = 0; j < g.cols; ++j) grads.gcn_b[l][j] += grow[j];
      }
      Tensor2 rr = spmm(adj, g);
      add_inplace(grads.gcn_w[l], matmul_at(states[l], rr));
      g = matmul_bt(rr, p.gcn_w[l]);
    }
    dh0 = std::move(g);
  }

  dropout_backward(enc_mask, p.cfg.encoder_dropout, dh0);
  Tensor2 d_enc_w;
  std::vector<double> d_enc_b;
  linear_backward(x, p.enc_w, dh0, nullptr, &d_enc_w, &d_enc_b);
  add_inplace(grads.enc_w, d_enc_w);
  for (size_t i = 0; i < d_enc_b.size(); ++i) grads.enc_b[i] += d_enc_b[i];

  return bce.loss;
}

// ---------------------------------------------------------------------------
// Checkpoint: versioned text header followed by named flat tensors.
// ---------------------------------------------------------------------------

namespace {
constexpr const char* kCheckpointMagic = "grafflp-checkpoint v1";
}

void save_checkpoint(const std::string& path, const ModelParams& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << kCheckpointMagic << "\n";
  out << "kind " << model_kind_name(p.kind) << "\n";
  out << "readout " << readout_name(p.cfg.readout) << "\n";
  out << "layers " << p.cfg.layers << "\n";
  char buf[40];
  auto put_real = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << key << " " << buf << "\n";
  };
  put_real("tau", p.cfg.tau);
  out << "hidden_dim " << p.cfg.hidden_dim << "\n";
  put_real("encoder_dropout", p.cfg.encoder_dropout);
  out << "decoder_layers " << p.cfg.decoder_layers << "\n";
  out << "decoder_dim " << p.cfg.decoder_dim << "\n";
  put_real("decoder_dropout", p.cfg.decoder_dropout);
  out << "batch_norm " << (p.cfg.batch_norm ? 1 : 0) << "\n";
  out << "source_term " << (p.cfg.source_term ? 1 : 0) << "\n";
  out << "w_param " << (p.cfg.w_param == WParametrization::kDiagDominant ? "dd" : "sym") << "\n";
  out << "input_dim " << p.input_dim << "\n";

  auto tensors = checkpoint_tensors(const_cast<ModelParams&>(p));
  for (const NamedTensor& t : tensors) {
    out << "tensor " << t.name << " " << t.rows << " " << t.cols << "\n";
    const size_t count = static_cast<size_t>(t.rows) * t.cols;
    for (size_t i = 0; i < count; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", t.data[i]);
      out << buf << ((i + 1) % t.cols == 0 ? "\n" : " ");
    }
  }
  out << "end\n";
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw std::runtime_error("checkpoint: bad or missing header in " + path);
  }
  GraffConfig cfg;
  ModelKind kind = ModelKind::kGraff;
  int input_dim = 0;
  std::string key;
  while (in >> key && key != "tensor" && key != "end") {
    if (key == "kind") {
      std::string v;
      in >> v;
      kind = parse_model_kind(v);
    } else if (key == "readout") {
      std::string v;
      in >> v;
      cfg.readout = parse_readout(v);
    } else if (key == "layers") {
      in >> cfg.layers;
    } else if (key == "tau") {
      in >> cfg.tau;
    } else if (key == "hidden_dim") {
      in >> cfg.hidden_dim;
    } else if (key == "encoder_dropout") {
      in >> cfg.encoder_dropout;
    } else if (key == "decoder_layers") {
      in >> cfg.decoder_layers;
    } else if (key == "decoder_dim") {
      in >> cfg.decoder_dim;
    } else if (key == "decoder_dropout") {
      in >> cfg.decoder_dropout;
    } else if (key == "batch_norm") {
      int v;
      in >> v;
      cfg.batch_norm = v != 0;
    } else if (key == "source_term") {
      int v;
      in >> v;
      cfg.source_term = v != 0;
    } else if (key == "w_param") {
      std::string v;
      in >> v;
      cfg.w_param = v == "sym" ? WParametrization::kPlainSymmetric
                               : WParametrization::kDiagDominant;
    } else if (key == "input_dim") {
      in >> input_dim;
    } else {
      throw std::runtime_error("checkpoint: unknown header key " + key);
    }
  }

  ModelParams p = init_model(kind, cfg, input_dim, 0);
  auto tensors = checkpoint_tensors(p);
  while (key == "tensor") {
    std::string name;
    int rows = 0, cols = 0;
    in >> name >> rows >> cols;
    auto it = std::find_if(tensors.begin(), tensors.end(),
                           [&](const NamedTensor& t) { return t.name == name; });
    if (it == tensors.end()) throw std::runtime_error("checkpoint: unknown tensor " + name);
    if (it->rows != rows || it->cols != cols) {
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    }
    const size_t count = static_cast<size_t>(rows) * cols;
    for (size_t i = 0; i < count; ++i) {
      if (!(in >> it->data[i])) throw std::runtime_error("checkpoint: truncated tensor " + name);
    }
    if (!(in >> key)) break;
  }
  if (key != "end") throw std::runtime_error("checkpoint: missing end marker");
  return p;
}

}  // namespace grafflp
