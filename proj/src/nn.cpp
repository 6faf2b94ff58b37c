#include "grafflp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace grafflp {

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions disagree");
  Tensor2 out(a.rows, b.cols);
  parallel_rows(a.rows, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      const double* arow = a.row(i);
      double* orow = out.row(i);
      for (int k = 0; k < a.cols; ++k) {
        const double aik = arow[k];
        if (aik == 0.0) continue;
        const double* brow = b.row(k);
        for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
      }
    }
  });
  return out;
}

Tensor2 matmul_at(const Tensor2& a, const Tensor2& b) {
  if (a.rows != b.rows) throw std::invalid_argument("matmul_at: row counts disagree");
  Tensor2 out(a.cols, b.cols);
  // out[k][j] = sum_i a[i][k] * b[i][j]. Workers own disjoint k blocks; each
  // runs the full i loop so every output row accumulates sequentially.
  parallel_rows(a.cols, [&](int lo, int hi) {
    for (int i = 0; i < a.rows; ++i) {
      const double* arow = a.row(i);
      const double* brow = b.row(i);
      for (int k = lo; k < hi; ++k) {
        const double aik = arow[k];
        if (aik == 0.0) continue;
        double* orow = out.row(k);
        for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
      }
    }
  });
  return out;
}

Tensor2 matmul_bt(const Tensor2& a, const Tensor2& b) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_bt: column counts disagree");
  Tensor2 out(a.rows, b.rows);
  parallel_rows(a.rows, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      const double* arow = a.row(i);
      double* orow = out.row(i);
      for (int j = 0; j < b.rows; ++j) {
        const double* brow = b.row(j);
        double acc = 0.0;
        for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
        orow[j] = acc;
      }
    }
  });
  return out;
}

Tensor2 spmm(const NormalizedAdjacency& adj, const Tensor2& h) {
  if (adj.n != h.rows) throw std::invalid_argument("spmm: adjacency size != h rows");
  Tensor2 out(adj.n, h.cols);
  parallel_rows(adj.n, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      double* orow = out.row(i);
      for (int k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
        const double a = adj.val[k];
        const double* hrow = h.row(adj.col[k]);
        for (int j = 0; j < h.cols; ++j) orow[j] += a * hrow[j];
      }
    }
  });
  return out;
}

void add_inplace(Tensor2& a, const Tensor2& b, double scale) {
  if (!a.same_shape(b)) throw std::invalid_argument("add_inplace: shape mismatch");
  for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += scale * b.data[i];
}

Tensor2 linear(const Tensor2& x, const Tensor2& w, std::span<const double> bias) {
  Tensor2 out = matmul(x, w);
  if (!bias.empty()) {
    if (static_cast<int>(bias.size()) != w.cols) {
      throw std::invalid_argument("linear: bias length != output width");
    }
    for (int i = 0; i < out.rows; ++i) {
      double* orow = out.row(i);
      for (int j = 0; j < out.cols; ++j) orow[j] += bias[j];
    }
  }
  return out;
}

void linear_backward(const Tensor2& x, const Tensor2& w, const Tensor2& d_out, Tensor2* dx,
                     Tensor2* dw, std::vector<double>* db) {
  if (dx) *dx = matmul_bt(d_out, w);
  if (dw) *dw = matmul_at(x, d_out);
  if (db) {
    db->assign(d_out.cols, 0.0);
    for (int i = 0; i < d_out.rows; ++i) {
      const double* row = d_out.row(i);
      for (int j = 0; j < d_out.cols; ++j) (*db)[j] += row[j];
    }
  }
}

Tensor2 relu(const Tensor2& x) {
  Tensor2 out = x;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor2 relu_with_mask(const Tensor2& x, std::vector<uint8_t>& mask) {
  Tensor2 out = x;
  mask.resize(x.data.size());
  for (size_t i = 0; i < x.data.size(); ++i) {
    const bool on = x.data[i] > 0.0;
    mask[i] = on ? 1 : 0;
    if (!on) out.data[i] = 0.0;
  }
  return out;
}

void relu_backward(const std::vector<uint8_t>& mask, Tensor2& d) {
  if (mask.size() != d.data.size()) throw std::invalid_argument("relu_backward: mask mismatch");
  for (size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) d.data[i] = 0.0;
  }
}

Tensor2 dropout(const Tensor2& x, double rate, bool train, Rng* rng,
                std::vector<uint8_t>* mask_out) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (!train || rate == 0.0) {
    if (mask_out) mask_out->assign(x.data.size(), 1);
    return x;
  }
  if (!rng) throw std::invalid_argument("dropout: rng required in train mode");
  const double keep = 1.0 - rate;
  Tensor2 out = x;
  if (mask_out) mask_out->resize(x.data.size());
  for (size_t i = 0; i < x.data.size(); ++i) {
    const bool kept = rng->uniform() < keep;
    if (mask_out) (*mask_out)[i] = kept ? 1 : 0;
    out.data[i] = kept ? x.data[i] / keep : 0.0;
  }
  return out;
}

void dropout_backward(const std::vector<uint8_t>& mask, double rate, Tensor2& d) {
  if (rate == 0.0) return;
  if (mask.size() != d.data.size()) throw std::invalid_argument("dropout_backward: mask mismatch");
  const double keep = 1.0 - rate;
  for (size_t i = 0; i < mask.size(); ++i) d.data[i] = mask[i] ? d.data[i] / keep : 0.0;
}

SymmetricDD make_symmetric_dd(int dim, WParametrization mode) {
  SymmetricDD p;
  p.mode = mode;
  p.m = Tensor2(dim, dim);
  if (mode == WParametrization::kDiagDominant) {
    p.q.assign(dim, 0.0);
    p.r.assign(dim, 0.0);
  }
  return p;
}

Tensor2 realize_symmetric_dd(const SymmetricDD& p) {
  const int d = p.m.rows;
  if (p.m.cols != d) throw std::invalid_argument("realize_symmetric_dd: m not square");
  Tensor2 w(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i != j) w.at(i, j) = (p.m.at(i, j) + p.m.at(j, i)) / 2.0;
    }
  }
  if (p.mode == WParametrization::kPlainSymmetric) {
    for (int i = 0; i < d; ++i) w.at(i, i) = p.m.at(i, i);
    return w;
  }
  for (int i = 0; i < d; ++i) {
    double row_abs = 0.0;
    for (int j = 0; j < d; ++j) {
      if (j != i) row_abs += std::abs(w.at(i, j));
    }
    w.at(i, i) = std::tanh(p.q[i]) * row_abs + p.r[i];
  }
  return w;
}

void realize_symmetric_dd_backward(const SymmetricDD& p, const Tensor2& realized,
                                   const Tensor2& d_realized, SymmetricDD& grad) {
  const int d = p.m.rows;
  if (p.mode == WParametrization::kPlainSymmetric) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        if (i == j) {
          grad.m.at(i, i) += d_realized.at(i, i);
        } else {
          grad.m.at(i, j) += (d_realized.at(i, j) + d_realized.at(j, i)) / 2.0;
        }
      }
    }
    return;
  }
  // Off-diagonal entries feed the loss directly and through the gated
  // diagonal of their own row.
  Tensor2 d_off(d, d);
  for (int i = 0; i < d; ++i) {
    double row_abs = 0.0;
    for (int j = 0; j < d; ++j) {
      if (j != i) row_abs += std::abs(realized.at(i, j));
    }
    const double t = std::tanh(p.q[i]);
    const double dii = d_realized.at(i, i);
    grad.q[i] += dii * (1.0 - t * t) * row_abs;
    grad.r[i] += dii;
    for (int j = 0; j < d; ++j) {
      if (j == i) continue;
      const double wij = realized.at(i, j);
      const double sgn = wij > 0.0 ? 1.0 : (wij < 0.0 ? -1.0 : 0.0);
      d_off.at(i, j) = d_realized.at(i, j) + dii * t * sgn;
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i != j) grad.m.at(i, j) += (d_off.at(i, j) + d_off.at(j, i)) / 2.0;
    }
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

BceResult bce_with_logits(std::span<const double> logits, std::span<const double> labels) {
  if (logits.size() != labels.size()) {
    throw std::invalid_argument("bce_with_logits: size mismatch");
  }
  if (logits.empty()) throw std::invalid_argument("bce_with_logits: empty batch");
  BceResult res;
  res.d_logits.resize(logits.size());
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i];
    const double y = labels[i];
    total += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    res.d_logits[i] = (sigmoid(x) - y) * inv_n;
  }
  res.loss = total * inv_n;
  return res;
}

void AdamState::init(const std::vector<ParamView>& params) {
  m.clear();
  v.clear();
  step = 0;
  for (const ParamView& p : params) {
    m.emplace_back(p.size, 0.0);
    v.emplace_back(p.size, 0.0);
  }
}

void adam_step(const AdamConfig& cfg, const std::vector<ParamView>& params,
               const std::vector<ParamView>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state layouts disagree");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t t = 0; t < params.size(); ++t) {
    if (params[t].size != grads[t].size || params[t].size != state.m[t].size()) {
      throw std::invalid_argument("adam_step: tensor size mismatch at " + params[t].name);
    }
    double* p = params[t].data;
    const double* g = grads[t].data;
    double* m = state.m[t].data();
    double* v = state.v[t].data();
    for (size_t i = 0; i < params[t].size; ++i) {
      if (cfg.weight_decay != 0.0) p[i] -= cfg.lr * cfg.weight_decay * p[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

double grad_check(const std::function<double()>& loss_fn, const std::vector<ParamView>& params,
                  const std::vector<ParamView>& analytic, double h, int max_coords,
                  uint64_t subsample_seed) {
  if (params.size() != analytic.size()) {
    throw std::invalid_argument("grad_check: parameter/gradient layouts disagree");
  }
  Rng rng(subsample_seed);
  double worst = 0.0;
  for (size_t t = 0; t < params.size(); ++t) {
    std::vector<size_t> coords;
    if (max_coords < 0 || static_cast<size_t>(max_coords) >= params[t].size) {
      coords.resize(params[t].size);
      for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      for (int k = 0; k < max_coords; ++k) coords.push_back(rng.below(params[t].size));
    }
    for (size_t i : coords) {
      double* slot = params[t].data + i;
      const double saved = *slot;
      *slot = saved + h;
      const double up = loss_fn();
      *slot = saved - h;
      const double down = loss_fn();
      *slot = saved;
      const double fd = (up - down) / (2.0 * h);
      const double an = analytic[t].data[i];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-2});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

}  // namespace grafflp
