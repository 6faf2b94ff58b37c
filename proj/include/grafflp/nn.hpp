#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grafflp/graph.hpp"
#include "grafflp/rng.hpp"
#include "grafflp/tensor.hpp"

namespace grafflp {

// ---------------------------------------------------------------------------
// Dense and sparse kernels. All accumulate row-sequentially, so results are
// identical for any worker count.
// ---------------------------------------------------------------------------

Tensor2 matmul(const Tensor2& a, const Tensor2& b);         // a(m,k) * b(k,n)
Tensor2 matmul_at(const Tensor2& a, const Tensor2& b);      // a^T(k,m) * b(k,n)
Tensor2 matmul_bt(const Tensor2& a, const Tensor2& b);      // a(m,k) * b^T(n,k)
Tensor2 spmm(const NormalizedAdjacency& adj, const Tensor2& h);

void add_inplace(Tensor2& a, const Tensor2& b, double scale = 1.0);

/// x(n,din) * w(din,dout) + bias broadcast over rows. Empty bias means none.
Tensor2 linear(const Tensor2& x, const Tensor2& w, std::span<const double> bias);

/// Gradients of `linear`. Any of the outputs may be null to skip it.
void linear_backward(const Tensor2& x, const Tensor2& w, const Tensor2& d_out, Tensor2* dx,
                     Tensor2* dw, std::vector<double>* db);

Tensor2 relu(const Tensor2& x);

/// ReLU with a 0/1 activity mask for the backward pass. relu'(0) = 0.
Tensor2 relu_with_mask(const Tensor2& x, std::vector<uint8_t>& mask);
void relu_backward(const std::vector<uint8_t>& mask, Tensor2& d);

/// Inverted dropout: kept entries are divided by (1 - rate). Identity when
/// train is false or rate is 0. The mask, when requested, records kept entries.
Tensor2 dropout(const Tensor2& x, double rate, bool train, Rng* rng,
                std::vector<uint8_t>* mask_out = nullptr);
void dropout_backward(const std::vector<uint8_t>& mask, double rate, Tensor2& d);

// ---------------------------------------------------------------------------
// Symmetry-enforcing parametrizations for the shared message-passing matrix.
// ---------------------------------------------------------------------------

enum class WParametrization {
  kDiagDominant,    // off-diagonal symmetrized, diagonal gated by |row| sums
  kPlainSymmetric,  // (M + M^T) / 2, ablation variant
};

/// Raw parameters behind a realized symmetric matrix W.
/// kDiagDominant: W_ij = (M_ij + M_ji)/2 for i != j,
///                W_ii = tanh(q_i) * sum_{j != i} |W_ij| + r_i.
/// The diagonal of M is stored but inert in this mode.
/// kPlainSymmetric: W = (M + M^T)/2; q and r stay empty.
struct SymmetricDD {
  WParametrization mode = WParametrization::kDiagDominant;
  Tensor2 m;               // d x d raw matrix
  std::vector<double> q;   // diagonal gates (kDiagDominant)
  std::vector<double> r;   // diagonal residuals (kDiagDominant)
};

SymmetricDD make_symmetric_dd(int dim, WParametrization mode);
Tensor2 realize_symmetric_dd(const SymmetricDD& p);

/// Chain rule from a gradient w.r.t. the realized W back to (m, q, r).
/// Accumulates into `grad`. d|x|/dx at 0 is taken as 0.
void realize_symmetric_dd_backward(const SymmetricDD& p, const Tensor2& realized,
                                   const Tensor2& d_realized, SymmetricDD& grad);

// ---------------------------------------------------------------------------
// Loss.
// ---------------------------------------------------------------------------

struct BceResult {
  double loss = 0.0;
  std::vector<double> d_logits;  // mean-reduced gradient
};

/// Numerically stable binary cross-entropy on logits, mean reduction.
BceResult bce_with_logits(std::span<const double> logits, std::span<const double> labels);

double sigmoid(double x);

// ---------------------------------------------------------------------------
// Optimizer. Named slices let Adam state stay aligned with the parameters
// they update.
// ---------------------------------------------------------------------------

struct ParamView {
  std::string name;
  double* data = nullptr;
  size_t size = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step = 0;

  void init(const std::vector<ParamView>& params);
};

/// One update. Decoupled weight decay shrinks parameters before the
/// bias-corrected moment update.
void adam_step(const AdamConfig& cfg, const std::vector<ParamView>& params,
               const std::vector<ParamView>& grads, AdamState& state);

// ---------------------------------------------------------------------------
// Finite-difference harness.
// ---------------------------------------------------------------------------

/// Central-difference check of analytic gradients. `loss_fn` must re-evaluate
/// the loss from the current parameter values (which this function perturbs
/// in place and restores). Returns the worst relative error across checked
/// coordinates; 0 when there are no parameters. `max_coords` < 0 checks every
/// coordinate, otherwise that many per tensor chosen by a seeded subsample.
double grad_check(const std::function<double()>& loss_fn, const std::vector<ParamView>& params,
                  const std::vector<ParamView>& analytic, double h = 1e-5, int max_coords = -1,
                  uint64_t subsample_seed = 0);

}  // namespace grafflp
