#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grafflp/graph.hpp"
#include "grafflp/nn.hpp"
#include "grafflp/rng.hpp"
#include "grafflp/tensor.hpp"

namespace grafflp {

enum class ModelKind { kGraff, kGcn, kMlp };
enum class Readout { kHadamard, kGradient };
enum class Activation { kRelu, kIdentity };

const char* model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string& s);
const char* readout_name(Readout r);
Readout parse_readout(const std::string& s);

struct GraffConfig {
  int layers = 3;           // message-passing steps L
  double tau = 0.25;        // integration step
  int hidden_dim = 64;      // d_h, fixed across steps
  double encoder_dropout = 0.1;
  int decoder_layers = 1;   // hidden MLP layers in the decoder
  int decoder_dim = 32;
  double decoder_dropout = 0.1;
  bool batch_norm = false;
  Readout readout = Readout::kGradient;
  bool source_term = true;  // enable the shared symmetric source matrix
  WParametrization w_param = WParametrization::kDiagDominant;
};

void validate_config(const GraffConfig& cfg, ModelKind kind);

struct BatchNormLayer {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;  // buffers, not trainable
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// All trainable tensors for one model. The message-passing matrices of the
/// gradient-flow model are shared across every step; mutating `w` affects
/// all layers because there is exactly one copy.
struct ModelParams {
  ModelKind kind = ModelKind::kGraff;
  GraffConfig cfg;
  int input_dim = 0;

  Tensor2 enc_w;
  std::vector<double> enc_b;

  // gradient-flow message passing
  std::vector<double> omega;  // diagonal of the symmetric self-term
  SymmetricDD w;              // shared symmetric coupling matrix
  SymmetricDD source_w;       // shared symmetric source matrix (plain-symmetric)

  // convolutional baseline: unshared per-layer weights
  std::vector<Tensor2> gcn_w;
  std::vector<std::vector<double>> gcn_b;

  // decoder stack: decoder_layers hidden linears plus the final scalar map
  std::vector<Tensor2> dec_w;
  std::vector<std::vector<double>> dec_b;
  std::vector<BatchNormLayer> dec_bn;
};

ModelParams init_model(ModelKind kind, const GraffConfig& cfg, int input_dim, uint64_t seed);
ModelParams zeros_like(const ModelParams& p);

std::vector<ParamView> trainable_views(ModelParams& p);
/// Trainable tensors plus batch-norm buffers; the checkpoint payload.
std::vector<ParamView> state_views(ModelParams& p);
long param_count(const ModelParams& p);

/// Hidden states H^0..H^L captured during one forward pass.
struct LayerTrace {
  std::vector<Tensor2> states;
  size_t layer_count() const { return states.empty() ? 0 : states.size() - 1; }
};

Tensor2 encode(const Tensor2& x, const ModelParams& p, bool train_mode, Rng* rng);

/// One Euler step of the gradient flow: H + tau * act(-H Omega + A H W - H0 W~).
Tensor2 graff_step(const Tensor2& h, const Tensor2& h0, const NormalizedAdjacency& adj,
                   const ModelParams& p, double tau, Activation act = Activation::kRelu);

/// Full message-passing pass for any model kind. The feature-only baseline
/// ignores the adjacency and produces a single-state trace.
LayerTrace forward_trace(const ModelParams& p, const NormalizedAdjacency& adj, const Tensor2& x,
                         bool train_mode = false, Rng* rng = nullptr);

std::vector<double> readout_hadamard(std::span<const double> zi, std::span<const double> zj);
/// Elementwise square of the edge gradient at the final state; entries >= 0.
std::vector<double> readout_gradient(const Tensor2& h_final, const NormalizedAdjacency& adj, int i,
                                     int j);

/// Readout rows for a batch of node pairs.
Tensor2 readout_batch(const Tensor2& z, const NormalizedAdjacency& adj, const EdgeList& edges,
                      Readout kind);

/// Decoder on one edge representation; eval-mode statistics.
double decode(std::span<const double> z_edge, const ModelParams& p);

/// Deterministic eval-mode pipeline: encode, message passing, readout,
/// decode, sigmoid.
std::vector<double> predict_edges(const ModelParams& p, const NormalizedAdjacency& adj,
                                  const Tensor2& x, const EdgeList& edges);

/// Forward + reverse pass over the fixed architecture tape. Computes the
/// mean binary cross-entropy over `edges` with `labels` and fills `grads`
/// (zeroed first). Train mode applies dropout from `rng` and refreshes
/// batch-norm running statistics in `p`; neither affects the returned loss's
/// dependence on the parameters.
double loss_and_gradients(ModelParams& p, const NormalizedAdjacency& adj, const Tensor2& x,
                          const EdgeList& edges, std::span<const double> labels, bool train_mode,
                          Rng* rng, ModelParams& grads);

void save_checkpoint(const std::string& path, const ModelParams& p);
ModelParams load_checkpoint(const std::string& path);

}  // namespace grafflp
