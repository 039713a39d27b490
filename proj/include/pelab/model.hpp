#pragma once

// Two-layer, single-head transformer encoder for scalar sequences, with a
// hand-derived backward pass and a seeded mini-batch Adam training loop.
//
// Block layout (no layer norm, no dropout):
//   z  -> z + Attn(z) -> (·) + FFN(·)        FFN(u) = relu(u W1 + b1) W2 + b2
//   Attn(z) = softmax((z Wq)(z Wk)ᵀ / √d + bias) (z Wv) Wo

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pelab/encodings.hpp"
#include "pelab/numkit.hpp"
#include "pelab/tasks.hpp"

namespace pelab::model {

using numkit::Matrix;

inline constexpr std::size_t kLayers = 2;

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t d_ff = 128;
  bool causal = false;
};

struct LayerParams {
  Matrix wq, wk, wv;  // d_model × d_model
  Matrix wo;          // d_model × d_model
  Matrix w_ff1;       // d_model × d_ff
  Matrix b_ff1;       // 1 × d_ff
  Matrix w_ff2;       // d_ff × d_model
  Matrix b_ff2;       // 1 × d_model
};

struct NamedTensor {
  std::string name;
  Matrix* tensor;
};

struct EncoderParams {
  ModelConfig dims;
  Matrix w_in;   // 1 × d_model
  std::array<LayerParams, kLayers> layers;
  Matrix w_out;  // d_model × 1
  std::optional<encodings::LearnedTable> learned;
  std::optional<encodings::RelativeTable> relative;

  /// Every trainable tensor, in a fixed order shared by Adam, checkpoints and
  /// gradient checks.
  std::vector<NamedTensor> tensors();
  std::vector<const Matrix*> tensors() const;
  std::vector<std::string> tensor_names() const;

  /// Same structure and shapes, all entries zero.
  EncoderParams zeros_like() const;
  bool all_finite() const;
  EncoderParams& operator+=(const EncoderParams& other);
  EncoderParams& operator*=(double s);
};

bool operator==(const EncoderParams& a, const EncoderParams& b);

/// Weights ~ N(0, 1/fan_in); biases zero; scheme tables per encodings.
EncoderParams init_params(const ModelConfig& dims, const encodings::SchemeConfig& scheme,
                          std::uint64_t seed);

// --- forward / backward ------------------------------------------------------------

struct AttentionCache {
  Matrix z_in;     // N × d
  Matrix q, k, v;  // N × d
  Matrix weights;  // N × N softmax output
  Matrix mixed;    // weights · v
};

struct LayerCache {
  AttentionCache attn;
  Matrix z_mid;   // after attention residual
  Matrix ff_pre;  // N × d_ff, before ReLU
  Matrix ff_act;  // after ReLU
};

struct ForwardCache {
  Matrix x;  // N × 1
  std::array<LayerCache, kLayers> layers;
  Matrix z_out;  // final residual stream
  bool has_bias = false;
};

/// One attention sub-layer. Returns the sub-layer output (before the residual).
Matrix attention_forward(const Matrix& z, const LayerParams& layer, const encodings::BiasMatrix* bias,
                         bool causal, AttentionCache* cache = nullptr);

struct ForwardResult {
  Matrix predictions;  // N × 1
  ForwardCache cache;
};

ForwardResult encoder_forward(const Matrix& x, const encodings::PEMatrix* pe,
                              const encodings::BiasMatrix* bias, const EncoderParams& params,
                              bool causal);

struct LossResult {
  double loss = 0.0;
  Matrix gradient;
};

/// Mean squared error over all entries, with its gradient.
LossResult mse_loss(const Matrix& pred, const Matrix& target);

/// Gradients with respect to every tensor in `params`, including scheme tables.
/// `cache` must come from encoder_forward with the same params.
EncoderParams encoder_backward(const ForwardCache& cache, const Matrix& loss_gradient,
                               const EncoderParams& params);

// --- positional context ------------------------------------------------------------

/// Encodings for a given sequence length under a scheme. Fixed schemes are
/// cached per length; learned and relative are rebuilt from the current params.
class PositionalContext {
 public:
  explicit PositionalContext(encodings::SchemeConfig cfg);

  const encodings::SchemeConfig& scheme() const noexcept { return cfg_; }
  encodings::Encoding build(std::size_t n, const EncoderParams& params);

 private:
  encodings::SchemeConfig cfg_;
  std::optional<encodings::WaveletTables> tables_;
  std::map<std::size_t, encodings::Encoding> fixed_;
};

/// Forward pass with the scheme's encoding for x's length.
ForwardResult predict(const Matrix& x, PositionalContext& ctx, const EncoderParams& params);

// --- training ----------------------------------------------------------------------

struct TrainConfig {
  std::size_t n_train_samples = 10000;
  std::size_t seq_len = 50;
  std::size_t epochs = 20;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  encodings::SchemeConfig scheme;
  ModelConfig model;

  void validate() const;
};

struct BatchResult {
  double loss = 0.0;  // mean per-sample MSE
  EncoderParams grad;
};

/// Mean loss and gradient over the selected samples. Samples run on OpenMP
/// threads into per-sample slots that are summed in index order, so the
/// result is bit-identical to batch_gradient_serial for any thread count.
BatchResult batch_gradient(const EncoderParams& params, const encodings::Encoding& enc,
                           const tasks::Dataset& data, std::span<const std::size_t> indices);
BatchResult batch_gradient_serial(const EncoderParams& params, const encodings::Encoding& enc,
                                  const tasks::Dataset& data,
                                  std::span<const std::size_t> indices);

struct TrainResult {
  EncoderParams params;
  std::vector<double> epoch_losses;
};

/// Seeded mini-batch Adam. Throws TrainingDiverged on a non-finite batch loss.
TrainResult train(const TrainConfig& cfg, const tasks::Dataset& data);

/// Mean per-sample MSE of forward-only predictions.
double evaluate(const EncoderParams& params, const encodings::SchemeConfig& scheme,
                const tasks::Dataset& data);

// --- checkpoints -------------------------------------------------------------------

struct Checkpoint {
  encodings::SchemeConfig scheme;
  EncoderParams params;
};

/// Writes the JSON manifest at `manifest_path` and the little-endian float64
/// payload next to it with a `.bin` extension.
void save_checkpoint(const Checkpoint& ckpt, const std::string& manifest_path);
Checkpoint load_checkpoint(const std::string& manifest_path);

}  // namespace pelab::model
