#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bmsfed/matrix.hpp"
#include "bmsfed/rng.hpp"

namespace bmsfed {

enum class Modality { A, I };

Modality other_modality(Modality m);
const char* modality_name(Modality m);

/// Which execution path a forward/backward pass took.
enum class Path { Multi, UniA, UniI };

struct DenseLayer {
  Matrix weight;  // (in, out)
  Matrix bias;    // (1, out)
};

/// Stack of fully-connected layers, rectifier after every layer except the
/// last. The final width is the embedding dimension shared by both modalities.
struct EncoderParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.front().weight.rows; }
  std::size_t embedding_dim() const { return layers.back().weight.cols; }
};

/// Concatenation-fusion head. The weight splits row-wise into the block for
/// modality A (first embedding_dim rows) and the block for modality I (last
/// embedding_dim rows), matching the [z_a ; z_i] concatenation order.
struct FusionParams {
  Matrix weight;  // (2*embedding_dim, num_classes)
  Matrix bias;    // (1, num_classes)
};

struct ModelParams {
  EncoderParams encoder_a;
  EncoderParams encoder_i;
  FusionParams fusion;

  std::size_t embedding_dim() const { return encoder_a.embedding_dim(); }
  std::size_t num_classes() const { return fusion.bias.cols; }

  /// Row block of the fusion weight aligned with the modality's slot.
  Matrix fusion_block(Modality m) const;
};

struct ModelShape {
  std::size_t dim_a;
  std::size_t dim_i;
  std::size_t hidden_dim;
  std::size_t embedding_dim;
  std::size_t num_classes;
  std::size_t encoder_layers;  // number of weight matrices per encoder
};

/// Gaussian init with std 1/sqrt(fan_in), zero biases.
ModelParams init_model(const ModelShape& shape, RngStream& rng);

/// Activations cached by a forward pass, consumed by backward() for the same
/// path. layer_inputs_* holds the input to each dense layer (post-rectifier
/// of the previous one); preact_* the pre-rectifier outputs.
struct ForwardCache {
  Path path{Path::Multi};
  std::vector<Matrix> layer_inputs_a;
  std::vector<Matrix> preact_a;
  std::vector<Matrix> layer_inputs_i;
  std::vector<Matrix> preact_i;
  Matrix z_a;
  Matrix z_i;
  bool valid{false};
};

struct MultiForward {
  Matrix z_a;
  Matrix z_i;
  Matrix logits;
  ForwardCache cache;
};

struct UniForward {
  Matrix z;
  Matrix logits;
  ForwardCache cache;
};

/// z_a = enc_a(x_a), z_i = enc_i(x_i), logits = [z_a ; z_i] * W + b.
MultiForward forward_multi(const ModelParams& params, const Matrix& x_a,
                           const Matrix& x_i);

/// logits = z * W_block(modality) + full bias.
UniForward forward_uni(const ModelParams& params, const Matrix& x, Modality m);

struct CeResult {
  double loss;
  Matrix dlogits;  // (softmax - onehot) / batch
};

/// Mean cross-entropy over the batch, log-sum-exp stabilized.
CeResult ce_loss_and_grad(const Matrix& logits, const std::vector<int>& labels);

struct LayerGrad {
  Matrix weight;
  Matrix bias;
};

struct EncoderGrad {
  std::vector<LayerGrad> layers;
};

/// Gradient (or parameter delta) with the same shape tree as ModelParams.
/// Unpopulated groups are absent, never silently zero: aggregation must be
/// able to distinguish "no contribution" from "zero gradient".
struct GradientVector {
  std::optional<EncoderGrad> encoder_a;
  std::optional<EncoderGrad> encoder_i;
  std::optional<Matrix> fusion_a;     // (embedding_dim, num_classes)
  std::optional<Matrix> fusion_i;     // (embedding_dim, num_classes)
  std::optional<Matrix> fusion_bias;  // (1, num_classes)
};

/// Exact gradients of the scalar loss along the cached path. dz_*_extra, when
/// given, is an additional upstream gradient flowing directly into that
/// modality's embedding (the enhancement-loss term supplies it); groups off
/// the path stay absent.
GradientVector backward(const ModelParams& params, const ForwardCache& cache,
                        const Matrix& dlogits,
                        const Matrix* dz_a_extra = nullptr,
                        const Matrix* dz_i_extra = nullptr);

/// p <- p - lr * g for populated groups only; lr must be positive.
ModelParams sgd_step(ModelParams params, const GradientVector& grads, double lr);

/// start - end over the given groups, as an uploadable delta.
GradientVector param_delta(const ModelParams& start, const ModelParams& end,
                           const GradientVector& populated_like);

/// Delta whose populated groups mirror what `grads` populated.
GradientVector param_delta_like(const ModelParams& start, const ModelParams& end,
                                bool enc_a, bool enc_i, bool fus_a, bool fus_i,
                                bool bias);

/// Drop a group from the vector (used when a trained group is not uploaded).
void clear_fusion_bias(GradientVector& g);

/// Flatten every group in canonical order (enc_a, enc_i, fusion_a, fusion_i,
/// bias) into a 1 x P row; absent groups are zero-filled so vectors from
/// different clients stay comparable.
Matrix flatten_full(const GradientVector& g, const ModelShape& shape);

/// Flatten only the weak-modality groups (that encoder plus its fusion row
/// block), zero-filling whatever is absent.
Matrix flatten_modality(const GradientVector& g, const ModelShape& shape,
                        Modality weak);

std::size_t param_count_full(const ModelShape& shape);
std::size_t param_count_modality(const ModelShape& shape, Modality m);

ModelShape shape_of(const ModelParams& params);

}  // namespace bmsfed
