#include "bmsfed/model.hpp"

#include <cmath>
#include <string>

#include "bmsfed/error.hpp"

namespace bmsfed {

Modality other_modality(Modality m) {
  return m == Modality::A ? Modality::I : Modality::A;
}

const char* modality_name(Modality m) { return m == Modality::A ? "A" : "I"; }

Matrix ModelParams::fusion_block(Modality m) const {
  const std::size_t e = embedding_dim();
  const std::size_t offset = (m == Modality::A) ? 0 : e;
  Matrix block(e, fusion.weight.cols);
  for (std::size_t r = 0; r < e; ++r)
    for (std::size_t c = 0; c < fusion.weight.cols; ++c)
      block.at(r, c) = fusion.weight.at(offset + r, c);
  return block;
}

namespace {

std::vector<std::size_t> encoder_widths(std::size_t in, const ModelShape& shape) {
  std::vector<std::size_t> widths{in};
  for (std::size_t l = 0; l + 1 < shape.encoder_layers; ++l)
    widths.push_back(shape.hidden_dim);
  widths.push_back(shape.embedding_dim);
  return widths;
}

EncoderParams init_encoder(std::size_t in, const ModelShape& shape,
                           RngStream& rng) {
  EncoderParams enc;
  const auto widths = encoder_widths(in, shape);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    const double std = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    layer.weight = rng.gaussian_matrix(widths[l], widths[l + 1], 0.0, std);
    layer.bias = Matrix(1, widths[l + 1]);
    enc.layers.push_back(std::move(layer));
  }
  return enc;
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

/// Runs the encoder, filling the cache slots passed in.
Matrix encode(const EncoderParams& enc, const Matrix& x,
              std::vector<Matrix>& layer_inputs, std::vector<Matrix>& preact) {
  if (x.cols != enc.input_dim()) {
    throw DimensionError("encode: input width " + std::to_string(x.cols) +
                         " does not match encoder input " +
                         std::to_string(enc.input_dim()));
  }
  layer_inputs.clear();
  preact.clear();
  Matrix h = x;
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    layer_inputs.push_back(h);
    Matrix pre = add_rowvec(matmul(h, enc.layers[l].weight), enc.layers[l].bias);
    preact.push_back(pre);
    h = (l + 1 < enc.layers.size()) ? relu(pre) : std::move(pre);
  }
  return h;
}

/// Backprop through the encoder given the gradient at its output.
EncoderGrad encoder_backward(const EncoderParams& enc,
                             const std::vector<Matrix>& layer_inputs,
                             const std::vector<Matrix>& preact,
                             const Matrix& dz) {
  EncoderGrad grad;
  grad.layers.resize(enc.layers.size());
  Matrix upstream = dz;
  for (std::size_t li = enc.layers.size(); li-- > 0;) {
    Matrix dpre = upstream;
    if (li + 1 < enc.layers.size()) {
      // Rectifier gate; the kink at zero takes the zero subgradient.
      for (std::size_t i = 0; i < dpre.size(); ++i)
        if (preact[li].data[i] <= 0.0) dpre.data[i] = 0.0;
    }
    grad.layers[li].weight = matmul(transpose(layer_inputs[li]), dpre);
    grad.layers[li].bias = colsum(dpre);
    if (li > 0) upstream = matmul(dpre, transpose(enc.layers[li].weight));
  }
  return grad;
}

void check_lr(double lr) {
  if (!(lr > 0.0)) throw ParameterError("sgd_step: lr must be positive");
}

void append_matrix(std::vector<double>& out, const Matrix* m, std::size_t n) {
  if (m == nullptr) {
    out.insert(out.end(), n, 0.0);
    return;
  }
  out.insert(out.end(), m->data.begin(), m->data.end());
}

void append_encoder(std::vector<double>& out, const EncoderGrad* enc,
                    std::size_t in, const ModelShape& shape) {
  const auto widths = encoder_widths(in, shape);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Matrix* w = enc ? &enc->layers[l].weight : nullptr;
    const Matrix* b = enc ? &enc->layers[l].bias : nullptr;
    append_matrix(out, w, widths[l] * widths[l + 1]);
    append_matrix(out, b, widths[l + 1]);
  }
}

std::size_t encoder_param_count(std::size_t in, const ModelShape& shape) {
  const auto widths = encoder_widths(in, shape);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += widths[l] * widths[l + 1] + widths[l + 1];
  return n;
}

}  // namespace

ModelParams init_model(const ModelShape& shape, RngStream& rng) {
  if (shape.encoder_layers == 0) {
    throw ParameterError("init_model: need at least one encoder layer");
  }
  ModelParams params;
  params.encoder_a = init_encoder(shape.dim_a, shape, rng);
  params.encoder_i = init_encoder(shape.dim_i, shape, rng);
  const std::size_t fan_in = 2 * shape.embedding_dim;
  params.fusion.weight = rng.gaussian_matrix(
      fan_in, shape.num_classes, 0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  params.fusion.bias = Matrix(1, shape.num_classes);
  return params;
}

MultiForward forward_multi(const ModelParams& params, const Matrix& x_a,
                           const Matrix& x_i) {
  if (x_a.rows != x_i.rows) {
    throw DimensionError("forward_multi: batch sizes disagree, " +
                         std::to_string(x_a.rows) + " vs " +
                         std::to_string(x_i.rows));
  }
  MultiForward out;
  out.cache.path = Path::Multi;
  out.z_a = encode(params.encoder_a, x_a, out.cache.layer_inputs_a,
                   out.cache.preact_a);
  out.z_i = encode(params.encoder_i, x_i, out.cache.layer_inputs_i,
                   out.cache.preact_i);
  out.logits = add_rowvec(matmul(hconcat(out.z_a, out.z_i), params.fusion.weight),
                          params.fusion.bias);
  out.cache.z_a = out.z_a;
  out.cache.z_i = out.z_i;
  out.cache.valid = true;
  return out;
}

UniForward forward_uni(const ModelParams& params, const Matrix& x, Modality m) {
  UniForward out;
  out.cache.path = (m == Modality::A) ? Path::UniA : Path::UniI;
  if (m == Modality::A) {
    out.z = encode(params.encoder_a, x, out.cache.layer_inputs_a,
                   out.cache.preact_a);
    out.cache.z_a = out.z;
  } else {
    out.z = encode(params.encoder_i, x, out.cache.layer_inputs_i,
                   out.cache.preact_i);
    out.cache.z_i = out.z;
  }
  out.logits =
      add_rowvec(matmul(out.z, params.fusion_block(m)), params.fusion.bias);
  out.cache.valid = true;
  return out;
}

CeResult ce_loss_and_grad(const Matrix& logits, const std::vector<int>& labels) {
  if (logits.rows != labels.size()) {
    throw DimensionError("ce_loss_and_grad: " + std::to_string(logits.rows) +
                         " rows vs " + std::to_string(labels.size()) +
                         " labels");
  }
  const std::size_t batch = logits.rows;
  const std::size_t classes = logits.cols;
  CeResult out{0.0, Matrix(batch, classes)};
  for (std::size_t i = 0; i < batch; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ParameterError("ce_loss_and_grad: label " + std::to_string(y) +
                           " outside [0, " + std::to_string(classes) + ")");
    }
    double max_logit = logits.at(i, 0);
    for (std::size_t c = 1; c < classes; ++c)
      max_logit = std::max(max_logit, logits.at(i, c));
    double sum_exp = 0.0;
    for (std::size_t c = 0; c < classes; ++c)
      sum_exp += std::exp(logits.at(i, c) - max_logit);
    const double lse = max_logit + std::log(sum_exp);
    out.loss += lse - logits.at(i, static_cast<std::size_t>(y));
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(logits.at(i, c) - lse);
      out.dlogits.at(i, c) =
          (p - (c == static_cast<std::size_t>(y) ? 1.0 : 0.0)) /
          static_cast<double>(batch);
    }
  }
  out.loss /= static_cast<double>(batch);
  check_finite(out.dlogits, "ce_loss_and_grad");
  return out;
}

GradientVector backward(const ModelParams& params, const ForwardCache& cache,
                        const Matrix& dlogits, const Matrix* dz_a_extra,
                        const Matrix* dz_i_extra) {
  if (!cache.valid) {
    throw UsageError("backward: forward cache missing or already consumed");
  }
  GradientVector g;
  const std::size_t e = params.embedding_dim();

  if (cache.path == Path::Multi) {
    g.fusion_a = matmul(transpose(cache.z_a), dlogits);
    g.fusion_i = matmul(transpose(cache.z_i), dlogits);
    g.fusion_bias = colsum(dlogits);
    Matrix dconcat = matmul(dlogits, transpose(params.fusion.weight));
    Matrix dz_a(dconcat.rows, e);
    Matrix dz_i(dconcat.rows, e);
    for (std::size_t r = 0; r < dconcat.rows; ++r) {
      for (std::size_t c = 0; c < e; ++c) {
        dz_a.at(r, c) = dconcat.at(r, c);
        dz_i.at(r, c) = dconcat.at(r, e + c);
      }
    }
    if (dz_a_extra) axpy(dz_a, 1.0, *dz_a_extra);
    if (dz_i_extra) axpy(dz_i, 1.0, *dz_i_extra);
    g.encoder_a = encoder_backward(params.encoder_a, cache.layer_inputs_a,
                                   cache.preact_a, dz_a);
    g.encoder_i = encoder_backward(params.encoder_i, cache.layer_inputs_i,
                                   cache.preact_i, dz_i);
    return g;
  }

  const Modality m = (cache.path == Path::UniA) ? Modality::A : Modality::I;
  const Matrix& z = (m == Modality::A) ? cache.z_a : cache.z_i;
  Matrix dz = matmul(dlogits, transpose(params.fusion_block(m)));
  const Matrix* extra = (m == Modality::A) ? dz_a_extra : dz_i_extra;
  if (extra) axpy(dz, 1.0, *extra);
  EncoderGrad enc_grad =
      (m == Modality::A)
          ? encoder_backward(params.encoder_a, cache.layer_inputs_a,
                             cache.preact_a, dz)
          : encoder_backward(params.encoder_i, cache.layer_inputs_i,
                             cache.preact_i, dz);
  Matrix block_grad = matmul(transpose(z), dlogits);
  g.fusion_bias = colsum(dlogits);
  if (m == Modality::A) {
    g.encoder_a = std::move(enc_grad);
    g.fusion_a = std::move(block_grad);
  } else {
    g.encoder_i = std::move(enc_grad);
    g.fusion_i = std::move(block_grad);
  }
  return g;
}

ModelParams sgd_step(ModelParams params, const GradientVector& grads, double lr) {
  check_lr(lr);
  auto step_encoder = [&](EncoderParams& enc, const EncoderGrad& g) {
    if (g.layers.size() != enc.layers.size()) {
      throw DimensionError("sgd_step: encoder layer count mismatch");
    }
    for (std::size_t l = 0; l < enc.layers.size(); ++l) {
      axpy(enc.layers[l].weight, -lr, g.layers[l].weight);
      axpy(enc.layers[l].bias, -lr, g.layers[l].bias);
    }
  };
  if (grads.encoder_a) step_encoder(params.encoder_a, *grads.encoder_a);
  if (grads.encoder_i) step_encoder(params.encoder_i, *grads.encoder_i);
  const std::size_t e = params.embedding_dim();
  auto step_block = [&](std::size_t offset, const Matrix& g) {
    if (g.rows != e || g.cols != params.fusion.weight.cols) {
      throw DimensionError("sgd_step: fusion block shape mismatch");
    }
    for (std::size_t r = 0; r < e; ++r)
      for (std::size_t c = 0; c < g.cols; ++c)
        params.fusion.weight.at(offset + r, c) -= lr * g.at(r, c);
  };
  if (grads.fusion_a) step_block(0, *grads.fusion_a);
  if (grads.fusion_i) step_block(e, *grads.fusion_i);
  if (grads.fusion_bias) axpy(params.fusion.bias, -lr, *grads.fusion_bias);
  return params;
}

GradientVector param_delta_like(const ModelParams& start, const ModelParams& end,
                                bool enc_a, bool enc_i, bool fus_a, bool fus_i,
                                bool bias) {
  GradientVector d;
  auto encoder_delta = [](const EncoderParams& s, const EncoderParams& f) {
    EncoderGrad g;
    g.layers.resize(s.layers.size());
    for (std::size_t l = 0; l < s.layers.size(); ++l) {
      g.layers[l].weight = sub(s.layers[l].weight, f.layers[l].weight);
      g.layers[l].bias = sub(s.layers[l].bias, f.layers[l].bias);
    }
    return g;
  };
  if (enc_a) d.encoder_a = encoder_delta(start.encoder_a, end.encoder_a);
  if (enc_i) d.encoder_i = encoder_delta(start.encoder_i, end.encoder_i);
  if (fus_a)
    d.fusion_a = sub(start.fusion_block(Modality::A), end.fusion_block(Modality::A));
  if (fus_i)
    d.fusion_i = sub(start.fusion_block(Modality::I), end.fusion_block(Modality::I));
  if (bias) d.fusion_bias = sub(start.fusion.bias, end.fusion.bias);
  return d;
}

GradientVector param_delta(const ModelParams& start, const ModelParams& end,
                           const GradientVector& populated_like) {
  return param_delta_like(start, end, populated_like.encoder_a.has_value(),
                          populated_like.encoder_i.has_value(),
                          populated_like.fusion_a.has_value(),
                          populated_like.fusion_i.has_value(),
                          populated_like.fusion_bias.has_value());
}

void clear_fusion_bias(GradientVector& g) { g.fusion_bias.reset(); }

Matrix flatten_full(const GradientVector& g, const ModelShape& shape) {
  std::vector<double> flat;
  flat.reserve(param_count_full(shape));
  append_encoder(flat, g.encoder_a ? &*g.encoder_a : nullptr, shape.dim_a, shape);
  append_encoder(flat, g.encoder_i ? &*g.encoder_i : nullptr, shape.dim_i, shape);
  append_matrix(flat, g.fusion_a ? &*g.fusion_a : nullptr,
                shape.embedding_dim * shape.num_classes);
  append_matrix(flat, g.fusion_i ? &*g.fusion_i : nullptr,
                shape.embedding_dim * shape.num_classes);
  append_matrix(flat, g.fusion_bias ? &*g.fusion_bias : nullptr,
                shape.num_classes);
  Matrix out(1, flat.size());
  out.data = std::move(flat);
  return out;
}

Matrix flatten_modality(const GradientVector& g, const ModelShape& shape,
                        Modality weak) {
  std::vector<double> flat;
  flat.reserve(param_count_modality(shape, weak));
  if (weak == Modality::A) {
    append_encoder(flat, g.encoder_a ? &*g.encoder_a : nullptr, shape.dim_a, shape);
    append_matrix(flat, g.fusion_a ? &*g.fusion_a : nullptr,
                  shape.embedding_dim * shape.num_classes);
  } else {
    append_encoder(flat, g.encoder_i ? &*g.encoder_i : nullptr, shape.dim_i, shape);
    append_matrix(flat, g.fusion_i ? &*g.fusion_i : nullptr,
                  shape.embedding_dim * shape.num_classes);
  }
  Matrix out(1, flat.size());
  out.data = std::move(flat);
  return out;
}

std::size_t param_count_full(const ModelShape& shape) {
  return encoder_param_count(shape.dim_a, shape) +
         encoder_param_count(shape.dim_i, shape) +
         2 * shape.embedding_dim * shape.num_classes + shape.num_classes;
}

std::size_t param_count_modality(const ModelShape& shape, Modality m) {
  const std::size_t in = (m == Modality::A) ? shape.dim_a : shape.dim_i;
  return encoder_param_count(in, shape) +
         shape.embedding_dim * shape.num_classes;
}

ModelShape shape_of(const ModelParams& params) {
  ModelShape s;
  s.dim_a = params.encoder_a.input_dim();
  s.dim_i = params.encoder_i.input_dim();
  s.embedding_dim = params.embedding_dim();
  s.num_classes = params.num_classes();
  s.encoder_layers = params.encoder_a.layers.size();
  s.hidden_dim = s.encoder_layers > 1 ? params.encoder_a.layers[0].weight.cols
                                      : s.embedding_dim;
  return s;
}

}  // namespace bmsfed
