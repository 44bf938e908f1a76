#pragma once

// Shared helpers for the test suites: random fixtures, finite-difference
// machinery, and dense views of masked gradients.

#include <cmath>
#include <functional>
#include <vector>

#include "bmsfed/balance.hpp"
#include "bmsfed/matrix.hpp"
#include "bmsfed/model.hpp"
#include "bmsfed/rng.hpp"

namespace testsupport {

inline bmsfed::RngStream test_stream(std::uint64_t salt) {
  return bmsfed::RngStream(0xBADC0FFEEULL, bmsfed::StreamPurpose::Test, salt);
}

inline bmsfed::Matrix random_matrix(std::size_t rows, std::size_t cols,
                                    bmsfed::RngStream& rng, double scale = 1.0) {
  return rng.gaussian_matrix(rows, cols, 0.0, scale);
}

inline std::vector<int> random_labels(std::size_t n, int classes,
                                      bmsfed::RngStream& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.next_below(classes));
  return y;
}

/// Pointers to every parameter scalar, in a fixed traversal order.
inline std::vector<double*> param_pointers(bmsfed::ModelParams& p) {
  std::vector<double*> out;
  auto add_encoder = [&](bmsfed::EncoderParams& enc) {
    for (auto& layer : enc.layers) {
      for (auto& v : layer.weight.data) out.push_back(&v);
      for (auto& v : layer.bias.data) out.push_back(&v);
    }
  };
  add_encoder(p.encoder_a);
  add_encoder(p.encoder_i);
  for (auto& v : p.fusion.weight.data) out.push_back(&v);
  for (auto& v : p.fusion.bias.data) out.push_back(&v);
  return out;
}

/// Dense gradient aligned with param_pointers order: absent groups are zero.
inline std::vector<double> dense_gradient(const bmsfed::ModelParams& like,
                                          const bmsfed::GradientVector& g) {
  bmsfed::ModelParams zeros = like;
  for (auto& layer : zeros.encoder_a.layers) {
    layer.weight = bmsfed::Matrix(layer.weight.rows, layer.weight.cols);
    layer.bias = bmsfed::Matrix(1, layer.bias.cols);
  }
  for (auto& layer : zeros.encoder_i.layers) {
    layer.weight = bmsfed::Matrix(layer.weight.rows, layer.weight.cols);
    layer.bias = bmsfed::Matrix(1, layer.bias.cols);
  }
  zeros.fusion.weight = bmsfed::Matrix(like.fusion.weight.rows, like.fusion.weight.cols);
  zeros.fusion.bias = bmsfed::Matrix(1, like.fusion.bias.cols);

  auto fill_encoder = [](bmsfed::EncoderParams& dst, const bmsfed::EncoderGrad& src) {
    for (std::size_t l = 0; l < dst.layers.size(); ++l) {
      dst.layers[l].weight = src.layers[l].weight;
      dst.layers[l].bias = src.layers[l].bias;
    }
  };
  if (g.encoder_a) fill_encoder(zeros.encoder_a, *g.encoder_a);
  if (g.encoder_i) fill_encoder(zeros.encoder_i, *g.encoder_i);
  const std::size_t e = like.embedding_dim();
  if (g.fusion_a) {
    for (std::size_t r = 0; r < e; ++r)
      for (std::size_t c = 0; c < g.fusion_a->cols; ++c)
        zeros.fusion.weight.at(r, c) = g.fusion_a->at(r, c);
  }
  if (g.fusion_i) {
    for (std::size_t r = 0; r < e; ++r)
      for (std::size_t c = 0; c < g.fusion_i->cols; ++c)
        zeros.fusion.weight.at(e + r, c) = g.fusion_i->at(r, c);
  }
  if (g.fusion_bias) zeros.fusion.bias = *g.fusion_bias;

  std::vector<double> dense;
  auto grab_encoder = [&](const bmsfed::EncoderParams& enc) {
    for (const auto& layer : enc.layers) {
      dense.insert(dense.end(), layer.weight.data.begin(), layer.weight.data.end());
      dense.insert(dense.end(), layer.bias.data.begin(), layer.bias.data.end());
    }
  };
  grab_encoder(zeros.encoder_a);
  grab_encoder(zeros.encoder_i);
  dense.insert(dense.end(), zeros.fusion.weight.data.begin(),
               zeros.fusion.weight.data.end());
  dense.insert(dense.end(), zeros.fusion.bias.data.begin(),
               zeros.fusion.bias.data.end());
  return dense;
}

struct FdReport {
  double max_rel_error{0.0};
  std::size_t checked{0};
};

/// Central finite differences of `loss` against the dense analytic gradient,
/// relative error with an absolute floor.
inline FdReport finite_difference_check(
    bmsfed::ModelParams& params, const std::vector<double>& analytic,
    const std::function<double(const bmsfed::ModelParams&)>& loss,
    double h = 1e-5, double floor = 1e-8) {
  auto ptrs = param_pointers(params);
  FdReport report;
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    const double saved = *ptrs[i];
    *ptrs[i] = saved + h;
    const double up = loss(params);
    *ptrs[i] = saved - h;
    const double down = loss(params);
    *ptrs[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), floor});
    const double rel = std::fabs(fd - analytic[i]) / denom;
    report.max_rel_error = std::max(report.max_rel_error, rel);
    ++report.checked;
  }
  return report;
}

inline bmsfed::ModelShape small_shape() {
  return bmsfed::ModelShape{5, 4, 6, 3, 3, 2};
}

inline bmsfed::PrototypeSet random_protos(int classes, std::size_t dim,
                                          bmsfed::RngStream& rng) {
  bmsfed::PrototypeSet protos;
  for (int c = 0; c < classes; ++c) {
    bmsfed::ProtoEntry entry;
    entry.centroid = rng.gaussian_matrix(1, dim, 0.0, 1.0);
    entry.count = 1 + rng.next_below(5);
    protos[c] = entry;
  }
  return protos;
}

}  // namespace testsupport
