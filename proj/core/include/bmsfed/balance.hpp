#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "bmsfed/matrix.hpp"

namespace bmsfed {

struct ProtoEntry {
  Matrix centroid;  // (1, embedding_dim)
  std::size_t count{0};
};

/// Per-class centroids of one modality's embeddings. Absent classes are
/// simply missing; present ones have count >= 1.
using PrototypeSet = std::map<int, ProtoEntry>;

/// Per-class arithmetic mean of representation rows, with counts.
/// Empty input gives an empty set.
PrototypeSet local_prototypes(const Matrix& z, const std::vector<int>& labels);

/// Count-weighted mean per class: c_j = sum_k c_j|k * n_j|k / sum_k n_j|k.
/// Classes absent from every contributor stay absent.
PrototypeSet aggregate_prototypes(const std::vector<PrototypeSet>& parts);

struct MeResult {
  double loss;
  Matrix dz;
};

/// Modal-enhancement loss: softmax cross-entropy over negative Euclidean
/// distances to the given prototypes, prototypes held constant. At a
/// zero-distance kink the gradient contribution is defined as zero.
MeResult me_loss_and_grad(const Matrix& z, const std::vector<int>& labels,
                          const PrototypeSet& protos);

/// Per-sample softmax mass on the ground-truth class, logits being negative
/// distances to the prototypes. Values lie strictly in (0, 1).
std::vector<double> gt_scores(const Matrix& z, const std::vector<int>& labels,
                              const PrototypeSet& protos);

/// Batch imbalance ratio: sum of modality-A scores over sum of modality-I
/// scores. Greater than one means modality A outperforms modality I.
double local_ratio(const std::vector<double>& scores_a,
                   const std::vector<double>& scores_i);

struct Coefficients {
  double gamma;  // fires when the ratio is below one (modality A weak)
  double beta;   // fires when the ratio is at or above one (modality I weak)
};

/// Clipped modulation strengths; both in [0, 1], at most one nonzero.
Coefficients coefficients(double rho);

struct ImbalanceReport {
  double local_ratio{1.0};
  std::size_t sample_count{0};
  double gamma{0.0};
  double beta{0.0};
};

/// Sample-count-weighted mean of local ratios. Above one designates modality
/// I as the globally weak one, at or below one designates modality A.
double global_ratio(const std::vector<ImbalanceReport>& reports);

/// Per-row argmin of Euclidean distance over prototype classes; ties break
/// toward the smallest class id.
std::vector<int> nearest_prototype_classify(const Matrix& z,
                                            const PrototypeSet& protos);

}  // namespace bmsfed
