#include "bmsfed/balance.hpp"

#include <cmath>
#include <string>

#include "bmsfed/error.hpp"

namespace bmsfed {

namespace {

constexpr double kDegenerateSum = 1e-12;

/// Distances from row i of z to every prototype, in class order.
void row_distances(const Matrix& z, std::size_t i, const PrototypeSet& protos,
                   std::vector<double>& out) {
  out.clear();
  for (const auto& [cls, entry] : protos) {
    double acc = 0.0;
    for (std::size_t c = 0; c < z.cols; ++c) {
      const double d = z.at(i, c) - entry.centroid.data[c];
      acc += d * d;
    }
    out.push_back(std::sqrt(acc));
  }
}

/// log softmax probabilities of logits (-distances), stabilized.
void neg_dist_softmax(const std::vector<double>& dist, std::vector<double>& p) {
  // logits are -dist; max logit = -min dist
  double min_d = dist[0];
  for (double d : dist) min_d = std::min(min_d, d);
  double sum = 0.0;
  p.resize(dist.size());
  for (std::size_t j = 0; j < dist.size(); ++j) {
    p[j] = std::exp(min_d - dist[j]);
    sum += p[j];
  }
  for (double& v : p) v /= sum;
}

void require_embedding_width(const Matrix& z, const PrototypeSet& protos,
                             const char* op) {
  for (const auto& [cls, entry] : protos) {
    if (entry.centroid.cols != z.cols) {
      throw DimensionError(std::string(op) + ": prototype width " +
                           std::to_string(entry.centroid.cols) +
                           " vs embedding width " + std::to_string(z.cols));
    }
    break;
  }
}

int class_index(const PrototypeSet& protos, int label, const char* op) {
  int idx = 0;
  for (const auto& [cls, entry] : protos) {
    if (cls == label) return idx;
    ++idx;
  }
  throw CoverageError(std::string(op) + ": no prototype for class " +
                      std::to_string(label));
}

}  // namespace

PrototypeSet local_prototypes(const Matrix& z, const std::vector<int>& labels) {
  if (z.rows != labels.size()) {
    throw DimensionError("local_prototypes: " + std::to_string(z.rows) +
                         " rows vs " + std::to_string(labels.size()) +
                         " labels");
  }
  PrototypeSet protos;
  for (std::size_t i = 0; i < z.rows; ++i) {
    auto& entry = protos[labels[i]];
    if (entry.count == 0) entry.centroid = Matrix(1, z.cols);
    for (std::size_t c = 0; c < z.cols; ++c)
      entry.centroid.data[c] += z.at(i, c);
    ++entry.count;
  }
  for (auto& [cls, entry] : protos) {
    for (double& v : entry.centroid.data) v /= static_cast<double>(entry.count);
    check_finite(entry.centroid, "local_prototypes");
  }
  return protos;
}

PrototypeSet aggregate_prototypes(const std::vector<PrototypeSet>& parts) {
  PrototypeSet out;
  for (const auto& part : parts) {
    for (const auto& [cls, entry] : part) {
      auto& acc = out[cls];
      if (acc.count == 0) {
        acc.centroid = Matrix(1, entry.centroid.cols);
      } else if (acc.centroid.cols != entry.centroid.cols) {
        throw DimensionError("aggregate_prototypes: centroid widths disagree");
      }
      axpy(acc.centroid, static_cast<double>(entry.count), entry.centroid);
      acc.count += entry.count;
    }
  }
  for (auto& [cls, entry] : out) {
    for (double& v : entry.centroid.data) v /= static_cast<double>(entry.count);
  }
  return out;
}

MeResult me_loss_and_grad(const Matrix& z, const std::vector<int>& labels,
                          const PrototypeSet& protos) {
  if (z.rows != labels.size()) {
    throw DimensionError("me_loss_and_grad: row/label count mismatch");
  }
  require_embedding_width(z, protos, "me_loss_and_grad");
  MeResult out{0.0, Matrix(z.rows, z.cols)};
  const double inv_batch = 1.0 / static_cast<double>(z.rows);
  std::vector<double> dist, p;
  for (std::size_t i = 0; i < z.rows; ++i) {
    const int y_idx = class_index(protos, labels[i], "me_loss_and_grad");
    row_distances(z, i, protos, dist);
    neg_dist_softmax(dist, p);
    out.loss -= std::log(p[static_cast<std::size_t>(y_idx)]);
    // d loss / d z = sum_j (p_j - onehot_j) * d(-dist_j)/dz
    //             = sum_j (onehot_j - p_j) * (z - c_j) / dist_j
    int j = 0;
    for (const auto& [cls, entry] : protos) {
      const double coeff =
          ((j == y_idx ? 1.0 : 0.0) - p[static_cast<std::size_t>(j)]) * inv_batch;
      if (dist[static_cast<std::size_t>(j)] > 0.0) {
        const double s = coeff / dist[static_cast<std::size_t>(j)];
        for (std::size_t c = 0; c < z.cols; ++c)
          out.dz.at(i, c) += s * (z.at(i, c) - entry.centroid.data[c]);
      }
      ++j;
    }
  }
  out.loss *= inv_batch;
  check_finite(out.dz, "me_loss_and_grad");
  return out;
}

std::vector<double> gt_scores(const Matrix& z, const std::vector<int>& labels,
                              const PrototypeSet& protos) {
  if (z.rows != labels.size()) {
    throw DimensionError("gt_scores: row/label count mismatch");
  }
  require_embedding_width(z, protos, "gt_scores");
  std::vector<double> scores(z.rows);
  std::vector<double> dist, p;
  for (std::size_t i = 0; i < z.rows; ++i) {
    const int y_idx = class_index(protos, labels[i], "gt_scores");
    row_distances(z, i, protos, dist);
    neg_dist_softmax(dist, p);
    scores[i] = p[static_cast<std::size_t>(y_idx)];
  }
  return scores;
}

double local_ratio(const std::vector<double>& scores_a,
                   const std::vector<double>& scores_i) {
  if (scores_a.empty() || scores_i.empty() ||
      scores_a.size() != scores_i.size()) {
    throw DimensionError("local_ratio: score vectors must be nonempty and equal-sized");
  }
  double sum_a = 0.0, sum_i = 0.0;
  for (double s : scores_a) sum_a += s;
  for (double s : scores_i) sum_i += s;
  if (sum_i < kDegenerateSum) {
    throw NumericError("local_ratio: degenerate batch, modality-I score sum ~ 0");
  }
  return sum_a / sum_i;
}

Coefficients coefficients(double rho) {
  if (!(rho > 0.0)) {
    throw ParameterError("coefficients: ratio must be positive, got " +
                         std::to_string(rho));
  }
  auto clip01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
  Coefficients c{0.0, 0.0};
  if (rho < 1.0) {
    c.gamma = clip01(1.0 / rho - 1.0);
  } else {
    c.beta = clip01(rho - 1.0);
  }
  return c;
}

double global_ratio(const std::vector<ImbalanceReport>& reports) {
  if (reports.empty()) {
    throw ParameterError("global_ratio: no reports");
  }
  double num = 0.0, den = 0.0;
  for (const auto& r : reports) {
    if (r.sample_count == 0) {
      throw ParameterError("global_ratio: report with zero samples");
    }
    num += r.local_ratio * static_cast<double>(r.sample_count);
    den += static_cast<double>(r.sample_count);
  }
  return num / den;
}

std::vector<int> nearest_prototype_classify(const Matrix& z,
                                            const PrototypeSet& protos) {
  if (protos.empty()) {
    throw ParameterError("nearest_prototype_classify: empty prototype set");
  }
  require_embedding_width(z, protos, "nearest_prototype_classify");
  std::vector<int> out(z.rows);
  for (std::size_t i = 0; i < z.rows; ++i) {
    double best = 0.0;
    int best_cls = 0;
    bool first = true;
    for (const auto& [cls, entry] : protos) {
      double acc = 0.0;
      for (std::size_t c = 0; c < z.cols; ++c) {
        const double d = z.at(i, c) - entry.centroid.data[c];
        acc += d * d;
      }
      // Map iteration is ascending in class id, so strict < keeps the
      // smallest id on ties.
      if (first || acc < best) {
        best = acc;
        best_cls = cls;
        first = false;
      }
    }
    out[i] = best_cls;
  }
  return out;
}

}  // namespace bmsfed
