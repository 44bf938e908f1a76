#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "bmsfed/matrix.hpp"
#include "bmsfed/rng.hpp"
#include "bmsfed/selection.hpp"

namespace bmsfed {

struct BimodalDataset {
  Matrix x_a;               // (n, dim_a)
  Matrix x_i;               // (n, dim_i)
  std::vector<int> labels;  // class ids in [0, num_classes)
  int num_classes{0};

  std::size_t size() const { return labels.size(); }
};

/// Shape and difficulty of the synthetic task. Class means are scaled
/// one-hot-like vectors at pairwise distance 2 * mean_scale; per-modality
/// noise std is 1/snr, so a larger snr makes that modality more informative.
struct DataSpec {
  int num_classes{6};
  int per_class{200};
  std::size_t dim_a{12};
  std::size_t dim_i{12};
  double snr_a{4.0};
  double snr_i{1.0};
  double mean_scale{1.0};
};

/// Samples per_class points per class and modality around mutually separated
/// class means (pairwise distance 2). Requires num_classes >= 2, dims >=
/// num_classes, and positive snr.
BimodalDataset generate(const DataSpec& spec, RngStream& rng);

/// Disjoint per-client index lists covering the train set, plus each
/// client's modality mask.
struct PartitionPlan {
  std::vector<std::vector<std::size_t>> assignment;
  std::map<std::size_t, ModalityMask> incongruity;
};

/// Random permutation split into near-equal shards (sizes differ by <= 1).
PartitionPlan partition_iid(std::size_t n_samples, std::size_t n_clients,
                            RngStream& rng);

/// Per class, proportions drawn from a symmetric Dirichlet(alpha) deal that
/// class's indices to clients; draws leaving any client empty are resampled
/// (bounded retries).
PartitionPlan partition_dirichlet(const std::vector<int>& labels,
                                  std::size_t n_clients, double alpha,
                                  RngStream& rng);

/// Marks floor(fraction_uni * N) uniformly chosen clients as single-modality,
/// each keeping A or I with equal probability.
void apply_incongruity(PartitionPlan& plan, double fraction_uni, RngStream& rng);

/// Flat binary dump: magic "BMSD", version, n, dim_a, dim_i, num_classes as
/// little-endian u32, then row-major f64 x_a, x_i, and u32 labels.
void save_dataset(const BimodalDataset& ds, const std::string& path);
BimodalDataset load_dataset(const std::string& path);

}  // namespace bmsfed
