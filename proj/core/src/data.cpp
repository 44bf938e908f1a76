#include "bmsfed/data.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "bmsfed/error.hpp"

namespace bmsfed {

namespace {

constexpr int kPartitionRetries = 100;
constexpr char kMagic[4] = {'B', 'M', 'S', 'D'};
constexpr std::uint32_t kFormatVersion = 1;

/// Class mean for one modality: scale * sqrt(2) * e_class, giving pairwise
/// mean distance exactly 2 * scale.
double class_mean_entry(int cls, std::size_t dim_index, double scale) {
  return dim_index == static_cast<std::size_t>(cls) ? scale * std::sqrt(2.0) : 0.0;
}

Matrix sample_modality(int num_classes, int per_class, std::size_t dim,
                       double snr, double scale, RngStream& rng) {
  const bool noiseless = std::isinf(snr);
  const double stddev = noiseless ? 0.0 : 1.0 / snr;
  Matrix x(static_cast<std::size_t>(num_classes) * per_class, dim);
  std::size_t row = 0;
  for (int cls = 0; cls < num_classes; ++cls) {
    for (int s = 0; s < per_class; ++s, ++row) {
      for (std::size_t d = 0; d < dim; ++d) {
        x.at(row, d) =
            class_mean_entry(cls, d, scale) + rng.next_gaussian(0.0, stddev);
      }
    }
  }
  check_finite(x, "generate");
  return x;
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ofstream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

BimodalDataset generate(const DataSpec& spec, RngStream& rng) {
  if (spec.num_classes < 2) {
    throw ParameterError("generate: need at least 2 classes");
  }
  if (spec.per_class < 1) {
    throw ParameterError("generate: per_class must be positive");
  }
  if (spec.dim_a < static_cast<std::size_t>(spec.num_classes) ||
      spec.dim_i < static_cast<std::size_t>(spec.num_classes)) {
    throw ParameterError("generate: modality dims must be >= num_classes");
  }
  if (!(spec.snr_a > 0.0) || !(spec.snr_i > 0.0)) {
    throw ParameterError("generate: snr must be positive");
  }
  if (!(spec.mean_scale > 0.0)) {
    throw ParameterError("generate: mean_scale must be positive");
  }
  BimodalDataset ds;
  ds.num_classes = spec.num_classes;
  ds.x_a = sample_modality(spec.num_classes, spec.per_class, spec.dim_a,
                           spec.snr_a, spec.mean_scale, rng);
  ds.x_i = sample_modality(spec.num_classes, spec.per_class, spec.dim_i,
                           spec.snr_i, spec.mean_scale, rng);
  ds.labels.reserve(ds.x_a.rows);
  for (int cls = 0; cls < spec.num_classes; ++cls)
    for (int s = 0; s < spec.per_class; ++s) ds.labels.push_back(cls);
  return ds;
}

PartitionPlan partition_iid(std::size_t n_samples, std::size_t n_clients,
                            RngStream& rng) {
  if (n_clients == 0 || n_clients > n_samples) {
    throw ParameterError("partition_iid: need 1 <= clients <= samples, got " +
                         std::to_string(n_clients) + " clients for " +
                         std::to_string(n_samples) + " samples");
  }
  std::vector<std::size_t> order(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) order[i] = i;
  rng.shuffle(order);
  PartitionPlan plan;
  plan.assignment.resize(n_clients);
  const std::size_t base = n_samples / n_clients;
  const std::size_t extra = n_samples % n_clients;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < n_clients; ++c) {
    const std::size_t take = base + (c < extra ? 1 : 0);
    plan.assignment[c].assign(order.begin() + pos, order.begin() + pos + take);
    pos += take;
  }
  for (std::size_t c = 0; c < n_clients; ++c) plan.incongruity[c] = ModalityMask{};
  return plan;
}

PartitionPlan partition_dirichlet(const std::vector<int>& labels,
                                  std::size_t n_clients, double alpha,
                                  RngStream& rng) {
  if (!(alpha > 0.0)) {
    throw ParameterError("partition_dirichlet: alpha must be positive");
  }
  if (n_clients == 0 || n_clients > labels.size()) {
    throw ParameterError("partition_dirichlet: need 1 <= clients <= samples");
  }
  int num_classes = 0;
  for (int y : labels) num_classes = std::max(num_classes, y + 1);
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  for (int attempt = 0; attempt < kPartitionRetries; ++attempt) {
    PartitionPlan plan;
    plan.assignment.resize(n_clients);
    for (int cls = 0; cls < num_classes; ++cls) {
      auto idx = by_class[static_cast<std::size_t>(cls)];
      if (idx.empty()) continue;
      rng.shuffle(idx);
      const auto props = rng.dirichlet(alpha, n_clients);
      // Deal by cumulative proportion boundaries so counts sum exactly.
      double cum = 0.0;
      std::size_t start = 0;
      for (std::size_t c = 0; c < n_clients; ++c) {
        cum += props[c];
        const std::size_t end =
            (c + 1 == n_clients)
                ? idx.size()
                : std::min(idx.size(),
                           static_cast<std::size_t>(cum * static_cast<double>(idx.size())));
        for (std::size_t i = start; i < end; ++i)
          plan.assignment[c].push_back(idx[i]);
        start = end;
      }
    }
    bool any_empty = false;
    for (const auto& shard : plan.assignment)
      if (shard.empty()) any_empty = true;
    if (!any_empty) {
      for (auto& shard : plan.assignment) std::sort(shard.begin(), shard.end());
      for (std::size_t c = 0; c < n_clients; ++c)
        plan.incongruity[c] = ModalityMask{};
      return plan;
    }
  }
  throw DataError("partition_dirichlet: could not produce nonempty shards in " +
                  std::to_string(kPartitionRetries) + " attempts");
}

void apply_incongruity(PartitionPlan& plan, double fraction_uni, RngStream& rng) {
  if (fraction_uni < 0.0 || fraction_uni > 1.0) {
    throw ParameterError("apply_incongruity: fraction " +
                         std::to_string(fraction_uni) + " outside [0, 1]");
  }
  const std::size_t n = plan.assignment.size();
  const auto n_uni =
      static_cast<std::size_t>(fraction_uni * static_cast<double>(n));
  std::vector<std::size_t> universe(n);
  for (std::size_t i = 0; i < n; ++i) universe[i] = i;
  const auto masked = rng.subset(universe, n_uni);
  for (std::size_t c = 0; c < n; ++c) plan.incongruity[c] = ModalityMask{};
  for (std::size_t c : masked) {
    ModalityMask mask;
    if (rng.next_below(2) == 0) {
      mask.has_i = false;
    } else {
      mask.has_a = false;
    }
    plan.incongruity[c] = mask;
  }
}

void save_dataset(const BimodalDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_dataset: cannot open " + path);
  out.write(kMagic, 4);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(ds.size()));
  put_u32(out, static_cast<std::uint32_t>(ds.x_a.cols));
  put_u32(out, static_cast<std::uint32_t>(ds.x_i.cols));
  put_u32(out, static_cast<std::uint32_t>(ds.num_classes));
  for (double v : ds.x_a.data) put_f64(out, v);
  for (double v : ds.x_i.data) put_f64(out, v);
  for (int y : ds.labels) put_u32(out, static_cast<std::uint32_t>(y));
  if (!out) throw DataError("save_dataset: write failed for " + path);
}

BimodalDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_dataset: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("load_dataset: bad magic in " + path);
  }
  const std::uint32_t version = get_u32(in);
  if (version != kFormatVersion) {
    throw DataError("load_dataset: unsupported version " +
                    std::to_string(version));
  }
  const std::uint32_t n = get_u32(in);
  const std::uint32_t dim_a = get_u32(in);
  const std::uint32_t dim_i = get_u32(in);
  const std::uint32_t num_classes = get_u32(in);
  BimodalDataset ds;
  ds.num_classes = static_cast<int>(num_classes);
  ds.x_a = Matrix(n, dim_a);
  ds.x_i = Matrix(n, dim_i);
  for (double& v : ds.x_a.data) v = get_f64(in);
  for (double& v : ds.x_i.data) v = get_f64(in);
  ds.labels.resize(n);
  for (auto& y : ds.labels) y = static_cast<int>(get_u32(in));
  if (!in) throw DataError("load_dataset: truncated file " + path);
  return ds;
}

}  // namespace bmsfed
