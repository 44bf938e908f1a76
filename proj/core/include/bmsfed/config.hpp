#pragma once

#include <cstdint>
#include <string>

#include "bmsfed/data.hpp"
#include "bmsfed/federation.hpp"

namespace bmsfed {

enum class PartitionKind { Iid, Dirichlet };

/// One experiment campaign, parsed from flat `key = value` text. Optional
/// keys fall back to documented defaults; unknown keys are rejected.
struct ExperimentConfig {
  Method method{Method::FedAvg};
  std::uint64_t seed{1};
  int rounds{1};
  std::size_t clients{10};
  std::size_t budget{4};
  std::size_t s_sample{0};  // 0 -> defaults to `clients` after validation
  double chi{1.5};
  PartitionKind partition{PartitionKind::Iid};
  double alpha{0.0};  // dirichlet concentration, only with partition=dirichlet
  double fraction_uni{0.0};
  double drop_prob{0.0};  // only with method=fedavg_drop
  double lr{0.05};
  int lr_decay_round{0};
  int local_epochs{2};
  std::size_t batch_size{32};
  int classes{6};
  int per_class{200};
  std::size_t dim_a{12};
  std::size_t dim_i{12};
  double snr_a{4.0};
  double snr_i{1.0};
  double mean_scale{1.0};
  int test_per_class{50};
  std::size_t hidden_dim{32};
  std::size_t embedding_dim{16};
  std::size_t encoder_layers{2};

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates; errors name the offending line and key.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config_file(const std::string& path);

/// Canonical flat form: every applicable key in fixed order, shortest
/// round-trip-exact number formatting. serialize(parse(t)) is a fixed point.
std::string serialize_config(const ExperimentConfig& cfg);

/// The federation-level slice of the config.
FederationConfig federation_config(const ExperimentConfig& cfg);

DataSpec train_data_spec(const ExperimentConfig& cfg);
DataSpec test_data_spec(const ExperimentConfig& cfg);

}  // namespace bmsfed
