#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "bmsfed/balance.hpp"
#include "bmsfed/data.hpp"
#include "bmsfed/model.hpp"
#include "bmsfed/selection.hpp"

namespace bmsfed {

enum class Method { BmsFed, FedAvg, FedAvgDrop, PowD, DivFL };

const char* method_name(Method m);

/// What a selected client actually trained this round.
enum class TrainRole { Multi, UniA, UniI };

struct ClientState {
  std::size_t id{0};
  Matrix x_a;  // empty when the mask excludes modality A
  Matrix x_i;
  std::vector<int> labels;
  ModalityMask mask;

  std::size_t n_k() const { return labels.size(); }
};

/// One client's round result: the parameter delta (broadcast minus final,
/// populated only for trained groups), fresh prototypes for the modalities it
/// reports, and its imbalance report when it can measure both modalities.
struct Upload {
  std::size_t client{0};
  TrainRole role{TrainRole::Multi};
  GradientVector delta;
  PrototypeSet protos_a;
  PrototypeSet protos_i;
  std::optional<ImbalanceReport> report;
  double mean_loss{0.0};
  std::size_t n_k{0};
};

struct TrainSettings {
  double lr{0.05};
  int epochs{1};
  std::size_t batch_size{32};
  bool modal_enhancement{true};
  std::uint64_t seed{0};
  int round{1};
};

struct ProtoPair {
  PrototypeSet a;
  PrototypeSet i;
};

/// Mini-batch SGD on the branched multi-modal loss: cross-entropy plus the
/// enhancement term on whichever modality the per-batch imbalance ratio says
/// is behind, with clipped strength. Prototypes for the enhancement term come
/// from `me_protos`, or from the client's own fresh prototypes when null
/// (bootstrap behaviour). Requires both modalities.
Upload local_train_multi(const ClientState& client, const ModelParams& model,
                         const ProtoPair* me_protos,
                         const TrainSettings& settings);

/// Mini-batch SGD on one modality's branch: cross-entropy, plus the
/// enhancement term iff the trained modality is the globally weak one and
/// enhancement is enabled. Only that encoder and its fusion row block are
/// trained and uploaded. fallback_ratio modulates the enhancement strength
/// for clients that cannot score both modalities.
Upload local_train_uni(const ClientState& client, const ModelParams& model,
                       Modality trained, bool trained_is_weak,
                       double fallback_ratio, const ProtoPair* me_protos,
                       const TrainSettings& settings);

/// Count-weighted average per parameter group over the uploads that populate
/// it; groups with no contributor retain the broadcast value.
ModelParams aggregate_models(const ModelParams& broadcast,
                             const std::vector<Upload>& uploads);

struct EvalResult {
  double acc_multi{0.0};
  double acc_uni_a{0.0};
  double acc_uni_i{0.0};
};

/// Multi-modal top-1 via fused logits; uni-modal top-1 via nearest prototype
/// on each modality's embeddings.
EvalResult evaluate(const ModelParams& model, const PrototypeSet& protos_a,
                    const PrototypeSet& protos_i, const BimodalDataset& test);

struct RoundMetrics {
  int round{0};
  double acc_multi{0.0};
  double acc_uni_a{0.0};
  double acc_uni_i{0.0};
  double global_ratio{1.0};
  int n_multi{0};
  int n_uni{0};
  double train_loss{0.0};
};

struct FederationConfig {
  std::uint64_t seed{1};
  std::size_t num_clients{10};
  std::size_t budget{4};
  std::size_t s_sample{10};
  double chi{1.5};
  double lr{0.05};
  int lr_decay_round{0};  // 0 disables the decay step
  int local_epochs{2};
  std::size_t batch_size{32};
  Method method{Method::BmsFed};
  double drop_prob{0.0};
  ModelShape model_shape;
};

struct ServerState {
  ModelParams model;
  PrototypeSet protos_a;
  PrototypeSet protos_i;
  double rho_global{1.0};
  SimilarityMatrix dist_multi;
  SimilarityMatrix dist_enh;
  Modality enh_weak{Modality::I};
  std::map<std::size_t, double> ratios;
  std::map<std::size_t, GradientVector> last_deltas;
  std::vector<Upload> pending;
  int round{0};
};

/// Fresh server with the model drawn from the weight-init stream.
ServerState init_server(const FederationConfig& cfg);

std::vector<ClientState> make_clients(const BimodalDataset& train,
                                      const PartitionPlan& plan);

/// Round 1: broadcast to every client, one local epoch each, gather
/// gradients, prototypes and ratios, build both similarity matrices, the
/// global prototypes and the global ratio. Model aggregation of these
/// uploads happens at the start of round 2.
RoundMetrics bootstrap_round(ServerState& server, std::vector<ClientState>& clients,
                             const BimodalDataset& test,
                             const FederationConfig& cfg);

/// Rounds 2..E: fold last round's uploads, pick the weak modality, select
/// clients per the configured method, train, collect, refresh matrices,
/// evaluate.
RoundMetrics run_round(ServerState& server, std::vector<ClientState>& clients,
                       const BimodalDataset& test, const FederationConfig& cfg);

/// The round-start fold: aggregate pending uploads into the global model,
/// prototypes and ratio. Exposed so tests can drive a single aggregation.
void aggregate_pending(ServerState& server);

double lr_at(const FederationConfig& cfg, int round);

}  // namespace bmsfed
