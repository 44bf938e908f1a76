#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "bmsfed/matrix.hpp"
#include "bmsfed/model.hpp"
#include "bmsfed/rng.hpp"

namespace bmsfed {

/// Which modalities a client can train on.
struct ModalityMask {
  bool has_a{true};
  bool has_i{true};

  bool has(Modality m) const { return m == Modality::A ? has_a : has_i; }
  bool bimodal() const { return has_a && has_i; }
};

/// Pairwise gradient-distance matrix over the client universe, together with
/// the stored flattened gradients it was computed from and per-client round
/// stamps of the last refresh.
struct SimilarityMatrix {
  Matrix dist;                 // (n, n), symmetric, zero diagonal
  std::vector<Matrix> grads;   // per-client 1 x P rows; empty until initialized
  std::vector<int> freshness;  // round of last refresh, 0 = never

  explicit SimilarityMatrix(std::size_t n = 0)
      : dist(n, n), grads(n), freshness(n, 0) {}

  std::size_t n() const { return freshness.size(); }
};

/// Min-sum coverage value G(S) = sum_k min_{i in S} dist[k][i].
/// The empty set is defined as sum_k C_max with C_max the current maximum
/// entry, which pins the maximized surrogate at zero there.
double facility_location_value(const SimilarityMatrix& sim,
                               const std::set<std::size_t>& s);

/// Gain of the maximized surrogate: G(s) - G(s + candidate), never negative.
double marginal_gain(const SimilarityMatrix& sim, const std::set<std::size_t>& s,
                     std::size_t candidate);

/// Greedy maximization scanning a random s_sample-element candidate pool per
/// step; pool of the full remainder collapses to deterministic greedy. Ties
/// break toward the smallest client id. Returns clients in selection order.
std::vector<std::size_t> stochastic_greedy(const SimilarityMatrix& sim,
                                           std::size_t budget,
                                           std::size_t s_sample, RngStream& rng);

/// Rows/columns of refreshed clients are recomputed from the stored flattened
/// gradients; everything else is untouched ("no-overheads" refresh). The
/// first refresh must cover every client.
void update_similarity(SimilarityMatrix& sim,
                       const std::map<std::size_t, Matrix>& fresh_grads,
                       int round);

/// Disjoint multi-modal / uni-weak-modal client sets for one round.
struct SelectionOutcome {
  std::set<std::size_t> s_m;
  std::set<std::size_t> s_uni;
  Modality weak{Modality::I};

  std::size_t total() const { return s_m.size() + s_uni.size(); }
};

/// Dual-matrix balanced modality selection. Per step: one candidate pool is
/// drawn from the unselected selectable clients; k1 maximizes the gain on the
/// multi matrix w.r.t. S_M, k2 the gain on the enhancement matrix w.r.t.
/// S_M + S_uni. Agreement adds k1 to S_M once; disagreement adds k1 to S_M
/// and routes k2 by its weak-direction imbalance ratio against chi. Clients
/// lacking a modality are never placed in S_M; clients lacking the weak
/// modality are never selectable at all.
SelectionOutcome bms_select(const SimilarityMatrix& dist_multi,
                            const SimilarityMatrix& dist_enh,
                            const std::map<std::size_t, double>& ratios,
                            double global_ratio, std::size_t budget,
                            std::size_t s_sample, double chi,
                            const std::map<std::size_t, ModalityMask>& availability,
                            RngStream& rng);

/// Uniform subset of the universe.
std::set<std::size_t> baseline_random(const std::vector<std::size_t>& universe,
                                      std::size_t budget, RngStream& rng);

/// Top-budget clients by loss among an already-drawn candidate pool; ties
/// break toward the smaller id.
std::set<std::size_t> baseline_powd(const std::map<std::size_t, double>& pool_losses,
                                    std::size_t d_pool, std::size_t budget);

/// Diversity-only selection: stochastic greedy over the multi matrix.
std::set<std::size_t> baseline_divfl(const SimilarityMatrix& dist_multi,
                                     std::size_t budget, std::size_t s_sample,
                                     RngStream& rng);

/// With probability drop_prob a client loses one modality chosen uniformly;
/// otherwise it keeps both.
std::map<std::size_t, ModalityMask> baseline_modality_drop(
    const std::vector<std::size_t>& selected, double drop_prob, RngStream& rng);

}  // namespace bmsfed
