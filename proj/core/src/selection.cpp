#include "bmsfed/selection.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "bmsfed/error.hpp"

namespace bmsfed {

namespace {

double max_entry(const Matrix& dist) {
  double m = 0.0;
  for (double v : dist.data) m = std::max(m, v);
  return m;
}

/// Current min-distance of every point to the set s (C_max if s is empty).
std::vector<double> coverage(const SimilarityMatrix& sim,
                             const std::set<std::size_t>& s) {
  const std::size_t n = sim.n();
  std::vector<double> cur(n, max_entry(sim.dist));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i : s) cur[k] = std::min(cur[k], sim.dist.at(k, i));
  }
  return cur;
}

double gain_against(const std::vector<double>& cur, const SimilarityMatrix& sim,
                    std::size_t candidate) {
  double gain = 0.0;
  for (std::size_t k = 0; k < cur.size(); ++k) {
    const double d = sim.dist.at(k, candidate);
    if (d < cur[k]) gain += cur[k] - d;
  }
  return gain;
}

void absorb(std::vector<double>& cur, const SimilarityMatrix& sim,
            std::size_t added) {
  for (std::size_t k = 0; k < cur.size(); ++k)
    cur[k] = std::min(cur[k], sim.dist.at(k, added));
}

std::vector<std::size_t> draw_pool(const std::vector<std::size_t>& remaining,
                                   std::size_t s_sample, RngStream& rng) {
  if (s_sample >= remaining.size()) return remaining;
  return rng.subset(remaining, s_sample);
}

}  // namespace

double facility_location_value(const SimilarityMatrix& sim,
                               const std::set<std::size_t>& s) {
  for (std::size_t i : s) {
    if (i >= sim.n()) {
      throw ParameterError("facility_location_value: client " +
                           std::to_string(i) + " outside universe of " +
                           std::to_string(sim.n()));
    }
  }
  const auto cur = coverage(sim, s);
  double total = 0.0;
  for (double v : cur) total += v;
  return total;
}

double marginal_gain(const SimilarityMatrix& sim, const std::set<std::size_t>& s,
                     std::size_t candidate) {
  if (s.count(candidate)) {
    throw UsageError("marginal_gain: candidate " + std::to_string(candidate) +
                     " already selected");
  }
  return gain_against(coverage(sim, s), sim, candidate);
}

std::vector<std::size_t> stochastic_greedy(const SimilarityMatrix& sim,
                                           std::size_t budget,
                                           std::size_t s_sample,
                                           RngStream& rng) {
  const std::size_t n = sim.n();
  if (budget > n) {
    throw ParameterError("stochastic_greedy: budget " + std::to_string(budget) +
                         " exceeds " + std::to_string(n) + " clients");
  }
  if (s_sample == 0) {
    throw ParameterError("stochastic_greedy: s_sample must be positive");
  }
  std::vector<std::size_t> selected;
  std::set<std::size_t> chosen;
  std::vector<double> cur(n, max_entry(sim.dist));
  while (selected.size() < budget) {
    std::vector<std::size_t> remaining;
    for (std::size_t k = 0; k < n; ++k)
      if (!chosen.count(k)) remaining.push_back(k);
    const auto pool = draw_pool(remaining, s_sample, rng);
    std::size_t best = pool.front();
    double best_gain = -1.0;
    for (std::size_t c : pool) {
      const double g = gain_against(cur, sim, c);
      if (g > best_gain) {  // strict: ties keep the smallest id
        best_gain = g;
        best = c;
      }
    }
    absorb(cur, sim, best);
    chosen.insert(best);
    selected.push_back(best);
  }
  return selected;
}

void update_similarity(SimilarityMatrix& sim,
                       const std::map<std::size_t, Matrix>& fresh_grads,
                       int round) {
  const std::size_t n = sim.n();
  bool initialized = true;
  for (const auto& g : sim.grads)
    if (g.size() == 0) initialized = false;
  if (!initialized && fresh_grads.size() != n) {
    throw UsageError("update_similarity: first refresh must cover all " +
                     std::to_string(n) + " clients");
  }
  for (const auto& [k, g] : fresh_grads) {
    if (k >= n) {
      throw ParameterError("update_similarity: client " + std::to_string(k) +
                           " outside universe");
    }
    if (!sim.grads.empty()) {
      for (const auto& stored : sim.grads) {
        if (stored.size() != 0 && stored.size() != g.size()) {
          throw DimensionError(
              "update_similarity: gradient lengths disagree across clients (" +
              std::to_string(stored.size()) + " vs " + std::to_string(g.size()) +
              ")");
        }
      }
    }
    sim.grads[k] = g;
    sim.freshness[k] = round;
  }
  for (const auto& [k, g] : fresh_grads) {
    for (std::size_t j = 0; j < n; ++j) {
      if (sim.grads[j].size() == 0) continue;
      const double d = (j == k) ? 0.0 : flatten_l2_distance(sim.grads[k], sim.grads[j]);
      sim.dist.at(k, j) = d;
      sim.dist.at(j, k) = d;
    }
  }
}

SelectionOutcome bms_select(const SimilarityMatrix& dist_multi,
                            const SimilarityMatrix& dist_enh,
                            const std::map<std::size_t, double>& ratios,
                            double global_ratio, std::size_t budget,
                            std::size_t s_sample, double chi,
                            const std::map<std::size_t, ModalityMask>& availability,
                            RngStream& rng) {
  const std::size_t n = dist_multi.n();
  if (dist_enh.n() != n) {
    throw DimensionError("bms_select: matrices cover different universes");
  }
  if (chi < 1.0) throw ParameterError("bms_select: chi must be >= 1");
  if (s_sample == 0) throw ParameterError("bms_select: s_sample must be positive");

  SelectionOutcome out;
  out.weak = global_ratio > 1.0 ? Modality::I : Modality::A;

  auto mask_of = [&](std::size_t k) -> const ModalityMask& {
    auto it = availability.find(k);
    if (it == availability.end()) {
      throw UsageError("bms_select: no availability mask for client " +
                       std::to_string(k));
    }
    return it->second;
  };
  std::vector<std::size_t> eligible;
  for (std::size_t k = 0; k < n; ++k)
    if (mask_of(k).has(out.weak)) eligible.push_back(k);
  if (budget > eligible.size()) {
    throw InfeasibleSelectionError(
        "bms_select: budget " + std::to_string(budget) + " exceeds " +
        std::to_string(eligible.size()) + " eligible clients");
  }

  // Ratio in the weak direction: the ratio itself when modality I is weak,
  // its reciprocal when modality A is weak.
  auto weak_direction_ratio = [&](std::size_t k) {
    auto it = ratios.find(k);
    if (it == ratios.end()) {
      throw UsageError("bms_select: no imbalance ratio for client " +
                       std::to_string(k));
    }
    return out.weak == Modality::I ? it->second : 1.0 / it->second;
  };

  auto route_k2 = [&](std::size_t k2) {
    if (!mask_of(k2).bimodal()) {
      out.s_uni.insert(k2);  // can only train its single (weak) modality
    } else if (weak_direction_ratio(k2) > chi) {
      out.s_uni.insert(k2);
    } else {
      out.s_m.insert(k2);
    }
  };

  std::vector<double> cover_multi = coverage(dist_multi, {});
  std::vector<double> cover_enh = coverage(dist_enh, {});

  while (out.total() < budget) {
    std::vector<std::size_t> remaining;
    for (std::size_t k : eligible)
      if (!out.s_m.count(k) && !out.s_uni.count(k)) remaining.push_back(k);
    const auto pool = draw_pool(remaining, s_sample, rng);

    bool has_k1 = false;
    std::size_t k1 = 0;
    double best1 = -1.0;
    std::size_t k2 = pool.front();
    double best2 = -1.0;
    for (std::size_t c : pool) {
      if (mask_of(c).bimodal()) {
        const double g1 = gain_against(cover_multi, dist_multi, c);
        if (g1 > best1) {
          best1 = g1;
          k1 = c;
          has_k1 = true;
        }
      }
      const double g2 = gain_against(cover_enh, dist_enh, c);
      if (g2 > best2) {
        best2 = g2;
        k2 = c;
      }
    }

    const std::size_t slots = budget - out.total();
    if (has_k1 && k1 == k2) {
      out.s_m.insert(k1);
    } else if (has_k1) {
      out.s_m.insert(k1);
      if (slots >= 2) route_k2(k2);  // one slot left: keep k1 only
    } else {
      route_k2(k2);
    }

    // Both objectives track the union of everything selected so far; the
    // multi coverage only ever absorbs S_M members.
    for (std::size_t added : {k1, k2}) {
      if (out.s_m.count(added)) absorb(cover_multi, dist_multi, added);
      if (out.s_m.count(added) || out.s_uni.count(added))
        absorb(cover_enh, dist_enh, added);
    }
  }
  return out;
}

std::set<std::size_t> baseline_random(const std::vector<std::size_t>& universe,
                                      std::size_t budget, RngStream& rng) {
  const auto picked = rng.subset(universe, budget);
  return {picked.begin(), picked.end()};
}

std::set<std::size_t> baseline_powd(const std::map<std::size_t, double>& pool_losses,
                                    std::size_t d_pool, std::size_t budget) {
  if (pool_losses.size() != d_pool) {
    throw ParameterError("baseline_powd: pool size " +
                         std::to_string(pool_losses.size()) +
                         " does not match d_pool " + std::to_string(d_pool));
  }
  if (budget > d_pool) {
    throw ParameterError("baseline_powd: budget " + std::to_string(budget) +
                         " exceeds pool of " + std::to_string(d_pool));
  }
  std::vector<std::pair<std::size_t, double>> order(pool_losses.begin(),
                                                    pool_losses.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < budget; ++i) out.insert(order[i].first);
  return out;
}

std::set<std::size_t> baseline_divfl(const SimilarityMatrix& dist_multi,
                                     std::size_t budget, std::size_t s_sample,
                                     RngStream& rng) {
  const auto picked = stochastic_greedy(dist_multi, budget, s_sample, rng);
  return {picked.begin(), picked.end()};
}

std::map<std::size_t, ModalityMask> baseline_modality_drop(
    const std::vector<std::size_t>& selected, double drop_prob, RngStream& rng) {
  if (drop_prob < 0.0 || drop_prob > 1.0) {
    throw ParameterError("baseline_modality_drop: probability " +
                         std::to_string(drop_prob) + " outside [0, 1]");
  }
  std::map<std::size_t, ModalityMask> masks;
  for (std::size_t k : selected) {
    ModalityMask mask;
    if (rng.next_double() < drop_prob) {
      if (rng.next_below(2) == 0) {
        mask.has_i = false;
      } else {
        mask.has_a = false;
      }
    }
    masks[k] = mask;
  }
  return masks;
}

}  // namespace bmsfed
