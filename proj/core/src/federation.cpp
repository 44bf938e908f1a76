#include "bmsfed/federation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bmsfed/error.hpp"

namespace bmsfed {

namespace {

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& idx,
                   std::size_t begin, std::size_t end) {
  Matrix out(end - begin, x.cols);
  for (std::size_t r = begin; r < end; ++r)
    for (std::size_t c = 0; c < x.cols; ++c)
      out.at(r - begin, c) = x.at(idx[r], c);
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& idx,
                               std::size_t begin, std::size_t end) {
  std::vector<int> out(end - begin);
  for (std::size_t r = begin; r < end; ++r) out[r - begin] = labels[idx[r]];
  return out;
}

bool protos_cover(const PrototypeSet& protos, const std::vector<int>& labels) {
  for (int y : labels)
    if (!protos.count(y)) return false;
  return true;
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

void require_trainable(const ClientState& client) {
  if (client.n_k() == 0) {
    throw ParameterError("client " + std::to_string(client.id) +
                         " has no samples");
  }
}

struct BatchPlan {
  std::vector<std::size_t> order;
  std::size_t batch_size;
};

BatchPlan make_batches(std::size_t n, std::size_t batch_size, RngStream& rng) {
  BatchPlan plan;
  plan.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) plan.order[i] = i;
  rng.shuffle(plan.order);
  plan.batch_size = std::min(batch_size == 0 ? n : batch_size, n);
  return plan;
}

int argmax_row(const Matrix& m, std::size_t r) {
  int best = 0;
  double best_v = m.at(r, 0);
  for (std::size_t c = 1; c < m.cols; ++c) {
    if (m.at(r, c) > best_v) {
      best_v = m.at(r, c);
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::BmsFed: return "bmsfed";
    case Method::FedAvg: return "fedavg";
    case Method::FedAvgDrop: return "fedavg_drop";
    case Method::PowD: return "powd";
    case Method::DivFL: return "divfl";
  }
  return "?";
}

double lr_at(const FederationConfig& cfg, int round) {
  const bool decayed = cfg.lr_decay_round > 0 && round >= cfg.lr_decay_round;
  return cfg.lr * (decayed ? 0.1 : 1.0);
}

Upload local_train_multi(const ClientState& client, const ModelParams& model,
                         const ProtoPair* me_protos,
                         const TrainSettings& settings) {
  if (!client.mask.bimodal()) {
    throw ModalityError("local_train_multi: client " +
                        std::to_string(client.id) + " lacks a modality");
  }
  require_trainable(client);
  if (settings.epochs < 1) {
    throw ParameterError("local_train_multi: epochs must be >= 1");
  }

  ModelParams params = model;
  RngStream batch_rng(settings.seed, StreamPurpose::Batching, client.id,
                      static_cast<std::uint64_t>(settings.round));
  const std::size_t n = client.n_k();

  double loss_acc = 0.0;
  std::size_t loss_samples = 0;
  std::vector<double> final_epoch_ratios;

  for (int epoch = 0; epoch < settings.epochs; ++epoch) {
    // Fresh local prototypes of the current model; these score the batch
    // ratio and, in bootstrap mode (no global ones), feed the enhancement
    // term as well.
    const Matrix z_a_full = forward_uni(params, client.x_a, Modality::A).z;
    const Matrix z_i_full = forward_uni(params, client.x_i, Modality::I).z;
    const PrototypeSet protos_a = local_prototypes(z_a_full, client.labels);
    const PrototypeSet protos_i = local_prototypes(z_i_full, client.labels);
    const PrototypeSet& me_a = me_protos ? me_protos->a : protos_a;
    const PrototypeSet& me_i = me_protos ? me_protos->i : protos_i;

    const auto plan = make_batches(n, settings.batch_size, batch_rng);
    for (std::size_t start = 0; start < n; start += plan.batch_size) {
      const std::size_t end = std::min(n, start + plan.batch_size);
      const Matrix xa = gather_rows(client.x_a, plan.order, start, end);
      const Matrix xi = gather_rows(client.x_i, plan.order, start, end);
      const auto yb = gather_labels(client.labels, plan.order, start, end);

      auto fwd = forward_multi(params, xa, xi);
      const auto s_a = gt_scores(fwd.z_a, yb, protos_a);
      const auto s_i = gt_scores(fwd.z_i, yb, protos_i);
      const double rho = local_ratio(s_a, s_i);
      if (epoch + 1 == settings.epochs) final_epoch_ratios.push_back(rho);

      const auto ce = ce_loss_and_grad(fwd.logits, yb);
      double batch_loss = ce.loss;
      Matrix dz_extra;
      const Matrix* dz_a_extra = nullptr;
      const Matrix* dz_i_extra = nullptr;
      if (settings.modal_enhancement) {
        const auto co = coefficients(rho);
        if (co.gamma > 0.0 && protos_cover(me_a, yb)) {
          const auto me = me_loss_and_grad(fwd.z_a, yb, me_a);
          batch_loss += co.gamma * me.loss;
          dz_extra = scale(me.dz, co.gamma);
          dz_a_extra = &dz_extra;
        } else if (co.beta > 0.0 && protos_cover(me_i, yb)) {
          const auto me = me_loss_and_grad(fwd.z_i, yb, me_i);
          batch_loss += co.beta * me.loss;
          dz_extra = scale(me.dz, co.beta);
          dz_i_extra = &dz_extra;
        }
      }
      const auto grads = backward(params, fwd.cache, ce.dlogits, dz_a_extra,
                                  dz_i_extra);
      if (settings.lr > 0.0) params = sgd_step(std::move(params), grads, settings.lr);

      loss_acc += batch_loss * static_cast<double>(end - start);
      loss_samples += end - start;
    }
  }

  Upload up;
  up.client = client.id;
  up.role = TrainRole::Multi;
  up.n_k = n;
  up.delta = param_delta_like(model, params, true, true, true, true, true);
  up.protos_a =
      local_prototypes(forward_uni(params, client.x_a, Modality::A).z, client.labels);
  up.protos_i =
      local_prototypes(forward_uni(params, client.x_i, Modality::I).z, client.labels);
  const double rho_report = mean_of(final_epoch_ratios);
  const auto co = coefficients(rho_report);
  up.report = ImbalanceReport{rho_report, n, co.gamma, co.beta};
  up.mean_loss = loss_acc / static_cast<double>(loss_samples);
  return up;
}

Upload local_train_uni(const ClientState& client, const ModelParams& model,
                       Modality trained, bool trained_is_weak,
                       double fallback_ratio, const ProtoPair* me_protos,
                       const TrainSettings& settings) {
  if (!client.mask.has(trained)) {
    throw ModalityError("local_train_uni: client " + std::to_string(client.id) +
                        " lacks modality " + modality_name(trained));
  }
  require_trainable(client);
  if (settings.epochs < 1) {
    throw ParameterError("local_train_uni: epochs must be >= 1");
  }

  ModelParams params = model;
  RngStream batch_rng(settings.seed, StreamPurpose::Batching, client.id,
                      static_cast<std::uint64_t>(settings.round));
  const std::size_t n = client.n_k();
  const Matrix& x_t = (trained == Modality::A) ? client.x_a : client.x_i;
  const bool can_score_both = client.mask.bimodal();

  // The untrained encoder never moves, so its embeddings and prototypes are
  // computed once.
  Matrix z_other_full;
  PrototypeSet protos_other;
  if (can_score_both) {
    const Modality other = other_modality(trained);
    const Matrix& x_o = (other == Modality::A) ? client.x_a : client.x_i;
    z_other_full = forward_uni(params, x_o, other).z;
    protos_other = local_prototypes(z_other_full, client.labels);
  }

  double loss_acc = 0.0;
  std::size_t loss_samples = 0;
  std::vector<double> final_epoch_ratios;

  for (int epoch = 0; epoch < settings.epochs; ++epoch) {
    const Matrix z_t_full = forward_uni(params, x_t, trained).z;
    const PrototypeSet protos_t = local_prototypes(z_t_full, client.labels);
    const PrototypeSet* me_set = nullptr;
    if (trained_is_weak) {
      me_set = me_protos ? (trained == Modality::A ? &me_protos->a : &me_protos->i)
                         : &protos_t;
    }

    const auto plan = make_batches(n, settings.batch_size, batch_rng);
    for (std::size_t start = 0; start < n; start += plan.batch_size) {
      const std::size_t end = std::min(n, start + plan.batch_size);
      const Matrix xb = gather_rows(x_t, plan.order, start, end);
      const auto yb = gather_labels(client.labels, plan.order, start, end);

      auto fwd = forward_uni(params, xb, trained);

      double rho = fallback_ratio;
      if (can_score_both) {
        const auto s_t = gt_scores(fwd.z, yb, protos_t);
        const Matrix z_o = gather_rows(z_other_full, plan.order, start, end);
        const auto s_o = gt_scores(z_o, yb, protos_other);
        rho = (trained == Modality::I) ? local_ratio(s_o, s_t)
                                       : local_ratio(s_t, s_o);
        if (epoch + 1 == settings.epochs) final_epoch_ratios.push_back(rho);
      }

      const auto ce = ce_loss_and_grad(fwd.logits, yb);
      double batch_loss = ce.loss;
      Matrix dz_extra;
      const Matrix* dz_ptr = nullptr;
      if (settings.modal_enhancement && trained_is_weak && me_set) {
        const auto co = coefficients(rho);
        const double strength = (trained == Modality::I) ? co.beta : co.gamma;
        if (strength > 0.0 && protos_cover(*me_set, yb)) {
          const auto me = me_loss_and_grad(fwd.z, yb, *me_set);
          batch_loss += strength * me.loss;
          dz_extra = scale(me.dz, strength);
          dz_ptr = &dz_extra;
        }
      }
      auto grads = backward(params, fwd.cache, ce.dlogits,
                            trained == Modality::A ? dz_ptr : nullptr,
                            trained == Modality::I ? dz_ptr : nullptr);
      // Only the encoder and its fusion row block are trained; the shared
      // bias stays at the broadcast value.
      clear_fusion_bias(grads);
      if (settings.lr > 0.0) params = sgd_step(std::move(params), grads, settings.lr);

      loss_acc += batch_loss * static_cast<double>(end - start);
      loss_samples += end - start;
    }
  }

  Upload up;
  up.client = client.id;
  up.role = (trained == Modality::A) ? TrainRole::UniA : TrainRole::UniI;
  up.n_k = n;
  const bool is_a = trained == Modality::A;
  up.delta = param_delta_like(model, params, is_a, !is_a, is_a, !is_a, false);
  auto& protos_out = is_a ? up.protos_a : up.protos_i;
  protos_out = local_prototypes(forward_uni(params, x_t, trained).z, client.labels);
  if (can_score_both && !final_epoch_ratios.empty()) {
    const double rho_report = mean_of(final_epoch_ratios);
    const auto co = coefficients(rho_report);
    up.report = ImbalanceReport{rho_report, n, co.gamma, co.beta};
  }
  up.mean_loss = loss_acc / static_cast<double>(loss_samples);
  return up;
}

ModelParams aggregate_models(const ModelParams& broadcast,
                             const std::vector<Upload>& uploads) {
  ModelParams out = broadcast;

  auto fold_encoder = [&](bool is_a) {
    double total = 0.0;
    for (const auto& u : uploads) {
      const auto& enc = is_a ? u.delta.encoder_a : u.delta.encoder_i;
      if (enc) total += static_cast<double>(u.n_k);
    }
    if (total == 0.0) return;
    EncoderParams& target = is_a ? out.encoder_a : out.encoder_i;
    for (const auto& u : uploads) {
      const auto& enc = is_a ? u.delta.encoder_a : u.delta.encoder_i;
      if (!enc) continue;
      if (enc->layers.size() != target.layers.size()) {
        throw DimensionError("aggregate_models: encoder layer count drift");
      }
      const double w = static_cast<double>(u.n_k) / total;
      for (std::size_t l = 0; l < target.layers.size(); ++l) {
        axpy(target.layers[l].weight, -w, enc->layers[l].weight);
        axpy(target.layers[l].bias, -w, enc->layers[l].bias);
      }
    }
  };
  fold_encoder(true);
  fold_encoder(false);

  const std::size_t e = broadcast.embedding_dim();
  auto fold_block = [&](bool is_a) {
    double total = 0.0;
    for (const auto& u : uploads) {
      const auto& blk = is_a ? u.delta.fusion_a : u.delta.fusion_i;
      if (blk) total += static_cast<double>(u.n_k);
    }
    if (total == 0.0) return;
    const std::size_t offset = is_a ? 0 : e;
    for (const auto& u : uploads) {
      const auto& blk = is_a ? u.delta.fusion_a : u.delta.fusion_i;
      if (!blk) continue;
      if (blk->rows != e || blk->cols != out.fusion.weight.cols) {
        throw DimensionError("aggregate_models: fusion block shape drift");
      }
      const double w = static_cast<double>(u.n_k) / total;
      for (std::size_t r = 0; r < e; ++r)
        for (std::size_t c = 0; c < blk->cols; ++c)
          out.fusion.weight.at(offset + r, c) -= w * blk->at(r, c);
    }
  };
  fold_block(true);
  fold_block(false);

  double bias_total = 0.0;
  for (const auto& u : uploads)
    if (u.delta.fusion_bias) bias_total += static_cast<double>(u.n_k);
  if (bias_total > 0.0) {
    for (const auto& u : uploads) {
      if (!u.delta.fusion_bias) continue;
      axpy(out.fusion.bias, -static_cast<double>(u.n_k) / bias_total,
           *u.delta.fusion_bias);
    }
  }
  return out;
}

EvalResult evaluate(const ModelParams& model, const PrototypeSet& protos_a,
                    const PrototypeSet& protos_i, const BimodalDataset& test) {
  if (test.size() == 0) {
    throw ParameterError("evaluate: empty test set");
  }
  EvalResult res;
  const auto fwd = forward_multi(model, test.x_a, test.x_i);
  std::size_t hit = 0;
  for (std::size_t r = 0; r < test.size(); ++r)
    if (argmax_row(fwd.logits, r) == test.labels[r]) ++hit;
  res.acc_multi = static_cast<double>(hit) / static_cast<double>(test.size());

  auto proto_acc = [&](const Matrix& z, const PrototypeSet& protos) {
    if (protos.empty()) return 0.0;
    const auto pred = nearest_prototype_classify(z, protos);
    std::size_t ok = 0;
    for (std::size_t r = 0; r < test.size(); ++r)
      if (pred[r] == test.labels[r]) ++ok;
    return static_cast<double>(ok) / static_cast<double>(test.size());
  };
  res.acc_uni_a = proto_acc(fwd.z_a, protos_a);
  res.acc_uni_i = proto_acc(fwd.z_i, protos_i);
  return res;
}

ServerState init_server(const FederationConfig& cfg) {
  ServerState server;
  RngStream init_rng(cfg.seed, StreamPurpose::WeightInit);
  server.model = init_model(cfg.model_shape, init_rng);
  server.dist_multi = SimilarityMatrix(cfg.num_clients);
  server.dist_enh = SimilarityMatrix(cfg.num_clients);
  return server;
}

std::vector<ClientState> make_clients(const BimodalDataset& train,
                                      const PartitionPlan& plan) {
  std::vector<ClientState> clients;
  clients.reserve(plan.assignment.size());
  for (std::size_t c = 0; c < plan.assignment.size(); ++c) {
    ClientState cs;
    cs.id = c;
    const auto& idx = plan.assignment[c];
    auto mask_it = plan.incongruity.find(c);
    cs.mask = mask_it == plan.incongruity.end() ? ModalityMask{} : mask_it->second;
    cs.labels.reserve(idx.size());
    for (std::size_t i : idx) cs.labels.push_back(train.labels[i]);
    if (cs.mask.has_a) cs.x_a = gather_rows(train.x_a, idx, 0, idx.size());
    if (cs.mask.has_i) cs.x_i = gather_rows(train.x_i, idx, 0, idx.size());
    clients.push_back(std::move(cs));
  }
  return clients;
}

namespace {

/// Merge this round's per-class aggregates into the retained global set.
void merge_protos(PrototypeSet& global, const std::vector<PrototypeSet>& parts) {
  std::vector<PrototypeSet> nonempty;
  for (const auto& p : parts)
    if (!p.empty()) nonempty.push_back(p);
  if (nonempty.empty()) return;
  for (auto& [cls, entry] : aggregate_prototypes(nonempty)) {
    global[cls] = entry;
  }
}

void collect_uploads(ServerState& server, std::vector<Upload> uploads) {
  for (const auto& u : uploads) {
    if (u.report) server.ratios[u.client] = u.report->local_ratio;
    server.last_deltas[u.client] = u.delta;
  }
  server.pending = std::move(uploads);
}

void aggregate_round_state(ServerState& server, const std::vector<Upload>& ups) {
  std::vector<PrototypeSet> parts_a, parts_i;
  std::vector<ImbalanceReport> reports;
  for (const auto& u : ups) {
    parts_a.push_back(u.protos_a);
    parts_i.push_back(u.protos_i);
    if (u.report) reports.push_back(*u.report);
  }
  merge_protos(server.protos_a, parts_a);
  merge_protos(server.protos_i, parts_i);
  if (!reports.empty()) server.rho_global = global_ratio(reports);
}

RoundMetrics metrics_from(const ServerState& server,
                          const std::vector<Upload>& ups,
                          const BimodalDataset& test) {
  RoundMetrics m;
  m.round = server.round;
  const auto eval = evaluate(server.model, server.protos_a, server.protos_i, test);
  m.acc_multi = eval.acc_multi;
  m.acc_uni_a = eval.acc_uni_a;
  m.acc_uni_i = eval.acc_uni_i;
  m.global_ratio = server.rho_global;
  double loss = 0.0;
  for (const auto& u : ups) {
    loss += u.mean_loss;
    if (u.role == TrainRole::Multi) {
      ++m.n_multi;
    } else {
      ++m.n_uni;
    }
  }
  m.train_loss = ups.empty() ? 0.0 : loss / static_cast<double>(ups.size());
  return m;
}

Modality weak_of(double rho_global) {
  return rho_global > 1.0 ? Modality::I : Modality::A;
}

std::map<std::size_t, Matrix> enh_views(
    const std::map<std::size_t, GradientVector>& deltas, const ModelShape& shape,
    Modality weak) {
  std::map<std::size_t, Matrix> views;
  for (const auto& [id, delta] : deltas)
    views[id] = flatten_modality(delta, shape, weak);
  return views;
}

}  // namespace

void aggregate_pending(ServerState& server) {
  if (server.pending.empty()) return;
  server.model = aggregate_models(server.model, server.pending);
  aggregate_round_state(server, server.pending);
  server.pending.clear();
}

RoundMetrics bootstrap_round(ServerState& server, std::vector<ClientState>& clients,
                             const BimodalDataset& test,
                             const FederationConfig& cfg) {
  server.round = 1;
  for (const auto& c : clients) {
    if (c.n_k() == 0) {
      throw ParameterError("bootstrap_round: client " + std::to_string(c.id) +
                           " holds no samples");
    }
  }

  TrainSettings settings;
  settings.lr = lr_at(cfg, 1);
  settings.epochs = 1;  // one local epoch for the bootstrap touch
  settings.batch_size = cfg.batch_size;
  settings.modal_enhancement = cfg.method == Method::BmsFed;
  settings.seed = cfg.seed;
  settings.round = 1;

  std::vector<Upload> uploads;
  for (const auto& client : clients) {
    if (client.mask.bimodal()) {
      uploads.push_back(local_train_multi(client, server.model, nullptr, settings));
    } else {
      const Modality m = client.mask.has_a ? Modality::A : Modality::I;
      TrainSettings uni = settings;
      uni.modal_enhancement = false;  // weak modality is unknown in round 1
      uploads.push_back(
          local_train_uni(client, server.model, m, false, 1.0, nullptr, uni));
    }
  }

  // Global prototypes and ratio come out of the bootstrap immediately; the
  // model fold of these same uploads happens at the start of round 2.
  aggregate_round_state(server, uploads);
  collect_uploads(server, std::move(uploads));

  server.enh_weak = weak_of(server.rho_global);
  const ModelShape shape = cfg.model_shape;
  std::map<std::size_t, Matrix> full_views;
  for (const auto& [id, delta] : server.last_deltas)
    full_views[id] = flatten_full(delta, shape);
  update_similarity(server.dist_multi, full_views, 1);
  update_similarity(server.dist_enh, enh_views(server.last_deltas, shape, server.enh_weak), 1);

  return metrics_from(server, server.pending, test);
}

RoundMetrics run_round(ServerState& server, std::vector<ClientState>& clients,
                       const BimodalDataset& test, const FederationConfig& cfg) {
  if (server.round < 1) {
    throw UsageError("run_round: bootstrap_round must run first");
  }
  server.round += 1;
  const int round = server.round;

  aggregate_pending(server);
  const Modality weak = weak_of(server.rho_global);

  std::map<std::size_t, ModalityMask> masks;
  std::vector<std::size_t> universe;
  for (const auto& c : clients) {
    masks[c.id] = c.mask;
    universe.push_back(c.id);
  }

  // Selection per method. Roles record what each picked client trains.
  std::map<std::size_t, TrainRole> roles;
  auto uni_role = [](Modality m) {
    return m == Modality::A ? TrainRole::UniA : TrainRole::UniI;
  };
  auto role_for_mask = [&](const ModalityMask& mask) {
    if (mask.bimodal()) return TrainRole::Multi;
    return uni_role(mask.has_a ? Modality::A : Modality::I);
  };

  RngStream select_rng(cfg.seed, StreamPurpose::Selection, 0,
                       static_cast<std::uint64_t>(round));
  switch (cfg.method) {
    case Method::BmsFed: {
      if (weak != server.enh_weak) {
        // The weak side flipped; rebuild the enhancement matrix from the
        // stored deltas in the new direction, keeping the old stamps.
        SimilarityMatrix rebuilt(cfg.num_clients);
        update_similarity(rebuilt, enh_views(server.last_deltas, cfg.model_shape, weak),
                          round);
        rebuilt.freshness = server.dist_enh.freshness;
        server.dist_enh = std::move(rebuilt);
        server.enh_weak = weak;
      }
      const auto outcome =
          bms_select(server.dist_multi, server.dist_enh, server.ratios,
                     server.rho_global, cfg.budget, cfg.s_sample, cfg.chi, masks,
                     select_rng);
      for (std::size_t k : outcome.s_m) roles[k] = TrainRole::Multi;
      for (std::size_t k : outcome.s_uni) roles[k] = uni_role(weak);
      break;
    }
    case Method::FedAvg: {
      for (std::size_t k : baseline_random(universe, cfg.budget, select_rng))
        roles[k] = role_for_mask(masks[k]);
      break;
    }
    case Method::FedAvgDrop: {
      const auto picked = baseline_random(universe, cfg.budget, select_rng);
      std::vector<std::size_t> bimodal;
      for (std::size_t k : picked)
        if (masks[k].bimodal()) bimodal.push_back(k);
      RngStream drop_rng(cfg.seed, StreamPurpose::DropMask, 0,
                         static_cast<std::uint64_t>(round));
      const auto dropped = baseline_modality_drop(bimodal, cfg.drop_prob, drop_rng);
      for (std::size_t k : picked) {
        const auto it = dropped.find(k);
        roles[k] = role_for_mask(it == dropped.end() ? masks[k] : it->second);
      }
      break;
    }
    case Method::PowD: {
      RngStream pool_rng(cfg.seed, StreamPurpose::PowdPool, 0,
                         static_cast<std::uint64_t>(round));
      const std::size_t d_pool = (cfg.num_clients + 1) / 2;
      const auto pool = pool_rng.subset(universe, d_pool);
      std::map<std::size_t, double> losses;
      for (std::size_t k : pool) {
        const auto& c = clients[k];
        const auto fwd = forward_multi(server.model, c.x_a, c.x_i);
        losses[k] = ce_loss_and_grad(fwd.logits, c.labels).loss;
      }
      for (std::size_t k : baseline_powd(losses, d_pool, cfg.budget))
        roles[k] = TrainRole::Multi;
      break;
    }
    case Method::DivFL: {
      for (std::size_t k :
           baseline_divfl(server.dist_multi, cfg.budget, cfg.s_sample, select_rng))
        roles[k] = role_for_mask(masks[k]);
      break;
    }
  }

  TrainSettings settings;
  settings.lr = lr_at(cfg, round);
  settings.epochs = cfg.local_epochs;
  settings.batch_size = cfg.batch_size;
  settings.modal_enhancement = cfg.method == Method::BmsFed;
  settings.seed = cfg.seed;
  settings.round = round;

  const ProtoPair global_protos{server.protos_a, server.protos_i};
  std::vector<Upload> uploads;
  for (const auto& [id, role] : roles) {
    const auto& client = clients[id];
    if (role == TrainRole::Multi) {
      uploads.push_back(
          local_train_multi(client, server.model, &global_protos, settings));
    } else {
      const Modality m = role == TrainRole::UniA ? Modality::A : Modality::I;
      uploads.push_back(local_train_uni(client, server.model, m, m == weak,
                                        server.rho_global, &global_protos,
                                        settings));
    }
  }
  collect_uploads(server, std::move(uploads));

  if (cfg.method == Method::BmsFed || cfg.method == Method::DivFL) {
    std::map<std::size_t, Matrix> full_views;
    for (const auto& u : server.pending) {
      if (u.role == TrainRole::Multi)
        full_views[u.client] = flatten_full(u.delta, cfg.model_shape);
    }
    update_similarity(server.dist_multi, full_views, round);
    if (cfg.method == Method::BmsFed) {
      std::map<std::size_t, Matrix> enh;
      for (const auto& u : server.pending)
        enh[u.client] = flatten_modality(u.delta, cfg.model_shape, server.enh_weak);
      update_similarity(server.dist_enh, enh, round);
    }
  }

  return metrics_from(server, server.pending, test);
}

}  // namespace bmsfed
