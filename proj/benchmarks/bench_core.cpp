#include <benchmark/benchmark.h>

#include "bmsfed/experiment.hpp"
#include "bmsfed/federation.hpp"
#include "bmsfed/matrix.hpp"
#include "bmsfed/rng.hpp"
#include "bmsfed/selection.hpp"

using namespace bmsfed;

namespace {

Matrix random_square(std::size_t n, std::uint64_t salt) {
  RngStream rng(42, StreamPurpose::Test, salt);
  return rng.gaussian_matrix(n, n, 0.0, 1.0);
}

SimilarityMatrix random_similarity(std::size_t n) {
  RngStream rng(42, StreamPurpose::Test, n);
  SimilarityMatrix sim(n);
  std::map<std::size_t, Matrix> grads;
  for (std::size_t k = 0; k < n; ++k)
    grads[k] = rng.gaussian_matrix(1, 256, 0.0, 1.0);
  update_similarity(sim, grads, 1);
  return sim;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_square(n, 1);
  const Matrix b = random_square(n, 2);
  for (auto _ : state) {
    auto c = matmul(a, b);
    benchmark::DoNotOptimize(c.data.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_StochasticGreedy(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto sim = random_similarity(n);
  for (auto _ : state) {
    RngStream rng(7, StreamPurpose::Selection, 0, 1);
    auto picks = stochastic_greedy(sim, n / 4, n / 2, rng);
    benchmark::DoNotOptimize(picks.data());
  }
}
BENCHMARK(BM_StochasticGreedy)->Arg(20)->Arg(50)->Arg(100);

void BM_BmsSelect(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto multi = random_similarity(n);
  const auto enh = random_similarity(n + 1000);  // different salt
  SimilarityMatrix enh_sized(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      enh_sized.dist.at(i, j) = enh.dist.at(i % enh.n(), j % enh.n());
  std::map<std::size_t, double> ratios;
  std::map<std::size_t, ModalityMask> masks;
  for (std::size_t k = 0; k < n; ++k) {
    ratios[k] = 1.0 + 0.02 * static_cast<double>(k);
    masks[k] = ModalityMask{};
  }
  for (auto _ : state) {
    RngStream rng(7, StreamPurpose::Selection, 0, 2);
    auto out = bms_select(multi, enh_sized, ratios, 1.8, n / 4, n / 2, 1.5,
                          masks, rng);
    benchmark::DoNotOptimize(&out);
  }
}
BENCHMARK(BM_BmsSelect)->Arg(20)->Arg(50);

void BM_LocalTrainMulti(benchmark::State& state) {
  RngStream data_rng(3, StreamPurpose::TrainData);
  DataSpec spec;
  spec.num_classes = 6;
  spec.per_class = 40;
  spec.dim_a = 12;
  spec.dim_i = 18;
  const auto data = generate(spec, data_rng);
  ClientState client;
  client.id = 0;
  client.x_a = data.x_a;
  client.x_i = data.x_i;
  client.labels = data.labels;

  ModelShape shape{12, 18, 32, 16, 6, 2};
  RngStream init_rng(3, StreamPurpose::WeightInit);
  const ModelParams model = init_model(shape, init_rng);

  TrainSettings settings;
  settings.lr = 0.1;
  settings.epochs = 1;
  settings.batch_size = 32;
  settings.seed = 3;
  settings.round = 2;
  for (auto _ : state) {
    auto up = local_train_multi(client, model, nullptr, settings);
    benchmark::DoNotOptimize(&up);
  }
}
BENCHMARK(BM_LocalTrainMulti);

void BM_FullRound(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.method = Method::BmsFed;
  cfg.seed = 9;
  cfg.rounds = 3;
  cfg.clients = 10;
  cfg.budget = 4;
  cfg.classes = 6;
  cfg.per_class = 60;
  cfg.dim_a = 12;
  cfg.dim_i = 18;
  cfg.test_per_class = 20;
  cfg.batch_size = 16;
  for (auto _ : state) {
    auto result = run_experiment(cfg);
    benchmark::DoNotOptimize(&result);
  }
}
BENCHMARK(BM_FullRound);

}  // namespace

BENCHMARK_MAIN();
