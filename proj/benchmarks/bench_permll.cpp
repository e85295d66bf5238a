#include <benchmark/benchmark.h>

#include <numeric>

#include "permll/perm_layer.hpp"
#include "permll/trainer.hpp"

namespace {

using namespace permll;

Vec random_vec(Rng& rng, std::size_t c) {
  Vec v(c);
  for (double& x : v) x = rng.normal();
  return v;
}

void BM_ApplyClosedForm(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Vec alpha = random_vec(rng, c);
  const Vec p = softmax(random_vec(rng, c));
  for (auto _ : state) benchmark::DoNotOptimize(apply_to_vec(alpha, 0, p));
}
BENCHMARK(BM_ApplyClosedForm)->RangeMultiplier(2)->Range(2, 128);

void BM_ApplyDense(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Vec alpha = random_vec(rng, c);
  const Vec p = softmax(random_vec(rng, c));
  for (auto _ : state) benchmark::DoNotOptimize(build_dense(alpha, 0).multiply(p));
}
BENCHMARK(BM_ApplyDense)->RangeMultiplier(2)->Range(2, 128);

void BM_GradAlpha(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Vec alpha = random_vec(rng, c);
  const Vec p = softmax(random_vec(rng, c));
  const Vec u = random_vec(rng, c);
  for (auto _ : state) benchmark::DoNotOptimize(grad_alpha(alpha, 0, p, u));
}
BENCHMARK(BM_GradAlpha)->RangeMultiplier(2)->Range(2, 128);

void BM_BatchStep(benchmark::State& state) {
  const auto variant = static_cast<Variant>(state.range(0));
  BlobSpec spec;
  spec.per_class = 100;
  NoiseSpec noise;
  noise.kind = NoiseKind::symmetric;
  noise.rate = 0.4;
  const NoisyDataset data = apply_noise(make_blobs(spec), noise);
  Rng rng(3);
  Classifier model = init_params(ModelSpec{Arch::mlp, 128}, data.dims(), data.classes, rng);
  AlphaTable alpha = init_alpha(data.noisy_labels, 0.35, data.classes);
  GradientSet velocity = model.zeros_like();
  std::vector<std::size_t> batch(128);
  std::iota(batch.begin(), batch.end(), 0);
  const LossFn fn = make_loss(LossKind::cross_entropy);
  for (auto _ : state) {
    const BatchResult br = batch_loss_and_grads(variant, fn, model, alpha, data, batch);
    sgd_step(model, br.grads, SgdParams{1e-6, 0.9, 5e-4}, velocity);
    alpha_step(alpha, br.alpha_grads, 1e-6);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_BatchStep)->Arg(static_cast<int>(Variant::plain_ce))
    ->Arg(static_cast<int>(Variant::permute_prediction))
    ->Arg(static_cast<int>(Variant::permute_label));

}  // namespace

BENCHMARK_MAIN();
