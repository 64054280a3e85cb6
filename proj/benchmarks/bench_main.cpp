#include <benchmark/benchmark.h>

#include <cmath>

#include "biag/gen/generator.hpp"
#include "biag/gen/params.hpp"
#include "biag/num/rng.hpp"
#include "biag/num/tape.hpp"
#include "biag/train/training.hpp"

namespace {

using biag::num::Matrix;

void BM_Attention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64;
  biag::num::Rng rng(1);
  const Matrix q = rng.normal_matrix(5, 2 * d);
  const Matrix k = rng.normal_matrix(n, 2 * d);
  const Matrix v = rng.normal_matrix(n, d);
  const double scale = std::sqrt(static_cast<double>(d));
  for (auto _ : state) {
    benchmark::DoNotOptimize(biag::num::scaled_dot_attention(q, k, v, scale));
  }
}
BENCHMARK(BM_Attention)->Arg(60)->Arg(95);

struct Instance {
  biag::gen::BiagParams params;
  Matrix p_old, p_new, w_old, w_new;
};

Instance make_instance(std::size_t depth, std::size_t n_old) {
  biag::num::Rng rng(7);
  biag::gen::BiagShape shape;
  shape.num_layers = depth;
  Instance in{biag::gen::init_params(shape, rng), rng.normal_matrix(n_old, shape.dim),
              rng.normal_matrix(shape.way, shape.dim), rng.normal_matrix(n_old, shape.dim),
              rng.normal_matrix(shape.way, shape.dim)};
  return in;
}

void BM_Generate(benchmark::State& state) {
  const Instance in = make_instance(static_cast<std::size_t>(state.range(0)), 60);
  for (auto _ : state) {
    benchmark::DoNotOptimize(biag::gen::biag_generate(in.params, in.p_old, in.p_new, in.w_old));
  }
}
BENCHMARK(BM_Generate)->DenseRange(1, 6, 1);

void BM_EpisodeBackward(benchmark::State& state) {
  const Instance in = make_instance(static_cast<std::size_t>(state.range(0)), 55);
  for (auto _ : state) {
    biag::num::Tape tape;
    const auto vars = biag::gen::bind(tape, in.params);
    auto loss = biag::train::episode_loss(tape, vars, in.p_old, in.p_new, in.w_old, in.w_new,
                                          biag::train::LossMode::kRowMean, {});
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(vars.leaves.front()));
  }
}
BENCHMARK(BM_EpisodeBackward)->Arg(1)->Arg(4)->Arg(6);

}  // namespace

BENCHMARK_MAIN();
