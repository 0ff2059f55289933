// Serial reference vs OpenMP for the hot kernels.
//
//   ne3_bench --benchmark_filter=misfit

#include <benchmark/benchmark.h>

#include "ne3/ensemble.hpp"
#include "ne3/kernels.hpp"
#include "ne3/lab.hpp"

using namespace ne3;

namespace {

TabularMDP make_truth() {
  Rng rng(1);
  return lab::random_mdp(6, 3, 4, rng);
}

struct TabularFixture {
  TabularMDP truth = make_truth();
  std::vector<TabularMDP> models;
  std::vector<const TabularMDP*> ptrs;
  std::vector<Policy> policies;

  explicit TabularFixture(int num_models) {
    Rng rng(11);
    for (int i = 0; i < num_models; ++i) models.push_back(lab::mix_toward_random(truth, rng.uniform(), rng));
    for (const auto& m : models) ptrs.push_back(&m);
    policies = all_open_loop_policies(3, 4);
  }
};

template <bool Omp>
void BM_misfit_matrix(benchmark::State& state) {
  const TabularFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto m = Omp ? kernels::omp::misfit_matrix(f.truth, f.policies, f.ptrs, 4)
                 : kernels::serial::misfit_matrix(f.truth, f.policies, f.ptrs, 4);
    benchmark::DoNotOptimize(m.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<long>(f.policies.size()));
}

template <bool Omp>
void BM_v_explore_all(benchmark::State& state) {
  const TabularFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto v = Omp ? kernels::omp::v_explore_all(f.policies, f.ptrs) : kernels::serial::v_explore_all(f.policies, f.ptrs);
    benchmark::DoNotOptimize(v.data());
  }
}

template <bool Omp>
void BM_nearest_distance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t dim = 16;
  Rng rng(2);
  std::vector<double> pts(n * dim), q(dim);
  for (auto& x : pts) x = rng.uniform();
  for (auto& x : q) x = rng.uniform();
  for (auto _ : state) {
    double d = Omp ? kernels::omp::nearest_distance(pts, dim, q) : kernels::serial::nearest_distance(pts, dim, q);
    benchmark::DoNotOptimize(d);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Omp>
void BM_bernoulli_step(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t bits = 32;
  Rng rng(3);
  nn::MlpSpec spec;
  spec.input_size = bits;
  spec.num_actions = 2;
  spec.hidden = {50};
  spec.output_size = bits;
  spec.reward_head = true;
  spec.action_input = nn::ActionInput::Concat;
  const nn::Mlp net(spec, rng);
  StateBatch start(rows, bits);
  for (auto& x : start.data()) x = rng.bernoulli(0.5) ? 1.0 : 0.0;
  std::vector<double> u(rows * bits), rewards(rows);
  for (auto& x : u) x = rng.uniform();
  for (auto _ : state) {
    StateBatch b = start;
    if (Omp) kernels::omp::bernoulli_step(net, b, 1, u, rewards);
    else kernels::serial::bernoulli_step(net, b, 1, u, rewards);
    benchmark::DoNotOptimize(b.data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_misfit_matrix<false>)->Name("misfit_matrix/serial")->Arg(16)->Arg(128);
BENCHMARK(BM_misfit_matrix<true>)->Name("misfit_matrix/omp")->Arg(16)->Arg(128);
BENCHMARK(BM_v_explore_all<false>)->Name("v_explore_all/serial")->Arg(16)->Arg(128);
BENCHMARK(BM_v_explore_all<true>)->Name("v_explore_all/omp")->Arg(16)->Arg(128);
BENCHMARK(BM_nearest_distance<false>)->Name("nearest_distance/serial")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_nearest_distance<true>)->Name("nearest_distance/omp")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_bernoulli_step<false>)->Name("bernoulli_step/serial")->Arg(100)->Arg(1000);
BENCHMARK(BM_bernoulli_step<true>)->Name("bernoulli_step/omp")->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
