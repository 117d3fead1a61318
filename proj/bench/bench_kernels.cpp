// Serial reference kernels against their OpenMP variants.
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "elastica/kernels.hpp"

namespace k = elastica::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
    std::vector<double> c(n * n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::parallel::gemm(n, n, n, a, b, c, false);
        } else {
            k::serial::gemm(n, n, n, a, b, c, false);
        }
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
}

template <bool Parallel>
void BM_Conv1d(benchmark::State& state) {
    k::ConvShape s{static_cast<std::size_t>(state.range(0)), 30, 5, 7, 8};
    const auto x = random_vector(s.batch * s.length * s.channels, 3);
    const auto kernel = random_vector(s.width * s.channels * s.filters, 4);
    const auto bias = random_vector(s.filters, 5);
    std::vector<double> y(s.batch * s.out_length() * s.filters);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::parallel::conv1d(s, x, kernel, bias, y);
        } else {
            k::serial::conv1d(s, x, kernel, bias, y);
        }
        benchmark::DoNotOptimize(y.data());
    }
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Arg(64)->Arg(256)->Name("gemm/serial");
BENCHMARK(BM_Gemm<true>)->Arg(64)->Arg(256)->Name("gemm/parallel");
BENCHMARK(BM_Conv1d<false>)->Arg(64)->Arg(512)->Name("conv1d/serial");
BENCHMARK(BM_Conv1d<true>)->Arg(64)->Arg(512)->Name("conv1d/parallel");

BENCHMARK_MAIN();
