#include <benchmark/benchmark.h>

#include "chfsi/filter.hpp"
#include "chfsi/linalg.hpp"

using namespace chfsi;

namespace {

Matrix<complex> bench_hermitian(Index n) {
    const Matrix<complex> g = random_block<complex>(n, n, 7);
    return (g + g.adjoint()) * 0.5;
}

}  // namespace

static void BM_HermitianMultiply(benchmark::State& state) {
    const Index n = state.range(0), k = state.range(1);
    const Matrix<complex> h = bench_hermitian(n);
    const Matrix<complex> y = random_block<complex>(n, k, 8);
    for (auto _ : state) benchmark::DoNotOptimize(hermitian_multiply(h, y));
    state.SetItemsProcessed(state.iterations() * k);
}
BENCHMARK(BM_HermitianMultiply)->Args({300, 1})->Args({300, 32})->Args({1000, 32})->Unit(benchmark::kMicrosecond);

static void BM_QR(benchmark::State& state) {
    const Index n = state.range(0), k = state.range(1);
    const Matrix<complex> y = random_block<complex>(n, k, 9);
    for (auto _ : state) benchmark::DoNotOptimize(qr_orthonormalize(y, 0));
}
BENCHMARK(BM_QR)->Args({300, 32})->Args({1000, 64})->Unit(benchmark::kMicrosecond);

// Same total degree budget, uniform versus spread degrees.
static void BM_Filter(benchmark::State& state) {
    const Index n = 500, k = 32;
    const bool spread = state.range(0) != 0;
    const Matrix<complex> h = bench_hermitian(n);
    const Matrix<complex> y = random_block<complex>(n, k, 10);
    std::vector<int> degrees(static_cast<std::size_t>(k), 20);
    if (spread)
        for (Index j = 0; j < k; ++j) degrees[static_cast<std::size_t>(j)] = 5 + static_cast<int>(j % 31);
    const auto plan = plan_degrees(degrees);
    const auto iv = FilterInterval::make(0.0, 40.0, -40.0);
    for (auto _ : state) benchmark::DoNotOptimize(apply_filter(h, y, plan, iv));
}
BENCHMARK(BM_Filter)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
