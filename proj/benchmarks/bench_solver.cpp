#include <benchmark/benchmark.h>

#include "chfsi/sequence.hpp"

using namespace chfsi;

static void BM_SolveStandard(benchmark::State& state) {
    GeneratorConfig g;
    g.n = state.range(0);
    g.nev = g.n / 20;
    g.length = 2;
    const auto seq = generate_sequence<complex>(g);
    SolverConfig c;
    c.nev = g.nev;
    for (auto _ : state) benchmark::DoNotOptimize(solve_standard<complex>(seq.a[0], std::nullopt, std::nullopt, c));
}
BENCHMARK(BM_SolveStandard)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

// Reuse on (1) or off (0) over a short correlated sequence.
static void BM_Sequence(benchmark::State& state) {
    GeneratorConfig g;
    g.n = 300;
    g.nev = 15;
    g.length = 6;
    const auto seq = generate_sequence<complex>(g);
    SolverConfig c;
    c.nev = g.nev;
    for (auto _ : state) benchmark::DoNotOptimize(solve_sequence(seq, c, state.range(0) != 0));
}
BENCHMARK(BM_Sequence)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
