#include <benchmark/benchmark.h>

#include <memory>

#include <kfree/asymptotics.hpp>
#include <kfree/diffraction.hpp>
#include <kfree/sieve.hpp>
#include <kfree/special_values.hpp>

using namespace kfree;

namespace {

const DiffractionContext& ctx() {
    static DiffractionContext c(
        std::make_shared<const SieveTables>(SieveTables::build(4'000'000)));
    return c;
}

void BM_sieve_build(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(SieveTables::build(state.range(0)));
}
BENCHMARK(BM_sieve_build)->Arg(100'000)->Arg(1'000'000)->Arg(4'000'000)
    ->Unit(benchmark::kMillisecond);

void BM_count_squarefree(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(count_squarefree((double)state.range(0)));
}
BENCHMARK(BM_count_squarefree)->Arg(1'000'000)->Arg(100'000'000)
    ->Unit(benchmark::kMillisecond);

void BM_constants(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(constants_for_k((int)state.range(0)));
}
BENCHMARK(BM_constants)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_z_direct(benchmark::State& state) {
    ctx();  // warm the shared tables outside the timed loop
    double eps = 1.0 / (double)state.range(0);
    for (auto _ : state) benchmark::DoNotOptimize(ctx().z_direct(2, eps, 1'000'000));
}
BENCHMARK(BM_z_direct)->Arg(10)->Arg(1'000)->Unit(benchmark::kMillisecond);

void BM_ztilde_via_zk(benchmark::State& state) {
    ctx();
    for (auto _ : state)
        benchmark::DoNotOptimize(ctx().ztilde_via_zk(2, state.range(0)));
}
BENCHMARK(BM_ztilde_via_zk)->Arg(10)->Arg(10'000)->Unit(benchmark::kMicrosecond);

void BM_zk_factorised(benchmark::State& state) {
    ctx();
    for (auto _ : state) benchmark::DoNotOptimize(ctx().zk_factorised(2, state.range(0)));
}
BENCHMARK(BM_zk_factorised)->Arg(100)->Arg(1'000'000)->Unit(benchmark::kMicrosecond);

void BM_zk_definition(benchmark::State& state) {
    // fresh context each iteration: the cost is building the r/d tables
    auto tables = std::make_shared<const SieveTables>(SieveTables::build(200'000));
    for (auto _ : state) {
        DiffractionContext fresh(tables);
        benchmark::DoNotOptimize(fresh.zk_definition(2, 1, state.range(0), 2'000));
    }
}
BENCHMARK(BM_zk_definition)->Arg(20'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
