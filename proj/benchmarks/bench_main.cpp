#include <map>

#include <benchmark/benchmark.h>

#include "cwlssvm/data.hpp"
#include "cwlssvm/kernels.hpp"
#include "cwlssvm/lssvm.hpp"
#include "cwlssvm/solvers.hpp"
#include "cwlssvm/sparse.hpp"

using namespace cwlssvm;

namespace {

const VapnikSample& sample(Index n) {
    static std::map<Index, VapnikSample> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, generate_vapnik(n, 1)).first;
    }
    return it->second;
}

void BM_BuildGrams(benchmark::State& state) {
    const auto& s = sample(state.range(0));
    const auto spec = KernelSpec::rbf_linear_library(10, 2.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_grams(s.data.x, std::nullopt, spec));
    }
}
BENCHMARK(BM_BuildGrams)->Arg(100)->Arg(400);

void BM_SolveKkt(benchmark::State& state) {
    const auto& s = sample(state.range(0));
    KktSystem sys;
    sys.block = build_grams(s.data.x, std::nullopt, KernelSpec::uniform_rbf(10, 2.0)).train_sum;
    sys.block.diagonal().array() += 0.01;
    sys.border = Vector::Ones(sys.size());
    sys.rhs = s.data.y;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_kkt(sys));
    }
}
BENCHMARK(BM_SolveKkt)->Arg(100)->Arg(400);

void BM_TrainRegressor(benchmark::State& state) {
    const auto& s = sample(state.range(0));
    const auto spec = KernelSpec::uniform_rbf(10, 2.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(train_regressor(s.data.x, s.data.y, spec, 100.0));
    }
}
BENCHMARK(BM_TrainRegressor)->Arg(100)->Arg(400);

void BM_FitL1(benchmark::State& state) {
    const auto& s = sample(state.range(0));
    const auto grams = build_grams(s.data.x, std::nullopt, KernelSpec::uniform_rbf(10, 2.0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_l1_components(grams, s.data.y, 1.0));
    }
}
BENCHMARK(BM_FitL1)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FitStp(benchmark::State& state) {
    const auto& s = sample(state.range(0));
    const auto grams = build_grams(s.data.x, std::nullopt, KernelSpec::uniform_rbf(10, 2.0));
    StpOptions o;
    o.a = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_stp_components(grams, s.data.y, 20.0, o));
    }
}
BENCHMARK(BM_FitStp)->Arg(100)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
