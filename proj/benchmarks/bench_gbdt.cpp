// Training and scoring throughput on synthetic dense matrices.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "petaxon/gbdt.hpp"
#include "petaxon/matrix.hpp"

using namespace petaxon;

namespace {

struct Blobs {
    FloatMatrix X;
    std::vector<int> y;
};

Blobs blobs(std::size_t rows, std::size_t cols, std::size_t classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Blobs b{FloatMatrix(rows, cols), {}};
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t label = i % classes;
        b.y.push_back(static_cast<int>(label));
        for (std::size_t j = 0; j < cols; ++j)
            b.X.at(i, j) = static_cast<float>(gauss(rng) + (j % classes == label ? 2.5 : 0.0));
    }
    return b;
}

void bm_quantize(benchmark::State& state) {
    auto data = blobs(static_cast<std::size_t>(state.range(0)), 64, 3, 21);
    for (auto _ : state) benchmark::DoNotOptimize(quantize(data.X, 255));
}
BENCHMARK(bm_quantize)->Arg(2000)->Arg(10000);

void bm_train_binary(benchmark::State& state) {
    auto data = blobs(static_cast<std::size_t>(state.range(0)), 64, 2, 22);
    TrainParams params;
    params.iterations = 20;
    for (auto _ : state)
        benchmark::DoNotOptimize(train(data.X, data.y, Objective::binary, 2, params));
}
BENCHMARK(bm_train_binary)->Arg(2000)->Unit(benchmark::kMillisecond);

void bm_train_multiclass(benchmark::State& state) {
    auto data = blobs(static_cast<std::size_t>(state.range(0)), 64, 6, 23);
    TrainParams params;
    params.iterations = 20;
    for (auto _ : state)
        benchmark::DoNotOptimize(train(data.X, data.y, Objective::multiclass, 6, params));
}
BENCHMARK(bm_train_multiclass)->Arg(2000)->Unit(benchmark::kMillisecond);

void bm_predict(benchmark::State& state) {
    auto data = blobs(4000, 64, 3, 24);
    TrainParams params;
    params.iterations = 40;
    auto model = train(data.X, data.y, Objective::multiclass, 3, params);
    for (auto _ : state) benchmark::DoNotOptimize(predict(model, data.X));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 4000);
}
BENCHMARK(bm_predict)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
