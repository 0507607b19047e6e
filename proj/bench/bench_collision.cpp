#include <benchmark/benchmark.h>
#include <omp.h>

#include <map>
#include <memory>

#include "pbe/collision.hpp"

using namespace pbe;

namespace {

struct Setup {
    TorusGrid grid;
    DispersionTable disp;
    CollisionModel model;
    RealField W;

    explicit Setup(int n)
        : grid(GridSpec{2, n}), disp(grid, DispersionParams{2, 1.0}),
          model(grid, disp, DeltaKernel::automatic(grid.spec(), disp.params()), 1e8),
          W(disp.omega_pow(-1))
    {
        for (Index i = 0; i < W.size(); ++i) W[i] *= 1.0 + 0.1 * std::cos(grid.k(i, 0));
    }
};

Setup& setup(int n)
{
    static std::map<int, std::unique_ptr<Setup>> cache;
    auto& s = cache[n];
    if (!s) s = std::make_unique<Setup>(n);
    return *s;
}

void BM_collision_reference(benchmark::State& st)
{
    Setup& s = setup(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(s.model.collision(s.W, KernelPath::reference));
}

void BM_collision_parallel(benchmark::State& st)
{
    Setup& s = setup(static_cast<int>(st.range(0)));
    omp_set_num_threads(static_cast<int>(st.range(1)));
    for (auto _ : st) benchmark::DoNotOptimize(s.model.collision(s.W, KernelPath::parallel));
    st.counters["threads"] = static_cast<double>(st.range(1));
}

void BM_linearization_reference(benchmark::State& st)
{
    Setup& s = setup(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(s.model.linearization(nullptr, KernelPath::reference));
}

void BM_linearization_parallel(benchmark::State& st)
{
    Setup& s = setup(static_cast<int>(st.range(0)));
    omp_set_num_threads(static_cast<int>(st.range(1)));
    for (auto _ : st) benchmark::DoNotOptimize(s.model.linearization(nullptr, KernelPath::parallel));
    st.counters["threads"] = static_cast<double>(st.range(1));
}

void BM_collision_batch(benchmark::State& st)
{
    Setup& s = setup(12);
    omp_set_num_threads(static_cast<int>(st.range(1)));
    CellBatch B(s.W.size(), st.range(0));
    for (Index c = 0; c < B.cols(); ++c) B.col(c) = s.W;
    for (auto _ : st) benchmark::DoNotOptimize(s.model.collision_batch(B));
    st.counters["cells"] = static_cast<double>(st.range(0));
}

void thread_args(benchmark::internal::Benchmark* b)
{
    int hw = omp_get_num_procs();
    for (int n : {12, 16}) {
        b->Args({n, 1});
        if (hw > 1) b->Args({n, hw});
    }
}

} // namespace

BENCHMARK(BM_collision_reference)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_collision_parallel)->Apply(thread_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_linearization_reference)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_linearization_parallel)->Args({12, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_collision_batch)->Args({64, 1})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
