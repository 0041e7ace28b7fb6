#include <benchmark/benchmark.h>

#include "floquet/evolve.hpp"

using namespace floquet;

namespace {

SimResult rabi_point(double omega, double detuning) {
    const HilbertSpace q(2, {});
    const Operator h = 0.5 * (angular(omega) * build_elementary(q, OpKind::sigma_x) +
                              angular(detuning) * build_elementary(q, OpKind::sigma_z));
    return propagate_unitary(HamiltonianSource::constant(q, h), basis_state(q, 0), linspace(0.0, 1.0, 200),
                             {{"p_e", density(basis_state(q, 1))}});
}

std::vector<ParamPoint> grid(int n) {
    std::vector<double> det;
    for (int i = 0; i < n; ++i) det.push_back(-50.0 + 100.0 * i / n);
    return grid_product({{"detuning", det}});
}

const SweepJob job = [](const ParamPoint& p, std::uint64_t) { return rabi_point(40.0, p.at("detuning")); };

void BM_sweep_parallel(benchmark::State& st) {
    const auto g = grid(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(sweep(g, job, 1));
}

void BM_sweep_serial(benchmark::State& st) {
    const auto g = grid(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(sweep_serial(g, job, 1));
}

const DetunedRun detuned = [](double offset) { return rabi_point(40.0, offset); };

void BM_quasistatic_parallel(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(quasistatic_average(detuned, 0.4, static_cast<int>(st.range(0)), 3));
}

void BM_quasistatic_serial(benchmark::State& st) {
    for (auto _ : st)
        benchmark::DoNotOptimize(quasistatic_average_serial(detuned, 0.4, static_cast<int>(st.range(0)), 3));
}

}  // namespace

BENCHMARK(BM_sweep_parallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_serial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_quasistatic_parallel)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_quasistatic_serial)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
