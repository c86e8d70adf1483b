// Serial vs OpenMP evaluation of the closed-form solution and the validity probes.

#include <benchmark/benchmark.h>

#include "swing/cli_io.hpp"

using namespace swing;

namespace {

struct Fixture {
    NetworkState net;
    SwingSystem sys;
    AnalyticSolution sol;
    std::vector<double> ts;

    Fixture() {
        const RawCase raw = load_case_file(std::string(SWINGCART_DATA_DIR) + "/ieee9.json");
        const PreFault pf = initialize(build_network_model(raw));
        Disturbance d;
        d.kind = Disturbance::Kind::LoadScale;
        d.bus = 8;
        d.factor = 0.9;
        d.time = 1.0;
        net = prepare_network(apply_disturbance(pf.model, d));
        const InitialState s = post_disturbance_state(pf.op, net);
        sys = assemble_system(net.model, net.vmap, s.O, s.O_tilde);
        sol = solve_analytic(sys, s.z, 1.0, net.vmap);
        for (int k = 0; k <= 9000; ++k) ts.push_back(1.0 + 1e-3 * k);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_EvaluateMany(benchmark::State& state) {
    const Fixture& f = fixture();
    const Exec exec = state.range(0) ? Exec::Parallel : Exec::Serial;
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_many(f.sol, f.ts, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.ts.size()));
    state.SetLabel(state.range(0) ? "parallel" : "serial");
}

void BM_ProbeMany(benchmark::State& state) {
    const Fixture& f = fixture();
    const Exec exec = state.range(0) ? Exec::Parallel : Exec::Serial;
    for (auto _ : state) benchmark::DoNotOptimize(probe_many(f.sol, f.sys, f.net.model, f.ts, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.ts.size()));
    state.SetLabel(state.range(0) ? "parallel" : "serial");
}

void BM_Solve(benchmark::State& state) {
    const Fixture& f = fixture();
    const Vec z0 = evaluate_z(f.sol, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_analytic(f.sys, z0, 1.0, f.net.vmap));
}

}  // namespace

BENCHMARK(BM_EvaluateMany)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProbeMany)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Solve)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
