#include <benchmark/benchmark.h>

#include "nsfde/integrator.hpp"

namespace {

using namespace nsfde;

SchemeConfig scheme_for(double h, double T) {
    SchemeConfig cfg;
    cfg.h = h;
    cfg.T = T;
    cfg.master_seed = 99;
    return cfg;
}

void BM_ExamplePathSteps(benchmark::State& state) {
    const auto model = make_example_model(450.0, 1.41421356, 1.0, 0.25);
    const auto cfg = scheme_for(1e-3, state.range(0) * 1e-3);
    const double mu2r = r_moment(model.mu(), 0.5);
    const double T_mem = required_depth(model.mu(), 0.25, cfg.tol_tail * mu2r, cfg.h);
    const auto xi = Segment::constant(cfg.h, static_cast<int>(T_mem / cfg.h), 1.0);
    long path = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_path(model, xi, cfg, path++));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExamplePathSteps)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_CoupledPairSteps(benchmark::State& state) {
    const auto model = make_example_model(450.0, 1.41421356, 1.0, 0.25);
    const auto cfg = scheme_for(1e-3, state.range(0) * 1e-3);
    const double mu2r = r_moment(model.mu(), 0.5);
    const double T_mem = required_depth(model.mu(), 0.25, cfg.tol_tail * mu2r, cfg.h);
    const auto xi = Segment::constant(cfg.h, static_cast<int>(T_mem / cfg.h), 1.0);
    const auto eta = Segment::constant(cfg.h, xi.depth(), 0.0);
    long pair = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_coupled_pair(model, xi, eta, cfg, pair++));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}
BENCHMARK(BM_CoupledPairSteps)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
