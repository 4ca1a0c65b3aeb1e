#include <benchmark/benchmark.h>

#include "nsfde/dl.hpp"
#include "nsfde/measure.hpp"

namespace {

using namespace nsfde;

void BM_IntegrateSegment(benchmark::State& state) {
    const auto mu = FadingMeasure({{-1.0, 0.25}}, {{1.0, 0.75}});
    const double r = 0.25;
    const double h = 0.01;
    const double T = required_depth(mu, r, 1e-10, h);
    const auto seg = Segment::from_function(
        static_cast<int>(T / h) * 0 + h, static_cast<int>(T / h), 1,
        [](double th) { return Eigen::VectorXd::Constant(1, std::cos(th)); });
    for (auto _ : state) {
        benchmark::DoNotOptimize(integrate_segment(mu, seg, IntegrationMode::squared, r));
    }
    state.SetItemsProcessed(state.iterations() * seg.points());
}
BENCHMARK(BM_IntegrateSegment);

void BM_RMoment(benchmark::State& state) {
    const auto mu = FadingMeasure({{-1.0, 0.2}, {-2.5, 0.1}}, {{1.0, 0.4}, {3.0, 0.3}});
    double r = 0.0;
    for (auto _ : state) {
        r += 1e-9;
        benchmark::DoNotOptimize(r_moment(mu, 0.4 + r));
    }
}
BENCHMARK(BM_RMoment);

void BM_EmpiricalDl(benchmark::State& state) {
    std::vector<Segment> a, b;
    for (int i = 0; i < 128; ++i) {
        a.push_back(Segment::constant(0.05, 256, 0.01 * i));
        b.push_back(Segment::constant(0.05, 256, 0.5 + 0.01 * i));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(empirical_dl(a, b, 0.25, state.range(0), 7));
    }
}
BENCHMARK(BM_EmpiricalDl)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
