#include "hcg/debias.hpp"
#include "hcg/discover.hpp"
#include "hcg/effects.hpp"
#include "hcg/scenario.hpp"

#include <benchmark/benchmark.h>

using namespace hcg;

namespace {

Dataset scenario_data(const char* id, int n, std::uint64_t seed) {
    ScenarioSpec spec = scenario_preset(id);
    spec.seed = seed;
    spec.n = n;
    return draw_scenario(spec).data;
}

void BM_acyclicity_gradient(benchmark::State& state) {
    const int s = static_cast<int>(state.range(0));
    const BlockLayout l(2, s);
    Rng rng(1);
    WeightedGraph g(l);
    for (int i = 0; i < l.size(); ++i)
        for (int j = 0; j < l.size(); ++j) g.b(i, j) = 0.3 * (2.0 * rng.uniform() - 1.0);
    const double t = 1.0 / l.size();
    for (auto _ : state) {
        benchmark::DoNotOptimize(acyclicity(g, t));
    }
}
BENCHMARK(BM_acyclicity_gradient)->Arg(6)->Arg(16)->Arg(38);

void BM_forward_sample(benchmark::State& state) {
    ScenarioSpec spec = scenario_preset("S3");
    spec.seed = 2;
    Rng rng(2);
    const WeightedGraph truth = gen_true_graph(spec, rng);
    for (auto _ : state) {
        Rng sample_rng(3);
        benchmark::DoNotOptimize(
            forward_sample(truth, static_cast<int>(state.range(0)), 1.0, true, sample_rng));
    }
}
BENCHMARK(BM_forward_sample)->Arg(500)->Arg(2000);

void BM_fit_s1(benchmark::State& state) {
    const Dataset data = scenario_data("S1", 500, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit(data));
    }
}
BENCHMARK(BM_fit_s1)->Unit(benchmark::kMillisecond);

void BM_fit_s3(benchmark::State& state) {
    const Dataset data = scenario_data("S3", 1000, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit(data));
    }
}
BENCHMARK(BM_fit_s3)->Unit(benchmark::kMillisecond);

void BM_lasso(benchmark::State& state) {
    const int n = 1000, k = static_cast<int>(state.range(0));
    Rng rng(7);
    Matrix x(n, k);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < k; ++c) x(r, c) = rng.normal();
    Vector y = x.col(0) - x.col(k - 1);
    for (int r = 0; r < n; ++r) y(r) += rng.normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(lasso(x, y, 0.01));
    }
}
BENCHMARK(BM_lasso)->Arg(5)->Arg(20);

void BM_effect_report(benchmark::State& state) {
    ScenarioSpec spec = scenario_preset("S3");
    Rng rng(9);
    const Parameters params = unpack(gen_true_graph(spec, rng));
    const Vector x = Vector::Zero(2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(effect_report(params, x));
    }
}
BENCHMARK(BM_effect_report);

void BM_mc_do_oracle(benchmark::State& state) {
    ScenarioSpec spec = scenario_preset("S3");
    Rng rng(11);
    const Parameters params = unpack(gen_true_graph(spec, rng));
    DoIntervention iv;
    iv.treatment = 1.0;
    for (auto _ : state) {
        Rng mc_rng(12);
        benchmark::DoNotOptimize(
            mc_do_oracle(params, Vector::Zero(2), iv, static_cast<int>(state.range(0)), mc_rng));
    }
}
BENCHMARK(BM_mc_do_oracle)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
