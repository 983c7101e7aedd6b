// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "cepshare/selector.hpp"
#include "cepshare/workbench.hpp"

using namespace cepshare;

namespace {

Workload make_workload(std::size_t n) {
    RunConfig c;
    c.patterns = {"template:P3", "template:P4"};
    c.window = 1000;
    c.generator = ds1_spec(n, 7);
    return prepare(c);
}

void guard_eval(benchmark::State& state, bool parallel) {
    static const Workload w = make_workload(2500);
    EngineConfig cfg = w.engine;
    cfg.parallel = parallel;
    for (auto _ : state) {
        Engine e(w.plan, cfg);
        std::size_t cms = 0;
        for (const auto& d : w.stream.elements) cms += e.process(d).cms.size();
        benchmark::DoNotOptimize(cms);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.stream.size()));
}

void overhead_totals(benchmark::State& state, bool parallel) {
    static const Workload w = make_workload(2500);
    static Engine e = [] {
        Engine warm(w.plan, w.engine);
        for (const auto& d : w.stream.elements) warm.process(d);
        return warm;
    }();
    std::vector<const MatchRecord*> records;
    for (auto h : e.live_records()) records.push_back(&e.pool().get(h));
    PatternMask all;
    for (std::size_t i = 0; i < w.plan.pattern_count(); ++i) all.set(i);
    CostProvider costs = sketch_costs(e.sketch());
    for (auto _ : state) {
        auto t = parallel ? overhead_totals_parallel(records, w.plan, costs, all)
                          : overhead_totals_serial(records, w.plan, costs, all);
        benchmark::DoNotOptimize(t.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(records.size()));
    state.counters["records"] = static_cast<double>(records.size());
}

}  // namespace

BENCHMARK_CAPTURE(guard_eval, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(guard_eval, openmp, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(overhead_totals, serial, false)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(overhead_totals, openmp, true)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
