#include "cepshare/selector.hpp"

#include <sstream>

namespace cepshare {

PatternMask trigger(std::span<const double> latency, std::span<const double> bounds) {
    PatternMask m;
    for (std::size_t i = 0; i < latency.size() && i < bounds.size(); ++i)
        if (latency[i] >= bounds[i]) m.set(i);
    return m;
}

CostProvider sketch_costs(const HistoricalSketch& sketch) {
    return CostProvider{
        [&sketch](const MatchRecord& r) { return sketch.plus_sum(r); },
        [&sketch](const MatchRecord& r, std::size_t i) { return sketch.minus(r, i); },
    };
}

std::vector<double> overhead_totals_serial(std::span<const MatchRecord* const> records, const ExecutionPlan& plan,
                                           const CostProvider& costs, const PatternMask& overloaded) {
    std::vector<double> total(plan.pattern_count(), 0.0);
    for (const MatchRecord* r : records)
        (plan.states[r->state].psd & overloaded).for_each([&](std::size_t i) { total[i] += costs.minus(*r, i); });
    return total;
}

std::vector<double> overhead_totals_parallel(std::span<const MatchRecord* const> records, const ExecutionPlan& plan,
                                             const CostProvider& costs, const PatternMask& overloaded) {
    const std::size_t n = plan.pattern_count();
    const std::size_t m = records.size();
    std::vector<double> per(m * n, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < m; ++k) {
        const MatchRecord& r = *records[k];
        (plan.states[r.state].psd & overloaded).for_each([&](std::size_t i) { per[k * n + i] = costs.minus(r, i); });
    }
    // Serial sum in record order keeps the result identical to the reference.
    std::vector<double> total(n, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (overloaded.test(i) && plan.states[records[k]->state].psd.test(i)) total[i] += per[k * n + i];
    return total;
}

BudgetVector budgets(ClusterIndex& index, const RecordPool& pool, const ExecutionPlan& plan, const CostProvider& costs,
                     std::span<const double> latency, std::span<const double> bounds, const PatternMask& overloaded,
                     bool parallel) {
    std::vector<const MatchRecord*> records;
    for (std::size_t s = 0; s < index.state_count(); ++s) {
        index.compact(s, pool);
        for (RecordHandle h : index.buffer(s)) records.push_back(&pool.get(h));
    }
    BudgetVector b;
    b.overloaded = overloaded;
    b.total = parallel ? overhead_totals_parallel(records, plan, costs, overloaded)
                       : overhead_totals_serial(records, plan, costs, overloaded);
    const std::size_t n = plan.pattern_count();
    b.budget.assign(n, 0.0);
    b.spend.assign(n, 0.0);
    overloaded.for_each([&](std::size_t i) {
        double ratio = latency[i] > 0.0 ? bounds[i] / latency[i] : 1.0;
        b.budget[i] = ratio * b.total[i];
    });
    return b;
}

SelectionResult select(ClusterIndex& index, const RecordPool& pool, const ExecutionPlan& plan,
                       const CostProvider& costs, const PatternMask& b_ol, BudgetVector& budget) {
    SelectionResult res;
    if (budget.spend.size() != plan.pattern_count()) budget.spend.assign(plan.pattern_count(), 0.0);
    for (Cluster* c : index.clusters_descending()) {
        PatternMask hot = c->psd & b_ol;
        if (hot.none()) {
            for (std::size_t s : c->states)
                for (RecordHandle h : index.buffer(s))
                    if (pool.alive(h)) res.kept.push_back(h);
            continue;
        }
        index.rebuild_heap(*c, pool, costs.plus_sum);
        while (const HeapEntry* top = index.heap_top(*c, pool)) {
            RecordHandle h = top->handle;
            index.heap_pop(*c);
            const MatchRecord& r = pool.get(h);
            bool fits = true;
            hot.for_each([&](std::size_t i) {
                if (budget.spend[i] + costs.minus(r, i) > budget.budget[i]) fits = false;
            });
            if (fits) {
                hot.for_each([&](std::size_t i) { budget.spend[i] += costs.minus(r, i); });
                res.kept.push_back(h);
            } else {
                res.discarded.push_back(h);
            }
        }
    }
    return res;
}

std::string audit_header() { return "ts,b_ol,kept,discarded,spend_over_budget\n"; }

std::string audit_line(const AuditRow& row, std::size_t patterns) {
    std::ostringstream os;
    os.precision(10);
    os << row.ts << ',' << row.b_ol.to_string(patterns) << ',' << row.kept << ',' << row.discarded << ',';
    bool first = true;
    row.b_ol.for_each([&](std::size_t i) {
        os << (first ? "" : ";") << i + 1 << ':' << row.spend[i] << '/' << row.budget[i];
        first = false;
    });
    os << '\n';
    return os.str();
}

AuditRow reduce(Engine& engine, std::span<const double> bounds, const PatternMask& b_ol, double ts,
                bool project_latency, bool parallel) {
    CostProvider costs = sketch_costs(engine.sketch());
    auto& lat = engine.monitor().latency_ms;
    BudgetVector b = budgets(engine.index(), engine.pool(), engine.plan(), costs, lat, bounds, b_ol, parallel);
    SelectionResult sel = select(engine.index(), engine.pool(), engine.plan(), costs, b_ol, b);
    for (RecordHandle h : sel.discarded) engine.discard(h);
    if (project_latency)
        b_ol.for_each([&](std::size_t i) {
            if (b.total[i] > 0.0) lat[i] *= b.spend[i] / b.total[i];
        });
    AuditRow row;
    row.ts = ts;
    row.b_ol = b_ol;
    row.kept = sel.kept.size();
    row.discarded = sel.discarded.size();
    row.spend = b.spend;
    row.budget = b.budget;
    return row;
}

}  // namespace cepshare
