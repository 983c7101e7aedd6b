#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cepshare/engine.hpp"
#include "cepshare/mask.hpp"
#include "cepshare/plan.hpp"
#include "cepshare/psd.hpp"
#include "cepshare/record.hpp"
#include "cepshare/sketch.hpp"

namespace cepshare {

/// Overload label: bit i set when latency[i] >= bounds[i].
PatternMask trigger(std::span<const double> latency, std::span<const double> bounds);

/// Per-record cost lookups used by selection.
struct CostProvider {
    std::function<double(const MatchRecord&)> plus_sum;             // heap key
    std::function<double(const MatchRecord&, std::size_t)> minus;   // overhead for one pattern
};

CostProvider sketch_costs(const HistoricalSketch& sketch);

struct BudgetVector {
    PatternMask overloaded;
    std::vector<double> total;   // T_i over live records
    std::vector<double> budget;  // B_i = (L_i / l_i) * T_i, overloaded patterns only
    std::vector<double> spend;   // S_i, filled by select()
};

/// Sums each live record's overhead into T_i and scales by L_i / l_i.
/// Per-record estimates run in parallel when `parallel`; the sum is serial.
BudgetVector budgets(ClusterIndex& index, const RecordPool& pool, const ExecutionPlan& plan, const CostProvider& costs,
                     std::span<const double> latency, std::span<const double> bounds, const PatternMask& overloaded,
                     bool parallel = false);

/// Same T_i computation, serial and parallel kernels; exposed for tests and benchmarks.
std::vector<double> overhead_totals_serial(std::span<const MatchRecord* const> records, const ExecutionPlan& plan,
                                           const CostProvider& costs, const PatternMask& overloaded);
std::vector<double> overhead_totals_parallel(std::span<const MatchRecord* const> records, const ExecutionPlan& plan,
                                             const CostProvider& costs, const PatternMask& overloaded);

struct SelectionResult {
    std::vector<RecordHandle> kept;       // admission order
    std::vector<RecordHandle> discarded;  // rejection order
};

/// Hierarchical greedy selection. Records in clusters disjoint from the
/// overload label are kept. Overloaded clusters are drained by descending
/// PSD value, each by its heap; a record is kept when every overloaded
/// pattern it shares still has room in its budget, and discarded otherwise.
/// Updates `budget.spend`. Records are not removed here.
SelectionResult select(ClusterIndex& index, const RecordPool& pool, const ExecutionPlan& plan,
                       const CostProvider& costs, const PatternMask& b_ol, BudgetVector& budget);

struct AuditRow {
    double ts = 0.0;
    PatternMask b_ol;
    std::size_t kept = 0;
    std::size_t discarded = 0;
    std::vector<double> spend;
    std::vector<double> budget;
};

/// CSV header and row: ts,b_ol,kept,discarded,spend_over_budget with
/// "i:S/B" items joined by ';' for every overloaded pattern.
std::string audit_header();
std::string audit_line(const AuditRow& row, std::size_t patterns);

/// One full reduction on a live engine: budgets, selection, discard. When
/// `project_latency` is set, each overloaded l_i is scaled by S_i / T_i so
/// the monitor reflects the reduced state instead of re-triggering on stale
/// history.
AuditRow reduce(Engine& engine, std::span<const double> bounds, const PatternMask& b_ol, double ts,
                bool project_latency, bool parallel = false);

}  // namespace cepshare
