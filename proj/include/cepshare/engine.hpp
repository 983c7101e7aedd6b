#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <queue>
#include <span>
#include <vector>

#include "cepshare/element.hpp"
#include "cepshare/plan.hpp"
#include "cepshare/predicate.hpp"
#include "cepshare/psd.hpp"
#include "cepshare/record.hpp"
#include "cepshare/sketch.hpp"

namespace cepshare {

/// Per-pattern EWMA latency plus the work counters of the last step.
struct LatencyMonitor {
    std::vector<double> latency_ms;  // l_i
    double alpha = 0.2;

    LatencyMonitor() = default;
    LatencyMonitor(std::size_t patterns, double a) : latency_ms(patterns, 0.0), alpha(a) {}
};

/// Splits `elapsed_ms` over states in proportion to their work, then evenly
/// among the patterns sharing each state, and folds the shares into the
/// EWMA. A step without work folds in a zero share for every pattern.
void measure(LatencyMonitor& monitor, double elapsed_ms, std::span<const uint64_t> work_by_state,
             const ExecutionPlan& plan);

enum class CostClock { kSynthetic, kWall };

enum class WorkMeasure { kScanned, kCreated };

struct EngineConfig {
    PolicyConfig policy;  // default for patterns without their own POLICY clause
    SketchConfig sketch;
    bool track_sketch = true;
    CostClock clock = CostClock::kSynthetic;
    double unit_ms = 0.001;  // synthetic cost per unit of work
    double base_ms = 0.0;    // synthetic fixed cost per element that did any work
    /// Unit of synthetic work: buffered records scanned plus records created,
    /// or records created only.
    WorkMeasure work = WorkMeasure::kScanned;
    double alpha = 0.2;
    bool parallel = false;   // OpenMP guard evaluation for large buffers
    std::size_t parallel_min_buffer = 256;
};

/// One emitted complete match. `seqs` are element arrival indexes in step
/// order; step j spans seqs[step_begin[j] .. step_begin[j+1]).
struct CompleteMatch {
    std::size_t pattern = 0;
    std::vector<uint64_t> seqs;
    std::vector<uint32_t> step_begin;
    uint64_t emit_index = 0;
    bool operator==(const CompleteMatch& o) const {
        return pattern == o.pattern && seqs == o.seqs && step_begin == o.step_begin;
    }
};

/// Record lifecycle ledger: created = expired + discarded + consumed +
/// superseded + live.
struct EngineMetrics {
    uint64_t elements = 0;
    uint64_t created = 0;
    uint64_t expired = 0;
    uint64_t discarded = 0;
    uint64_t consumed = 0;
    uint64_t superseded = 0;
    uint64_t cm_emitted = 0;
    uint64_t cm_dropped = 0;  // rejected by consume
    std::vector<uint64_t> cm_per_pattern;
    EvalDiagnostics diag;
};

struct StepOutput {
    std::size_t new_pms = 0;
    std::vector<CompleteMatch> cms;
    uint64_t work = 0;
    double elapsed_ms = 0.0;
};

/// Outcome of one record against one edge.
struct EdgeOutcome {
    PatternMask pass;  // patterns whose guard accepted the element
    PatternMask pm;    // successors kept as partial matches
    PatternMask cm;    // complete matches
};

class Engine {
public:
    Engine(ExecutionPlan plan, EngineConfig cfg);

    const ExecutionPlan& plan() const { return plan_; }
    const EngineConfig& config() const { return cfg_; }

    /// Removes expired pattern bits and records. Returns records removed.
    std::size_t expire(uint64_t now_seq, double now_ts);
    /// Advances every buffer by `d`; expire() must already have run.
    StepOutput step(const DataElement& d);
    /// Folds the last step's work into the latency monitor.
    void measure_last();
    /// expire + step + measure.
    StepOutput process(const DataElement& d);
    /// Drops every live record (partition boundary).
    void flush();

    RecordPool& pool() { return pool_; }
    const RecordPool& pool() const { return pool_; }
    ClusterIndex& index() { return index_; }
    HistoricalSketch& sketch() { return sketch_; }
    const HistoricalSketch& sketch() const { return sketch_; }
    LatencyMonitor& monitor() { return monitor_; }
    const LatencyMonitor& monitor() const { return monitor_; }
    const EngineMetrics& metrics() const { return metrics_; }
    std::span<const uint64_t> last_work() const { return work_; }

    /// Removes a record for all patterns (selection or random shedding).
    void discard(RecordHandle h);
    /// Live records in state order, then buffer order.
    std::vector<RecordHandle> live_records();
    std::size_t live_count() const { return pool_.live(); }

    /// Pure guard evaluation of one record (null: the start record) against
    /// `edges` leaving its state. `effective` receives the record's bits
    /// after consumption and contiguity checks.
    void evaluate(const MatchRecord* r, const DataElement& d, uint64_t pos, std::span<const std::size_t> edges,
                  EdgeOutcome* out, PatternMask& effective, EvalDiagnostics& diag, Env& env) const;

private:
    struct HistEntry {
        DataElement e;
        PatternMask consumed;
    };
    struct ExpiryEntry {
        double at;
        RecordHandle h;
        bool operator>(const ExpiryEntry& o) const { return at > o.at; }
    };
    using ExpiryHeap = std::priority_queue<ExpiryEntry, std::vector<ExpiryEntry>, std::greater<ExpiryEntry>>;
    struct PendingCM {
        std::size_t pattern;
        std::vector<uint64_t> pos;
        std::vector<uint32_t> step_begin;
        std::vector<uint64_t> lineage;
    };
    enum class Loss { kExpired, kConsumed, kSuperseded, kDiscarded };

    const DataElement& at(uint64_t pos) const { return history_[pos - base_].e; }
    HistEntry& hist(uint64_t pos) { return history_[pos - base_]; }
    void build_env(const MatchRecord* r, const DataElement* d, EdgeKind kind, Env& env) const;
    bool negation_clear(const MatchRecord* r, uint64_t pos, std::size_t pattern, const EdgeGuard& g, Env& env,
                        EvalDiagnostics& diag) const;
    void scan_state(std::size_t state, const DataElement& d, uint64_t pos, std::span<const std::size_t> edges);
    void merge_outcome(const MatchRecord* parent, RecordHandle parent_h, std::span<const std::size_t> edges,
                       const EdgeOutcome* out, const DataElement& d, uint64_t pos);
    void lose(RecordHandle h, const PatternMask& bits, Loss why);
    void push_expiry(RecordHandle h);
    void trim_history(uint64_t now_seq, double now_ts);
    bool any_consumed(const std::vector<uint64_t>& pos, std::size_t pattern) const;

    ExecutionPlan plan_;
    EngineConfig cfg_;
    RecordPool pool_;
    ClusterIndex index_;
    HistoricalSketch sketch_;
    LatencyMonitor monitor_;
    EngineMetrics metrics_;

    PatternMask next_mask_, strict_mask_, consume_mask_, count_mask_, time_mask_;
    std::vector<double> window_;                            // per pattern
    std::vector<std::vector<std::pair<std::size_t, std::vector<std::size_t>>>> triggers_;  // per type: (state, edges)
    uint64_t start_key_ = 0;

    std::deque<HistEntry> history_;
    uint64_t base_ = 0;   // position of history_.front()
    uint64_t next_pos_ = 0;
    std::vector<std::deque<uint64_t>> type_pos_;  // per type, ascending positions

    ExpiryHeap count_heap_, time_heap_;
    std::vector<RecordHandle> strict_recent_;
    uint64_t serial_ = 0;
    uint64_t emit_index_ = 0;
    std::vector<uint64_t> work_;
    double last_elapsed_ms_ = 0.0;

    // Per-step scratch.
    std::vector<MatchRecord> pending_pm_;
    std::vector<PendingCM> pending_cm_;
    std::vector<EdgeOutcome> outcomes_;
    std::vector<PatternMask> effective_;
};

/// Exhaustive evaluation without reduction; complete matches in emission order.
std::vector<CompleteMatch> golden_run(const Stream& stream, const ExecutionPlan& plan, const EngineConfig& cfg = {});

}  // namespace cepshare
