#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cepshare/engine.hpp"
#include "cepshare/plan.hpp"
#include "cepshare/selector.hpp"
#include "cepshare/workloads.hpp"
#include "json.hpp"

namespace cepshare {

enum class Strategy { kNone, kSharp, kRandomInput, kRandomState };

const char* to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);

struct BucketSpec {
    std::string attribute;
    double width = 1.0;
    bool every = false;  // bucket every element of a record, not only the last
};

/// Everything one run needs. All randomness derives from `seed` and the
/// generator seed.
struct RunConfig {
    std::string name = "run";
    /// Pattern text, or "template:P3" for a shipped template.
    std::vector<std::string> patterns;
    double window = 1000.0;  // count window for templates

    std::optional<GeneratorSpec> generator;
    std::optional<std::string> input_csv;
    std::optional<std::string> partition_column;

    PolicyConfig policy;
    MaterializationMode mode = MaterializationMode::kView;

    /// Explicit bounds per pattern, or a factor applied to the mean latency
    /// of the unreduced run.
    std::vector<double> bounds_ms;
    std::optional<double> bound_factor;

    Strategy strategy = Strategy::kNone;
    /// Random shedding ratio; negative means 1 - min(L_i / l_i) at trigger time.
    double drop_ratio = -1.0;
    uint64_t seed = 1;

    // Sketch
    std::optional<std::vector<std::string>> partition_attrs;  // default: SAME attributes
    std::vector<BucketSpec> buckets;
    std::optional<uint64_t> epoch;  // default: the largest count window
    ThetaKind theta = ThetaKind::kOne;
    std::size_t lossy_width = 0;

    // Cost model of the engine
    CostClock clock = CostClock::kSynthetic;
    WorkMeasure work = WorkMeasure::kScanned;
    double unit_ms = 0.001;
    double base_ms = 0.0;
    double alpha = 0.2;
    bool parallel = false;
    bool project_latency = true;

    /// Element span of one rolling recall bucket; 0 means the window.
    uint64_t rolling_bucket = 0;

    std::string out_dir;  // empty: no files
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

/// Identity of a complete match for recall: pattern and sorted element seqs.
using MatchKey = std::pair<std::size_t, std::vector<uint64_t>>;

/// Per-pattern recall of `reduced` against `golden`. Patterns without golden
/// matches get recall 1.
std::vector<double> recall(const std::set<MatchKey>& golden, const std::set<MatchKey>& reduced, std::size_t patterns);

/// Input stream and plan resolved from a config.
struct Workload {
    Stream stream;
    ExecutionPlan plan;
    EngineConfig engine;
};

Workload prepare(const RunConfig& c);

/// Output of one pass over the stream with one strategy.
struct Trace {
    std::vector<CompleteMatch> cms;
    std::vector<double> element_ms;     // per input element, 0 when shed
    std::vector<double> mean_latency;   // mean of l_i over all elements
    std::vector<std::string> audit;     // audit CSV lines
    uint64_t triggers = 0;
    uint64_t dropped_inputs = 0;
    uint64_t discarded = 0;
    EngineMetrics metrics;
    std::string sketch_csv;
    double wall_seconds = 0.0;
};

/// Runs `strategy` over the workload with the given bounds. Per element:
/// partition flush, expire, trigger, reduction, step, measure.
Trace execute(const Workload& w, const RunConfig& c, Strategy strategy, const std::vector<double>& bounds);

struct RollingPoint {
    uint64_t begin = 0;  // first element index of the bucket
    uint64_t golden = 0;
    uint64_t matched = 0;
    double recall = 1.0;
};

/// Micro-averaged recall of golden matches grouped by the bucket of their
/// last element.
std::vector<RollingPoint> rolling_recall(const std::vector<CompleteMatch>& golden, const std::set<MatchKey>& reduced,
                                         uint64_t bucket, uint64_t elements);

struct PatternResult {
    std::string text;
    double bound_ms = 0.0;
    double mean_latency_ms = 0.0;          // unreduced run
    double reduced_mean_latency_ms = 0.0;  // this run
    uint64_t golden = 0;
    uint64_t produced = 0;
    uint64_t matched = 0;
    double recall = 1.0;
};

struct RunResult {
    RunConfig config;
    std::vector<PatternResult> patterns;
    double macro_recall = 1.0;
    uint64_t elements = 0;
    Trace golden;
    Trace reduced;
    std::vector<RollingPoint> rolling;
    double p50_ms = 0.0, p95_ms = 0.0, p99_ms = 0.0;
    std::string plan_dump;
};

/// Unreduced pass, bound calibration, reduced pass and metrics.
RunResult run(const RunConfig& c);

/// Files under c.out_dir named <name>_*: metrics.csv (one row per
/// pattern), rolling.csv, audit.csv, matches.csv, sketch.csv, plan.txt and
/// manifest.json. Only the manifest holds wall-clock numbers.
void write_outputs(const RunResult& r);

std::string metrics_header();
std::string metrics_rows(const RunResult& r);

/// Runs every config of a suite `repeat` times with seeds seed, seed+1, ...
/// Runs execute in parallel with OpenMP; results keep suite order.
std::vector<RunResult> bench(const std::vector<RunConfig>& suite, int repeat);

/// Aggregates every *_metrics.csv under `dir` by (name prefix, strategy,
/// pattern) into mean and standard deviation of recall. Writes CSV to `out`
/// and a JSON summary next to it.
void report(const std::string& dir, const std::string& out);

}  // namespace cepshare
