#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cepshare/element.hpp"
#include "cepshare/mask.hpp"
#include "cepshare/pattern.hpp"
#include "cepshare/predicate.hpp"

namespace cepshare {

enum class MaterializationMode { kInstance, kView, kSeparate };

const char* to_string(MaterializationMode m);
std::optional<MaterializationMode> parse_mode(std::string_view s);

inline constexpr std::size_t kNoState = static_cast<std::size_t>(-1);

struct StepSignature {
    TypeId type = kUnknownType;
    StepKind kind = StepKind::kSingle;
    bool operator==(const StepSignature&) const = default;
};

struct PlanState {
    std::size_t id = 0;
    std::vector<StepSignature> sub_pattern;  // positive steps only
    std::vector<std::size_t> accepting_for;  // pattern indices
    PatternMask psd;                         // filled by assess()
    std::size_t parent = kNoState;
    std::vector<std::size_t> out_edges;      // edge indices, self-loop included

    /// True when the last step is a Kleene step that can still extend.
    bool kleene_tail() const { return !sub_pattern.empty() && sub_pattern.back().kind == StepKind::kKleenePlus; }
};

enum class EdgeKind { kAdvance, kKleeneExtend, kKleeneClose };

const char* to_string(EdgeKind k);

/// What one pattern checks when a record crosses an edge.
struct EdgeGuard {
    std::size_t pattern = 0;
    std::size_t step = 0;                  // positive step the trigger element binds to
    std::vector<std::size_t> conjuncts;    // newly decidable conjuncts
    std::vector<std::size_t> negations;    // indices into CompiledPredicate::negations()
    bool accepting = false;                // the successor completes the pattern
    std::vector<std::size_t> final_conjuncts;  // extra conjuncts checked only for the complete match
    bool continues = true;                 // the pattern has transitions out of `to`
};

struct PlanEdge {
    std::size_t from = 0;
    std::size_t to = 0;
    TypeId trigger = kUnknownType;
    EdgeKind kind = EdgeKind::kAdvance;
    std::vector<EdgeGuard> guards;  // sorted by pattern
    PatternMask patterns;           // patterns with a guard on this edge

    const EdgeGuard* guard_for(std::size_t pattern) const;
};

/// Merged multi-pattern plan. State 0 is the start state; states are
/// numbered in BFS order and edges follow their source state's order.
struct ExecutionPlan {
    Schema schema;
    std::vector<Pattern> patterns;  // pattern index i owns mask bit i
    std::vector<CompiledPredicate> predicates;
    std::vector<PlanState> states;
    std::vector<PlanEdge> edges;
    MaterializationMode mode = MaterializationMode::kView;
    /// chains[i][j]: state reached by pattern i after j positive steps.
    std::vector<std::vector<std::size_t>> chains;

    std::size_t pattern_count() const { return patterns.size(); }
    PatternMask all_patterns() const { return PatternMask::first_n(patterns.size()); }
    /// Largest count window over all patterns, 0 when none is count based.
    double max_count_window() const;
    double max_time_window() const;

    /// Structured text: one line per state and per edge.
    std::string dump() const;
    std::string signature_text(const PlanState& s) const;
};

/// Builds the shared plan for `patterns` in one go; equivalent to merging
/// the single-pattern plans. Unknown types are interned into `schema`.
ExecutionPlan build_plan(std::vector<Pattern> patterns, Schema schema, MaterializationMode mode);

/// Linear chain for one pattern.
ExecutionPlan compile(const Pattern& pattern, const Schema& schema);

/// Unifies states with equal sub-patterns (instance, view) or keeps the
/// chains disjoint below a shared start state (separate). Pattern order
/// follows the input order. Throws std::invalid_argument when pattern ids
/// repeat or the attribute lists differ.
ExecutionPlan merge(const std::vector<ExecutionPlan>& plans, MaterializationMode mode);

}  // namespace cepshare
