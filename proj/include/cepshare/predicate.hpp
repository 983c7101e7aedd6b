#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cepshare/element.hpp"
#include "cepshare/pattern.hpp"

namespace cepshare {

/// Counters for evaluation errors that turn a conjunct false.
struct EvalDiagnostics {
    uint64_t division_by_zero = 0;
    uint64_t domain_error = 0;
    void merge(const EvalDiagnostics& o) {
        division_by_zero += o.division_by_zero;
        domain_error += o.domain_error;
    }
};

/// Binding environment over positive step slots. Step j holds
/// elems[begin[j] .. begin[j+1]); steps >= bound() are unbound. When
/// `last_open` is set, the last bound step is a Kleene step that may still
/// grow, so aggregates over it are not yet decidable.
struct Env {
    std::vector<const DataElement*> elems;
    std::vector<uint32_t> begin{0};
    bool last_open = false;
    const DataElement* negated = nullptr;  // candidate for the negated step under test
    int negated_step = -1;

    void clear() {
        elems.clear();
        begin.assign(1, 0);
        last_open = false;
        negated = nullptr;
        negated_step = -1;
    }
    std::size_t bound() const { return begin.size() - 1; }
    void push_step() { begin.push_back(static_cast<uint32_t>(elems.size())); }
    /// Appends `e` to the most recently opened step.
    void add(const DataElement* e) {
        elems.push_back(e);
        begin.back() = static_cast<uint32_t>(elems.size());
    }
    std::span<const DataElement* const> step(std::size_t j) const {
        return {elems.data() + begin[j], elems.data() + begin[j + 1]};
    }
};

/// A pattern predicate resolved against a schema and split into conjuncts,
/// each annotated with the steps it needs. Conjuncts are evaluated as soon
/// as they become decidable; undecidable ones count as satisfied.
class CompiledPredicate {
public:
    struct Node {
        Expr::Kind kind;
        double number = 0.0;
        int step = -1;       // positive step index, or -1 when `negated`
        bool negated = false;
        std::size_t attr = 0;
        UnaryFn fn = UnaryFn::kNeg;
        BinaryOp op = BinaryOp::kAdd;
        int lhs = -1, rhs = -1;
    };

    struct Conjunct {
        int root = -1;                 // general conjunct
        bool same = false;             // SAME equality: every element of `same_b` equals first of `same_a`
        std::size_t same_attr = 0;
        int same_a = -1, same_b = -1;  // positive step indices (same_b may be negated via `negated_step`)
        std::vector<int> steps;        // positive steps referenced
        std::vector<int> aggregated;   // Kleene steps referenced through SUM
        int negated_step = -1;         // index into Pattern::steps of the negated binding, or -1
    };

    /// Negated step placed in the gap before positive step `before_positive`.
    struct Negation {
        std::size_t step_index;  // index in Pattern::steps
        TypeId type;
        std::size_t before_positive;
        std::vector<std::size_t> filters;  // conjunct ids
    };

    CompiledPredicate() = default;
    CompiledPredicate(const Pattern& pattern, Schema& schema);

    const std::vector<Conjunct>& conjuncts() const { return conjuncts_; }
    const std::vector<Negation>& negations() const { return negations_; }

    /// Ids of positive conjuncts decidable with `bound` steps bound (the last
    /// one still open if `last_open`).
    std::vector<std::size_t> ready(std::size_t bound, bool last_open) const;

    bool eval_conjunct(std::size_t id, const Env& env, EvalDiagnostics* diag) const;
    bool eval_all(std::span<const std::size_t> ids, const Env& env, EvalDiagnostics* diag) const;

    /// Evaluates every positive conjunct decidable in `env`.
    bool eval_decidable(const Env& env, EvalDiagnostics* diag) const;

    std::size_t positive_steps() const { return kleene_.size(); }
    bool is_kleene(std::size_t step) const { return kleene_[step]; }

private:
    bool eval_node(int id, const Env& env, EvalDiagnostics* diag, double& out) const;

    std::vector<Node> nodes_;
    std::vector<Conjunct> conjuncts_;
    std::vector<Negation> negations_;
    std::vector<bool> kleene_;
};

/// Elements bound to one named binding. `open` marks a Kleene binding that
/// may still grow.
struct NamedBinding {
    std::vector<DataElement> elements;
    bool open = false;
};
using NamedEnv = std::map<std::string, NamedBinding>;

/// Evaluates a pattern's predicate over a name-keyed environment. Conjuncts
/// that reference unbound bindings (or aggregate an open Kleene binding)
/// are deferred and count as true. Conjuncts over negated bindings are not
/// part of the positive predicate and are ignored here.
bool eval_predicate(const Pattern& pattern, const Schema& schema, const NamedEnv& env,
                    EvalDiagnostics* diag = nullptr);

}  // namespace cepshare
