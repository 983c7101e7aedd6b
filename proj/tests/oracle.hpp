#pragma once

// Brute-force reference semantics used by the tests. Nothing here calls the
// engine, the plan compiler or the compiled predicate evaluator.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cepshare/element.hpp"
#include "cepshare/pattern.hpp"

namespace oracle {

using cepshare::DataElement;
using cepshare::Expr;
using cepshare::Pattern;
using cepshare::PolicyConfig;
using cepshare::Schema;

struct Match {
    std::size_t pattern = 0;
    std::vector<uint64_t> seqs;         // step order
    std::vector<uint32_t> step_begin;   // per positive step, starts with 0
    bool operator==(const Match&) const = default;
    bool operator<(const Match& o) const {
        return std::tie(pattern, seqs, step_begin) < std::tie(o.pattern, o.seqs, o.step_begin);
    }
};

/// Bound elements per binding name; `open` lists Kleene bindings that may still grow.
struct NamedEnv {
    std::map<std::string, std::vector<const DataElement*>> bound;
    std::map<std::string, bool> open;
};

/// Direct tree-walking evaluation. Returns nullopt on arithmetic errors.
std::optional<double> eval(const Expr& e, const NamedEnv& env, const Schema& schema);

/// Top-level conjuncts of a pattern predicate.
std::vector<const Expr*> conjuncts(const Pattern& p);

/// Every complete match of `p` on `stream` (single partition) under
/// `policy`, listed in engine emission order.
std::vector<Match> matches(const Pattern& p, const Schema& schema, const std::vector<DataElement>& stream,
                           const PolicyConfig& policy, std::size_t pattern_index = 0);

/// Emission order: last element, then pattern, then colex of the sorted
/// element tuple, then step assignment.
bool emission_less(const Match& a, const Match& b);

/// The first `steps` positive steps of `p` with the negations placed before
/// them and the conjuncts decidable on such a prefix. When the last kept step
/// is a Kleene step, sums over it are dropped because the group is still open.
Pattern truncate(const Pattern& p, std::size_t steps);

/// Sketch key of a prefix of pattern `pattern` spanning `steps` positive
/// steps. `first` and `last` are null for the empty prefix.
using PrefixKey = std::function<uint64_t(std::size_t pattern, std::size_t steps, const DataElement* first,
                                         const DataElement* last)>;

struct Counters {
    std::vector<double> cn;
    std::vector<double> pn;
    bool operator==(const Counters&) const = default;
};

/// Lineage counts under skip-till-any and reuse: every partial match of
/// pattern i adds one pn_i, and every complete match one cn_i, to the key of
/// each of its proper prefixes (the empty prefix included). Partial matches
/// are the matches of the truncated patterns that can still grow.
std::map<uint64_t, Counters> lineage_counts(const std::vector<Pattern>& patterns, const Schema& schema,
                                            const std::vector<DataElement>& stream, const PrefixKey& key);

}  // namespace oracle
