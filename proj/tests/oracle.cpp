#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace oracle {

using cepshare::BinaryOp;
using cepshare::ConsumptionPolicy;
using cepshare::SelectionPolicy;
using cepshare::StepKind;
using cepshare::UnaryFn;
using cepshare::Window;

std::optional<double> eval(const Expr& e, const NamedEnv& env, const Schema& schema) {
    auto attr_index = [&](const std::string& name) { return *schema.find_attribute(name); };
    switch (e.kind) {
        case Expr::Kind::kNumber: return e.number;
        case Expr::Kind::kAttr: return env.bound.at(e.binding).front()->attrs[attr_index(e.attribute)];
        case Expr::Kind::kSum: {
            double s = 0;
            for (const DataElement* d : env.bound.at(e.binding)) s += d->attrs[attr_index(e.attribute)];
            return s;
        }
        case Expr::Kind::kUnary: {
            auto x = eval(e.args[0], env, schema);
            if (!x) return std::nullopt;
            switch (e.fn) {
                case UnaryFn::kNeg: return -*x;
                case UnaryFn::kSin: return std::sin(*x);
                case UnaryFn::kCos: return std::cos(*x);
                case UnaryFn::kAsin:
                    if (*x < -1 || *x > 1) return std::nullopt;
                    return std::asin(*x);
                case UnaryFn::kAcos:
                    if (*x < -1 || *x > 1) return std::nullopt;
                    return std::acos(*x);
                case UnaryFn::kSqrt:
                    if (*x < 0) return std::nullopt;
                    return std::sqrt(*x);
            }
            return std::nullopt;
        }
        case Expr::Kind::kBinary: {
            auto a = eval(e.args[0], env, schema);
            auto b = eval(e.args[1], env, schema);
            if (!a || !b) return std::nullopt;
            switch (e.op) {
                case BinaryOp::kAdd: return *a + *b;
                case BinaryOp::kSub: return *a - *b;
                case BinaryOp::kMul: return *a * *b;
                case BinaryOp::kDiv:
                    if (*b == 0) return std::nullopt;
                    return *a / *b;
                case BinaryOp::kLt: return *a < *b ? 1.0 : 0.0;
                case BinaryOp::kLe: return *a <= *b ? 1.0 : 0.0;
                case BinaryOp::kGt: return *a > *b ? 1.0 : 0.0;
                case BinaryOp::kGe: return *a >= *b ? 1.0 : 0.0;
                case BinaryOp::kEq: return *a == *b ? 1.0 : 0.0;
            }
            return std::nullopt;
        }
        case Expr::Kind::kAnd: {
            for (const auto& t : e.args) {
                auto v = eval(t, env, schema);
                if (!v || *v == 0) return 0.0;
            }
            return 1.0;
        }
        case Expr::Kind::kSame: {
            // Every bound element agrees on each listed attribute.
            for (const auto& name : e.same_attrs) {
                std::optional<double> ref;
                for (const auto& [b, elems] : env.bound)
                    for (const DataElement* d : elems) {
                        double v = d->attrs[attr_index(name)];
                        if (!ref) ref = v;
                        if (*ref != v) return 0.0;
                    }
            }
            return 1.0;
        }
    }
    return std::nullopt;
}

std::vector<const Expr*> conjuncts(const Pattern& p) {
    std::vector<const Expr*> out;
    if (!p.predicate) return out;
    if (p.predicate->kind == Expr::Kind::kAnd)
        for (const auto& t : p.predicate->args) out.push_back(&t);
    else
        out.push_back(&*p.predicate);
    return out;
}

bool emission_less(const Match& a, const Match& b) {
    if (a.seqs.back() != b.seqs.back()) return a.seqs.back() < b.seqs.back();
    if (a.pattern != b.pattern) return a.pattern < b.pattern;
    auto ia = a.seqs.rbegin(), ib = b.seqs.rbegin();
    for (; ia != a.seqs.rend() && ib != b.seqs.rend(); ++ia, ++ib)
        if (*ia != *ib) return *ia < *ib;
    if (a.seqs.size() != b.seqs.size()) return a.seqs.size() < b.seqs.size();
    return a.step_begin < b.step_begin;
}

namespace {

void collect_refs(const Expr& e, std::set<std::string>& plain, std::set<std::string>& summed) {
    if (e.kind == Expr::Kind::kAttr) plain.insert(e.binding);
    if (e.kind == Expr::Kind::kSum) summed.insert(e.binding);
    for (const auto& a : e.args) collect_refs(a, plain, summed);
}

struct Checker {
    const Pattern& p;
    const Schema& schema;
    const std::vector<DataElement>& s;
    std::vector<const cepshare::PatternStep*> pos_steps;
    std::vector<std::size_t> neg_gap;  // per negated step: index of the positive step after it
    std::vector<const cepshare::PatternStep*> neg_steps;
    std::vector<const Expr*> conj;

    Checker(const Pattern& pat, const Schema& sch, const std::vector<DataElement>& stream)
        : p(pat), schema(sch), s(stream) {
        for (const auto& st : p.steps) {
            if (st.kind == StepKind::kNegated) {
                neg_steps.push_back(&st);
                neg_gap.push_back(pos_steps.size());
            } else {
                pos_steps.push_back(&st);
            }
        }
        conj = conjuncts(p);
    }

    bool is_negated(const std::string& b) const {
        for (auto* n : neg_steps)
            if (n->binding == b) return true;
        return false;
    }

    bool in_window(std::size_t first, std::size_t idx) const {
        if (p.window.kind == Window::Kind::kCount)
            return static_cast<double>(s[idx].seq - s[first].seq) <= p.window.length;
        return s[idx].ts - s[first].ts <= p.window.length;
    }

    NamedEnv env_of(const std::vector<std::vector<std::size_t>>& chosen, bool last_open) const {
        NamedEnv env;
        for (std::size_t j = 0; j < chosen.size(); ++j) {
            auto& v = env.bound[pos_steps[j]->binding];
            for (std::size_t i : chosen[j]) v.push_back(&s[i]);
            env.open[pos_steps[j]->binding] = last_open && j + 1 == chosen.size();
        }
        return env;
    }

    // Positive conjuncts decidable on `env` all hold.
    bool positive_ok(const NamedEnv& env) const {
        for (const Expr* c : conj) {
            if (c->kind == Expr::Kind::kSame) {
                if (eval(*c, env, schema).value_or(0) == 0) return false;
                continue;
            }
            std::set<std::string> plain, summed;
            collect_refs(*c, plain, summed);
            bool decidable = true;
            for (const auto& b : plain)
                if (is_negated(b) || !env.bound.count(b)) decidable = false;
            for (const auto& b : summed)
                if (!env.bound.count(b) || env.open.at(b)) decidable = false;
            if (!decidable) continue;
            if (eval(*c, env, schema).value_or(0) == 0) return false;
        }
        return true;
    }

    // No negated element in the gap (lo, hi) before positive step `next`.
    bool negation_ok(const NamedEnv& env, std::size_t next, std::size_t lo, std::size_t hi) const {
        for (std::size_t k = 0; k < neg_steps.size(); ++k) {
            if (neg_gap[k] != next) continue;
            const auto* ns = neg_steps[k];
            auto type = schema.find_type(ns->type);
            for (std::size_t x = lo + 1; x < hi; ++x) {
                if (!type || s[x].type != *type) continue;
                NamedEnv e2 = env;
                e2.bound[ns->binding] = {&s[x]};
                bool all = true;
                for (const Expr* c : conj) {
                    if (c->kind == Expr::Kind::kSame) {
                        const DataElement* first = env.bound.at(pos_steps[0]->binding).front();
                        for (const auto& a : c->same_attrs) {
                            std::size_t ai = *schema.find_attribute(a);
                            if (s[x].attrs[ai] != first->attrs[ai]) all = false;
                        }
                        continue;
                    }
                    std::set<std::string> plain, summed;
                    collect_refs(*c, plain, summed);
                    if (!plain.count(ns->binding)) continue;
                    if (eval(*c, e2, schema).value_or(0) == 0) all = false;
                }
                if (all) return false;
            }
        }
        return true;
    }

    bool complete_ok(const std::vector<std::vector<std::size_t>>& chosen) const {
        NamedEnv env = env_of(chosen, false);
        if (!positive_ok(env)) return false;
        for (std::size_t j = 1; j < chosen.size(); ++j)
            if (!negation_ok(env, j, chosen[j - 1].back(), chosen[j].front())) return false;
        return true;
    }

    void enumerate(std::size_t j, std::vector<std::vector<std::size_t>>& chosen, std::size_t from,
                   std::vector<std::vector<std::vector<std::size_t>>>& out) const {
        if (j == pos_steps.size()) {
            if (complete_ok(chosen)) out.push_back(chosen);
            return;
        }
        auto type = schema.find_type(pos_steps[j]->type);
        if (!type) return;
        for (std::size_t i = from; i < s.size(); ++i) {
            if (j > 0 && !in_window(chosen[0][0], i)) break;
            if (s[i].type != *type) continue;
            chosen.push_back({i});
            if (pos_steps[j]->kind == StepKind::kKleenePlus)
                grow(j, chosen, i, *type, out);
            else
                enumerate(j + 1, chosen, i + 1, out);
            chosen.pop_back();
        }
    }

    void grow(std::size_t j, std::vector<std::vector<std::size_t>>& chosen, std::size_t last, cepshare::TypeId type,
              std::vector<std::vector<std::vector<std::size_t>>>& out) const {
        enumerate(j + 1, chosen, last + 1, out);
        for (std::size_t i = last + 1; i < s.size(); ++i) {
            if (!in_window(chosen[0][0], i)) break;
            if (s[i].type != type) continue;
            chosen[j].push_back(i);
            grow(j, chosen, i, type, out);
            chosen[j].pop_back();
        }
    }

    // Skip-till-next: no element between consecutive chosen elements could
    // have moved the prefix partial match forward.
    bool next_ok(const std::vector<std::vector<std::size_t>>& chosen) const {
        std::vector<std::pair<std::size_t, std::size_t>> flat;  // (stream index, step)
        for (std::size_t j = 0; j < chosen.size(); ++j)
            for (std::size_t i : chosen[j]) flat.push_back({i, j});
        for (std::size_t t = 0; t + 1 < flat.size(); ++t) {
            std::size_t step = flat[t].second;
            std::vector<std::vector<std::size_t>> prefix(step + 1);
            for (std::size_t k = 0; k <= t; ++k) prefix[flat[k].second].push_back(flat[k].first);
            for (std::size_t x = flat[t].first + 1; x < flat[t + 1].first; ++x) {
                if (!in_window(flat[0].first, x)) continue;
                const auto& cur = *pos_steps[step];
                if (cur.kind == StepKind::kKleenePlus && schema.find_type(cur.type) == s[x].type) {
                    auto ext = prefix;
                    ext[step].push_back(x);
                    if (positive_ok(env_of(ext, true))) return false;
                }
                if (step + 1 < pos_steps.size() && schema.find_type(pos_steps[step + 1]->type) == s[x].type) {
                    auto adv = prefix;
                    adv.push_back({x});
                    bool open = pos_steps[step + 1]->kind == StepKind::kKleenePlus;
                    NamedEnv env = env_of(adv, open);
                    if (positive_ok(env) && negation_ok(env, step + 1, flat[t].first, x)) return false;
                }
            }
        }
        return true;
    }
};

}  // namespace

std::vector<Match> matches(const Pattern& p, const Schema& schema, const std::vector<DataElement>& stream,
                           const PolicyConfig& policy, std::size_t pattern_index) {
    Checker ck(p, schema, stream);
    std::vector<std::vector<std::vector<std::size_t>>> all;
    std::vector<std::vector<std::size_t>> chosen;
    ck.enumerate(0, chosen, 0, all);

    std::vector<Match> out;
    for (const auto& c : all) {
        Match m;
        m.pattern = pattern_index;
        m.step_begin.push_back(0);
        for (const auto& step : c) {
            for (std::size_t i : step) m.seqs.push_back(stream[i].seq);
            m.step_begin.push_back(static_cast<uint32_t>(m.seqs.size()));
        }
        if (policy.selection == SelectionPolicy::kStrictContiguity) {
            bool adjacent = true;
            for (std::size_t k = 1; k < m.seqs.size(); ++k)
                if (m.seqs[k] != m.seqs[k - 1] + 1) adjacent = false;
            if (!adjacent) continue;
        }
        if (policy.selection == SelectionPolicy::kSkipTillNext && !ck.next_ok(c)) continue;
        out.push_back(std::move(m));
    }
    std::sort(out.begin(), out.end(), emission_less);
    if (policy.consumption == ConsumptionPolicy::kConsume) {
        std::set<uint64_t> used;
        std::vector<Match> kept;
        for (auto& m : out) {
            bool clash = std::any_of(m.seqs.begin(), m.seqs.end(), [&](uint64_t q) { return used.count(q) > 0; });
            if (clash) continue;
            used.insert(m.seqs.begin(), m.seqs.end());
            kept.push_back(std::move(m));
        }
        out = std::move(kept);
    }
    return out;
}

Pattern truncate(const Pattern& p, std::size_t steps) {
    Pattern t = p;
    t.steps.clear();
    std::set<std::string> kept;
    std::string open_kleene;
    std::size_t positives = 0;
    std::vector<cepshare::PatternStep> pending_neg;
    for (const auto& s : p.steps) {
        if (positives == steps) break;
        if (s.kind == StepKind::kNegated) {
            pending_neg.push_back(s);
            continue;
        }
        for (auto& n : pending_neg) {
            kept.insert(n.binding);
            t.steps.push_back(n);
        }
        pending_neg.clear();
        t.steps.push_back(s);
        kept.insert(s.binding);
        ++positives;
        open_kleene = s.kind == StepKind::kKleenePlus ? s.binding : std::string();
    }
    std::vector<Expr> terms;
    for (const Expr* c : conjuncts(p)) {
        std::set<std::string> plain, summed;
        collect_refs(*c, plain, summed);
        bool ok = summed.count(open_kleene) == 0;
        for (const auto& b : plain) ok = ok && kept.count(b);
        for (const auto& b : summed) ok = ok && kept.count(b);
        if (ok) terms.push_back(*c);
    }
    if (terms.empty())
        t.predicate.reset();
    else if (terms.size() == 1)
        t.predicate = terms.front();
    else
        t.predicate = Expr::conj(std::move(terms));
    return t;
}

std::map<uint64_t, Counters> lineage_counts(const std::vector<Pattern>& patterns, const Schema& schema,
                                            const std::vector<DataElement>& stream, const PrefixKey& key) {
    const std::size_t n = patterns.size();
    std::map<uint64_t, Counters> out;
    std::map<uint64_t, const DataElement*> by_seq;
    for (const auto& d : stream) by_seq[d.seq] = &d;
    auto credit = [&](std::size_t i, const Match& m, bool complete) {
        for (std::size_t len = 0; len < m.seqs.size(); ++len) {
            std::size_t steps = 0;
            while (steps + 1 < m.step_begin.size() && m.step_begin[steps] < len) ++steps;
            uint64_t k = len == 0 ? key(i, 0, nullptr, nullptr)
                                  : key(i, steps, by_seq.at(m.seqs.front()), by_seq.at(m.seqs[len - 1]));
            auto [it, fresh] = out.try_emplace(k);
            if (fresh) it->second = Counters{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
            (complete ? it->second.cn : it->second.pn)[i] += 1.0;
        }
    };
    const PolicyConfig any{SelectionPolicy::kSkipTillAny, ConsumptionPolicy::kReuse};
    for (std::size_t i = 0; i < n; ++i) {
        const Pattern& p = patterns[i];
        const std::size_t m = p.positive_length();
        const bool kleene_last = p.positive_steps().back()->kind == StepKind::kKleenePlus;
        for (std::size_t j = 1; j <= m; ++j) {
            if (j == m && !kleene_last) break;
            for (const auto& pm : matches(truncate(p, j), schema, stream, any, i)) credit(i, pm, false);
        }
        for (const auto& cm : matches(p, schema, stream, any, i)) credit(i, cm, true);
    }
    return out;
}

}  // namespace oracle
