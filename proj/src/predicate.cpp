#include "cepshare/predicate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cepshare {

namespace {

void add_unique(std::vector<int>& v, int x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

CompiledPredicate::CompiledPredicate(const Pattern& pattern, Schema& schema) {
    std::map<std::string, std::pair<int, std::size_t>> binding;  // name -> (positive idx or -1, step idx)
    int pos = 0;
    for (std::size_t i = 0; i < pattern.steps.size(); ++i) {
        const auto& s = pattern.steps[i];
        if (s.kind == StepKind::kNegated) {
            binding[s.binding] = {-1, i};
        } else {
            binding[s.binding] = {pos++, i};
            kleene_.push_back(s.kind == StepKind::kKleenePlus);
        }
    }
    std::size_t next_positive = 0;
    for (std::size_t i = 0; i < pattern.steps.size(); ++i) {
        const auto& s = pattern.steps[i];
        if (s.kind == StepKind::kNegated)
            negations_.push_back(Negation{i, schema.intern_type(s.type), next_positive, {}});
        else
            ++next_positive;
    }

    auto resolve_attr = [&](const std::string& name) {
        auto a = schema.find_attribute(name);
        if (!a) throw std::invalid_argument("unknown attribute '" + name + "'");
        return *a;
    };

    if (!pattern.predicate) return;
    std::vector<const Expr*> terms;
    if (pattern.predicate->kind == Expr::Kind::kAnd)
        for (const auto& t : pattern.predicate->args) terms.push_back(&t);
    else
        terms.push_back(&*pattern.predicate);

    for (const Expr* t : terms) {
        if (t->kind == Expr::Kind::kSame) {
            // SAME [attr]: first binding against every later binding.
            for (const auto& attr_name : t->same_attrs) {
                std::size_t attr = resolve_attr(attr_name);
                if (kleene_[0]) {
                    Conjunct c;
                    c.same = true;
                    c.same_attr = attr;
                    c.same_a = 0;
                    c.same_b = 0;
                    c.steps = {0};
                    conjuncts_.push_back(c);
                }
                int positive = 0;
                for (std::size_t i = 0; i < pattern.steps.size(); ++i) {
                    const auto& s = pattern.steps[i];
                    bool neg = s.kind == StepKind::kNegated;
                    if (!neg && positive++ == 0) continue;
                    Conjunct c;
                    c.same = true;
                    c.same_attr = attr;
                    c.same_a = 0;
                    c.steps = {0};
                    if (neg) {
                        c.negated_step = static_cast<int>(i);
                    } else {
                        c.same_b = positive - 1;
                        c.steps.push_back(c.same_b);
                    }
                    conjuncts_.push_back(c);
                }
            }
            continue;
        }
        Conjunct c;
        // Resolve references, then build the node tree.
        struct Builder {
            CompiledPredicate& self;
            std::map<std::string, std::pair<int, std::size_t>>& binding;
            decltype(resolve_attr)& attr_of;
            Conjunct& c;
            int build(const Expr& e) {
                Node n{e.kind};
                switch (e.kind) {
                    case Expr::Kind::kNumber: n.number = e.number; break;
                    case Expr::Kind::kAttr:
                    case Expr::Kind::kSum: {
                        auto it = binding.find(e.binding);
                        if (it == binding.end()) throw std::invalid_argument("unknown binding '" + e.binding + "'");
                        n.attr = attr_of(e.attribute);
                        n.step = it->second.first;
                        if (n.step < 0) {
                            n.negated = true;
                            c.negated_step = static_cast<int>(it->second.second);
                        } else {
                            add_unique(c.steps, n.step);
                            if (e.kind == Expr::Kind::kSum) add_unique(c.aggregated, n.step);
                        }
                        break;
                    }
                    case Expr::Kind::kUnary:
                        n.fn = e.fn;
                        n.lhs = build(e.args[0]);
                        break;
                    case Expr::Kind::kBinary:
                        n.op = e.op;
                        n.lhs = build(e.args[0]);
                        n.rhs = build(e.args[1]);
                        break;
                    default: throw std::invalid_argument("nested boolean connective in conjunct");
                }
                self.nodes_.push_back(n);
                return static_cast<int>(self.nodes_.size() - 1);
            }
        } builder{*this, binding, resolve_attr, c};
        c.root = builder.build(*t);
        conjuncts_.push_back(std::move(c));
    }

    for (std::size_t id = 0; id < conjuncts_.size(); ++id) {
        const auto& c = conjuncts_[id];
        if (c.negated_step < 0) continue;
        for (auto& n : negations_)
            if (static_cast<int>(n.step_index) == c.negated_step) n.filters.push_back(id);
    }
}

std::vector<std::size_t> CompiledPredicate::ready(std::size_t bound, bool last_open) const {
    std::vector<std::size_t> out;
    for (std::size_t id = 0; id < conjuncts_.size(); ++id) {
        const auto& c = conjuncts_[id];
        if (c.negated_step >= 0) continue;
        bool ok = std::all_of(c.steps.begin(), c.steps.end(), [&](int s) { return static_cast<std::size_t>(s) < bound; });
        if (ok && last_open && bound > 0) {
            int open = static_cast<int>(bound) - 1;
            if (std::find(c.aggregated.begin(), c.aggregated.end(), open) != c.aggregated.end()) ok = false;
        }
        if (ok) out.push_back(id);
    }
    return out;
}

bool CompiledPredicate::eval_node(int id, const Env& env, EvalDiagnostics* diag, double& out) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    switch (n.kind) {
        case Expr::Kind::kNumber: out = n.number; return true;
        case Expr::Kind::kAttr:
            if (n.negated) {
                out = env.negated->attrs[n.attr];
            } else {
                auto s = env.step(static_cast<std::size_t>(n.step));
                out = s.front()->attrs[n.attr];
            }
            return true;
        case Expr::Kind::kSum: {
            double acc = 0.0;
            for (const DataElement* e : env.step(static_cast<std::size_t>(n.step))) acc += e->attrs[n.attr];
            out = acc;
            return true;
        }
        case Expr::Kind::kUnary: {
            double x;
            if (!eval_node(n.lhs, env, diag, x)) return false;
            switch (n.fn) {
                case UnaryFn::kNeg: out = -x; return true;
                case UnaryFn::kSin: out = std::sin(x); return true;
                case UnaryFn::kCos: out = std::cos(x); return true;
                case UnaryFn::kAsin:
                case UnaryFn::kAcos:
                    if (!(std::fabs(x) <= 1.0)) {
                        if (diag) ++diag->domain_error;
                        return false;
                    }
                    out = n.fn == UnaryFn::kAsin ? std::asin(x) : std::acos(x);
                    return true;
                case UnaryFn::kSqrt:
                    if (!(x >= 0.0)) {
                        if (diag) ++diag->domain_error;
                        return false;
                    }
                    out = std::sqrt(x);
                    return true;
            }
            return false;
        }
        case Expr::Kind::kBinary: {
            double a, b;
            if (!eval_node(n.lhs, env, diag, a) || !eval_node(n.rhs, env, diag, b)) return false;
            switch (n.op) {
                case BinaryOp::kAdd: out = a + b; return true;
                case BinaryOp::kSub: out = a - b; return true;
                case BinaryOp::kMul: out = a * b; return true;
                case BinaryOp::kDiv:
                    if (b == 0.0) {
                        if (diag) ++diag->division_by_zero;
                        return false;
                    }
                    out = a / b;
                    return true;
                case BinaryOp::kLt: out = a < b; return true;
                case BinaryOp::kLe: out = a <= b; return true;
                case BinaryOp::kGt: out = a > b; return true;
                case BinaryOp::kGe: out = a >= b; return true;
                case BinaryOp::kEq: out = a == b; return true;
            }
            return false;
        }
        default: return false;
    }
}

bool CompiledPredicate::eval_conjunct(std::size_t id, const Env& env, EvalDiagnostics* diag) const {
    const Conjunct& c = conjuncts_[id];
    if (c.same) {
        double v = env.step(static_cast<std::size_t>(c.same_a)).front()->attrs[c.same_attr];
        if (c.same_b < 0) return env.negated->attrs[c.same_attr] == v;
        for (const DataElement* e : env.step(static_cast<std::size_t>(c.same_b)))
            if (e->attrs[c.same_attr] != v) return false;
        return true;
    }
    double r;
    if (!eval_node(c.root, env, diag, r)) return false;
    return r != 0.0;
}

bool CompiledPredicate::eval_all(std::span<const std::size_t> ids, const Env& env, EvalDiagnostics* diag) const {
    for (std::size_t id : ids)
        if (!eval_conjunct(id, env, diag)) return false;
    return true;
}

bool CompiledPredicate::eval_decidable(const Env& env, EvalDiagnostics* diag) const {
    auto ids = ready(env.bound(), env.last_open);
    return eval_all(ids, env, diag);
}

bool eval_predicate(const Pattern& pattern, const Schema& schema, const NamedEnv& env, EvalDiagnostics* diag) {
    Schema local = schema;
    CompiledPredicate pred(pattern, local);
    // Bound positive steps must form a prefix; anything after the first gap is unbound.
    Env e;
    for (const PatternStep* s : pattern.positive_steps()) {
        auto it = env.find(s->binding);
        if (it == env.end() || it->second.elements.empty()) break;
        e.push_step();
        for (const auto& el : it->second.elements) e.add(&el);
        e.last_open = s->kind == StepKind::kKleenePlus && it->second.open;
        if (e.last_open) break;
    }
    return pred.eval_decidable(e, diag);
}

}  // namespace cepshare
