#include "cepshare/plan.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cepshare {

const char* to_string(MaterializationMode m) {
    switch (m) {
        case MaterializationMode::kInstance: return "instance";
        case MaterializationMode::kView: return "view";
        case MaterializationMode::kSeparate: return "separate";
    }
    return "?";
}

std::optional<MaterializationMode> parse_mode(std::string_view s) {
    if (s == "instance") return MaterializationMode::kInstance;
    if (s == "view") return MaterializationMode::kView;
    if (s == "separate") return MaterializationMode::kSeparate;
    return std::nullopt;
}

const char* to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::kAdvance: return "advance";
        case EdgeKind::kKleeneExtend: return "kleene-extend";
        case EdgeKind::kKleeneClose: return "kleene-close";
    }
    return "?";
}

const EdgeGuard* PlanEdge::guard_for(std::size_t pattern) const {
    for (const auto& g : guards)
        if (g.pattern == pattern) return &g;
    return nullptr;
}

double ExecutionPlan::max_count_window() const {
    double w = 0.0;
    for (const auto& p : patterns)
        if (p.window.kind == Window::Kind::kCount) w = std::max(w, p.window.length);
    return w;
}

double ExecutionPlan::max_time_window() const {
    double w = 0.0;
    for (const auto& p : patterns)
        if (p.window.kind == Window::Kind::kTime) w = std::max(w, p.window.length);
    return w;
}

std::string ExecutionPlan::signature_text(const PlanState& s) const {
    if (s.sub_pattern.empty()) return "()";
    std::string out;
    for (const auto& sig : s.sub_pattern) {
        out += schema.type_name(sig.type);
        if (sig.kind == StepKind::kKleenePlus) out += '+';
    }
    return out;
}

std::string ExecutionPlan::dump() const {
    std::ostringstream os;
    os << "plan mode=" << to_string(mode) << " patterns=" << patterns.size() << " states=" << states.size()
       << " edges=" << edges.size() << '\n';
    for (std::size_t i = 0; i < patterns.size(); ++i) os << "pattern " << i << " id=" << patterns[i].id << ' ' << print_pattern(patterns[i]) << '\n';
    for (const auto& s : states) {
        os << "state " << s.id << ' ' << signature_text(s) << " psd=" << s.psd.to_string(patterns.size());
        if (s.parent != kNoState) os << " parent=" << s.parent;
        if (!s.accepting_for.empty()) {
            os << " accepting=";
            for (std::size_t k = 0; k < s.accepting_for.size(); ++k) os << (k ? "," : "") << s.accepting_for[k];
        }
        os << '\n';
    }
    for (const auto& e : edges) {
        os << "edge " << e.from << "->" << e.to << ' ' << to_string(e.kind) << " on " << schema.type_name(e.trigger);
        for (const auto& g : e.guards) {
            os << " [p" << g.pattern << " step=" << g.step << " conj=" << g.conjuncts.size();
            if (!g.negations.empty()) os << " neg=" << g.negations.size();
            if (g.accepting) os << " accept";
            os << ']';
        }
        os << '\n';
    }
    return os.str();
}

namespace {

std::vector<std::size_t> set_minus(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out;
    for (std::size_t x : a)
        if (std::find(b.begin(), b.end(), x) == b.end()) out.push_back(x);
    return out;
}

struct TrieNode {
    std::size_t parent = kNoState;
    std::vector<StepSignature> sub_pattern;
    std::vector<std::size_t> children;
};

}  // namespace

ExecutionPlan build_plan(std::vector<Pattern> patterns, Schema schema, MaterializationMode mode) {
    if (patterns.size() > kMaxPatterns)
        throw std::invalid_argument("too many patterns for the configured mask width (" + std::to_string(kMaxPatterns) + ")");
    std::set<std::size_t> ids;
    for (const auto& p : patterns)
        if (!ids.insert(p.id).second) throw std::invalid_argument("duplicate pattern id " + std::to_string(p.id));

    ExecutionPlan plan;
    plan.mode = mode;
    for (const auto& p : patterns)
        for (const auto& s : p.steps) schema.intern_type(s.type);
    for (const auto& p : patterns) plan.predicates.emplace_back(p, schema);
    plan.schema = std::move(schema);
    plan.patterns = std::move(patterns);

    // Trie over positive-step signatures; separate mode keys by pattern too.
    std::vector<TrieNode> trie(1);
    std::map<std::tuple<std::size_t, TypeId, int, std::size_t>, std::size_t> child_of;
    std::vector<std::vector<std::size_t>> trie_chain(plan.patterns.size());
    for (std::size_t i = 0; i < plan.patterns.size(); ++i) {
        std::size_t node = 0;
        trie_chain[i].push_back(0);
        for (const PatternStep* s : plan.patterns[i].positive_steps()) {
            StepSignature sig{*plan.schema.find_type(s->type), s->kind};
            std::size_t owner = mode == MaterializationMode::kSeparate ? i : 0;
            auto key = std::make_tuple(node, sig.type, static_cast<int>(sig.kind), owner);
            auto it = child_of.find(key);
            if (it == child_of.end()) {
                TrieNode n;
                n.parent = node;
                n.sub_pattern = trie[node].sub_pattern;
                n.sub_pattern.push_back(sig);
                trie.push_back(std::move(n));
                std::size_t id = trie.size() - 1;
                trie[node].children.push_back(id);
                it = child_of.emplace(key, id).first;
            }
            node = it->second;
            trie_chain[i].push_back(node);
        }
    }

    // BFS numbering.
    std::vector<std::size_t> state_of(trie.size(), kNoState);
    std::deque<std::size_t> queue{0};
    while (!queue.empty()) {
        std::size_t n = queue.front();
        queue.pop_front();
        PlanState s;
        s.id = plan.states.size();
        s.sub_pattern = trie[n].sub_pattern;
        s.parent = trie[n].parent == kNoState ? kNoState : state_of[trie[n].parent];
        state_of[n] = s.id;
        plan.states.push_back(std::move(s));
        for (std::size_t c : trie[n].children) queue.push_back(c);
    }
    plan.chains.resize(plan.patterns.size());
    for (std::size_t i = 0; i < plan.patterns.size(); ++i) {
        for (std::size_t n : trie_chain[i]) plan.chains[i].push_back(state_of[n]);
        plan.states[plan.chains[i].back()].accepting_for.push_back(i);
    }

    // Edges, deduplicated by (from, to, kind) with one guard per pattern.
    std::map<std::tuple<std::size_t, std::size_t, int>, std::size_t> edge_of;
    auto edge = [&](std::size_t from, std::size_t to, EdgeKind kind, TypeId trigger) -> PlanEdge& {
        auto key = std::make_tuple(from, to, static_cast<int>(kind));
        auto it = edge_of.find(key);
        if (it == edge_of.end()) {
            PlanEdge e;
            e.from = from;
            e.to = to;
            e.kind = kind;
            e.trigger = trigger;
            plan.edges.push_back(std::move(e));
            it = edge_of.emplace(key, plan.edges.size() - 1).first;
        }
        return plan.edges[it->second];
    };

    for (std::size_t i = 0; i < plan.patterns.size(); ++i) {
        const auto& pred = plan.predicates[i];
        const auto& chain = plan.chains[i];
        std::size_t m = chain.size() - 1;
        bool kleene_last = pred.is_kleene(m - 1);
        auto full = pred.ready(m, false);
        for (std::size_t j = 0; j < m; ++j) {
            bool open_prev = j > 0 && pred.is_kleene(j - 1);
            const auto& to_sig = plan.states[chain[j + 1]].sub_pattern.back();
            EdgeGuard g;
            g.pattern = i;
            g.step = j;
            g.conjuncts = set_minus(pred.ready(j + 1, pred.is_kleene(j)), pred.ready(j, open_prev));
            for (std::size_t k = 0; k < pred.negations().size(); ++k)
                if (pred.negations()[k].before_positive == j) g.negations.push_back(k);
            g.accepting = j + 1 == m;
            g.continues = j + 1 < m || kleene_last;
            if (g.accepting) g.final_conjuncts = set_minus(full, pred.ready(m, kleene_last));
            EdgeKind kind = open_prev ? EdgeKind::kKleeneClose : EdgeKind::kAdvance;
            edge(chain[j], chain[j + 1], kind, to_sig.type).guards.push_back(g);

            if (pred.is_kleene(j)) {
                EdgeGuard x;
                x.pattern = i;
                x.step = j;
                for (std::size_t id : pred.ready(j + 1, true)) {
                    const auto& st = pred.conjuncts()[id].steps;
                    if (std::find(st.begin(), st.end(), static_cast<int>(j)) != st.end()) x.conjuncts.push_back(id);
                }
                x.accepting = g.accepting;
                x.continues = g.continues;
                x.final_conjuncts = g.final_conjuncts;
                edge(chain[j + 1], chain[j + 1], EdgeKind::kKleeneExtend, to_sig.type).guards.push_back(x);
            }
        }
    }

    // Order edges by source state, then target, then kind; attach to states.
    std::stable_sort(plan.edges.begin(), plan.edges.end(), [](const PlanEdge& a, const PlanEdge& b) {
        return std::tie(a.from, a.to, a.kind) < std::tie(b.from, b.to, b.kind);
    });
    for (std::size_t e = 0; e < plan.edges.size(); ++e) {
        auto& edge_ref = plan.edges[e];
        std::sort(edge_ref.guards.begin(), edge_ref.guards.end(),
                  [](const EdgeGuard& a, const EdgeGuard& b) { return a.pattern < b.pattern; });
        for (const auto& g : edge_ref.guards) edge_ref.patterns.set(g.pattern);
        plan.states[edge_ref.from].out_edges.push_back(e);
    }
    return plan;
}

ExecutionPlan compile(const Pattern& pattern, const Schema& schema) {
    return build_plan({pattern}, schema, MaterializationMode::kView);
}

ExecutionPlan merge(const std::vector<ExecutionPlan>& plans, MaterializationMode mode) {
    if (plans.empty()) return build_plan({}, Schema{}, mode);
    Schema schema = plans.front().schema;
    std::vector<Pattern> patterns;
    for (const auto& p : plans) {
        if (p.schema.attributes() != schema.attributes())
            throw std::invalid_argument("cannot merge plans over different attribute lists");
        for (const auto& t : p.schema.types()) schema.intern_type(t);
        patterns.insert(patterns.end(), p.patterns.begin(), p.patterns.end());
    }
    return build_plan(std::move(patterns), std::move(schema), mode);
}

}  // namespace cepshare
