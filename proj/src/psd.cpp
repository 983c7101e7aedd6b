#include "cepshare/psd.hpp"

#include <algorithm>

namespace cepshare {

bool heap_less(const HeapEntry& a, const HeapEntry& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.first_ts != b.first_ts) return a.first_ts > b.first_ts;
    return a.serial > b.serial;
}

ClusterIndex::ClusterIndex(const ExecutionPlan& plan)
    : buffers_(plan.states.size()), cluster_id_(plan.states.size(), kNoCluster) {
    for (const auto& s : plan.states) {
        if (s.psd.none()) continue;
        auto [it, fresh] = by_mask_.try_emplace(s.psd, clusters_.size());
        if (fresh) clusters_.push_back(Cluster{s.psd, {}, {}});
        clusters_[it->second].states.push_back(s.id);
        cluster_id_[s.id] = it->second;
    }
}

const Cluster& ClusterIndex::lookup(const PatternMask& b) const {
    auto it = by_mask_.find(b);
    return it == by_mask_.end() ? empty_ : clusters_[it->second];
}

std::vector<Cluster*> ClusterIndex::clusters_descending() {
    std::vector<Cluster*> out;
    for (auto& c : clusters_) out.push_back(&c);
    std::sort(out.begin(), out.end(), [](const Cluster* a, const Cluster* b) {
        if (a->psd != b->psd) return b->psd.value_less(a->psd);
        return a->states.front() < b->states.front();
    });
    return out;
}

void ClusterIndex::compact(std::size_t state, const RecordPool& pool) {
    auto& buf = buffers_[state];
    buf.erase(std::remove_if(buf.begin(), buf.end(), [&](RecordHandle h) { return !pool.alive(h); }), buf.end());
}

void ClusterIndex::compact_all(const RecordPool& pool) {
    for (std::size_t s = 0; s < buffers_.size(); ++s) compact(s, pool);
}

void ClusterIndex::rebuild_heap(Cluster& c, const RecordPool& pool,
                                const std::function<double(const MatchRecord&)>& key) {
    c.heap.clear();
    for (std::size_t s : c.states) {
        for (RecordHandle h : buffers_[s]) {
            if (!pool.alive(h)) continue;
            const MatchRecord& r = pool.get(h);
            c.heap.push_back(HeapEntry{key(r), r.first_ts, r.serial, h});
        }
    }
    std::make_heap(c.heap.begin(), c.heap.end(), heap_less);
}

const HeapEntry* ClusterIndex::heap_top(Cluster& c, const RecordPool& pool) {
    while (!c.heap.empty() && !pool.alive(c.heap.front().handle)) heap_pop(c);
    return c.heap.empty() ? nullptr : &c.heap.front();
}

void ClusterIndex::heap_pop(Cluster& c) {
    std::pop_heap(c.heap.begin(), c.heap.end(), heap_less);
    c.heap.pop_back();
}

std::size_t ClusterIndex::live_count(const RecordPool& pool) const {
    std::size_t n = 0;
    for (const auto& buf : buffers_)
        for (RecordHandle h : buf) n += pool.alive(h);
    return n;
}

std::size_t assess_states(ExecutionPlan& plan, const std::function<void(const std::string&)>& warn) {
    for (auto& s : plan.states) s.psd = PatternMask{};
    for (std::size_t i = 0; i < plan.pattern_count(); ++i) {
        // Depth-first walk restricted to edges carrying a guard for pattern i.
        std::vector<std::size_t> stack{0};
        std::vector<bool> seen(plan.states.size(), false);
        while (!stack.empty()) {
            std::size_t s = stack.back();
            stack.pop_back();
            if (seen[s]) continue;
            seen[s] = true;
            plan.states[s].psd.set(i);
            for (std::size_t e : plan.states[s].out_edges) {
                const auto& edge = plan.edges[e];
                if (edge.patterns.test(i) && !seen[edge.to]) stack.push_back(edge.to);
            }
        }
    }
    std::size_t unreachable = 0;
    for (const auto& s : plan.states) {
        if (s.psd.any()) continue;
        ++unreachable;
        if (warn) warn("state " + std::to_string(s.id) + " is on no pattern path; excluded from clustering");
    }
    return unreachable;
}

ClusterIndex assess(ExecutionPlan& plan, const std::function<void(const std::string&)>& warn) {
    assess_states(plan, warn);
    return ClusterIndex(plan);
}

}  // namespace cepshare
