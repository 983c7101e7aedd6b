#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cepshare/mask.hpp"
#include "cepshare/plan.hpp"
#include "cepshare/record.hpp"

namespace cepshare {

/// Heap entry for one record. Larger `key` first, then older `first_ts`,
/// then lower serial.
struct HeapEntry {
    double key = 0.0;
    double first_ts = 0.0;
    uint64_t serial = 0;
    RecordHandle handle;
};

/// True when `a` should sit below `b` in the max-heap.
bool heap_less(const HeapEntry& a, const HeapEntry& b);

/// Records of all states sharing one PSD bitmap.
struct Cluster {
    PatternMask psd;
    std::vector<std::size_t> states;  // ascending state id
    std::vector<HeapEntry> heap;      // valid only after rebuild_heap()
};

/// Per-state buffers plus the bitmap-keyed clustering of states.
///
/// Buffers are append-only vectors of handles; dead handles are skipped and
/// dropped by compact(). Cluster heaps are rebuilt on demand because their
/// keys come from a sketch that keeps changing between selections.
class ClusterIndex {
public:
    ClusterIndex() = default;
    explicit ClusterIndex(const ExecutionPlan& plan);

    /// Registers `h` in the buffer of `state` (and so in its cluster).
    void insert(std::size_t state, RecordHandle h) { buffers_[state].push_back(h); }

    /// Cluster for bitmap `b`, or an empty cluster when absent.
    const Cluster& lookup(const PatternMask& b) const;
    Cluster& cluster_of_state(std::size_t state) { return clusters_[cluster_id_[state]]; }
    bool clustered(std::size_t state) const { return cluster_id_[state] != kNoCluster; }

    std::vector<RecordHandle>& buffer(std::size_t state) { return buffers_[state]; }
    const std::vector<RecordHandle>& buffer(std::size_t state) const { return buffers_[state]; }
    std::size_t state_count() const { return buffers_.size(); }

    /// Clusters sorted by descending PSD value, ties by lowest state id.
    std::vector<Cluster*> clusters_descending();
    const std::vector<Cluster>& clusters() const { return clusters_; }

    /// Drops dead handles from one buffer, keeping order.
    void compact(std::size_t state, const RecordPool& pool);
    void compact_all(const RecordPool& pool);

    /// Rebuilds the cluster heap from live buffer entries with fresh keys.
    void rebuild_heap(Cluster& c, const RecordPool& pool, const std::function<double(const MatchRecord&)>& key);
    /// Top live entry, skipping and discarding dead ones; null when empty.
    const HeapEntry* heap_top(Cluster& c, const RecordPool& pool);
    void heap_pop(Cluster& c);

    /// Number of live handles across all buffers.
    std::size_t live_count(const RecordPool& pool) const;

private:
    static constexpr std::size_t kNoCluster = static_cast<std::size_t>(-1);
    std::vector<std::vector<RecordHandle>> buffers_;
    std::vector<Cluster> clusters_;
    std::vector<std::size_t> cluster_id_;  // per state
    std::unordered_map<PatternMask, std::size_t, PatternMaskHash> by_mask_;
    Cluster empty_;
};

/// Fills every state's psd with the OR of the bits of all patterns whose
/// start-to-accepting path passes through it, by depth-first traversal of
/// the plan's edges. Returns the number of states left with psd 0; those are
/// reported through `warn` and excluded from clustering.
std::size_t assess_states(ExecutionPlan& plan, const std::function<void(const std::string&)>& warn = {});

/// assess_states followed by building the cluster index.
ClusterIndex assess(ExecutionPlan& plan, const std::function<void(const std::string&)>& warn = {});

}  // namespace cepshare
