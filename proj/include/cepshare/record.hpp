#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cepshare/mask.hpp"

namespace cepshare {

/// Reference into a RecordPool. A handle goes stale once its record is
/// released, so lazily cleaned containers can detect dead entries.
struct RecordHandle {
    uint32_t index = 0;
    uint32_t generation = 0;
    bool operator==(const RecordHandle&) const = default;
};

/// A partial match, or the record a complete match was emitted from.
///
/// Elements are kept as engine input positions grouped by positive step:
/// step j spans pos[step_begin[j] .. step_begin[j+1]).
struct MatchRecord {
    PatternMask bits;
    std::size_t state = 0;
    std::vector<uint64_t> pos;
    std::vector<uint32_t> step_begin{0};
    uint64_t first_seq = 0;
    uint64_t last_seq = 0;
    double first_ts = 0.0;
    double last_ts = 0.0;
    uint64_t key = 0;                 // sketch key
    std::vector<uint64_t> lineage;    // sketch keys of every ancestor, start record first
    uint64_t serial = 0;              // creation order, used as a final tie breaker

    std::size_t bound() const { return step_begin.size() - 1; }
    std::size_t length() const { return pos.size(); }
};

class RecordPool {
public:
    RecordHandle acquire(MatchRecord record) {
        uint32_t idx;
        if (!free_.empty()) {
            idx = free_.back();
            free_.pop_back();
            records_[idx] = std::move(record);
        } else {
            idx = static_cast<uint32_t>(records_.size());
            records_.push_back(std::move(record));
            generations_.push_back(0);
            live_flags_.push_back(false);
        }
        live_flags_[idx] = true;
        ++live_;
        return {idx, generations_[idx]};
    }

    void release(RecordHandle h) {
        if (!alive(h)) return;
        live_flags_[h.index] = false;
        ++generations_[h.index];
        records_[h.index].pos.clear();
        records_[h.index].lineage.clear();
        free_.push_back(h.index);
        --live_;
    }

    bool alive(RecordHandle h) const {
        return h.index < records_.size() && live_flags_[h.index] && generations_[h.index] == h.generation;
    }

    MatchRecord& get(RecordHandle h) { return records_[h.index]; }
    const MatchRecord& get(RecordHandle h) const { return records_[h.index]; }

    std::size_t live() const { return live_; }

    void clear() {
        records_.clear();
        generations_.clear();
        live_flags_.clear();
        free_.clear();
        live_ = 0;
    }

private:
    std::vector<MatchRecord> records_;
    std::vector<uint32_t> generations_;
    std::vector<bool> live_flags_;
    std::vector<uint32_t> free_;
    std::size_t live_ = 0;
};

}  // namespace cepshare
