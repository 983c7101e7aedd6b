#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cepshare/element.hpp"
#include "cepshare/mask.hpp"
#include "cepshare/plan.hpp"
#include "cepshare/record.hpp"

namespace cepshare {

enum class ThetaKind { kOne, kLength };

const char* to_string(ThetaKind t);
std::optional<ThetaKind> parse_theta(std::string_view s);

/// Attribute of the last element folded into the key after bucketing:
/// floor(value / width).
struct BucketedAttr {
    std::size_t attr = 0;
    double width = 1.0;
};

struct SketchConfig {
    std::vector<std::size_t> partition_attrs;  // read from the first element
    std::vector<BucketedAttr> last_attrs;      // read from the last element
    std::size_t lossy_width = 0;               // 0: exact table; otherwise key % width
    uint64_t epoch = 0;                        // decay period in arrival index units; 0 disables decay
    ThetaKind theta = ThetaKind::kOne;
    std::vector<BucketedAttr> every_attrs;     // read from every element in order
};

/// Partition attributes used by SAME terms of any pattern, in schema order.
std::vector<std::size_t> same_attributes(const ExecutionPlan& plan);

/// Sketch key of a record at `state` whose first element is `first` and
/// last element is `last` (both null for the start record).
uint64_t attr_key(const SketchConfig& cfg, std::size_t state, const DataElement* first, const DataElement* last);
/// Folds the every-element buckets of `e` into `key`.
uint64_t extend_key(const SketchConfig& cfg, uint64_t key, const DataElement& e);

struct SketchEntry {
    std::size_t state = 0;
    std::vector<double> cn;
    std::vector<double> pn;
};

struct CostVectors {
    std::vector<double> plus;   // contribution per pattern
    std::vector<double> minus;  // overhead per pattern
};

/// Exact (or optionally lossy) per-key counters of complete and partial
/// matches descending from records with that key.
class HistoricalSketch {
public:
    HistoricalSketch() = default;
    HistoricalSketch(std::size_t patterns, SketchConfig cfg);

    const SketchConfig& config() const { return cfg_; }
    std::size_t patterns() const { return n_; }

    /// A partial match serving `bits` was generated; every key in
    /// `lineage` is credited one pn per set bit.
    void on_partial(const std::vector<uint64_t>& lineage, const PatternMask& bits);
    /// A complete match of `pattern` was generated.
    void on_complete(const std::vector<uint64_t>& lineage, std::size_t pattern);
    /// Records the state a key belongs to (for dumps).
    void touch(uint64_t key, std::size_t state);

    /// Halves every counter once per elapsed epoch up to arrival index `now`.
    void advance(uint64_t now);

    CostVectors estimate(const MatchRecord& r) const;
    double plus_sum(const MatchRecord& r) const;
    /// Overhead for one pattern only.
    double minus(const MatchRecord& r, std::size_t pattern) const;
    double theta(const MatchRecord& r) const;

    const SketchEntry* find(uint64_t key) const;
    std::size_t size() const { return table_.size(); }

    /// CSV: key,state_id,cn_1..cn_n,pn_1..pn_n sorted by key.
    std::string dump_csv() const;

private:
    uint64_t slot(uint64_t key) const { return cfg_.lossy_width ? key % cfg_.lossy_width : key; }
    SketchEntry& entry(uint64_t key);

    std::size_t n_ = 0;
    SketchConfig cfg_;
    std::unordered_map<uint64_t, SketchEntry> table_;
    uint64_t next_epoch_ = 0;
};

/// Partial order of two cost vectors: true when `a` ranks above `b`
/// (strict dominance on every contribution, else a larger contribution sum).
bool order_greater(const CostVectors& a, const CostVectors& b);

}  // namespace cepshare
