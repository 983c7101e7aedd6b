#include "cepshare/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>

namespace cepshare {

namespace {

uint64_t mix(uint64_t h, uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= h >> 31;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 29;
    return h;
}

}  // namespace

const char* to_string(ThetaKind t) { return t == ThetaKind::kOne ? "one" : "length"; }

std::optional<ThetaKind> parse_theta(std::string_view s) {
    if (s == "one") return ThetaKind::kOne;
    if (s == "length") return ThetaKind::kLength;
    return std::nullopt;
}

std::vector<std::size_t> same_attributes(const ExecutionPlan& plan) {
    std::set<std::size_t> attrs;
    for (const auto& pred : plan.predicates)
        for (const auto& c : pred.conjuncts())
            if (c.same) attrs.insert(c.same_attr);
    return {attrs.begin(), attrs.end()};
}

uint64_t attr_key(const SketchConfig& cfg, std::size_t state, const DataElement* first, const DataElement* last) {
    uint64_t h = mix(0x243f6a8885a308d3ull, state);
    if (first)
        for (std::size_t a : cfg.partition_attrs) h = mix(h, std::bit_cast<uint64_t>(first->attrs[a] + 0.0));
    if (last)
        for (const auto& b : cfg.last_attrs)
            h = mix(h, static_cast<uint64_t>(static_cast<int64_t>(std::floor(last->attrs[b.attr] / b.width))));
    return h;
}

uint64_t extend_key(const SketchConfig& cfg, uint64_t key, const DataElement& e) {
    for (const auto& b : cfg.every_attrs)
        key = mix(key, static_cast<uint64_t>(static_cast<int64_t>(std::floor(e.attrs[b.attr] / b.width))));
    return key;
}

HistoricalSketch::HistoricalSketch(std::size_t patterns, SketchConfig cfg)
    : n_(patterns), cfg_(std::move(cfg)), next_epoch_(cfg_.epoch) {}

SketchEntry& HistoricalSketch::entry(uint64_t key) {
    auto [it, fresh] = table_.try_emplace(slot(key));
    if (fresh) {
        it->second.cn.assign(n_, 0.0);
        it->second.pn.assign(n_, 0.0);
    }
    return it->second;
}

void HistoricalSketch::touch(uint64_t key, std::size_t state) { entry(key).state = state; }

void HistoricalSketch::on_partial(const std::vector<uint64_t>& lineage, const PatternMask& bits) {
    for (uint64_t k : lineage) {
        auto& e = entry(k);
        bits.for_each([&](std::size_t i) { e.pn[i] += 1.0; });
    }
}

void HistoricalSketch::on_complete(const std::vector<uint64_t>& lineage, std::size_t pattern) {
    for (uint64_t k : lineage) entry(k).cn[pattern] += 1.0;
}

void HistoricalSketch::advance(uint64_t now) {
    if (cfg_.epoch == 0) return;
    while (now >= next_epoch_) {
        for (auto& [key, e] : table_) {
            for (auto& c : e.cn) c *= 0.5;
            for (auto& p : e.pn) p *= 0.5;
        }
        next_epoch_ += cfg_.epoch;
    }
}

const SketchEntry* HistoricalSketch::find(uint64_t key) const {
    auto it = table_.find(slot(key));
    return it == table_.end() ? nullptr : &it->second;
}

double HistoricalSketch::theta(const MatchRecord& r) const {
    return cfg_.theta == ThetaKind::kOne ? 1.0 : static_cast<double>(r.length());
}

CostVectors HistoricalSketch::estimate(const MatchRecord& r) const {
    CostVectors v{std::vector<double>(n_, 0.0), std::vector<double>(n_, 0.0)};
    if (const SketchEntry* e = find(r.key)) {
        double t = theta(r);
        for (std::size_t i = 0; i < n_; ++i) {
            v.plus[i] = e->cn[i];
            v.minus[i] = e->pn[i] * t;
        }
    }
    return v;
}

double HistoricalSketch::plus_sum(const MatchRecord& r) const {
    const SketchEntry* e = find(r.key);
    if (!e) return 0.0;
    double s = 0.0;
    for (double c : e->cn) s += c;
    return s;
}

double HistoricalSketch::minus(const MatchRecord& r, std::size_t pattern) const {
    const SketchEntry* e = find(r.key);
    return e ? e->pn[pattern] * theta(r) : 0.0;
}

std::string HistoricalSketch::dump_csv() const {
    std::vector<uint64_t> keys;
    keys.reserve(table_.size());
    for (const auto& kv : table_) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    std::ostringstream os;
    os.precision(17);
    os << "key,state_id";
    for (std::size_t i = 0; i < n_; ++i) os << ",cn_" << i + 1;
    for (std::size_t i = 0; i < n_; ++i) os << ",pn_" << i + 1;
    os << '\n';
    for (uint64_t k : keys) {
        const auto& e = table_.at(k);
        os << k << ',' << e.state;
        for (double c : e.cn) os << ',' << c;
        for (double p : e.pn) os << ',' << p;
        os << '\n';
    }
    return os.str();
}

bool order_greater(const CostVectors& a, const CostVectors& b) {
    bool dominates = !a.plus.empty();
    for (std::size_t i = 0; i < a.plus.size(); ++i)
        if (!(a.plus[i] > b.plus[i])) {
            dominates = false;
            break;
        }
    if (dominates) return true;
    double sa = 0.0, sb = 0.0;
    for (double x : a.plus) sa += x;
    for (double x : b.plus) sb += x;
    return sa > sb;
}

}  // namespace cepshare
