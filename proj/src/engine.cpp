#include "cepshare/engine.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

namespace cepshare {

void measure(LatencyMonitor& monitor, double elapsed_ms, std::span<const uint64_t> work_by_state,
             const ExecutionPlan& plan) {
    uint64_t total = 0;
    for (uint64_t w : work_by_state) total += w;
    std::vector<double> share(monitor.latency_ms.size(), 0.0);
    for (std::size_t s = 0; total > 0 && s < work_by_state.size(); ++s) {
        if (work_by_state[s] == 0) continue;
        const PatternMask& psd = plan.states[s].psd;
        int sharers = psd.count();
        if (sharers == 0) continue;
        double part = elapsed_ms * static_cast<double>(work_by_state[s]) / static_cast<double>(total) / sharers;
        psd.for_each([&](std::size_t i) { share[i] += part; });
    }
    for (std::size_t i = 0; i < share.size(); ++i)
        monitor.latency_ms[i] = (1.0 - monitor.alpha) * monitor.latency_ms[i] + monitor.alpha * share[i];
}

Engine::Engine(ExecutionPlan plan, EngineConfig cfg) : plan_(std::move(plan)), cfg_(std::move(cfg)) {
    index_ = assess(plan_);
    const std::size_t n = plan_.pattern_count();
    sketch_ = HistoricalSketch(n, cfg_.sketch);
    monitor_ = LatencyMonitor(n, cfg_.alpha);
    metrics_.cm_per_pattern.assign(n, 0);
    window_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Pattern& p = plan_.patterns[i];
        PolicyConfig pc = p.policy.value_or(cfg_.policy);
        if (pc.selection == SelectionPolicy::kSkipTillNext) next_mask_.set(i);
        if (pc.selection == SelectionPolicy::kStrictContiguity) strict_mask_.set(i);
        if (pc.consumption == ConsumptionPolicy::kConsume) consume_mask_.set(i);
        if (p.window.kind == Window::Kind::kCount)
            count_mask_.set(i);
        else
            time_mask_.set(i);
        window_[i] = p.window.length;
    }
    triggers_.resize(plan_.schema.type_count());
    for (const auto& s : plan_.states) {
        std::vector<std::pair<TypeId, std::vector<std::size_t>>> by_type;
        for (std::size_t e : s.out_edges) {
            TypeId t = plan_.edges[e].trigger;
            auto it = std::find_if(by_type.begin(), by_type.end(), [&](const auto& x) { return x.first == t; });
            if (it == by_type.end()) {
                by_type.push_back({t, {}});
                it = by_type.end() - 1;
            }
            it->second.push_back(e);
        }
        for (auto& [t, edges] : by_type) triggers_[t].push_back({s.id, std::move(edges)});
    }
    type_pos_.resize(plan_.schema.type_count());
    start_key_ = attr_key(cfg_.sketch, 0, nullptr, nullptr);
    work_.assign(plan_.states.size(), 0);
}

void Engine::build_env(const MatchRecord* r, const DataElement* d, EdgeKind kind, Env& env) const {
    env.clear();
    if (r) {
        for (std::size_t j = 0; j < r->bound(); ++j) {
            env.push_step();
            for (uint32_t k = r->step_begin[j]; k < r->step_begin[j + 1]; ++k) env.add(&at(r->pos[k]));
        }
    }
    if (d) {
        if (kind != EdgeKind::kKleeneExtend) env.push_step();
        env.add(d);
    }
}

bool Engine::negation_clear(const MatchRecord* r, uint64_t pos, std::size_t pattern, const EdgeGuard& g, Env& env,
                            EvalDiagnostics& diag) const {
    const CompiledPredicate& pred = plan_.predicates[pattern];
    uint64_t lo = r->pos.back();
    bool clear = true;
    for (std::size_t k : g.negations) {
        const auto& neg = pred.negations()[k];
        if (neg.type >= type_pos_.size()) continue;
        const auto& tp = type_pos_[neg.type];
        auto it = std::upper_bound(tp.begin(), tp.end(), lo);
        for (; it != tp.end() && *it < pos; ++it) {
            env.negated = &at(*it);
            if (pred.eval_all(neg.filters, env, &diag)) {
                clear = false;
                break;
            }
        }
        if (!clear) break;
    }
    env.negated = nullptr;
    return clear;
}

void Engine::evaluate(const MatchRecord* r, const DataElement& d, uint64_t pos, std::span<const std::size_t> edges,
                      EdgeOutcome* out, PatternMask& effective, EvalDiagnostics& diag, Env& env) const {
    PatternMask bits = r ? r->bits : plan_.all_patterns();
    if (r) {
        if ((bits & consume_mask_).any()) {
            PatternMask hit;
            for (uint64_t p : r->pos) hit |= history_[p - base_].consumed;
            bits &= ~(hit & consume_mask_);
        }
        if ((bits & strict_mask_).any() && d.seq != r->last_seq + 1) bits &= ~strict_mask_;
    }
    effective = bits;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        out[k] = EdgeOutcome{};
        const PlanEdge& e = plan_.edges[edges[k]];
        PatternMask active = bits & e.patterns;
        if (active.none()) continue;
        build_env(r, &d, e.kind, env);
        for (const EdgeGuard& g : e.guards) {
            if (!active.test(g.pattern)) continue;
            if (r) {
                double span = count_mask_.test(g.pattern) ? static_cast<double>(d.seq - r->first_seq) : d.ts - r->first_ts;
                if (span > window_[g.pattern]) continue;
            }
            const CompiledPredicate& pred = plan_.predicates[g.pattern];
            if (!pred.eval_all(g.conjuncts, env, &diag)) continue;
            if (!g.negations.empty() && !negation_clear(r, pos, g.pattern, g, env, diag)) continue;
            out[k].pass.set(g.pattern);
            if (g.continues) out[k].pm.set(g.pattern);
            if (g.accepting && pred.eval_all(g.final_conjuncts, env, &diag)) out[k].cm.set(g.pattern);
        }
    }
}

void Engine::lose(RecordHandle h, const PatternMask& bits, Loss why) {
    if (!pool_.alive(h) || bits.none()) return;
    MatchRecord& r = pool_.get(h);
    r.bits &= ~bits;
    if (r.bits.any()) return;
    pool_.release(h);
    switch (why) {
        case Loss::kExpired: ++metrics_.expired; break;
        case Loss::kConsumed: ++metrics_.consumed; break;
        case Loss::kSuperseded: ++metrics_.superseded; break;
        case Loss::kDiscarded: ++metrics_.discarded; break;
    }
}

void Engine::discard(RecordHandle h) {
    if (!pool_.alive(h)) return;
    lose(h, pool_.get(h).bits, Loss::kDiscarded);
}

std::vector<RecordHandle> Engine::live_records() {
    std::vector<RecordHandle> out;
    for (std::size_t s = 0; s < index_.state_count(); ++s) {
        index_.compact(s, pool_);
        const auto& buf = index_.buffer(s);
        out.insert(out.end(), buf.begin(), buf.end());
    }
    return out;
}

void Engine::push_expiry(RecordHandle h) {
    const MatchRecord& r = pool_.get(h);
    double wc = std::numeric_limits<double>::infinity(), wt = wc;
    (r.bits & count_mask_).for_each([&](std::size_t i) { wc = std::min(wc, window_[i]); });
    (r.bits & time_mask_).for_each([&](std::size_t i) { wt = std::min(wt, window_[i]); });
    if (wc != std::numeric_limits<double>::infinity()) count_heap_.push({static_cast<double>(r.first_seq) + wc, h});
    if (wt != std::numeric_limits<double>::infinity()) time_heap_.push({r.first_ts + wt, h});
}

std::size_t Engine::expire(uint64_t now_seq, double now_ts) {
    std::size_t before = pool_.live();
    auto run = [&](ExpiryHeap& heap, const PatternMask& kind_mask, double now, bool count) {
        while (!heap.empty() && heap.top().at < now) {
            RecordHandle h = heap.top().h;
            heap.pop();
            if (!pool_.alive(h)) continue;
            const MatchRecord& r = pool_.get(h);
            double anchor = count ? static_cast<double>(r.first_seq) : r.first_ts;
            PatternMask gone;
            double next = std::numeric_limits<double>::infinity();
            (r.bits & kind_mask).for_each([&](std::size_t i) {
                if (anchor + window_[i] < now)
                    gone.set(i);
                else
                    next = std::min(next, anchor + window_[i]);
            });
            lose(h, gone, Loss::kExpired);
            if (pool_.alive(h) && next != std::numeric_limits<double>::infinity()) heap.push({next, h});
        }
    };
    run(count_heap_, count_mask_, static_cast<double>(now_seq), true);
    run(time_heap_, time_mask_, now_ts, false);
    return before - pool_.live();
}

void Engine::trim_history(uint64_t now_seq, double now_ts) {
    double wc = plan_.max_count_window(), wt = plan_.max_time_window();
    bool has_count = count_mask_.any(), has_time = time_mask_.any();
    while (!history_.empty()) {
        const DataElement& f = history_.front().e;
        bool out_count = !has_count || static_cast<double>(f.seq) + wc < static_cast<double>(now_seq);
        bool out_time = !has_time || f.ts + wt < now_ts;
        if (!(out_count && out_time)) break;
        history_.pop_front();
        ++base_;
    }
    for (auto& tp : type_pos_)
        while (!tp.empty() && tp.front() < base_) tp.pop_front();
}

bool Engine::any_consumed(const std::vector<uint64_t>& pos, std::size_t pattern) const {
    for (uint64_t p : pos)
        if (history_[p - base_].consumed.test(pattern)) return true;
    return false;
}

void Engine::merge_outcome(const MatchRecord* parent, RecordHandle parent_h, std::span<const std::size_t> edges,
                           const EdgeOutcome* out, const DataElement& d, uint64_t pos) {
    PatternMask passed;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const EdgeOutcome& o = out[k];
        passed |= o.pass;
        if (o.pm.none() && o.cm.none()) continue;
        const PlanEdge& e = plan_.edges[edges[k]];
        MatchRecord succ;
        if (parent) {
            succ.pos = parent->pos;
            succ.step_begin = parent->step_begin;
            succ.first_seq = parent->first_seq;
            succ.first_ts = parent->first_ts;
            succ.lineage = parent->lineage;
            succ.lineage.push_back(parent->key);
        } else {
            succ.first_seq = d.seq;
            succ.first_ts = d.ts;
            succ.lineage.push_back(start_key_);
        }
        succ.pos.push_back(pos);
        if (e.kind == EdgeKind::kKleeneExtend)
            succ.step_begin.back() = static_cast<uint32_t>(succ.pos.size());
        else
            succ.step_begin.push_back(static_cast<uint32_t>(succ.pos.size()));
        succ.last_seq = d.seq;
        succ.last_ts = d.ts;
        succ.state = e.to;
        o.cm.for_each([&](std::size_t i) { pending_cm_.push_back({i, succ.pos, succ.step_begin, succ.lineage}); });
        if (o.pm.none()) continue;
        succ.key = attr_key(cfg_.sketch, e.to, &at(succ.pos.front()), &d);
        if (!cfg_.sketch.every_attrs.empty())
            for (uint64_t p : succ.pos) succ.key = extend_key(cfg_.sketch, succ.key, at(p));
        if (plan_.mode == MaterializationMode::kInstance) {
            o.pm.for_each([&](std::size_t i) {
                MatchRecord clone = succ;
                clone.bits = PatternMask::single(i);
                pending_pm_.push_back(std::move(clone));
            });
        } else {
            succ.bits = o.pm;
            pending_pm_.push_back(std::move(succ));
        }
    }
    if (parent) lose(parent_h, passed & next_mask_, Loss::kSuperseded);
}

void Engine::scan_state(std::size_t state, const DataElement& d, uint64_t pos, std::span<const std::size_t> edges) {
    index_.compact(state, pool_);
    const auto& buf = index_.buffer(state);
    const std::size_t n = buf.size(), ne = edges.size();
    if (n == 0) return;
    if (cfg_.work == WorkMeasure::kScanned) work_[state] += n;
    outcomes_.assign(n * ne, EdgeOutcome{});
    effective_.assign(n, PatternMask{});
    if (cfg_.parallel && n >= cfg_.parallel_min_buffer) {
        uint64_t dz = 0, de = 0;
#pragma omp parallel reduction(+ : dz, de)
        {
            Env env;
            EvalDiagnostics local;
#pragma omp for schedule(static)
            for (std::size_t i = 0; i < n; ++i)
                evaluate(&pool_.get(buf[i]), d, pos, edges, &outcomes_[i * ne], effective_[i], local, env);
            dz += local.division_by_zero;
            de += local.domain_error;
        }
        metrics_.diag.division_by_zero += dz;
        metrics_.diag.domain_error += de;
    } else {
        Env env;
        for (std::size_t i = 0; i < n; ++i)
            evaluate(&pool_.get(buf[i]), d, pos, edges, &outcomes_[i * ne], effective_[i], metrics_.diag, env);
    }
    for (std::size_t i = 0; i < n; ++i) {
        RecordHandle h = buf[i];
        if (!pool_.alive(h)) continue;
        const MatchRecord& r = pool_.get(h);
        PatternMask lost = r.bits & ~effective_[i];
        merge_outcome(&r, h, edges, &outcomes_[i * ne], d, pos);
        lose(h, lost & consume_mask_, Loss::kConsumed);
        lose(h, lost & strict_mask_, Loss::kSuperseded);
    }
}

namespace {

bool canonical_less(const std::size_t pa, const std::vector<uint64_t>& a, const std::vector<uint32_t>& sa,
                    const std::size_t pb, const std::vector<uint64_t>& b, const std::vector<uint32_t>& sb) {
    if (pa != pb) return pa < pb;
    std::vector<uint64_t> x(a), y(b);
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    auto ix = x.rbegin(), iy = y.rbegin();
    for (; ix != x.rend() && iy != y.rend(); ++ix, ++iy)
        if (*ix != *iy) return *ix < *iy;
    if (x.size() != y.size()) return x.size() < y.size();
    return sa < sb;
}

}  // namespace

StepOutput Engine::step(const DataElement& d) {
    auto t0 = std::chrono::steady_clock::now();
    StepOutput out;
    ++metrics_.elements;
    if (cfg_.track_sketch) sketch_.advance(d.seq);
    std::fill(work_.begin(), work_.end(), 0);
    trim_history(d.seq, d.ts);
    const uint64_t pos = next_pos_++;
    if (history_.empty()) base_ = pos;
    history_.push_back(HistEntry{d, {}});
    if (d.type < type_pos_.size()) type_pos_[d.type].push_back(pos);
    const DataElement& cur = history_.back().e;

    pending_pm_.clear();
    pending_cm_.clear();
    if (cur.type < triggers_.size()) {
        for (const auto& [state, edges] : triggers_[cur.type]) {
            if (state == 0) {
                Env env;
                std::vector<EdgeOutcome> o(edges.size());
                PatternMask eff;
                evaluate(nullptr, cur, pos, edges, o.data(), eff, metrics_.diag, env);
                if (cfg_.work == WorkMeasure::kScanned) work_[0] += 1;
                merge_outcome(nullptr, RecordHandle{}, edges, o.data(), cur, pos);
            } else {
                scan_state(state, cur, pos, edges);
            }
        }
    }

    // Complete matches in canonical order; consume filters them per pattern.
    std::vector<std::size_t> order(pending_cm_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = pending_cm_[a];
        const auto& y = pending_cm_[b];
        return canonical_less(x.pattern, x.pos, x.step_begin, y.pattern, y.pos, y.step_begin);
    });
    for (std::size_t idx : order) {
        auto& cm = pending_cm_[idx];
        if (consume_mask_.test(cm.pattern)) {
            if (any_consumed(cm.pos, cm.pattern)) {
                ++metrics_.cm_dropped;
                continue;
            }
            for (uint64_t p : cm.pos) hist(p).consumed.set(cm.pattern);
        }
        CompleteMatch m;
        m.pattern = cm.pattern;
        m.step_begin = cm.step_begin;
        m.seqs.reserve(cm.pos.size());
        for (uint64_t p : cm.pos) m.seqs.push_back(at(p).seq);
        m.emit_index = emit_index_++;
        if (cfg_.track_sketch) sketch_.on_complete(cm.lineage, cm.pattern);
        ++metrics_.cm_emitted;
        ++metrics_.cm_per_pattern[cm.pattern];
        out.cms.push_back(std::move(m));
    }

    std::vector<RecordHandle> strict_new;
    for (auto& rec : pending_pm_) {
        (rec.bits & consume_mask_).for_each([&](std::size_t i) {
            if (any_consumed(rec.pos, i)) rec.bits.reset(i);
        });
        if (rec.bits.none()) continue;
        rec.serial = serial_++;
        std::size_t state = rec.state;
        if (cfg_.track_sketch) {
            sketch_.touch(rec.key, state);
            sketch_.on_partial(rec.lineage, rec.bits);
        }
        bool strict = (rec.bits & strict_mask_).any();
        RecordHandle h = pool_.acquire(std::move(rec));
        index_.insert(state, h);
        push_expiry(h);
        if (strict) strict_new.push_back(h);
        ++work_[state];
        ++metrics_.created;
        ++out.new_pms;
    }
    for (RecordHandle h : strict_recent_)
        if (pool_.alive(h)) lose(h, pool_.get(h).bits & strict_mask_, Loss::kSuperseded);
    strict_recent_ = std::move(strict_new);

    for (uint64_t w : work_) out.work += w;
    if (cfg_.clock == CostClock::kWall) {
        last_elapsed_ms_ = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    } else {
        last_elapsed_ms_ = out.work ? cfg_.base_ms + cfg_.unit_ms * static_cast<double>(out.work) : 0.0;
    }
    out.elapsed_ms = last_elapsed_ms_;
    return out;
}

void Engine::measure_last() { measure(monitor_, last_elapsed_ms_, work_, plan_); }

StepOutput Engine::process(const DataElement& d) {
    expire(d.seq, d.ts);
    StepOutput out = step(d);
    measure_last();
    return out;
}

void Engine::flush() {
    for (RecordHandle h : live_records()) lose(h, pool_.get(h).bits, Loss::kExpired);
    strict_recent_.clear();
}

std::vector<CompleteMatch> golden_run(const Stream& stream, const ExecutionPlan& plan, const EngineConfig& cfg) {
    EngineConfig c = cfg;
    c.track_sketch = false;
    Engine engine(plan, c);
    std::vector<CompleteMatch> out;
    std::size_t next_partition = 1;
    for (std::size_t i = 0; i < stream.elements.size(); ++i) {
        if (next_partition < stream.partition_starts.size() && stream.partition_starts[next_partition] == i) {
            engine.flush();
            ++next_partition;
        }
        auto step = engine.process(stream.elements[i]);
        for (auto& m : step.cms) out.push_back(std::move(m));
    }
    return out;
}

}  // namespace cepshare
