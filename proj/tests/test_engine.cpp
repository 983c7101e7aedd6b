#include <random>
#include <set>

#include "cepshare/engine.hpp"
#include "cepshare/plan.hpp"
#include "doctest.h"
#include "oracle.hpp"
#include "random_cases.hpp"

using namespace cepshare;

namespace {

Stream stream_of(const Schema& schema, const std::vector<std::pair<std::string, double>>& items) {
    Stream s;
    s.schema = schema;
    for (std::size_t i = 0; i < items.size(); ++i) {
        DataElement d;
        d.type = *s.schema.find_type(items[i].first);
        d.seq = i;
        d.ts = static_cast<double>(i);
        d.attrs.assign(schema.attribute_count(), 0.0);
        if (!d.attrs.empty()) d.attrs[0] = items[i].second;
        s.elements.push_back(d);
    }
    s.partition_starts = {0};
    return s;
}

std::vector<std::vector<uint64_t>> tuples(const std::vector<CompleteMatch>& cms) {
    std::vector<std::vector<uint64_t>> out;
    for (const auto& c : cms) out.push_back(c.seqs);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("skip-till-any with reuse pairs every a with every later b") {
    Schema schema({"A", "B"}, {"x"});
    auto s = stream_of(schema, {{"A", 0}, {"A", 0}, {"B", 0}, {"B", 0}});
    auto plan = compile(parse_pattern("SEQ(A a, B b) WITHIN 100"), schema);
    auto cms = golden_run(s, plan);
    CHECK(tuples(cms) == std::vector<std::vector<uint64_t>>{{0, 2}, {0, 3}, {1, 2}, {1, 3}});
}

TEST_CASE("strict contiguity keeps only the adjacent pair") {
    Schema schema({"A", "B"}, {"x"});
    auto s = stream_of(schema, {{"A", 0}, {"A", 0}, {"B", 0}, {"B", 0}});
    EngineConfig cfg;
    cfg.policy.selection = SelectionPolicy::kStrictContiguity;
    auto cms = golden_run(s, compile(parse_pattern("SEQ(A a, B b) WITHIN 100"), schema), cfg);
    CHECK(tuples(cms) == std::vector<std::vector<uint64_t>>{{1, 2}});
}

TEST_CASE("a partial match at a shared state completes twice for the second pattern") {
    Schema schema({"A", "C", "D", "E"}, {"x"});
    auto p2 = parse_pattern("SEQ(A a, C c, D d) WHERE c.x = d.x WITHIN 100", 2);
    auto p3 = parse_pattern("SEQ(A a, C c, E e) WHERE c.x = e.x WITHIN 100", 3);
    auto plan = build_plan({p2, p3}, schema, MaterializationMode::kView);
    auto s = stream_of(schema, {{"A", 0}, {"C", 4}, {"D", 4}, {"D", 4}, {"D", 5}});
    auto cms = golden_run(s, plan);
    REQUIRE(cms.size() == 2);
    CHECK(cms[0].pattern == 0);
    CHECK(cms[1].pattern == 0);
}

TEST_CASE("expire") {
    Schema schema({"A", "B"}, {"x"});
    SUBCASE("empty buffers") {
        Engine e(compile(parse_pattern("SEQ(A a, B b) WITHIN 3"), schema), {});
        CHECK(e.expire(10, 10.0) == 0);
    }
    SUBCASE("count window evicts a record anchored too far back") {
        Engine e(compile(parse_pattern("SEQ(A a, B b) WITHIN 3"), schema), {});
        DataElement a{0, 1, 1.0, {0.0}};
        e.process(a);
        CHECK(e.live_count() == 1);
        CHECK(e.expire(5, 5.0) == 1);
        CHECK(e.live_count() == 0);
    }
    SUBCASE("shared record keeps the bit of the longer window") {
        auto p1 = parse_pattern("SEQ(A a, B b) WITHIN 10", 1);
        auto p2 = parse_pattern("SEQ(A a, C c) WITHIN 3", 2);
        Schema sc({"A", "B", "C"}, {"x"});
        Engine e(build_plan({p1, p2}, sc, MaterializationMode::kView), {});
        e.process(DataElement{0, 0, 0.0, {0.0}});
        auto live = e.live_records();
        REQUIRE(live.size() == 1);
        CHECK(e.pool().get(live[0]).bits.to_string(2) == "[11]");
        CHECK(e.expire(5, 5.0) == 0);
        CHECK(e.pool().get(live[0]).bits.to_string(2) == "[10]");
    }
}

TEST_CASE("measure") {
    Schema schema({"A", "B", "C"}, {"x"});
    auto plan = build_plan({parse_pattern("SEQ(A a, B b) WITHIN 5", 0), parse_pattern("SEQ(A a, C c) WITHIN 5", 1),
                            parse_pattern("SEQ(B b, C c) WITHIN 5", 2)},
                           schema, MaterializationMode::kView);
    Engine e(plan, {});
    const auto& p = e.plan();
    std::size_t shared = p.chains[0][1];  // state A, psd [110]
    REQUIRE(p.states[shared].psd.to_string(3) == "[110]");
    std::vector<uint64_t> work(p.states.size(), 0);

    SUBCASE("zero work decays towards zero") {
        LatencyMonitor m(3, 0.5);
        m.latency_ms = {1, 2, 3};
        measure(m, 0.0, work, p);
        CHECK(m.latency_ms == std::vector<double>{0.5, 1, 1.5});
    }
    SUBCASE("even split among sharers") {
        LatencyMonitor m(3, 1.0);
        work[shared] = 4;
        measure(m, 10.0, work, p);
        CHECK(m.latency_ms == std::vector<double>{5, 5, 0});
    }
    SUBCASE("alpha zero freezes") {
        LatencyMonitor m(3, 0.0);
        m.latency_ms = {1, 2, 3};
        work[shared] = 4;
        measure(m, 10.0, work, p);
        CHECK(m.latency_ms == std::vector<double>{1, 2, 3});
    }
}

TEST_CASE("golden run matches the brute-force oracle on random cases") {
    std::mt19937_64 rng(7);
    const SelectionPolicy sels[] = {SelectionPolicy::kSkipTillAny, SelectionPolicy::kSkipTillNext,
                                    SelectionPolicy::kStrictContiguity};
    const ConsumptionPolicy cons[] = {ConsumptionPolicy::kReuse, ConsumptionPolicy::kConsume};
    for (int trial = 0; trial < 150; ++trial) {
        int alphabet = cases::uniform(rng, 2, 6);
        auto stream = cases::random_stream(rng, alphabet, cases::uniform(rng, 1, 120));
        std::vector<Pattern> pats;
        std::vector<char> prefix = {'A', static_cast<char>('A' + cases::uniform(rng, 0, alphabet - 1))};
        int n = cases::uniform(rng, 1, 3);
        for (int i = 0; i < n; ++i) {
            cases::PatternShape shape{cases::coin(rng, 0.5), cases::coin(rng, 0.4)};
            pats.push_back(parse_pattern(cases::random_pattern(rng, alphabet, shape, prefix), i));
        }
        auto mode = static_cast<MaterializationMode>(cases::uniform(rng, 0, 2));
        auto plan = build_plan(pats, stream.schema, mode);
        for (auto sel : sels)
            for (auto con : cons) {
                EngineConfig cfg;
                cfg.policy = {sel, con};
                auto got = cases::to_oracle(golden_run(stream, plan, cfg));
                for (int i = 0; i < n; ++i) {
                    auto want = oracle::matches(pats[static_cast<std::size_t>(i)], stream.schema, stream.elements,
                                                cfg.policy, static_cast<std::size_t>(i));
                    auto have = cases::for_pattern(got, static_cast<std::size_t>(i));
                    INFO("trial " << trial << " pattern " << print_pattern(pats[static_cast<std::size_t>(i)])
                                  << " sel " << to_string(sel) << " cons " << to_string(con) << " mode "
                                  << to_string(mode));
                    CHECK(cases::sorted(have) == cases::sorted(want));
                }
            }
    }
}

TEST_CASE("parallel guard evaluation matches the serial engine") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        int alphabet = cases::uniform(rng, 2, 4);
        auto stream = cases::random_stream(rng, alphabet, 200);
        std::vector<Pattern> pats;
        for (int i = 0; i < 3; ++i)
            pats.push_back(parse_pattern(
                cases::random_pattern(rng, alphabet, {cases::coin(rng, 0.5), cases::coin(rng, 0.3)}, {'A', 'B'}), i));
        auto plan = build_plan(pats, stream.schema, MaterializationMode::kView);
        EngineConfig serial;
        serial.sketch.partition_attrs = {0};
        serial.policy.consumption = cases::coin(rng, 0.5) ? ConsumptionPolicy::kConsume : ConsumptionPolicy::kReuse;
        EngineConfig parallel = serial;
        parallel.parallel = true;
        parallel.parallel_min_buffer = 1;
        Engine a(plan, serial), b(plan, parallel);
        for (const auto& d : stream.elements) {
            auto x = a.process(d), y = b.process(d);
            CHECK(x.cms == y.cms);
            CHECK(x.work == y.work);
        }
        CHECK(a.sketch().dump_csv() == b.sketch().dump_csv());
        CHECK(a.monitor().latency_ms == b.monitor().latency_ms);
    }
}

TEST_CASE("policy ordering and the record ledger") {
    std::mt19937_64 rng(19);
    auto set_of = [](const std::vector<CompleteMatch>& cms) {
        std::set<std::pair<std::size_t, std::vector<uint64_t>>> s;
        for (const auto& c : cms) s.insert({c.pattern, c.seqs});
        return s;
    };
    auto includes = [](const auto& big, const auto& small) {
        return std::includes(big.begin(), big.end(), small.begin(), small.end());
    };
    for (int trial = 0; trial < 100; ++trial) {
        int alphabet = cases::uniform(rng, 2, 5);
        auto stream = cases::random_stream(rng, alphabet, cases::uniform(rng, 1, 200));
        std::vector<Pattern> pats;
        for (int i = 0; i < 2; ++i)
            pats.push_back(parse_pattern(
                cases::random_pattern(rng, alphabet, {cases::coin(rng, 0.5), cases::coin(rng, 0.3)}, {'A'}), i));
        auto plan = build_plan(pats, stream.schema, MaterializationMode::kView);
        auto run = [&](SelectionPolicy s, ConsumptionPolicy c) {
            EngineConfig cfg;
            cfg.policy = {s, c};
            Engine e(plan, cfg);
            std::vector<CompleteMatch> out;
            for (const auto& d : stream.elements)
                for (auto& m : e.process(d).cms) out.push_back(std::move(m));
            const auto& m = e.metrics();
            CHECK(m.created == m.expired + m.discarded + m.consumed + m.superseded + e.live_count());
            return set_of(out);
        };
        auto any = run(SelectionPolicy::kSkipTillAny, ConsumptionPolicy::kReuse);
        auto next = run(SelectionPolicy::kSkipTillNext, ConsumptionPolicy::kReuse);
        auto strict = run(SelectionPolicy::kStrictContiguity, ConsumptionPolicy::kReuse);
        CHECK(includes(any, next));
        CHECK(includes(next, strict));
        for (auto s : {SelectionPolicy::kSkipTillAny, SelectionPolicy::kSkipTillNext, SelectionPolicy::kStrictContiguity})
            CHECK(includes(run(s, ConsumptionPolicy::kReuse), run(s, ConsumptionPolicy::kConsume)));
    }
}

TEST_CASE("created work counts only new records") {
    Schema schema({"A", "B"}, {"x"});
    auto s = stream_of(schema, {{"A", 0}, {"A", 0}, {"B", 0}, {"A", 0}, {"B", 0}});
    auto plan = compile(parse_pattern("SEQ(A a, B b, B c) WITHIN 100"), schema);
    EngineConfig scanned, created;
    created.work = WorkMeasure::kCreated;
    Engine es(plan, scanned), ec(plan, created);
    for (const auto& d : s.elements) {
        uint64_t before = ec.metrics().created;
        auto os = es.process(d);
        auto oc = ec.process(d);
        CHECK(oc.cms == os.cms);
        uint64_t total = 0;
        for (uint64_t w : ec.last_work()) total += w;
        CHECK(total == ec.metrics().created - before);
        CHECK(oc.work <= os.work);
    }
    CHECK(ec.monitor().latency_ms[0] < es.monitor().latency_ms[0]);
}
