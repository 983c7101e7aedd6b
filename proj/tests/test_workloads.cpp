#include <cmath>
#include <sstream>

#include "cepshare/workloads.hpp"
#include "doctest.h"

using namespace cepshare;

namespace {

std::size_t attr(const Stream& s, const char* name) {
    auto a = s.schema.find_attribute(name);
    REQUIRE(a);
    return *a;
}

bool same_elements(const Stream& a, const Stream& b, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
        const auto& x = a.elements[i];
        const auto& y = b.elements[i];
        if (x.type != y.type || x.seq != y.seq || x.ts != y.ts || x.attrs != y.attrs) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("DS1 values stay inside their distributions") {
    auto s = gen_ds1(5000, 3);
    REQUIRE(s.size() == 5000);
    CHECK(s.schema.type_count() == 10);
    std::size_t id = attr(s, "ID"), x = attr(s, "X"), y = attr(s, "Y"), v = attr(s, "V");
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& d = s.elements[i];
        CHECK(d.seq == i);
        CHECK(d.ts == static_cast<double>(i));
        CHECK(d.attrs[id] >= 1);
        CHECK(d.attrs[id] <= 10);
        CHECK(d.attrs[id] == std::floor(d.attrs[id]));
        CHECK(d.attrs[x] >= -90);
        CHECK(d.attrs[x] < 90);
        CHECK(d.attrs[y] >= -180);
        CHECK(d.attrs[y] < 180);
        CHECK(d.attrs[v] >= 1);
        CHECK(d.attrs[v] < 3e6);
    }
}

TEST_CASE("DS2 values stay inside their distributions") {
    auto s = gen_ds2(3000, 4);
    CHECK(s.schema.type_count() == 6);
    std::size_t id = attr(s, "ID"), x = attr(s, "X");
    for (const auto& d : s.elements) {
        CHECK(d.attrs[id] >= 1);
        CHECK(d.attrs[id] <= 25);
        CHECK(d.attrs[x] >= 1);
        CHECK(d.attrs[x] < 100);
    }
}

TEST_CASE("generator edge cases") {
    CHECK(gen_ds1(0, 1).empty());
    CHECK(gen_ds1(0, 1).partition_starts.empty());

    GeneratorSpec bad = ds2_spec(10, 1);
    bad.attrs[1].lo = 5;
    bad.attrs[1].hi = 4;
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
    bad = ds2_spec(10, 1);
    bad.drift.push_back(DriftEntry{20, std::nullopt, "X", std::nullopt, 0, 1});
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
    bad = ds2_spec(10, 1);
    bad.drift.push_back(DriftEntry{0, std::nullopt, "Q", std::nullopt, 0, 1});
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
    bad = ds2_spec(10, 1);
    bad.types.clear();
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
}

TEST_CASE("generation is a pure function of spec and seed") {
    auto a = gen_ds1(2000, 11), b = gen_ds1(2000, 11), c = gen_ds1(2000, 12);
    CHECK(same_elements(a, b, 0, 2000));
    CHECK_FALSE(same_elements(a, c, 0, 2000));
    // A longer stream extends a shorter one.
    auto d = gen_ds1(3000, 11);
    CHECK(same_elements(a, d, 0, 2000));
}

TEST_CASE("adding an attribute leaves the other columns alone") {
    GeneratorSpec s = ds2_spec(1000, 8);
    GeneratorSpec wider = s;
    wider.attrs.push_back(AttrDist{"Z", 0, 1, false});
    auto a = generate(s), b = generate(wider);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.elements[i].type == b.elements[i].type);
        CHECK(a.elements[i].attrs[0] == b.elements[i].attrs[0]);
        CHECK(a.elements[i].attrs[1] == b.elements[i].attrs[1]);
    }
}

TEST_CASE("sample means sit within three standard errors") {
    const std::size_t n = 20000;
    auto s = gen_ds1(n, 21);
    struct Expect {
        const char* name;
        double lo, hi;
        bool integer;
    };
    for (Expect e : {Expect{"ID", 1, 10, true}, Expect{"X", -90, 90, false}, Expect{"V", 1, 3e6, false}}) {
        std::size_t a = attr(s, e.name);
        double sum = 0;
        for (const auto& d : s.elements) sum += d.attrs[a];
        double mean = (e.lo + e.hi) / 2;
        double k = e.hi - e.lo + 1;
        double sd = e.integer ? std::sqrt((k * k - 1) / 12) : (e.hi - e.lo) / std::sqrt(12.0);
        INFO(e.name);
        CHECK(std::abs(sum / n - mean) < 3 * sd / std::sqrt(static_cast<double>(n)));
    }
    std::vector<double> freq(10, 0);
    for (const auto& d : s.elements) freq[d.type] += 1;
    for (double f : freq) CHECK(std::abs(f / n - 0.1) < 3 * std::sqrt(0.09 / n));
}

TEST_CASE("drift injection") {
    SUBCASE("no entries is the identity") {
        GeneratorSpec s = ds1_spec(500, 2);
        CHECK(same_elements(generate(s), generate_base(s), 0, 500));
    }
    SUBCASE("elements before the offset are untouched") {
        GeneratorSpec s = ds1_spec(3000, 2);
        GeneratorSpec d = s;
        d.drift.push_back(DriftEntry{1200, std::nullopt, "V", std::nullopt, 5e6, 6e6});
        auto a = generate(s), b = generate(d);
        CHECK(same_elements(a, b, 0, 1200));
        std::size_t v = attr(b, "V");
        for (std::size_t i = 1200; i < 3000; ++i) {
            CHECK(b.elements[i].attrs[v] >= 5e6);
            CHECK(b.elements[i].attrs[v] < 6e6);
        }
    }
    SUBCASE("D.V shift") {
        GeneratorSpec s = ds1_spec(12000, 5);
        s.drift = dv_drift(9000);
        auto base = generate_base(s), b = generate(s);
        std::size_t v = attr(b, "V");
        TypeId dt = *b.schema.find_type("D");
        std::size_t ds = 0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const auto& e = b.elements[i];
            if (e.type != dt) {
                CHECK(e.attrs == base.elements[i].attrs);
                continue;
            }
            ++ds;
            if (i < 9000) {
                CHECK(e.attrs[v] >= 1e6);
                CHECK(e.attrs[v] < 3.5e6);
            } else {
                CHECK(e.attrs[v] >= 1);
                CHECK(e.attrs[v] < 2e6);
            }
        }
        CHECK(ds > 1000);
        // Moving the offset keeps the common prefix.
        GeneratorSpec later = s;
        later.drift = dv_drift(10000);
        CHECK(same_elements(b, generate(later), 0, 9000));
    }
}

TEST_CASE("input shedding") {
    auto s = gen_ds2(2000, 3);
    CHECK(shed_random_input(s, 0.0, 1).size() == 2000);
    CHECK(shed_random_input(s, 1.0, 1).empty());
    auto half = shed_random_input(s, 0.5, 1);
    CHECK(half.size() > 800);
    CHECK(half.size() < 1200);
    uint64_t last = 0;
    bool first = true;
    for (const auto& d : half.elements) {
        CHECK(s.elements[d.seq].attrs == d.attrs);
        if (!first) CHECK(d.seq > last);
        last = d.seq;
        first = false;
    }
    auto again = shed_random_input(s, 0.5, 1);
    CHECK(again.size() == half.size());
}

TEST_CASE("spec JSON round trip and presets") {
    GeneratorSpec s = ds1_spec(100, 9);
    s.drift = dv_drift(40);
    auto back = spec_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
    CHECK(same_elements(generate(back), generate(s), 0, 100));

    auto preset = spec_from_json(nlohmann::json::parse(R"({"preset":"ds2","count":50,"seed":3})"));
    CHECK(to_json(preset) == to_json(ds2_spec(50, 3)));
    auto drifted =
        spec_from_json(nlohmann::json::parse(R"({"preset":"ds1","count":50,"seed":3,"drift":[{"preset":"dv","offset":20}]})"));
    CHECK(drifted.drift.size() == 2);
    CHECK_THROWS(spec_from_json(nlohmann::json::parse(R"({"preset":"ds9","count":5})")));
}

TEST_CASE("CSV round trip") {
    auto s = gen_ds1(300, 4);
    std::stringstream buf;
    write_csv(buf, s);
    auto back = read_csv(buf);
    REQUIRE(back.size() == s.size());
    CHECK(back.schema.attributes() == s.schema.attributes());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back.schema.type_name(back.elements[i].type) == s.schema.type_name(s.elements[i].type));
        CHECK(back.elements[i].ts == s.elements[i].ts);
        CHECK(back.elements[i].attrs == s.elements[i].attrs);
    }
}

TEST_CASE("CSV errors") {
    auto read = [](const char* text, CsvOptions o = {}) {
        std::istringstream in(text);
        return read_csv(in, o);
    };
    CHECK_THROWS_AS(read(""), InputError);
    CHECK_THROWS_AS(read("ts,x\n1,2\n"), InputError);
    CHECK_THROWS_AS(read("type,x\nA,2\n"), InputError);
    CHECK_THROWS_AS(read("type,ts,x\nA,1,abc\n"), InputError);
    CHECK_THROWS_AS(read("type,ts,x\nA,1\n"), InputError);
    CHECK_THROWS_AS(read("type,ts,x\nA,2,1\nB,1,1\n"), InputError);
    CHECK_THROWS_AS(read("type,ts,x\nA,1,1\n", CsvOptions{"id"}), InputError);
    CHECK(read("type,ts,x\nA,1,1\n\nB,1,2\n").size() == 2);
}

TEST_CASE("CSV table mode groups rows by the partition column") {
    std::istringstream in("type,ts,id\nA,5,2\nB,1,1\nC,6,2\nD,2,1\n");
    auto s = read_csv(in, CsvOptions{"id"});
    REQUIRE(s.size() == 4);
    CHECK(s.partition_starts == std::vector<std::size_t>{0, 2});
    std::string order;
    for (const auto& d : s.elements) order += s.schema.type_name(d.type);
    CHECK(order == "ACBD");
    for (std::size_t i = 0; i < 4; ++i) CHECK(s.elements[i].seq == i);
}

TEST_CASE("shipped templates parse") {
    auto all = templates(700);
    REQUIRE(all.size() == 38);
    for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK(all[i].name == "P" + std::to_string(i + 1));
        INFO(all[i].text);
        CHECK_NOTHROW(parse_pattern(all[i].text, i));
    }
    auto p3 = template_pattern("P3", 700, 4);
    REQUIRE(p3);
    CHECK(p3->id == 4);
    CHECK(p3->steps.size() == 7);
    CHECK_FALSE(template_pattern("P99", 700, 0));
}
