#include "cepshare/workloads.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cepshare {

namespace {

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Explicit mappings instead of <random> distributions, whose output is
// implementation defined.
double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

double draw(std::mt19937_64& g, double lo, double hi, bool integer) {
    double u = unit(g);
    if (integer) {
        double span = std::floor(hi) - std::ceil(lo) + 1.0;
        return std::ceil(lo) + std::floor(u * span);
    }
    return lo + u * (hi - lo);
}

std::size_t attr_index(const std::vector<AttrDist>& attrs, const std::string& name) {
    for (std::size_t i = 0; i < attrs.size(); ++i)
        if (attrs[i].name == name) return i;
    throw std::invalid_argument("drift names unknown attribute '" + name + "'");
}

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    for (auto& s : out) {
        std::size_t b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw InputError("line " + std::to_string(line) + ": column '" + column + "' is not numeric: '" + s + "'");
    return v;
}

}  // namespace

// Column 0 is the type column, columns 1.. are attributes, drift entries
// use 1000 + their index and input shedding 2000.
std::mt19937_64 substream(uint64_t seed, uint64_t column) {
    uint64_t s = seed;
    splitmix64(s);
    s ^= column * 0xd1b54a32d192ed03ull;
    return std::mt19937_64(splitmix64(s));
}

double unit_draw(std::mt19937_64& g) { return unit(g); }

GeneratorSpec ds1_spec(uint64_t n, uint64_t seed) {
    GeneratorSpec s;
    s.types = {"A", "B", "C", "D", "E", "F", "G", "H", "I", "J"};
    s.attrs = {{"ID", 1, 10, true}, {"X", -90, 90, false}, {"Y", -180, 180, false}, {"V", 1, 3e6, false}};
    s.count = n;
    s.seed = seed;
    return s;
}

GeneratorSpec ds2_spec(uint64_t n, uint64_t seed) {
    GeneratorSpec s;
    s.types = {"A", "B", "C", "D", "E", "F"};
    s.attrs = {{"ID", 1, 25, true}, {"X", 1, 100, false}};
    s.count = n;
    s.seed = seed;
    return s;
}

std::vector<DriftEntry> dv_drift(uint64_t offset) {
    return {DriftEntry{0, offset, "V", std::string("D"), 1e6, 3.5e6},
            DriftEntry{offset, std::nullopt, "V", std::string("D"), 1, 2e6}};
}

void validate(const GeneratorSpec& spec) {
    if (spec.types.empty()) throw std::invalid_argument("generator needs at least one type");
    if (!(spec.ts_step >= 0.0) || !std::isfinite(spec.ts_step)) throw std::invalid_argument("ts_step must be >= 0");
    for (const auto& a : spec.attrs)
        if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.lo > a.hi)
            throw std::invalid_argument("attribute '" + a.name + "' has invalid bounds");
    for (const auto& d : spec.drift) {
        attr_index(spec.attrs, d.attribute);
        if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || d.lo > d.hi)
            throw std::invalid_argument("drift on '" + d.attribute + "' has invalid bounds");
        if (d.offset > spec.count) throw std::invalid_argument("drift offset beyond element count");
        if (d.until && *d.until < d.offset) throw std::invalid_argument("drift ends before it starts");
    }
}

Stream generate_base(const GeneratorSpec& spec) {
    validate(spec);
    std::vector<std::string> names;
    for (const auto& a : spec.attrs) names.push_back(a.name);
    Stream s;
    s.schema = Schema(spec.types, names);
    s.elements.resize(spec.count);
    auto tg = substream(spec.seed, 0);
    const double k = static_cast<double>(spec.types.size());
    for (uint64_t i = 0; i < spec.count; ++i) {
        auto& d = s.elements[i];
        d.type = static_cast<TypeId>(std::min(k - 1.0, std::floor(unit(tg) * k)));
        d.seq = i;
        d.ts = static_cast<double>(i) * spec.ts_step;
        d.attrs.resize(spec.attrs.size());
    }
    for (std::size_t a = 0; a < spec.attrs.size(); ++a) {
        auto g = substream(spec.seed, a + 1);
        const auto& dist = spec.attrs[a];
        for (auto& d : s.elements) d.attrs[a] = draw(g, dist.lo, dist.hi, dist.integer);
    }
    if (!s.elements.empty()) s.partition_starts = {0};
    return s;
}

Stream inject_drift(const GeneratorSpec& spec, Stream stream) {
    for (std::size_t k = 0; k < spec.drift.size(); ++k) {
        const auto& dr = spec.drift[k];
        std::size_t a = attr_index(spec.attrs, dr.attribute);
        auto a_in = stream.schema.find_attribute(dr.attribute);
        if (!a_in) throw std::invalid_argument("stream lacks attribute '" + dr.attribute + "'");
        std::optional<TypeId> only;
        if (dr.type) {
            only = stream.schema.find_type(*dr.type);
            if (!only) continue;  // type never occurs
        }
        auto g = substream(spec.seed, 1000 + k);
        uint64_t end = std::min<uint64_t>(dr.until.value_or(stream.size()), stream.size());
        // One draw per index keeps the values independent of the type filter.
        for (uint64_t i = dr.offset; i < end; ++i) {
            double v = draw(g, dr.lo, dr.hi, spec.attrs[a].integer);
            auto& d = stream.elements[i];
            if (!only || d.type == *only) d.attrs[*a_in] = v;
        }
    }
    return stream;
}

Stream generate(const GeneratorSpec& spec) { return inject_drift(spec, generate_base(spec)); }

Stream gen_ds1(uint64_t n, uint64_t seed) { return generate(ds1_spec(n, seed)); }
Stream gen_ds2(uint64_t n, uint64_t seed) { return generate(ds2_spec(n, seed)); }

Stream shed_random_input(const Stream& stream, double ratio, uint64_t seed) {
    auto g = substream(seed, 2000);
    Stream out;
    out.schema = stream.schema;
    for (std::size_t p = 0; p < stream.partition_starts.size(); ++p) {
        std::size_t begin = stream.partition_starts[p];
        std::size_t end = p + 1 < stream.partition_starts.size() ? stream.partition_starts[p + 1] : stream.size();
        std::size_t first = out.elements.size();
        for (std::size_t i = begin; i < end; ++i)
            if (unit(g) >= ratio) out.elements.push_back(stream.elements[i]);
        if (out.elements.size() > first) out.partition_starts.push_back(first);
    }
    return out;
}

nlohmann::json to_json(const GeneratorSpec& spec) {
    nlohmann::json j;
    j["types"] = spec.types;
    j["count"] = spec.count;
    j["seed"] = spec.seed;
    j["ts_step"] = spec.ts_step;
    j["attributes"] = nlohmann::json::array();
    for (const auto& a : spec.attrs)
        j["attributes"].push_back({{"name", a.name}, {"lo", a.lo}, {"hi", a.hi}, {"integer", a.integer}});
    j["drift"] = nlohmann::json::array();
    for (const auto& d : spec.drift) {
        nlohmann::json e{{"offset", d.offset}, {"attribute", d.attribute}, {"lo", d.lo}, {"hi", d.hi}};
        if (d.until) e["until"] = *d.until;
        if (d.type) e["type"] = *d.type;
        j["drift"].push_back(e);
    }
    return j;
}

GeneratorSpec spec_from_json(const nlohmann::json& j) {
    GeneratorSpec s;
    if (j.contains("preset")) {
        std::string p = j.at("preset");
        uint64_t n = j.value("count", uint64_t{0}), seed = j.value("seed", uint64_t{0});
        if (p == "ds1")
            s = ds1_spec(n, seed);
        else if (p == "ds2")
            s = ds2_spec(n, seed);
        else
            throw std::invalid_argument("unknown generator preset '" + p + "'");
    } else {
        s.types = j.at("types").get<std::vector<std::string>>();
        s.count = j.at("count").get<uint64_t>();
        s.seed = j.value("seed", uint64_t{0});
        for (const auto& a : j.at("attributes"))
            s.attrs.push_back(AttrDist{a.at("name"), a.at("lo"), a.at("hi"), a.value("integer", false)});
    }
    s.ts_step = j.value("ts_step", s.ts_step);
    if (j.contains("drift")) {
        for (const auto& e : j.at("drift")) {
            if (e.contains("preset")) {
                if (e.at("preset") != "dv") throw std::invalid_argument("unknown drift preset");
                for (auto& d : dv_drift(e.at("offset").get<uint64_t>())) s.drift.push_back(d);
                continue;
            }
            DriftEntry d;
            d.offset = e.at("offset");
            if (e.contains("until")) d.until = e.at("until").get<uint64_t>();
            d.attribute = e.at("attribute");
            if (e.contains("type")) d.type = e.at("type").get<std::string>();
            d.lo = e.at("lo");
            d.hi = e.at("hi");
            s.drift.push_back(d);
        }
    }
    validate(s);
    return s;
}

Stream read_csv(std::istream& in, const CsvOptions& opts) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty input: missing header");
    auto header = split_csv_line(line);
    auto col = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    };
    auto type_col = col("type"), ts_col = col("ts");
    if (!type_col) throw InputError("missing column 'type'");
    if (!ts_col) throw InputError("missing column 'ts'");
    std::vector<std::size_t> attr_cols;
    std::vector<std::string> attr_names;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != *type_col && i != *ts_col) {
            attr_cols.push_back(i);
            attr_names.push_back(header[i]);
        }
    std::optional<std::size_t> part_attr;
    if (opts.partition_column) {
        for (std::size_t a = 0; a < attr_names.size(); ++a)
            if (attr_names[a] == *opts.partition_column) part_attr = a;
        if (!part_attr) throw InputError("missing partition column '" + *opts.partition_column + "'");
    }

    Stream s;
    s.schema = Schema({}, attr_names);
    std::vector<DataElement> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw InputError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                             " columns, got " + std::to_string(cells.size()));
        DataElement d;
        if (cells[*type_col].empty()) throw InputError("line " + std::to_string(lineno) + ": empty type");
        d.type = s.schema.intern_type(cells[*type_col]);
        d.ts = parse_number(cells[*ts_col], lineno, "ts");
        for (std::size_t a = 0; a < attr_cols.size(); ++a)
            d.attrs.push_back(parse_number(cells[attr_cols[a]], lineno, attr_names[a]));
        if (!part_attr && !rows.empty() && d.ts < rows.back().ts)
            throw InputError("line " + std::to_string(lineno) + ": timestamp decreases in stream mode");
        rows.push_back(std::move(d));
    }

    if (part_attr) {
        std::map<double, std::size_t> group_of;
        std::vector<std::vector<DataElement>> groups;
        for (auto& d : rows) {
            auto [it, fresh] = group_of.try_emplace(d.attrs[*part_attr], groups.size());
            if (fresh) groups.emplace_back();
            groups[it->second].push_back(std::move(d));
        }
        for (auto& g : groups) {
            s.partition_starts.push_back(s.elements.size());
            for (auto& d : g) s.elements.push_back(std::move(d));
        }
    } else {
        s.elements = std::move(rows);
        if (!s.elements.empty()) s.partition_starts = {0};
    }
    for (std::size_t i = 0; i < s.elements.size(); ++i) s.elements[i].seq = i;
    return s;
}

Stream load_csv(const std::string& path, const CsvOptions& opts) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_csv(in, opts);
}

void write_csv(std::ostream& out, const Stream& stream) {
    out << "type,ts";
    for (const auto& a : stream.schema.attributes()) out << ',' << a;
    out << '\n';
    for (const auto& d : stream.elements) {
        out << stream.schema.type_name(d.type) << ',' << format_number(d.ts);
        for (double v : d.attrs) out << ',' << format_number(v);
        out << '\n';
    }
}

void save_csv(const std::string& path, const Stream& stream) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    write_csv(out, stream);
}

std::vector<Template> templates(double window) {
    const std::string w = " WITHIN " + format_number(window);
    // Haversine and spherical law of cosines on X (latitude) and Y
    // (longitude) given in degrees, with an earth radius of 6371 km.
    const std::string rad = "0.017453292519943295", half = "0.008726646259971648";
    auto sq = [](const std::string& e) { return e + " * " + e; };
    const std::string hav = "2 * 6371 * arcsin(sqrt(" + sq("sin((e.x - d.x) * " + half + ")") + " + cos(d.x * " + rad +
                            ") * cos(e.x * " + rad + ") * " + sq("sin((e.y - d.y) * " + half + ")") + ")) <= f.v";
    const std::string slc = "6371 * arccos(sin(d.x * " + rad + ") * sin(h.x * " + rad + ") + cos(d.x * " + rad +
                            ") * cos(h.x * " + rad + ") * cos((h.y - d.y) * " + rad + ")) <= i.v";

    std::vector<Template> out = {
        {"P1", "SEQ(A a, B+ b[], C c, D d) WHERE SAME [ID] AND SUM(b[].x) < c.x" + w},
        {"P2", "SEQ(A a, B+ b[], E e, F f) WHERE SAME [ID] AND a.x + SUM(b[].x) < e.x + f.x" + w},
        {"P3", "SEQ(A a, B b, C c, D d, E e, F f, G g) WHERE SAME [ID] AND a.v < b.v AND b.v + c.v < d.v AND " + hav + w},
        {"P4", "SEQ(A a, B b, C c, D d, H h, I i, J j) WHERE SAME [ID] AND a.v < b.v AND b.v + c.v < d.v AND " + slc + w},
        {"P5", "SEQ(A a, B b, !C c, D d) WHERE SAME [ID] AND a.x < b.x" + w},
        {"P6", "SEQ(A a, B b, !C c, E e) WHERE SAME [ID]" + w},
    };
    const char* seqs[] = {"A,B,C",   "A,B,E",    "A,!E,C",    "A,!E,D",   "A,B+,C",    "A,B+,D",    "A,B,B,C",
                          "A,C,D",   "A,B,C,D",  "A,B+,E",    "A,!B,C",   "A,!C,D",    "A,B,D,E",   "A,C,B,D",
                          "A,!B,D,E", "A,B+,C,D", "A,G,H,I",   "A,G,H+,J", "A,G,!I,J",  "A,G,I,J,A", "A,G,J,H,B",
                          "A,G,!H,J,C", "A,H,H,I", "A,G,H+,I,J", "A,G,A,B", "A,G,!J,C",  "A,H,!J,D",  "A,G,I,!H,E",
                          "A,G,H,I,J,F", "A,J,G,I", "A,G,I+,A", "A,G,J,B+"};
    int number = 7;
    for (const char* spec : seqs) {
        std::string text = "SEQ(";
        std::stringstream ss(spec);
        std::string tok;
        int k = 0;
        while (std::getline(ss, tok, ',')) {
            if (k) text += ", ";
            std::string name = "s" + std::to_string(k);
            if (tok[0] == '!')
                text += tok + " " + name;
            else if (tok.back() == '+')
                text += tok + " " + name + "[]";
            else
                text += tok + " " + name;
            ++k;
        }
        text += ")" + w;
        out.push_back({"P" + std::to_string(number++), text});
    }
    return out;
}

std::optional<Pattern> template_pattern(const std::string& name, double window, std::size_t id) {
    for (const auto& t : templates(window))
        if (t.name == name) return parse_pattern(t.text, id);
    return std::nullopt;
}

}  // namespace cepshare
