#include "cepshare/workbench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace cepshare {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[std::min(v.size() - 1, rank == 0 ? 0 : rank - 1)];
}

MatchKey key_of(const CompleteMatch& m) {
    std::vector<uint64_t> s = m.seqs;
    std::sort(s.begin(), s.end());
    return {m.pattern, std::move(s)};
}

std::set<MatchKey> key_set(const std::vector<CompleteMatch>& cms) {
    std::set<MatchKey> out;
    for (const auto& m : cms) out.insert(key_of(m));
    return out;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

}  // namespace

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::kNone: return "none";
        case Strategy::kSharp: return "sharp";
        case Strategy::kRandomInput: return "random-input";
        case Strategy::kRandomState: return "random-state";
    }
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
    if (s == "none") return Strategy::kNone;
    if (s == "sharp") return Strategy::kSharp;
    if (s == "random-input" || s == "ri") return Strategy::kRandomInput;
    if (s == "random-state" || s == "rs") return Strategy::kRandomState;
    return std::nullopt;
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    c.name = j.value("name", c.name);
    for (const auto& p : j.at("patterns")) c.patterns.push_back(p.get<std::string>());
    if (c.patterns.empty()) throw std::invalid_argument("config lists no patterns");
    c.window = j.value("window", c.window);

    const auto& wl = j.at("workload");
    if (wl.contains("generator")) c.generator = spec_from_json(wl.at("generator"));
    if (wl.contains("csv")) c.input_csv = wl.at("csv").get<std::string>();
    if (wl.contains("partition_column")) c.partition_column = wl.at("partition_column").get<std::string>();
    if (c.generator.has_value() == c.input_csv.has_value())
        throw std::invalid_argument("workload needs exactly one of 'generator' and 'csv'");

    if (j.contains("policy")) {
        const auto& p = j.at("policy");
        if (p.contains("selection")) {
            auto s = parse_selection(p.at("selection").get<std::string>());
            if (!s) throw std::invalid_argument("unknown selection policy");
            c.policy.selection = *s;
        }
        if (p.contains("consumption")) {
            auto s = parse_consumption(p.at("consumption").get<std::string>());
            if (!s) throw std::invalid_argument("unknown consumption policy");
            c.policy.consumption = *s;
        }
    }
    if (j.contains("mode")) {
        auto m = parse_mode(j.at("mode").get<std::string>());
        if (!m) throw std::invalid_argument("unknown materialization mode");
        c.mode = *m;
    }
    if (j.contains("bounds_ms")) {
        const auto& b = j.at("bounds_ms");
        if (b.is_number())
            c.bounds_ms.assign(c.patterns.size(), b.get<double>());
        else
            c.bounds_ms = b.get<std::vector<double>>();
    }
    if (j.contains("bound_factor")) c.bound_factor = j.at("bound_factor").get<double>();
    if (j.contains("strategy")) {
        auto s = parse_strategy(j.at("strategy").get<std::string>());
        if (!s) throw std::invalid_argument("unknown strategy");
        c.strategy = *s;
    }
    if (j.contains("drop_ratio")) {
        const auto& r = j.at("drop_ratio");
        c.drop_ratio = r.is_string() && r == "auto" ? -1.0 : r.get<double>();
    }
    c.seed = j.value("seed", c.seed);

    if (j.contains("sketch")) {
        const auto& s = j.at("sketch");
        if (s.contains("partition_attrs")) c.partition_attrs = s.at("partition_attrs").get<std::vector<std::string>>();
        if (s.contains("buckets"))
            for (const auto& b : s.at("buckets")) {
                std::string of = b.value("elements", "last");
                if (of != "last" && of != "every") throw std::invalid_argument("bucket elements is last or every");
                c.buckets.push_back(BucketSpec{b.at("attribute"), b.at("width"), of == "every"});
            }
        if (s.contains("epoch")) c.epoch = s.at("epoch").get<uint64_t>();
        if (s.contains("theta")) {
            auto t = parse_theta(s.at("theta").get<std::string>());
            if (!t) throw std::invalid_argument("unknown theta");
            c.theta = *t;
        }
        c.lossy_width = s.value("lossy_width", c.lossy_width);
    }
    if (j.contains("cost")) {
        const auto& k = j.at("cost");
        if (k.contains("clock")) {
            std::string clock = k.at("clock");
            if (clock != "synthetic" && clock != "wall") throw std::invalid_argument("clock is synthetic or wall");
            c.clock = clock == "wall" ? CostClock::kWall : CostClock::kSynthetic;
        }
        if (k.contains("work")) {
            std::string work = k.at("work");
            if (work != "scanned" && work != "created") throw std::invalid_argument("work is scanned or created");
            c.work = work == "created" ? WorkMeasure::kCreated : WorkMeasure::kScanned;
        }
        c.unit_ms = k.value("unit_ms", c.unit_ms);
        c.base_ms = k.value("base_ms", c.base_ms);
        c.alpha = k.value("alpha", c.alpha);
    }
    c.parallel = j.value("parallel", c.parallel);
    c.project_latency = j.value("project_latency", c.project_latency);
    c.rolling_bucket = j.value("rolling_bucket", c.rolling_bucket);
    c.out_dir = j.value("out_dir", c.out_dir);

    if (c.strategy != Strategy::kNone && c.bounds_ms.empty() && !c.bound_factor)
        throw std::invalid_argument("bounds_ms or bound_factor is required unless strategy is none");
    if (!c.bounds_ms.empty() && c.bounds_ms.size() != c.patterns.size())
        throw std::invalid_argument("bounds_ms needs one value per pattern");
    if (c.drop_ratio > 1.0) throw std::invalid_argument("drop_ratio must be at most 1");
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    return c;
}

json to_json(const RunConfig& c) {
    json j;
    j["name"] = c.name;
    j["patterns"] = c.patterns;
    j["window"] = c.window;
    json wl;
    if (c.generator) wl["generator"] = to_json(*c.generator);
    if (c.input_csv) wl["csv"] = *c.input_csv;
    if (c.partition_column) wl["partition_column"] = *c.partition_column;
    j["workload"] = wl;
    j["policy"] = {{"selection", to_string(c.policy.selection)}, {"consumption", to_string(c.policy.consumption)}};
    j["mode"] = to_string(c.mode);
    if (!c.bounds_ms.empty()) j["bounds_ms"] = c.bounds_ms;
    if (c.bound_factor) j["bound_factor"] = *c.bound_factor;
    j["strategy"] = to_string(c.strategy);
    if (c.drop_ratio < 0)
        j["drop_ratio"] = "auto";
    else
        j["drop_ratio"] = c.drop_ratio;
    j["seed"] = c.seed;
    json sk;
    if (c.partition_attrs) sk["partition_attrs"] = *c.partition_attrs;
    sk["buckets"] = json::array();
    for (const auto& b : c.buckets)
        sk["buckets"].push_back({{"attribute", b.attribute}, {"width", b.width}, {"elements", b.every ? "every" : "last"}});
    if (c.epoch) sk["epoch"] = *c.epoch;
    sk["theta"] = to_string(c.theta);
    sk["lossy_width"] = c.lossy_width;
    j["sketch"] = sk;
    j["cost"] = {{"clock", c.clock == CostClock::kWall ? "wall" : "synthetic"},
                 {"work", c.work == WorkMeasure::kCreated ? "created" : "scanned"},
                 {"unit_ms", c.unit_ms},
                 {"base_ms", c.base_ms},
                 {"alpha", c.alpha}};
    j["parallel"] = c.parallel;
    j["project_latency"] = c.project_latency;
    j["rolling_bucket"] = c.rolling_bucket;
    if (!c.out_dir.empty()) j["out_dir"] = c.out_dir;
    return j;
}

std::vector<double> recall(const std::set<MatchKey>& golden, const std::set<MatchKey>& reduced, std::size_t patterns) {
    std::vector<uint64_t> total(patterns, 0), hit(patterns, 0);
    for (const auto& m : golden) {
        ++total[m.first];
        if (reduced.count(m)) ++hit[m.first];
    }
    std::vector<double> out(patterns, 1.0);
    for (std::size_t i = 0; i < patterns; ++i)
        if (total[i]) out[i] = static_cast<double>(hit[i]) / static_cast<double>(total[i]);
    return out;
}

Workload prepare(const RunConfig& c) {
    Workload w;
    if (c.generator)
        w.stream = generate(*c.generator);
    else
        w.stream = load_csv(*c.input_csv, CsvOptions{c.partition_column});

    std::vector<Pattern> pats;
    for (std::size_t i = 0; i < c.patterns.size(); ++i) {
        const std::string& p = c.patterns[i];
        if (p.rfind("template:", 0) == 0) {
            auto t = template_pattern(p.substr(9), c.window, i);
            if (!t) throw std::invalid_argument("unknown template '" + p.substr(9) + "'");
            pats.push_back(*t);
        } else {
            pats.push_back(parse_pattern(p, i));
        }
    }
    w.plan = build_plan(std::move(pats), w.stream.schema, c.mode);
    assess_states(w.plan);

    auto attr = [&](const std::string& name) {
        auto a = w.plan.schema.find_attribute(name);
        if (!a) throw std::invalid_argument("unknown attribute '" + name + "'");
        return *a;
    };
    EngineConfig& e = w.engine;
    e.policy = c.policy;
    if (c.partition_attrs)
        for (const auto& n : *c.partition_attrs) e.sketch.partition_attrs.push_back(attr(n));
    else
        e.sketch.partition_attrs = same_attributes(w.plan);
    for (const auto& b : c.buckets) {
        if (!(b.width > 0.0)) throw std::invalid_argument("bucket width must be positive");
        (b.every ? e.sketch.every_attrs : e.sketch.last_attrs).push_back(BucketedAttr{attr(b.attribute), b.width});
    }
    e.sketch.epoch = c.epoch ? *c.epoch : static_cast<uint64_t>(w.plan.max_count_window());
    e.sketch.theta = c.theta;
    e.sketch.lossy_width = c.lossy_width;
    e.clock = c.clock;
    e.work = c.work;
    e.unit_ms = c.unit_ms;
    e.base_ms = c.base_ms;
    e.alpha = c.alpha;
    e.parallel = c.parallel;
    return w;
}

Trace execute(const Workload& w, const RunConfig& c, Strategy strategy, const std::vector<double>& bounds) {
    Trace t;
    Engine e(w.plan, w.engine);
    const std::size_t n = w.plan.pattern_count();
    const auto& elems = w.stream.elements;
    t.element_ms.assign(elems.size(), 0.0);
    t.mean_latency.assign(n, 0.0);
    auto rng = substream(c.seed, 3000 + static_cast<uint64_t>(strategy));
    auto& lat = e.monitor().latency_ms;
    if (strategy == Strategy::kSharp || strategy == Strategy::kRandomState) t.audit.push_back(audit_header());

    auto ratio_for = [&](const PatternMask& b_ol) {
        if (c.drop_ratio >= 0.0) return c.drop_ratio;
        double keep = 1.0;
        b_ol.for_each([&](std::size_t i) { keep = std::min(keep, lat[i] > 0.0 ? bounds[i] / lat[i] : 1.0); });
        return std::clamp(1.0 - keep, 0.0, 1.0);
    };

    auto start = std::chrono::steady_clock::now();
    std::size_t part = 0;
    for (std::size_t k = 0; k < elems.size(); ++k) {
        const DataElement& d = elems[k];
        if (part < w.stream.partition_starts.size() && w.stream.partition_starts[part] == k) {
            if (k > 0) e.flush();
            ++part;
        }
        e.expire(d.seq, d.ts);

        bool shed = false;
        if (strategy != Strategy::kNone) {
            PatternMask b_ol = trigger(lat, bounds);
            if (b_ol.any()) {
                ++t.triggers;
                if (strategy == Strategy::kSharp) {
                    AuditRow row = reduce(e, bounds, b_ol, d.ts, c.project_latency, c.parallel);
                    t.discarded += row.discarded;
                    t.audit.push_back(audit_line(row, n));
                } else if (strategy == Strategy::kRandomState) {
                    double ratio = ratio_for(b_ol);
                    AuditRow row;
                    row.ts = d.ts;
                    row.b_ol = b_ol;
                    row.spend.assign(n, 0.0);
                    row.budget.assign(n, 0.0);
                    for (RecordHandle h : e.live_records()) {
                        PatternMask bits = e.pool().get(h).bits;
                        bits.for_each([&](std::size_t i) { row.budget[i] += 1.0; });
                        if (unit_draw(rng) < ratio) {
                            e.discard(h);
                            ++row.discarded;
                        } else {
                            bits.for_each([&](std::size_t i) { row.spend[i] += 1.0; });
                            ++row.kept;
                        }
                    }
                    if (c.project_latency)
                        b_ol.for_each([&](std::size_t i) {
                            if (row.budget[i] > 0.0) lat[i] *= row.spend[i] / row.budget[i];
                        });
                    t.discarded += row.discarded;
                    t.audit.push_back(audit_line(row, n));
                } else if (strategy == Strategy::kRandomInput) {
                    shed = unit_draw(rng) < ratio_for(b_ol);
                }
            }
        }

        if (shed) {
            // A shed element costs nothing: it enters the average as a zero sample.
            ++t.dropped_inputs;
            for (double& l : lat) l *= 1.0 - e.monitor().alpha;
        } else {
            StepOutput out = e.step(d);
            e.measure_last();
            t.element_ms[k] = out.elapsed_ms;
            for (auto& m : out.cms) t.cms.push_back(std::move(m));
        }
        for (std::size_t i = 0; i < n; ++i) t.mean_latency[i] += lat[i];
    }
    t.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!elems.empty())
        for (double& m : t.mean_latency) m /= static_cast<double>(elems.size());
    t.metrics = e.metrics();
    t.sketch_csv = e.sketch().dump_csv();
    return t;
}

std::vector<RollingPoint> rolling_recall(const std::vector<CompleteMatch>& golden, const std::set<MatchKey>& reduced,
                                         uint64_t bucket, uint64_t elements) {
    if (bucket == 0) bucket = 1;
    std::vector<RollingPoint> pts((elements + bucket - 1) / bucket);
    for (std::size_t b = 0; b < pts.size(); ++b) pts[b].begin = b * bucket;
    std::set<MatchKey> seen;
    for (const auto& m : golden) {
        MatchKey k = key_of(m);
        if (!seen.insert(k).second) continue;
        uint64_t last = *std::max_element(m.seqs.begin(), m.seqs.end());
        auto& p = pts[std::min<std::size_t>(pts.size() - 1, last / bucket)];
        ++p.golden;
        if (reduced.count(k)) ++p.matched;
    }
    for (auto& p : pts)
        p.recall = p.golden ? static_cast<double>(p.matched) / static_cast<double>(p.golden) : 1.0;
    return pts;
}

RunResult run(const RunConfig& c) {
    RunResult r;
    r.config = c;
    Workload w = prepare(c);
    const std::size_t n = w.plan.pattern_count();
    r.elements = w.stream.size();
    r.plan_dump = w.plan.dump();
    r.golden = execute(w, c, Strategy::kNone, {});

    std::vector<double> bounds = c.bounds_ms;
    if (c.bound_factor) {
        bounds.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) bounds[i] = *c.bound_factor * r.golden.mean_latency[i];
    }
    if (c.strategy == Strategy::kNone)
        r.reduced = r.golden;
    else
        r.reduced = execute(w, c, c.strategy, bounds);

    auto golden = key_set(r.golden.cms), reduced = key_set(r.reduced.cms);
    auto rec = recall(golden, reduced, n);
    std::vector<uint64_t> gcount(n, 0), pcount(n, 0), hit(n, 0);
    for (const auto& m : golden) {
        ++gcount[m.first];
        if (reduced.count(m)) ++hit[m.first];
    }
    for (const auto& m : reduced) ++pcount[m.first];
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        PatternResult p;
        p.text = print_pattern(w.plan.patterns[i]);
        p.bound_ms = bounds.empty() ? std::numeric_limits<double>::infinity() : bounds[i];
        p.mean_latency_ms = r.golden.mean_latency[i];
        p.reduced_mean_latency_ms = r.reduced.mean_latency[i];
        p.golden = gcount[i];
        p.produced = pcount[i];
        p.matched = hit[i];
        p.recall = rec[i];
        if (gcount[i]) {
            sum += rec[i];
            ++counted;
        }
        r.patterns.push_back(p);
    }
    r.macro_recall = counted ? sum / static_cast<double>(counted) : 1.0;
    uint64_t bucket = c.rolling_bucket ? c.rolling_bucket : static_cast<uint64_t>(std::max(1.0, w.plan.max_count_window()));
    r.rolling = rolling_recall(r.golden.cms, reduced, bucket, r.elements);
    r.p50_ms = percentile(r.reduced.element_ms, 0.50);
    r.p95_ms = percentile(r.reduced.element_ms, 0.95);
    r.p99_ms = percentile(r.reduced.element_ms, 0.99);
    return r;
}

std::string metrics_header() {
    return "name,strategy,seed,pattern,bound_ms,unreduced_latency_ms,latency_ms,golden,produced,matched,recall,"
           "macro_recall,triggers,discarded,dropped_inputs,created,expired,consumed,superseded,p50_ms,p95_ms,p99_ms\n";
}

std::string metrics_rows(const RunResult& r) {
    std::ostringstream os;
    const auto& m = r.reduced.metrics;
    for (std::size_t i = 0; i < r.patterns.size(); ++i) {
        const auto& p = r.patterns[i];
        os << r.config.name << ',' << to_string(r.config.strategy) << ',' << r.config.seed << ',' << i + 1 << ','
           << fmt(p.bound_ms) << ',' << fmt(p.mean_latency_ms) << ',' << fmt(p.reduced_mean_latency_ms) << ','
           << p.golden << ',' << p.produced << ',' << p.matched << ',' << fmt(p.recall) << ',' << fmt(r.macro_recall)
           << ',' << r.reduced.triggers << ',' << r.reduced.discarded << ',' << r.reduced.dropped_inputs << ','
           << m.created << ',' << m.expired << ',' << m.consumed << ',' << m.superseded << ',' << fmt(r.p50_ms) << ','
           << fmt(r.p95_ms) << ',' << fmt(r.p99_ms) << '\n';
    }
    return os.str();
}

void write_outputs(const RunResult& r) {
    namespace fs = std::filesystem;
    if (r.config.out_dir.empty()) return;
    fs::path dir(r.config.out_dir);
    fs::create_directories(dir);
    const std::string base = r.config.name + "_";

    write_file(dir / (base + "metrics.csv"), metrics_header() + metrics_rows(r));

    std::ostringstream roll;
    roll << "begin,golden,matched,recall\n";
    for (const auto& p : r.rolling) roll << p.begin << ',' << p.golden << ',' << p.matched << ',' << fmt(p.recall) << '\n';
    write_file(dir / (base + "rolling.csv"), roll.str());

    std::string audit;
    for (const auto& line : r.reduced.audit) audit += line;
    write_file(dir / (base + "audit.csv"), audit);

    std::ostringstream matches;
    matches << "emit_index,pattern,seqs\n";
    for (const auto& m : r.reduced.cms) {
        matches << m.emit_index << ',' << m.pattern + 1 << ',';
        for (std::size_t k = 0; k < m.seqs.size(); ++k) matches << (k ? " " : "") << m.seqs[k];
        matches << '\n';
    }
    write_file(dir / (base + "matches.csv"), matches.str());
    write_file(dir / (base + "sketch.csv"), r.reduced.sketch_csv);
    write_file(dir / (base + "plan.txt"), r.plan_dump);

    json man;
    man["config"] = to_json(r.config);
    man["elements"] = r.elements;
    man["macro_recall"] = r.macro_recall;
    man["patterns"] = json::array();
    for (const auto& p : r.patterns)
        man["patterns"].push_back({{"pattern", p.text},
                                   {"bound_ms", std::isfinite(p.bound_ms) ? json(p.bound_ms) : json(nullptr)},
                                   {"golden", p.golden},
                                   {"matched", p.matched},
                                   {"recall", p.recall}});
    man["triggers"] = r.reduced.triggers;
    man["wall_seconds"] = {{"unreduced", r.golden.wall_seconds}, {"reduced", r.reduced.wall_seconds}};
    man["throughput_eps"] = r.reduced.wall_seconds > 0 ? static_cast<double>(r.elements) / r.reduced.wall_seconds : 0.0;
    man["files"] = {base + "metrics.csv", base + "rolling.csv", base + "audit.csv",
                    base + "matches.csv", base + "sketch.csv",  base + "plan.txt"};
    write_file(dir / (base + "manifest.json"), man.dump(2) + "\n");
}

std::vector<RunResult> bench(const std::vector<RunConfig>& suite, int repeat) {
    std::vector<RunConfig> jobs;
    for (const auto& c : suite)
        for (int k = 0; k < repeat; ++k) {
            RunConfig j = c;
            j.seed = c.seed + static_cast<uint64_t>(k);
            if (j.generator) j.generator->seed += static_cast<uint64_t>(k);
            j.name = c.name + "_r" + std::to_string(k);
            jobs.push_back(std::move(j));
        }
    std::vector<RunResult> out(jobs.size());
    std::vector<std::string> errors(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        try {
            out[k] = run(jobs[k]);
            write_outputs(out[k]);
        } catch (const std::exception& ex) {
            errors[k] = jobs[k].name + ": " + ex.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error(e);
    return out;
}

void report(const std::string& dir, const std::string& out) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.size() > 12 && name.ends_with("_metrics.csv")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    struct Acc {
        std::vector<double> recall;
        std::vector<double> macro;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Acc> groups;
    const std::regex repeat_suffix("_r[0-9]+$");
    for (const auto& f : files) {
        std::ifstream in(f);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (cells.size() < 12) throw InputError("malformed metrics row in " + f.string());
            std::string group = std::regex_replace(cells[0], repeat_suffix, "");
            auto& acc = groups[{group, cells[1], cells[3]}];
            acc.recall.push_back(std::stod(cells[10]));
            acc.macro.push_back(std::stod(cells[11]));
        }
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    auto stddev = [&](const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        double m = mean(v), s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(v.size() - 1));
    };
    std::ostringstream csv;
    csv << "group,strategy,pattern,runs,mean_recall,std_recall,mean_macro_recall\n";
    json summary = json::array();
    for (const auto& [k, acc] : groups) {
        const auto& [group, strategy, pattern] = k;
        csv << group << ',' << strategy << ',' << pattern << ',' << acc.recall.size() << ',' << fmt(mean(acc.recall))
            << ',' << fmt(stddev(acc.recall)) << ',' << fmt(mean(acc.macro)) << '\n';
        summary.push_back({{"group", group},
                           {"strategy", strategy},
                           {"pattern", std::stoi(pattern)},
                           {"runs", acc.recall.size()},
                           {"mean_recall", mean(acc.recall)},
                           {"std_recall", stddev(acc.recall)},
                           {"mean_macro_recall", mean(acc.macro)}});
    }
    write_file(out, csv.str());
    fs::path js(out);
    js.replace_extension(".json");
    write_file(js, summary.dump(2) + "\n");
}

}  // namespace cepshare
