#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cepshare/element.hpp"
#include "cepshare/pattern.hpp"
#include "json.hpp"

namespace cepshare {

/// Independent generator for substream `column` of `seed` (SplitMix64
/// seeding of mt19937_64).
std::mt19937_64 substream(uint64_t seed, uint64_t column);
/// Uniform double in [0, 1) from the top 53 bits of one draw.
double unit_draw(std::mt19937_64& g);

/// Uniform distribution of one numeric attribute. Integer attributes draw
/// from {lo, ..., hi}; the others from [lo, hi).
struct AttrDist {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    bool integer = false;
};

/// Redraws `attribute` from [lo, hi) for elements with index in
/// [offset, until), optionally only for one event type.
struct DriftEntry {
    uint64_t offset = 0;
    std::optional<uint64_t> until;
    std::string attribute;
    std::optional<std::string> type;
    double lo = 0.0;
    double hi = 1.0;
};

struct GeneratorSpec {
    std::vector<std::string> types;
    std::vector<AttrDist> attrs;
    uint64_t count = 0;
    uint64_t seed = 0;
    double ts_step = 1.0;
    std::vector<DriftEntry> drift;
};

/// Type U{A..J}, ID U{1..10}, X U(-90,90), Y U(-180,180), V U(1,3e6).
GeneratorSpec ds1_spec(uint64_t n, uint64_t seed);
/// Type U{A..F}, ID U{1..25}, X U(1,100).
GeneratorSpec ds2_spec(uint64_t n, uint64_t seed);

/// The D.V shift of the drift experiment: D.V ~ U(1e6, 3.5e6) before
/// `offset` and U(1, 2e6) from `offset` on.
std::vector<DriftEntry> dv_drift(uint64_t offset);

/// Checks bounds, names and offsets; throws std::invalid_argument.
void validate(const GeneratorSpec& spec);

/// Draws the stream for `spec` without drift. Every attribute and the type
/// column use their own mt19937_64 substream seeded by SplitMix64 from
/// (seed, column), so adding a column never changes the others.
Stream generate_base(const GeneratorSpec& spec);
/// Applies the drift entries of `spec` in order. Each entry draws from its
/// own substream, so elements before its offset are left untouched.
Stream inject_drift(const GeneratorSpec& spec, Stream stream);
/// generate_base followed by inject_drift.
Stream generate(const GeneratorSpec& spec);

Stream gen_ds1(uint64_t n, uint64_t seed);
Stream gen_ds2(uint64_t n, uint64_t seed);

/// Keeps each element with probability 1 - ratio; seq and ts are preserved.
Stream shed_random_input(const Stream& stream, double ratio, uint64_t seed);

nlohmann::json to_json(const GeneratorSpec& spec);
GeneratorSpec spec_from_json(const nlohmann::json& j);

struct CsvOptions {
    /// Table mode: rows are grouped by this column (first appearance
    /// order) and timestamps need not be sorted across groups.
    std::optional<std::string> partition_column;
};

/// Reads `type,ts,<attrs...>`. Throws InputError on a missing column, a
/// non-numeric value or, in stream mode, a decreasing timestamp.
Stream read_csv(std::istream& in, const CsvOptions& opts = {});
Stream load_csv(const std::string& path, const CsvOptions& opts = {});
void write_csv(std::ostream& out, const Stream& stream);
void save_csv(const std::string& path, const Stream& stream);

/// Named pattern text from the shipped library.
struct Template {
    std::string name;  // "P1" .. "P38"
    std::string text;
};

/// P1..P38 with the given count window. Sequences P7..P38 have no
/// predicate and generated binding names.
std::vector<Template> templates(double window = 1000.0);
/// Template `name` parsed with pattern id `id`; nullopt if unknown.
std::optional<Pattern> template_pattern(const std::string& name, double window, std::size_t id);

}  // namespace cepshare
