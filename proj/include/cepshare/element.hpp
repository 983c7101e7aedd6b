#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cepshare {

using TypeId = uint16_t;
inline constexpr TypeId kUnknownType = 0xffff;

/// Workload schema: the categorical type alphabet and the numeric attributes
/// every element carries. Attribute lookup is case-insensitive.
class Schema {
public:
    Schema() = default;
    Schema(std::vector<std::string> types, std::vector<std::string> attributes);

    /// Returns the id of `name`, adding it to the alphabet if absent.
    TypeId intern_type(std::string_view name);
    std::optional<TypeId> find_type(std::string_view name) const;
    const std::string& type_name(TypeId id) const { return types_.at(id); }
    std::size_t type_count() const { return types_.size(); }
    const std::vector<std::string>& types() const { return types_; }

    std::optional<std::size_t> find_attribute(std::string_view name) const;
    const std::vector<std::string>& attributes() const { return attributes_; }
    std::size_t attribute_count() const { return attributes_.size(); }

    bool operator==(const Schema&) const = default;

private:
    std::vector<std::string> types_;
    std::vector<std::string> attributes_;
};

/// One stream event or table row.
struct DataElement {
    TypeId type = kUnknownType;
    uint64_t seq = 0;    // arrival index, strictly increasing within a stream
    double ts = 0.0;     // logical time
    std::vector<double> attrs;  // indexed by Schema attribute position

    bool operator==(const DataElement&) const = default;
};

/// An ordered sequence of elements sharing one schema. In table mode the
/// rows are grouped by partition; `partition_starts` holds the index of the
/// first element of every partition (always begins with 0 when non-empty).
struct Stream {
    Schema schema;
    std::vector<DataElement> elements;
    std::vector<std::size_t> partition_starts;

    std::size_t size() const { return elements.size(); }
    bool empty() const { return elements.empty(); }
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cepshare
