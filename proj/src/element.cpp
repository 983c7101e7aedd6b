#include "cepshare/element.hpp"

#include <cctype>

namespace cepshare {

namespace {

std::string lower(std::string_view s) {
    std::string r(s);
    for (auto& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return r;
}

}  // namespace

Schema::Schema(std::vector<std::string> types, std::vector<std::string> attributes)
    : types_(std::move(types)), attributes_(std::move(attributes)) {}

TypeId Schema::intern_type(std::string_view name) {
    if (auto id = find_type(name)) return *id;
    if (types_.size() >= kUnknownType) throw std::length_error("type alphabet too large");
    types_.emplace_back(name);
    return static_cast<TypeId>(types_.size() - 1);
}

std::optional<TypeId> Schema::find_type(std::string_view name) const {
    for (std::size_t i = 0; i < types_.size(); ++i)
        if (types_[i] == name) return static_cast<TypeId>(i);
    return std::nullopt;
}

std::optional<std::size_t> Schema::find_attribute(std::string_view name) const {
    std::string l = lower(name);
    for (std::size_t i = 0; i < attributes_.size(); ++i)
        if (lower(attributes_[i]) == l) return i;
    return std::nullopt;
}

}  // namespace cepshare
