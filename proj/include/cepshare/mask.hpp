#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#ifndef CEPSHARE_MASK_WORDS
#define CEPSHARE_MASK_WORDS 1
#endif

namespace cepshare {

/// Fixed-width set of pattern indices.
///
/// Pattern i lives in bit (i % 64) of word (i / 64). The integer value used
/// for ordering treats pattern 0 as the most significant bit, so a mask with
/// pattern 0 set compares greater than any mask without it. This is the
/// ordering used when clusters are visited "by descending PSD value".
template <std::size_t Words>
class BasicMask {
public:
    static constexpr std::size_t kWords = Words;
    static constexpr std::size_t kCapacity = Words * 64;

    constexpr BasicMask() = default;

    static constexpr BasicMask single(std::size_t i) {
        BasicMask m;
        m.set(i);
        return m;
    }

    static constexpr BasicMask first_n(std::size_t n) {
        BasicMask m;
        for (std::size_t w = 0; w < Words && n > 0; ++w) {
            if (n >= 64) {
                m.words_[w] = ~uint64_t{0};
                n -= 64;
            } else {
                m.words_[w] = (uint64_t{1} << n) - 1;
                n = 0;
            }
        }
        return m;
    }

    constexpr void set(std::size_t i) { words_[i / 64] |= uint64_t{1} << (i % 64); }
    constexpr void reset(std::size_t i) { words_[i / 64] &= ~(uint64_t{1} << (i % 64)); }
    constexpr bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }

    constexpr bool none() const {
        for (auto w : words_)
            if (w) return false;
        return true;
    }
    constexpr bool any() const { return !none(); }

    constexpr int count() const {
        int c = 0;
        for (auto w : words_) c += std::popcount(w);
        return c;
    }

    constexpr BasicMask operator&(const BasicMask& o) const {
        BasicMask r;
        for (std::size_t w = 0; w < Words; ++w) r.words_[w] = words_[w] & o.words_[w];
        return r;
    }
    constexpr BasicMask operator|(const BasicMask& o) const {
        BasicMask r;
        for (std::size_t w = 0; w < Words; ++w) r.words_[w] = words_[w] | o.words_[w];
        return r;
    }
    constexpr BasicMask operator~() const {
        BasicMask r;
        for (std::size_t w = 0; w < Words; ++w) r.words_[w] = ~words_[w];
        return r;
    }
    constexpr BasicMask& operator&=(const BasicMask& o) { return *this = *this & o; }
    constexpr BasicMask& operator|=(const BasicMask& o) { return *this = *this | o; }

    constexpr bool operator==(const BasicMask&) const = default;

    /// Integer-value comparison with pattern 0 as the most significant bit.
    constexpr bool value_less(const BasicMask& o) const {
        for (std::size_t w = 0; w < Words; ++w) {
            uint64_t diff = words_[w] ^ o.words_[w];
            if (diff) {
                int bit = std::countr_zero(diff);
                return ((o.words_[w] >> bit) & 1u) != 0;
            }
        }
        return false;
    }

    /// Calls f(i) for every set pattern index in ascending order.
    template <typename F>
    constexpr void for_each(F&& f) const {
        for (std::size_t w = 0; w < Words; ++w) {
            uint64_t bits = words_[w];
            while (bits) {
                int b = std::countr_zero(bits);
                f(w * 64 + static_cast<std::size_t>(b));
                bits &= bits - 1;
            }
        }
    }

    /// "[011]"-style rendering for n patterns, pattern 0 printed first.
    std::string to_string(std::size_t n) const {
        std::string s;
        s.reserve(n + 2);
        s.push_back('[');
        for (std::size_t i = 0; i < n; ++i) s.push_back(test(i) ? '1' : '0');
        s.push_back(']');
        return s;
    }

    std::size_t hash() const {
        uint64_t h = 0x9e3779b97f4a7c15ull;
        for (auto w : words_) h = (h ^ w) * 0xff51afd7ed558ccdull;
        return static_cast<std::size_t>(h ^ (h >> 32));
    }

    const std::array<uint64_t, Words>& words() const { return words_; }

private:
    std::array<uint64_t, Words> words_{};
};

/// Parses "[0110]" (pattern 0 first). Returns false on malformed input.
template <std::size_t Words>
bool parse_mask(const std::string& text, BasicMask<Words>& out) {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']') return false;
    if (text.size() - 2 > Words * 64) return false;
    BasicMask<Words> m;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        char c = text[i];
        if (c == '1')
            m.set(i - 1);
        else if (c != '0')
            return false;
    }
    out = m;
    return true;
}

using PatternMask = BasicMask<CEPSHARE_MASK_WORDS>;
inline constexpr std::size_t kMaxPatterns = PatternMask::kCapacity;

struct PatternMaskHash {
    std::size_t operator()(const PatternMask& m) const { return m.hash(); }
};

}  // namespace cepshare
