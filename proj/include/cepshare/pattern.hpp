#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cepshare {

enum class StepKind { kSingle, kKleenePlus, kNegated };

enum class SelectionPolicy { kSkipTillAny, kSkipTillNext, kStrictContiguity };
enum class ConsumptionPolicy { kReuse, kConsume };

struct PolicyConfig {
    SelectionPolicy selection = SelectionPolicy::kSkipTillAny;
    ConsumptionPolicy consumption = ConsumptionPolicy::kReuse;
    bool operator==(const PolicyConfig&) const = default;
};

const char* to_string(SelectionPolicy p);
const char* to_string(ConsumptionPolicy p);
std::optional<SelectionPolicy> parse_selection(std::string_view s);
std::optional<ConsumptionPolicy> parse_consumption(std::string_view s);

enum class UnaryFn { kNeg, kSin, kCos, kAsin, kAcos, kSqrt };
enum class BinaryOp { kAdd, kSub, kMul, kDiv, kLt, kLe, kGt, kGe, kEq };

/// Predicate expression tree. Booleans come from comparisons, AND and SAME;
/// everything else is numeric.
struct Expr {
    enum class Kind { kNumber, kAttr, kSum, kUnary, kBinary, kAnd, kSame };

    Kind kind = Kind::kNumber;
    double number = 0.0;
    std::string binding;                  // kAttr, kSum
    std::string attribute;                // kAttr, kSum
    UnaryFn fn = UnaryFn::kNeg;           // kUnary
    BinaryOp op = BinaryOp::kAdd;         // kBinary
    std::vector<std::string> same_attrs;  // kSame
    std::vector<Expr> args;               // kUnary: 1, kBinary: 2, kAnd: >= 2

    bool is_boolean() const;
    bool operator==(const Expr&) const = default;

    static Expr num(double v);
    static Expr attr(std::string binding, std::string attribute);
    static Expr sum(std::string binding, std::string attribute);
    static Expr unary(UnaryFn fn, Expr arg);
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
    static Expr conj(std::vector<Expr> terms);
    static Expr same(std::vector<std::string> attrs);
};

struct PatternStep {
    std::string type;
    std::string binding;
    StepKind kind = StepKind::kSingle;
    bool operator==(const PatternStep&) const = default;
};

struct Window {
    enum class Kind { kCount, kTime };
    Kind kind = Kind::kCount;
    double length = 0.0;  // elements (count) or timestamp units (time)
    bool operator==(const Window&) const = default;
};

struct Pattern {
    std::size_t id = 0;
    std::vector<PatternStep> steps;
    std::optional<Expr> predicate;
    Window window;
    double latency_bound_ms = std::numeric_limits<double>::infinity();
    double weight = 1.0;
    std::optional<PolicyConfig> policy;

    /// Steps that bind elements (single and Kleene), in order.
    std::vector<const PatternStep*> positive_steps() const;
    std::size_t positive_length() const;

    bool operator==(const Pattern&) const = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t position, const std::string& message);
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Parses the pattern grammar:
///   SEQ '(' step (',' step)* ')' ['WHERE' expr] 'WITHIN' number [unit]
///   ['BOUND' number 'ms'] ['WEIGHT' number] ['POLICY' sel ',' cons]
/// step := TYPE NAME | TYPE '+' NAME '[]' | '!' TYPE NAME
/// unit := 'events' (count window, default) | 'ticks' (timestamp window)
Pattern parse_pattern(std::string_view text, std::size_t id = 0);

/// Canonical text form; parse_pattern(print_pattern(p)) == p.
std::string print_pattern(const Pattern& p);
std::string print_expr(const Expr& e);

}  // namespace cepshare
