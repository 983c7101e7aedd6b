#include "cepshare/pattern.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace cepshare {

namespace {

std::string lower(std::string_view s) {
    std::string r(s);
    for (auto& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return r;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && lower(a) == lower(b);
}

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct Token {
    enum class Kind { kIdent, kNumber, kSymbol, kEnd };
    Kind kind = Kind::kEnd;
    std::string text;
    double number = 0.0;
    std::size_t pos = 0;
};

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.pos = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            t.kind = Token::Kind::kIdent;
            t.text = std::string(s.substr(i, j - i));
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            double v = 0.0;
            auto res = std::from_chars(s.data() + i, s.data() + s.size(), v);
            if (res.ec != std::errc{}) throw ParseError(i, "malformed number");
            t.kind = Token::Kind::kNumber;
            t.number = v;
            t.text = std::string(s.substr(i, static_cast<std::size_t>(res.ptr - (s.data() + i))));
            i = static_cast<std::size_t>(res.ptr - s.data());
        } else {
            static constexpr std::string_view two[] = {"<=", ">=", "=="};
            t.kind = Token::Kind::kSymbol;
            bool matched = false;
            for (auto op : two) {
                if (s.substr(i, 2) == op) {
                    t.text = std::string(op == "==" ? "=" : op);
                    i += 2;
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                if (std::string_view("(),[].+-*/<>=!").find(c) == std::string_view::npos)
                    throw ParseError(i, std::string("unexpected character '") + c + "'");
                t.text = std::string(1, c);
                ++i;
            }
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.pos = s.size();
    out.push_back(end);
    return out;
}

struct BindingInfo {
    std::size_t step_index;
    StepKind kind;
};

class Parser {
public:
    explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

    Pattern parse(std::size_t id) {
        Pattern p;
        p.id = id;
        expect_keyword("SEQ");
        expect_symbol("(");
        parse_step(p);
        while (accept_symbol(",")) parse_step(p);
        expect_symbol(")");
        validate_steps(p);

        if (accept_keyword("WHERE")) {
            std::size_t where_pos = peek().pos;
            Expr e = parse_and();
            if (!e.is_boolean()) throw ParseError(where_pos, "predicate must be boolean");
            check_negation_conjuncts(e, p, where_pos);
            p.predicate = std::move(e);
        }

        const Token& within = peek();
        expect_keyword("WITHIN");
        p.window.length = expect_number();
        if (accept_keyword("ticks") || accept_keyword("time"))
            p.window.kind = Window::Kind::kTime;
        else if (accept_keyword("events") || accept_keyword("rows"))
            p.window.kind = Window::Kind::kCount;
        if (!(p.window.length > 0.0)) throw ParseError(within.pos, "window must be positive");

        while (peek().kind != Token::Kind::kEnd) {
            const Token& t = peek();
            if (accept_keyword("BOUND")) {
                p.latency_bound_ms = expect_number();
                expect_keyword("ms");
                if (!(p.latency_bound_ms > 0.0)) throw ParseError(t.pos, "latency bound must be positive");
            } else if (accept_keyword("WEIGHT")) {
                p.weight = expect_number();
                if (p.weight < 0.0) throw ParseError(t.pos, "weight must be nonnegative");
            } else if (accept_keyword("POLICY")) {
                PolicyConfig pc;
                std::size_t sel_pos = peek().pos;
                auto sel = parse_selection(dashed_word());
                if (!sel) throw ParseError(sel_pos, "unknown selection policy");
                expect_symbol(",");
                std::size_t cons_pos = peek().pos;
                auto cons = parse_consumption(dashed_word());
                if (!cons) throw ParseError(cons_pos, "unknown consumption policy");
                pc.selection = *sel;
                pc.consumption = *cons;
                p.policy = pc;
            } else {
                throw ParseError(t.pos, "unexpected token '" + t.text + "'");
            }
        }
        return p;
    }

private:
    const Token& peek() const { return tokens_[idx_]; }
    const Token& next() { return tokens_[idx_++]; }

    bool is_keyword(const Token& t, std::string_view kw) const {
        return t.kind == Token::Kind::kIdent && iequals(t.text, kw);
    }
    bool accept_keyword(std::string_view kw) {
        if (is_keyword(peek(), kw)) {
            ++idx_;
            return true;
        }
        return false;
    }
    void expect_keyword(std::string_view kw) {
        if (!accept_keyword(kw)) throw ParseError(peek().pos, "expected '" + std::string(kw) + "'");
    }
    bool accept_symbol(std::string_view sym) {
        if (peek().kind == Token::Kind::kSymbol && peek().text == sym) {
            ++idx_;
            return true;
        }
        return false;
    }
    void expect_symbol(std::string_view sym) {
        if (!accept_symbol(sym)) throw ParseError(peek().pos, "expected '" + std::string(sym) + "'");
    }
    std::string expect_ident() {
        if (peek().kind != Token::Kind::kIdent) throw ParseError(peek().pos, "expected identifier");
        return next().text;
    }
    double expect_number() {
        if (peek().kind != Token::Kind::kNumber) throw ParseError(peek().pos, "expected number");
        return next().number;
    }
    std::string dashed_word() {
        std::string w = expect_ident();
        while (peek().kind == Token::Kind::kSymbol && peek().text == "-") {
            ++idx_;
            w += "-" + expect_ident();
        }
        return w;
    }

    void parse_step(Pattern& p) {
        PatternStep s;
        std::size_t pos = peek().pos;
        if (accept_symbol("!")) {
            s.kind = StepKind::kNegated;
            s.type = expect_ident();
            s.binding = expect_ident();
        } else {
            s.type = expect_ident();
            if (accept_symbol("+")) {
                s.kind = StepKind::kKleenePlus;
                s.binding = expect_ident();
                expect_symbol("[");
                expect_symbol("]");
            } else {
                s.binding = expect_ident();
            }
        }
        if (bindings_.count(s.binding)) throw ParseError(pos, "duplicate binding '" + s.binding + "'");
        bindings_[s.binding] = BindingInfo{p.steps.size(), s.kind};
        p.steps.push_back(std::move(s));
    }

    void validate_steps(const Pattern& p) {
        std::size_t pos = peek().pos;
        if (p.positive_length() == 0) throw ParseError(pos, "pattern needs at least one non-negated step");
        if (p.steps.front().kind == StepKind::kNegated)
            throw ParseError(pos, "a negated step cannot be the first step");
        if (p.steps.back().kind == StepKind::kNegated)
            throw ParseError(pos, "a negated step cannot be the last step");
    }

    // expr := cmp ('AND' cmp)*
    Expr parse_and() {
        std::size_t pos = peek().pos;
        std::vector<Expr> terms;
        auto push = [&](Expr e) {
            if (e.kind == Expr::Kind::kAnd)
                for (auto& t : e.args) terms.push_back(std::move(t));
            else
                terms.push_back(std::move(e));
        };
        push(parse_cmp());
        while (accept_keyword("AND")) push(parse_cmp());
        if (terms.size() == 1) return std::move(terms.front());
        for (const auto& t : terms)
            if (!t.is_boolean()) throw ParseError(pos, "AND operands must be boolean");
        return Expr::conj(std::move(terms));
    }

    Expr parse_cmp() {
        std::size_t pos = peek().pos;
        Expr lhs = parse_add();
        static const std::pair<std::string_view, BinaryOp> ops[] = {
            {"<=", BinaryOp::kLe}, {">=", BinaryOp::kGe}, {"<", BinaryOp::kLt},
            {">", BinaryOp::kGt},  {"=", BinaryOp::kEq}};
        for (auto [sym, op] : ops) {
            if (accept_symbol(sym)) {
                Expr rhs = parse_add();
                if (lhs.is_boolean() || rhs.is_boolean())
                    throw ParseError(pos, "comparison operands must be numeric");
                return Expr::binary(op, std::move(lhs), std::move(rhs));
            }
        }
        return lhs;
    }

    Expr parse_add() {
        std::size_t pos = peek().pos;
        Expr lhs = parse_mul();
        while (true) {
            BinaryOp op;
            if (accept_symbol("+"))
                op = BinaryOp::kAdd;
            else if (accept_symbol("-"))
                op = BinaryOp::kSub;
            else
                break;
            Expr rhs = parse_mul();
            if (lhs.is_boolean() || rhs.is_boolean()) throw ParseError(pos, "arithmetic on boolean operand");
            lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    Expr parse_mul() {
        std::size_t pos = peek().pos;
        Expr lhs = parse_unary();
        while (true) {
            BinaryOp op;
            if (accept_symbol("*"))
                op = BinaryOp::kMul;
            else if (accept_symbol("/"))
                op = BinaryOp::kDiv;
            else
                break;
            Expr rhs = parse_unary();
            if (lhs.is_boolean() || rhs.is_boolean()) throw ParseError(pos, "arithmetic on boolean operand");
            lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    Expr parse_unary() {
        std::size_t pos = peek().pos;
        if (accept_symbol("-")) {
            if (peek().kind == Token::Kind::kNumber) return Expr::num(-next().number);
            Expr arg = parse_unary();
            if (arg.is_boolean()) throw ParseError(pos, "negation of boolean operand");
            return Expr::unary(UnaryFn::kNeg, std::move(arg));
        }
        return parse_primary();
    }

    Expr parse_primary() {
        const Token& t = peek();
        if (t.kind == Token::Kind::kNumber) {
            ++idx_;
            return Expr::num(t.number);
        }
        if (accept_symbol("(")) {
            Expr e = parse_and();
            expect_symbol(")");
            return e;
        }
        if (t.kind != Token::Kind::kIdent) throw ParseError(t.pos, "expected expression");

        if (is_keyword(t, "SAME")) {
            ++idx_;
            expect_symbol("[");
            std::vector<std::string> attrs{expect_ident()};
            while (accept_symbol(",")) attrs.push_back(expect_ident());
            expect_symbol("]");
            return Expr::same(std::move(attrs));
        }
        if (is_keyword(t, "SUM")) {
            ++idx_;
            expect_symbol("(");
            std::size_t ref_pos = peek().pos;
            std::string binding = expect_ident();
            if (accept_symbol("[")) {
                if (peek().kind == Token::Kind::kIdent) ++idx_;
                expect_symbol("]");
            }
            expect_symbol(".");
            std::string attr = expect_ident();
            expect_symbol(")");
            auto it = bindings_.find(binding);
            if (it == bindings_.end()) throw ParseError(ref_pos, "unknown binding '" + binding + "'");
            if (it->second.kind != StepKind::kKleenePlus)
                throw ParseError(ref_pos, "SUM requires a Kleene binding, '" + binding + "' is not one");
            return Expr::sum(std::move(binding), std::move(attr));
        }
        static const std::pair<std::string_view, UnaryFn> fns[] = {
            {"sin", UnaryFn::kSin},   {"cos", UnaryFn::kCos},     {"arcsin", UnaryFn::kAsin},
            {"asin", UnaryFn::kAsin}, {"arccos", UnaryFn::kAcos}, {"acos", UnaryFn::kAcos},
            {"sqrt", UnaryFn::kSqrt}};
        if (tokens_[idx_ + 1].kind == Token::Kind::kSymbol && tokens_[idx_ + 1].text == "(") {
            for (auto [name, fn] : fns) {
                if (iequals(t.text, name)) {
                    idx_ += 2;
                    std::size_t arg_pos = peek().pos;
                    Expr arg = parse_and();
                    expect_symbol(")");
                    if (arg.is_boolean()) throw ParseError(arg_pos, "function argument must be numeric");
                    return Expr::unary(fn, std::move(arg));
                }
            }
            throw ParseError(t.pos, "unknown function '" + t.text + "'");
        }

        ++idx_;
        std::string binding = t.text;
        if (peek().kind == Token::Kind::kSymbol && peek().text == "[")
            throw ParseError(t.pos, "Kleene binding '" + binding + "' must be aggregated with SUM");
        expect_symbol(".");
        std::string attr = expect_ident();
        auto it = bindings_.find(binding);
        if (it == bindings_.end()) throw ParseError(t.pos, "unknown binding '" + binding + "'");
        if (it->second.kind == StepKind::kKleenePlus)
            throw ParseError(t.pos, "Kleene binding '" + binding + "' must be aggregated with SUM");
        return Expr::attr(std::move(binding), std::move(attr));
    }

    static void collect_bindings(const Expr& e, std::set<std::string>& out) {
        if (e.kind == Expr::Kind::kAttr || e.kind == Expr::Kind::kSum) out.insert(e.binding);
        for (const auto& a : e.args) collect_bindings(a, out);
    }

    // A conjunct that mentions a negated binding filters which elements
    // count as a violation of that negation. It may mention only one negated
    // binding and only positive bindings bound by the end of the gap.
    void check_negation_conjuncts(const Expr& root, const Pattern& p, std::size_t pos) {
        auto check = [&](const Expr& c) {
            if (c.kind == Expr::Kind::kSame) return;
            std::set<std::string> refs;
            collect_bindings(c, refs);
            std::optional<std::size_t> neg_step;
            for (const auto& b : refs) {
                const auto& info = bindings_.at(b);
                if (info.kind == StepKind::kNegated) {
                    if (neg_step) throw ParseError(pos, "a conjunct may reference at most one negated binding");
                    neg_step = info.step_index;
                }
            }
            if (!neg_step) return;
            std::size_t limit = *neg_step;
            while (limit < p.steps.size() && p.steps[limit].kind == StepKind::kNegated) ++limit;
            for (const auto& b : refs) {
                if (bindings_.at(b).step_index > limit)
                    throw ParseError(pos, "negation conjunct references '" + b + "' bound after its gap");
            }
        };
        if (root.kind == Expr::Kind::kAnd)
            for (const auto& c : root.args) check(c);
        else
            check(root);
    }

    std::vector<Token> tokens_;
    std::size_t idx_ = 0;
    std::map<std::string, BindingInfo> bindings_;
};

const char* op_symbol(BinaryOp op) {
    switch (op) {
        case BinaryOp::kAdd: return "+";
        case BinaryOp::kSub: return "-";
        case BinaryOp::kMul: return "*";
        case BinaryOp::kDiv: return "/";
        case BinaryOp::kLt: return "<";
        case BinaryOp::kLe: return "<=";
        case BinaryOp::kGt: return ">";
        case BinaryOp::kGe: return ">=";
        case BinaryOp::kEq: return "=";
    }
    return "?";
}

const char* fn_name(UnaryFn fn) {
    switch (fn) {
        case UnaryFn::kNeg: return "-";
        case UnaryFn::kSin: return "sin";
        case UnaryFn::kCos: return "cos";
        case UnaryFn::kAsin: return "arcsin";
        case UnaryFn::kAcos: return "arccos";
        case UnaryFn::kSqrt: return "sqrt";
    }
    return "?";
}

}  // namespace

const char* to_string(SelectionPolicy p) {
    switch (p) {
        case SelectionPolicy::kSkipTillAny: return "skip-any";
        case SelectionPolicy::kSkipTillNext: return "skip-next";
        case SelectionPolicy::kStrictContiguity: return "strict";
    }
    return "?";
}

const char* to_string(ConsumptionPolicy p) {
    return p == ConsumptionPolicy::kReuse ? "reuse" : "consume";
}

std::optional<SelectionPolicy> parse_selection(std::string_view s) {
    std::string l = lower(s);
    if (l == "skip-any" || l == "skip-till-any") return SelectionPolicy::kSkipTillAny;
    if (l == "skip-next" || l == "skip-till-next") return SelectionPolicy::kSkipTillNext;
    if (l == "strict" || l == "strict-contiguity") return SelectionPolicy::kStrictContiguity;
    return std::nullopt;
}

std::optional<ConsumptionPolicy> parse_consumption(std::string_view s) {
    std::string l = lower(s);
    if (l == "reuse") return ConsumptionPolicy::kReuse;
    if (l == "consume") return ConsumptionPolicy::kConsume;
    return std::nullopt;
}

bool Expr::is_boolean() const {
    switch (kind) {
        case Kind::kAnd:
        case Kind::kSame: return true;
        case Kind::kBinary:
            return op == BinaryOp::kLt || op == BinaryOp::kLe || op == BinaryOp::kGt || op == BinaryOp::kGe ||
                   op == BinaryOp::kEq;
        default: return false;
    }
}

Expr Expr::num(double v) {
    Expr e;
    e.kind = Kind::kNumber;
    e.number = v;
    return e;
}

Expr Expr::attr(std::string binding, std::string attribute) {
    Expr e;
    e.kind = Kind::kAttr;
    e.binding = std::move(binding);
    e.attribute = std::move(attribute);
    return e;
}

Expr Expr::sum(std::string binding, std::string attribute) {
    Expr e = attr(std::move(binding), std::move(attribute));
    e.kind = Kind::kSum;
    return e;
}

Expr Expr::unary(UnaryFn fn, Expr arg) {
    Expr e;
    e.kind = Kind::kUnary;
    e.fn = fn;
    e.args.push_back(std::move(arg));
    return e;
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
    Expr e;
    e.kind = Kind::kBinary;
    e.op = op;
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
}

Expr Expr::conj(std::vector<Expr> terms) {
    Expr e;
    e.kind = Kind::kAnd;
    e.args = std::move(terms);
    return e;
}

Expr Expr::same(std::vector<std::string> attrs) {
    Expr e;
    e.kind = Kind::kSame;
    e.same_attrs = std::move(attrs);
    return e;
}

std::vector<const PatternStep*> Pattern::positive_steps() const {
    std::vector<const PatternStep*> out;
    for (const auto& s : steps)
        if (s.kind != StepKind::kNegated) out.push_back(&s);
    return out;
}

std::size_t Pattern::positive_length() const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const auto& s) { return s.kind != StepKind::kNegated; }));
}

ParseError::ParseError(std::size_t position, const std::string& message)
    : std::runtime_error("at " + std::to_string(position) + ": " + message), position_(position) {}

Pattern parse_pattern(std::string_view text, std::size_t id) {
    return Parser(text).parse(id);
}

std::string print_expr(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::kNumber: return format_number(e.number);
        case Expr::Kind::kAttr: return e.binding + "." + e.attribute;
        case Expr::Kind::kSum: return "SUM(" + e.binding + "[]." + e.attribute + ")";
        case Expr::Kind::kUnary:
            if (e.fn == UnaryFn::kNeg) return "-(" + print_expr(e.args[0]) + ")";
            return std::string(fn_name(e.fn)) + "(" + print_expr(e.args[0]) + ")";
        case Expr::Kind::kBinary: {
            std::string s = print_expr(e.args[0]) + " " + op_symbol(e.op) + " " + print_expr(e.args[1]);
            return e.is_boolean() ? s : "(" + s + ")";
        }
        case Expr::Kind::kAnd: {
            std::string s;
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) s += " AND ";
                s += print_expr(e.args[i]);
            }
            return s;
        }
        case Expr::Kind::kSame: {
            std::string s = "SAME [";
            for (std::size_t i = 0; i < e.same_attrs.size(); ++i) {
                if (i) s += ", ";
                s += e.same_attrs[i];
            }
            return s + "]";
        }
    }
    return {};
}

std::string print_pattern(const Pattern& p) {
    std::string s = "SEQ(";
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        const auto& st = p.steps[i];
        if (i) s += ", ";
        switch (st.kind) {
            case StepKind::kSingle: s += st.type + " " + st.binding; break;
            case StepKind::kKleenePlus: s += st.type + "+ " + st.binding + "[]"; break;
            case StepKind::kNegated: s += "!" + st.type + " " + st.binding; break;
        }
    }
    s += ")";
    if (p.predicate) s += " WHERE " + print_expr(*p.predicate);
    s += " WITHIN " + format_number(p.window.length);
    if (p.window.kind == Window::Kind::kTime) s += " ticks";
    if (std::isfinite(p.latency_bound_ms)) s += " BOUND " + format_number(p.latency_bound_ms) + " ms";
    if (p.weight != 1.0) s += " WEIGHT " + format_number(p.weight);
    if (p.policy)
        s += std::string(" POLICY ") + to_string(p.policy->selection) + ", " + to_string(p.policy->consumption);
    return s;
}

}  // namespace cepshare
