#pragma once

#include "poly.hpp"
#include "rational.hpp"

#include <cctype>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wdvv {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t position, std::string message)
        : std::runtime_error("parse error at offset " + std::to_string(position) + ": " + message),
          position_(position),
          message_(std::move(message)) {}

    std::size_t position() const noexcept { return position_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t position_;
    std::string message_;
};

namespace detail {

/// Pratt parser over the polynomial grammar. Binding powers:
/// + - : 10, * / : 20, unary minus : 30, ^ : 40 (all binary levels left-associative).
class ExprParser {
public:
    static constexpr unsigned max_exponent = 4096;

    ExprParser(std::string_view text, std::size_t n_vars) : text_(text), n_(n_vars) {}

    Poly parse() {
        for (std::size_t i = 0; i < text_.size(); ++i)
            if (static_cast<unsigned char>(text_[i]) > 127) throw ParseError(i, "non-ASCII character");
        advance();
        if (tok_.kind == Kind::End) throw ParseError(tok_.pos, "empty expression");
        Poly p = expression(0);
        if (tok_.kind != Kind::End) throw ParseError(tok_.pos, "unexpected '" + std::string(tok_.text) + "'");
        return p;
    }

private:
    enum class Kind { Number, Variable, Op, LParen, RParen, End };
    struct Token {
        Kind kind = Kind::End;
        std::size_t pos = 0;
        std::string_view text;
    };

    void advance() {
        while (cur_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[cur_]))) ++cur_;
        tok_.pos = cur_;
        if (cur_ == text_.size()) {
            tok_ = {Kind::End, cur_, {}};
            return;
        }
        char ch = text_[cur_];
        auto digits_from = [&](std::size_t start) {
            std::size_t e = start;
            while (e < text_.size() && std::isdigit(static_cast<unsigned char>(text_[e]))) ++e;
            return e;
        };
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            std::size_t e = digits_from(cur_);
            tok_ = {Kind::Number, cur_, text_.substr(cur_, e - cur_)};
            cur_ = e;
        } else if (ch == 'u') {
            std::size_t e = digits_from(cur_ + 1);
            if (e == cur_ + 1) throw ParseError(cur_, "variable name 'u' must be followed by an index");
            if (e < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[e])) || text_[e] == '_'))
                throw ParseError(cur_, "malformed variable name");
            tok_ = {Kind::Variable, cur_, text_.substr(cur_, e - cur_)};
            cur_ = e;
        } else if (ch == '+' || ch == '-' || ch == '*' || ch == '/' || ch == '^') {
            tok_ = {Kind::Op, cur_, text_.substr(cur_, 1)};
            ++cur_;
        } else if (ch == '(') {
            tok_ = {Kind::LParen, cur_, text_.substr(cur_, 1)};
            ++cur_;
        } else if (ch == ')') {
            tok_ = {Kind::RParen, cur_, text_.substr(cur_, 1)};
            ++cur_;
        } else {
            throw ParseError(cur_, std::string("unexpected character '") + ch + "'");
        }
    }

    static int infix_power(const Token& t) {
        if (t.kind != Kind::Op) return -1;
        switch (t.text[0]) {
            case '+':
            case '-': return 10;
            case '*':
            case '/': return 20;
            case '^': return 40;
        }
        return -1;
    }

    Poly expression(int min_bp) {
        Poly lhs = prefix();
        for (;;) {
            int bp = infix_power(tok_);
            if (bp < 0 || bp <= min_bp) break;
            Token op = tok_;
            advance();
            if (tok_.kind == Kind::End) throw ParseError(tok_.pos, "expression ends after '" + std::string(op.text) + "'");
            std::size_t rhs_pos = tok_.pos;
            Poly rhs = expression(bp);
            switch (op.text[0]) {
                case '+': lhs += rhs; break;
                case '-': lhs -= rhs; break;
                case '*': lhs = lhs * rhs; break;
                case '/': {
                    if (!rhs.is_constant()) throw ParseError(rhs_pos, "division by a non-constant expression");
                    Rational d = rhs.constant_term();
                    if (d == 0) throw ParseError(rhs_pos, "division by zero");
                    Rational inv = 1;
                    inv /= d;
                    lhs *= inv;
                    break;
                }
                case '^': lhs = lhs.pow(exponent(rhs, rhs_pos)); break;
            }
        }
        return lhs;
    }

    static unsigned exponent(const Poly& e, std::size_t pos) {
        if (!e.is_constant()) throw ParseError(pos, "exponent must be a constant integer");
        Rational v = e.constant_term();
        if (!is_integer(v)) throw ParseError(pos, "exponent must be an integer");
        if (v < 0) throw ParseError(pos, "exponent must be nonnegative");
        if (v > max_exponent) throw ParseError(pos, "exponent exceeds " + std::to_string(max_exponent));
        return static_cast<unsigned>(v.get_num().get_ui());
    }

    Poly prefix() {
        Token t = tok_;
        switch (t.kind) {
            case Kind::Number: {
                advance();
                return Poly::constant(n_, Rational(mpz_class(std::string(t.text))));
            }
            case Kind::Variable: {
                std::string digits(t.text.substr(1));
                std::size_t index = 0;
                if (digits.size() > 9 || (index = std::stoul(digits)) == 0 || index > n_)
                    throw ParseError(t.pos, "unknown variable '" + std::string(t.text) + "' (problem has " +
                                                std::to_string(n_) + " variables)");
                advance();
                return Poly::variable(n_, index - 1);
            }
            case Kind::LParen: {
                advance();
                if (tok_.kind == Kind::RParen) throw ParseError(tok_.pos, "empty parentheses");
                Poly inner = expression(0);
                if (tok_.kind != Kind::RParen) throw ParseError(tok_.pos, "expected ')'");
                advance();
                return inner;
            }
            case Kind::Op:
                if (t.text[0] == '-' || t.text[0] == '+') {
                    advance();
                    if (tok_.kind == Kind::End) throw ParseError(tok_.pos, "expression ends after unary sign");
                    Poly operand = expression(30);
                    return t.text[0] == '-' ? -operand : operand;
                }
                throw ParseError(t.pos, "unexpected operator '" + std::string(t.text) + "'");
            case Kind::RParen: throw ParseError(t.pos, "unexpected ')'");
            case Kind::End: throw ParseError(t.pos, "unexpected end of expression");
        }
        throw ParseError(t.pos, "unreachable");
    }

    std::string_view text_;
    std::size_t n_;
    std::size_t cur_ = 0;
    Token tok_;
};

}  // namespace detail

/// Parses a polynomial in u1..u{n_vars}. Grammar: integer literals, variables,
/// + - * / ^, unary minus, parentheses; division only by nonzero constants and
/// exponents only nonnegative integer constants.
inline Poly parse_polynomial(std::string_view text, std::size_t n_vars) {
    if (n_vars == 0) throw std::invalid_argument("expression needs at least one variable");
    return detail::ExprParser(text, n_vars).parse();
}

inline std::vector<std::string> default_variable_names(std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) names.push_back("u" + std::to_string(i));
    return names;
}

/// Canonical text: terms in graded lexicographic order, reduced coefficients
/// written before the monomial ("1/4*u2^2*u3^2"), unit coefficients omitted.
inline std::string format_polynomial(const Poly& p, const std::vector<std::string>& names) {
    if (names.size() != p.n_vars()) throw std::invalid_argument("variable name count mismatch");
    if (p.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [e, c] : p.terms()) {
        Rational mag = abs(c);
        if (first) {
            if (c < 0) out += "-";
        } else {
            out += c < 0 ? " - " : " + ";
        }
        first = false;
        std::string mono;
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] == 0) continue;
            if (!mono.empty()) mono += "*";
            mono += names[i];
            if (e[i] > 1) mono += "^" + std::to_string(e[i]);
        }
        if (mono.empty()) {
            out += to_string(mag);
        } else if (mag == 1) {
            out += mono;
        } else {
            out += to_string(mag) + "*" + mono;
        }
    }
    return out;
}

inline std::string format_polynomial(const Poly& p) { return format_polynomial(p, default_variable_names(p.n_vars())); }

}  // namespace wdvv
