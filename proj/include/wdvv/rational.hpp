#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wdvv {

/// Exact rational with arbitrary-precision numerator and denominator.
/// gmpxx keeps every arithmetic result in lowest terms with a positive
/// denominator.
using Rational = mpq_class;

inline Rational make_rational(std::int64_t num, std::int64_t den = 1) {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    Rational q{mpz_class{std::to_string(num)}, mpz_class{std::to_string(den)}};
    q.canonicalize();
    return q;
}

/// Accepts "p" or "p/q" with an optional leading sign; q must be positive.
inline Rational parse_rational(std::string_view text) {
    auto digits = [](std::string_view s) {
        if (s.empty()) return false;
        for (char ch : s)
            if (ch < '0' || ch > '9') return false;
        return true;
    };
    std::string_view body = text;
    bool negative = false;
    if (!body.empty() && (body.front() == '-' || body.front() == '+')) {
        negative = body.front() == '-';
        body.remove_prefix(1);
    }
    auto slash = body.find('/');
    std::string_view num = body.substr(0, slash);
    std::string_view den = slash == std::string_view::npos ? std::string_view{"1"} : body.substr(slash + 1);
    if (!digits(num) || !digits(den))
        throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
    mpz_class d{std::string(den)};
    if (d == 0) throw std::invalid_argument("rational with zero denominator '" + std::string(text) + "'");
    Rational q{mpz_class{std::string(num)}, d};
    q.canonicalize();
    if (negative) q = -q;
    return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline double to_double(const Rational& q) { return q.get_d(); }

inline bool is_integer(const Rational& q) { return q.get_den() == 1; }

}  // namespace wdvv
