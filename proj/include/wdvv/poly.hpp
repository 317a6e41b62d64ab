#pragma once

#include "rational.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wdvv {

using Exponents = std::vector<unsigned>;

inline unsigned total_degree(const Exponents& e) { return std::accumulate(e.begin(), e.end(), 0u); }

/// Canonical term order: higher total degree first, ties broken by
/// lexicographically larger exponent vector first (u1 > u2 > ... > uN).
struct GradedLexOrder {
    bool operator()(const Exponents& a, const Exponents& b) const {
        unsigned da = total_degree(a), db = total_degree(b);
        if (da != db) return da > db;
        return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
    }
};

/// Multivariate polynomial over Q in variables u1..uN. Variable indices in
/// this API are zero-based: index i denotes u^{i+1}. Zero coefficients are
/// never stored, so two polynomials are equal iff their term maps are equal.
class Poly {
public:
    using TermMap = std::map<Exponents, Rational, GradedLexOrder>;

    explicit Poly(std::size_t n_vars) : n_vars_(n_vars) {
        if (n_vars == 0) throw std::invalid_argument("polynomial needs at least one variable");
    }

    static Poly constant(std::size_t n_vars, const Rational& c) {
        Poly p(n_vars);
        if (c != 0) p.terms_.emplace(Exponents(n_vars, 0), c);
        return p;
    }

    static Poly variable(std::size_t n_vars, std::size_t i) {
        if (i >= n_vars) throw std::out_of_range("variable index out of range");
        Exponents e(n_vars, 0);
        e[i] = 1;
        return monomial(std::move(e), Rational(1));
    }

    static Poly monomial(Exponents e, const Rational& c) {
        Poly p(e.size());
        if (c != 0) p.terms_.emplace(std::move(e), c);
        return p;
    }

    std::size_t n_vars() const noexcept { return n_vars_; }
    const TermMap& terms() const noexcept { return terms_; }
    std::size_t term_count() const noexcept { return terms_.size(); }
    bool is_zero() const noexcept { return terms_.empty(); }

    bool is_constant() const noexcept {
        return terms_.empty() || (terms_.size() == 1 && total_degree(terms_.begin()->first) == 0);
    }

    Rational constant_term() const {
        auto it = terms_.find(Exponents(n_vars_, 0));
        return it == terms_.end() ? Rational(0) : it->second;
    }

    /// Total degree of the leading term; -1 for the zero polynomial.
    int degree() const noexcept {
        return terms_.empty() ? -1 : static_cast<int>(total_degree(terms_.begin()->first));
    }

    Rational coefficient(const Exponents& e) const {
        auto it = terms_.find(e);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    void add_term(const Exponents& e, const Rational& c) {
        if (e.size() != n_vars_) throw std::invalid_argument("exponent vector length mismatch");
        if (c == 0) return;
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Poly& operator+=(const Poly& o) {
        require_same(o);
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }

    Poly& operator-=(const Poly& o) {
        require_same(o);
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }

    Poly& operator*=(const Rational& s) {
        if (s == 0) {
            terms_.clear();
        } else {
            for (auto& [e, c] : terms_) c *= s;
        }
        return *this;
    }

    Poly& operator*=(const Poly& o) { return *this = *this * o; }

    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(Poly a, const Rational& s) { return a *= s; }
    friend Poly operator*(const Rational& s, Poly a) { return a *= s; }
    friend Poly operator-(Poly a) { return a *= Rational(-1); }

    friend Poly operator*(const Poly& a, const Poly& b) {
        a.require_same(b);
        Poly out(a.n_vars_);
        if (a.is_zero() || b.is_zero()) return out;
        Exponents e(a.n_vars_);
        for (const auto& [ea, ca] : a.terms_) {
            for (const auto& [eb, cb] : b.terms_) {
                for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
                out.add_term(e, Rational(ca * cb));
            }
        }
        return out;
    }

    friend bool operator==(const Poly& a, const Poly& b) {
        return a.n_vars_ == b.n_vars_ && a.terms_ == b.terms_;
    }

    Poly pow(unsigned k) const {
        Poly result = constant(n_vars_, 1);
        Poly base = *this;
        while (k > 0) {
            if (k & 1u) result *= base;
            k >>= 1u;
            if (k > 0) base = base * base;
        }
        return result;
    }

    /// Formal partial derivative with respect to u^{i+1}.
    Poly derivative(std::size_t i) const {
        if (i >= n_vars_) throw std::out_of_range("derivative index out of range");
        Poly out(n_vars_);
        for (const auto& [e, c] : terms_) {
            if (e[i] == 0) continue;
            Exponents d = e;
            --d[i];
            out.terms_.emplace(std::move(d), c * e[i]);
        }
        return out;
    }

    Rational evaluate(std::span<const Rational> point) const {
        if (point.size() != n_vars_) throw std::invalid_argument("evaluation point length mismatch");
        Rational sum = 0;
        for (const auto& [e, c] : terms_) {
            Rational term = c;
            for (std::size_t i = 0; i < e.size(); ++i) {
                for (unsigned k = 0; k < e[i]; ++k) term *= point[i];
            }
            sum += term;
        }
        return sum;
    }

    /// Same polynomial viewed in `n_new` variables, with u^{i+1} renamed to
    /// u^{i+1+offset}.
    Poly embed(std::size_t n_new, std::size_t offset = 0) const {
        if (offset + n_vars_ > n_new) throw std::invalid_argument("embedding does not fit");
        Poly out(n_new);
        for (const auto& [e, c] : terms_) {
            Exponents d(n_new, 0);
            std::copy(e.begin(), e.end(), d.begin() + static_cast<std::ptrdiff_t>(offset));
            out.terms_.emplace(std::move(d), c);
        }
        return out;
    }

    /// Substitutes the constant `value` for u^{i+1}; the variable count is kept.
    Poly substitute(std::size_t i, const Rational& value) const {
        if (i >= n_vars_) throw std::out_of_range("substitution index out of range");
        Poly out(n_vars_);
        for (const auto& [e, c] : terms_) {
            Rational f = c;
            for (unsigned k = 0; k < e[i]; ++k) f *= value;
            Exponents d = e;
            d[i] = 0;
            out.add_term(d, f);
        }
        return out;
    }

    /// Drops every term of total degree <= `max_degree`.
    Poly strip_low_degree(int max_degree) const {
        Poly out(n_vars_);
        for (const auto& [e, c] : terms_)
            if (static_cast<int>(total_degree(e)) > max_degree) out.terms_.emplace(e, c);
        return out;
    }

private:
    void require_same(const Poly& o) const {
        if (o.n_vars_ != n_vars_)
            throw std::invalid_argument("polynomials have different numbers of variables (" +
                                        std::to_string(n_vars_) + " vs " + std::to_string(o.n_vars_) + ")");
    }

    std::size_t n_vars_;
    TermMap terms_;
};

/// Polynomial with coefficients rounded to double once, for numeric paths.
class NumericPoly {
public:
    NumericPoly() = default;
    explicit NumericPoly(const Poly& p) : n_vars_(p.n_vars()) {
        for (const auto& [e, c] : p.terms()) terms_.push_back({to_double(c), e});
    }

    std::size_t n_vars() const noexcept { return n_vars_; }
    bool is_zero() const noexcept { return terms_.empty(); }

    double operator()(std::span<const double> x) const {
        double sum = 0.0;
        for (const auto& t : terms_) {
            double v = t.coefficient;
            for (std::size_t i = 0; i < t.exponents.size(); ++i)
                for (unsigned k = 0; k < t.exponents[i]; ++k) v *= x[i];
            sum += v;
        }
        return sum;
    }

private:
    struct Term {
        double coefficient;
        Exponents exponents;
    };
    std::size_t n_vars_ = 0;
    std::vector<Term> terms_;
};

inline Poly gradient_component(const Poly& p, std::size_t i) { return p.derivative(i); }

inline std::vector<Poly> gradient(const Poly& p) {
    std::vector<Poly> g;
    g.reserve(p.n_vars());
    for (std::size_t i = 0; i < p.n_vars(); ++i) g.push_back(p.derivative(i));
    return g;
}

/// Dot product of polynomial vectors.
inline Poly dot(std::span<const Poly> a, std::span<const Poly> b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("dot: length mismatch");
    Poly s(a.front().n_vars());
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace wdvv
