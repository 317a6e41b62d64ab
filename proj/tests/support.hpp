#pragma once

#include <wdvv/exprlang.hpp>
#include <wdvv/frobenius.hpp>
#include <wdvv/matrix.hpp>

#include <random>
#include <string>

namespace testing_support {

inline wdvv::Poly P(const std::string& text, std::size_t n = 3) { return wdvv::parse_polynomial(text, n); }

inline std::string F(const wdvv::Poly& p) { return wdvv::format_polynomial(p); }

inline const char* const kPhiBase = "1/2*u1^2*u3 + 1/2*u1*u2^2";
inline const char* const kSol1 = "1/4*u2^2*u3^2 + 1/60*u3^5";
inline const char* const kSol1b = "1/6*u2^3*u3 + 1/6*u2^2*u3^3 + 1/210*u3^7";
inline const char* const kSol2 = "1/6*u2^3*u3^2 + 1/20*u2^2*u3^5 + 1/3960*u3^11";
inline const char* const kSol1Perturbed = "1/4*u2^2*u3^2 + 1/30*u3^5";

inline wdvv::Potential antidiagonal_potential(const std::string& f) {
    return wdvv::Potential(wdvv::ConstSymMatrix::antidiagonal_ones(3), P(std::string(kPhiBase) + " + " + f));
}

/// Random polynomial with small integer coefficients and the given term budget.
inline wdvv::Poly random_poly(std::mt19937& rng, std::size_t n, unsigned max_degree, int terms, int min_degree = 0) {
    std::uniform_int_distribution<int> coef(-3, 3);
    std::uniform_int_distribution<unsigned> deg(static_cast<unsigned>(min_degree), max_degree);
    std::uniform_int_distribution<std::size_t> var(0, n - 1);
    wdvv::Poly p(n);
    for (int t = 0; t < terms; ++t) {
        wdvv::Exponents e(n, 0);
        unsigned d = deg(rng);
        for (unsigned k = 0; k < d; ++k) ++e[var(rng)];
        p.add_term(e, wdvv::Rational(coef(rng)));
    }
    return p;
}

/// Random invertible symmetric integer matrix (retries until nonsingular).
inline wdvv::ConstSymMatrix random_metric(std::mt19937& rng, std::size_t n) {
    std::uniform_int_distribution<int> coef(-2, 2);
    for (;;) {
        wdvv::RationalMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = coef(rng);
        try {
            return wdvv::ConstSymMatrix(m);
        } catch (const wdvv::SingularMatrixError&) {
        }
    }
}

}  // namespace testing_support
