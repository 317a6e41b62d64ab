#pragma once

#include "matrix.hpp"
#include "poly.hpp"
#include "residual.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace wdvv {

/// Candidate WDVV solution: potential Phi in N variables with a constant
/// covariant metric eta_{ij} (inverse eta^{ij} cached inside `eta`).
class Potential {
public:
    Potential(ConstSymMatrix eta, Poly phi) : eta_(std::move(eta)), phi_(std::move(phi)) {
        if (phi_.n_vars() != eta_.dim()) throw std::invalid_argument("potential and metric disagree on dimension");
    }

    std::size_t n() const noexcept { return eta_.dim(); }
    const ConstSymMatrix& eta() const noexcept { return eta_; }
    const Poly& phi() const noexcept { return phi_; }

    /// Phi_{ijk}, computed once per call site; symmetric in all indices.
    PolyTensor third_derivatives() const {
        const std::size_t n = this->n();
        PolyTensor t = zero_poly_tensor({n, n, n}, n);
        for (std::size_t i = 0; i < n; ++i) {
            Poly di = phi_.derivative(i);
            for (std::size_t j = i; j < n; ++j) {
                Poly dij = di.derivative(j);
                for (std::size_t k = j; k < n; ++k) {
                    Poly d = dij.derivative(k);
                    for (auto [a, b, c] : {std::array{i, j, k}, std::array{i, k, j}, std::array{j, i, k},
                                           std::array{j, k, i}, std::array{k, i, j}, std::array{k, j, i}})
                        t(a, b, c) = d;
                }
            }
        }
        return t;
    }

private:
    ConstSymMatrix eta_;
    Poly phi_;
};

/// Potentials are identified up to quadratic terms, which no third
/// derivative sees.
inline Poly normalize_potential(const Poly& phi) { return phi.strip_low_degree(2); }

/// c(k, i, j) = c^k_{ij} = eta^{ks} Phi_{sij}.
inline PolyTensor structure_constants(const Potential& p) {
    const std::size_t n = p.n();
    PolyTensor d3 = p.third_derivatives();
    PolyTensor c = zero_poly_tensor({n, n, n}, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t s = 0; s < n; ++s) {
            const Rational& e = p.eta().inv(k, s);
            if (e == 0) continue;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) c(k, i, j) += e * d3(s, i, j);
        }
    return c;
}

/// Entry (i, j, m, n): Phi_{ijk} eta^{kl} Phi_{lmn} - Phi_{imk} eta^{kl} Phi_{ljn}.
inline PolyTensor wdvv_residual(const Potential& p) {
    const std::size_t n = p.n();
    PolyTensor d3 = p.third_derivatives();
    // raised(i, j, l) = Phi_{ijk} eta^{kl}
    PolyTensor raised = zero_poly_tensor({n, n, n}, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < n; ++l)
                    if (p.eta().inv(k, l) != 0) raised(i, j, l) += p.eta().inv(k, l) * d3(i, j, k);
    PolyTensor r = zero_poly_tensor({n, n, n, n}, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t m = 0; m < n; ++m) {
                if (m == j) continue;
                if (m < j) {
                    for (std::size_t q = 0; q < n; ++q) r(i, j, m, q) = -r(i, m, j, q);
                    continue;
                }
                for (std::size_t q = 0; q < n; ++q) {
                    Poly s(n);
                    for (std::size_t l = 0; l < n; ++l) {
                        s += raised(i, j, l) * d3(l, m, q);
                        s -= raised(i, m, l) * d3(l, j, q);
                    }
                    r(i, j, m, q) = std::move(s);
                }
            }
    return r;
}

struct FrobeniusReport {
    bool invariance = false;     // eta_{sk} c^s_{ij} totally symmetric
    bool commutativity = false;  // c^k_{ij} = c^k_{ji}
    bool potentiality = false;   // d_l A_{ijk} symmetric in all four indices
    bool associativity = false;  // WDVV residual vanishes
    PolyTensor wdvv;
    bool all_pass() const { return invariance && commutativity && potentiality && associativity; }
};

inline FrobeniusReport verify_frobenius_conditions(const Potential& p) {
    const std::size_t n = p.n();
    FrobeniusReport rep;
    PolyTensor c = structure_constants(p);
    // A_{ijk} = eta_{sk} c^s_{ij}
    PolyTensor a = zero_poly_tensor({n, n, n}, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t s = 0; s < n; ++s)
                    if (p.eta()(s, k) != 0) a(i, j, k) += p.eta()(s, k) * c(s, i, j);
    rep.commutativity = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (!(c(k, i, j) == c(k, j, i))) rep.commutativity = false;
    rep.invariance = true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                if (!(a(i, j, k) == a(j, i, k)) || !(a(i, j, k) == a(i, k, j))) rep.invariance = false;
    rep.potentiality = true;
    for (std::size_t i = 0; i < n && rep.potentiality; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < n; ++l)
                    if (!(a(i, j, k).derivative(l) == a(i, j, l).derivative(k))) rep.potentiality = false;
    rep.wdvv = wdvv_residual(p);
    rep.associativity = all_zero(rep.wdvv);
    return rep;
}

/// Constant vector e with c^k_{ij} e^i = delta^k_j identically in u, found by
/// matching polynomial coefficients; free directions are set to zero.
inline std::optional<std::vector<Rational>> find_unit(const Potential& p) {
    const std::size_t n = p.n();
    PolyTensor c = structure_constants(p);
    std::vector<std::vector<Rational>> rows;
    std::vector<Rational> rhs;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) {
            // Collect each monomial of sum_i c^k_{ij} e^i; the constant one must equal delta.
            std::map<Exponents, std::vector<Rational>, GradedLexOrder> eqs;
            eqs[Exponents(n, 0)] = std::vector<Rational>(n, Rational(0));
            for (std::size_t i = 0; i < n; ++i)
                for (const auto& [e, coef] : c(k, i, j).terms()) {
                    auto& row = eqs.try_emplace(e, std::vector<Rational>(n, Rational(0))).first->second;
                    row[i] += coef;
                }
            for (auto& [e, row] : eqs) {
                rhs.push_back(total_degree(e) == 0 && k == j ? Rational(1) : Rational(0));
                rows.push_back(std::move(row));
            }
        }
    RationalMatrix a(rows.size(), n);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t i = 0; i < n; ++i) a(r, i) = rows[r][i];
    return solve_linear_system(std::move(a), std::move(rhs));
}

/// For Phi = u1^2 u3 / 2 + u1 u2^2 / 2 + f(u2, u3) with antidiagonal eta, WDVV
/// reduces to f_333 - f_223^2 + f_222 f_233 = 0. `f` is a polynomial in three
/// variables that must not depend on u1.
inline Poly dubrovin_residual(const Poly& f) {
    if (f.n_vars() != 3) throw std::invalid_argument("Dubrovin residual needs a three-variable polynomial");
    if (!f.derivative(0).is_zero()) throw std::invalid_argument("f must depend only on u2 and u3");
    auto d = [&](std::size_t a, std::size_t b, std::size_t c) { return f.derivative(a).derivative(b).derivative(c); };
    Poly f223 = d(1, 1, 2);
    return d(2, 2, 2) - f223 * f223 + d(1, 1, 1) * d(1, 2, 2);
}

}  // namespace wdvv
