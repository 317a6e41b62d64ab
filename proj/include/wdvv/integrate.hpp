#pragma once

#include "matrix.hpp"
#include "poly.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdvv {

/// Raised when a polynomial form that must be exact is not closed. Carries
/// the first failing closedness residual and its (zero-based) indices.
class NotClosedError : public std::runtime_error {
public:
    NotClosedError(const std::string& what, std::vector<std::size_t> indices, Poly residual)
        : std::runtime_error(what), indices_(std::move(indices)), residual_(std::move(residual)) {}

    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    const Poly& residual() const noexcept { return residual_; }

private:
    std::vector<std::size_t> indices_;
    Poly residual_;
};

/// First nonzero closedness residual d omega_k/du^l - d omega_l/du^k of a
/// one-form, as (k, l, residual); nullopt when the form is closed.
struct ClosednessDefect {
    std::size_t k, l;
    Poly residual;
};

inline std::optional<ClosednessDefect> first_closedness_defect(const std::vector<Poly>& omega) {
    for (std::size_t k = 0; k < omega.size(); ++k)
        for (std::size_t l = k + 1; l < omega.size(); ++l) {
            Poly r = omega[k].derivative(l) - omega[l].derivative(k);
            if (!r.is_zero()) return ClosednessDefect{k, l, std::move(r)};
        }
    return std::nullopt;
}

/// Antisymmetric grid of closedness residuals of a one-form, row-major N x N.
inline std::vector<Poly> closedness_residuals(const std::vector<Poly>& omega) {
    const std::size_t n = omega.size();
    std::vector<Poly> out(n * n, Poly(omega.front().n_vars()));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l)
            if (k != l) out[k * n + l] = omega[k].derivative(l) - omega[l].derivative(k);
    return out;
}

/// Primitive h of a closed polynomial one-form with h(0) = 0, by the
/// straight-line homotopy h(u) = int_0^1 omega_k(tu) u^k dt: a term of degree
/// d in omega_k contributes coefficient / (d + 1) times the term times u^k.
inline Poly integrate_exact_one_form(const std::vector<Poly>& omega) {
    if (omega.empty()) throw std::invalid_argument("one-form has no components");
    const std::size_t n = omega.front().n_vars();
    if (omega.size() != n) throw std::invalid_argument("one-form length must equal the number of variables");
    for (const auto& w : omega)
        if (w.n_vars() != n) throw std::invalid_argument("one-form components disagree on variable count");
    if (auto defect = first_closedness_defect(omega))
        throw NotClosedError("one-form is not closed at components (" + std::to_string(defect->k + 1) + ", " +
                                 std::to_string(defect->l + 1) + ")",
                             {defect->k, defect->l}, std::move(defect->residual));
    Poly h(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (const auto& [e, c] : omega[k].terms()) {
            Exponents m = e;
            ++m[k];
            h.add_term(m, c / Rational(total_degree(e) + 1));
        }
    }
    return h;
}

/// h with Hessian M and h(0) = 0, grad h(0) = 0, from two one-form
/// integrations: first each row M_{j.} to a_j, then the one-form a.
inline Poly integrate_exact_two_form(const PolyMatrix& m) {
    if (m.rows() != m.cols() || m.rows() != m.n_vars())
        throw std::invalid_argument("two-form must be N x N in N variables");
    const std::size_t n = m.rows();
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
            Poly r = m(j, k) - m(k, j);
            if (!r.is_zero())
                throw NotClosedError("two-form is not symmetric at (" + std::to_string(j + 1) + ", " +
                                         std::to_string(k + 1) + ")",
                                     {j, k}, std::move(r));
        }
    std::vector<Poly> a;
    a.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<Poly> row;
        row.reserve(n);
        for (std::size_t k = 0; k < n; ++k) row.push_back(m(j, k));
        if (auto defect = first_closedness_defect(row))
            throw NotClosedError("row " + std::to_string(j + 1) + " of the two-form is not closed at (" +
                                     std::to_string(defect->k + 1) + ", " + std::to_string(defect->l + 1) + ")",
                                 {j, defect->k, defect->l}, std::move(defect->residual));
        a.push_back(integrate_exact_one_form(row));
    }
    return integrate_exact_one_form(a);
}

}  // namespace wdvv
