#pragma once

#include "frobenius.hpp"
#include "hamop.hpp"
#include "integrate.hpp"
#include "matrix.hpp"
#include "residual.hpp"
#include "submanifold.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdvv {

/// Raised when a construction that presupposes a solution of the Gauss and
/// Ricci equations is handed a system that violates them.
class NotASolutionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// F_n = (d psi_n / du^j) u^j - psi_n.
inline std::vector<Poly> legendre_F(const PsiSystem& s) {
    const std::size_t n = s.n();
    std::vector<Poly> out;
    for (const auto& p : s.psi()) {
        Poly f = -p;
        for (std::size_t j = 0; j < n; ++j) f += p.derivative(j) * Poly::variable(n, j);
        out.push_back(std::move(f));
    }
    return out;
}

namespace detail {

inline void require_density(const PsiSystem& s, const Poly& h) {
    if (h.n_vars() != s.n()) throw std::invalid_argument("density has the wrong number of variables");
}

/// One-form sigma_p = psi_{n,jp} eta^{jr} v_r for a covector field v.
inline std::vector<Poly> contracted_form(const PolyMatrix& hess, const ConstSymMatrix& eta, const std::vector<Poly>& v) {
    const std::size_t n = hess.rows();
    std::vector<Poly> raised(n, Poly(hess.n_vars()));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t r = 0; r < n; ++r)
            if (eta.inv(j, r) != 0) raised[j] += eta.inv(j, r) * v[r];
    std::vector<Poly> form(n, Poly(hess.n_vars()));
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t j = 0; j < n; ++j)
            if (!hess(j, p).is_zero() && !raised[j].is_zero()) form[p] += hess(j, p) * raised[j];
    return form;
}

}  // namespace detail

/// F_n^{(s)} with dF_n / du^p = psi_{n,jp} eta^{jr} dh/du^r and F_n(0) = 0.
/// Throws NotClosedError when h violates the locality condition.
inline std::vector<Poly> lift_density(const PsiSystem& s, const Poly& h) {
    detail::require_density(s, h);
    std::vector<Poly> grad = gradient(h);
    std::vector<Poly> out;
    for (const auto& omega : second_forms(s)) out.push_back(integrate_exact_one_form(detail::contracted_form(omega, s.eta(), grad)));
    return out;
}

/// The symmetric matrix sum_{mn} mu^{mn} psi_{m,jk} F_n.
inline PolyMatrix recursion_hessian(const PsiSystem& s, const std::vector<Poly>& f_lift) {
    if (f_lift.size() != s.l()) throw std::invalid_argument("need one lifted density per psi function");
    const std::size_t n = s.n();
    std::vector<PolyMatrix> omega = second_forms(s);
    PolyMatrix m(n, n, n);
    for (std::size_t a = 0; a < s.l(); ++a) {
        Poly weight(n);
        for (std::size_t b = 0; b < s.l(); ++b)
            if (s.mu().inv(a, b) != 0) weight += s.mu().inv(a, b) * f_lift[b];
        if (!weight.is_zero()) m += weight * omega[a];
    }
    return m;
}

/// h_{s+1} with Hessian sum mu^{mn} psi_{m,jk} F_n^{(s)}, vanishing with its
/// gradient at the origin.
inline Poly next_density(const PsiSystem& s, const std::vector<Poly>& f_lift) {
    return integrate_exact_two_form(recursion_hessian(s, f_lift));
}

/// A^i_k = sum_{mn} mu^{mn} eta^{ip} F_n psi_{m,pk}: the local flow generated at one level.
inline HydroFlow hierarchy_flow(const PsiSystem& s, const std::vector<Poly>& f_lift) {
    return {s.eta().inverse_matrix() * recursion_hessian(s, f_lift)};
}

struct HierarchyLevel {
    std::size_t s = 0;
    Poly h;
    std::vector<Poly> f_lift;
    HydroFlow flow;
    Poly h_next;
};

/// h_1 = eta_{ij} u^i u^j / 2.
inline Poly flat_metric_density(const ConstSymMatrix& eta) {
    return integrate_exact_two_form(PolyMatrix::from_constant(eta.matrix(), eta.dim()));
}

/// Levels s = 1..depth of the recursion h_s -> F^{(s)} -> h_{s+1} starting at
/// h_1 = eta_{ij} u^i u^j / 2. Refuses systems that violate the Gauss or Ricci
/// equations.
inline std::vector<HierarchyLevel> build_hierarchy(const PsiSystem& s, std::size_t depth) {
    if (depth == 0) throw std::invalid_argument("hierarchy depth must be at least 1");
    if (!all_zero(gauss_residual(s))) throw NotASolutionError("psi system violates the Gauss equations");
    if (!all_zero(ricci_residual(s))) throw NotASolutionError("psi system violates the Ricci equations");
    std::vector<HierarchyLevel> levels;
    Poly h = flat_metric_density(s.eta());
    for (std::size_t level = 1; level <= depth; ++level) {
        std::vector<Poly> f = lift_density(s, h);
        HydroFlow flow = hierarchy_flow(s, f);
        Poly next = next_density(s, f);
        levels.push_back({level, h, std::move(f), std::move(flow), next});
        h = std::move(next);
    }
    return levels;
}

struct LocalityReport {
    bool passes = false;
    PolyTensor residual;  // (n, s, p)
    std::optional<std::vector<Poly>> p_densities;
    std::optional<Poly> f_density;
};

/// Locality residual psi_{n,js} eta^{jr} h_{rp} - psi_{n,jp} eta^{jr} h_{rs};
/// when it vanishes, also the densities P_n and the second-bracket
/// Hamiltonian density f. Throws NotClosedError if f cannot be integrated,
/// which requires a system violating the Gauss equations.
inline LocalityReport check_locality(const PsiSystem& s, const Poly& h) {
    detail::require_density(s, h);
    const std::size_t n = s.n();
    PolyMatrix hh = hessian(h);
    std::vector<PolyMatrix> omega = second_forms(s);
    LocalityReport rep;
    rep.residual = zero_poly_tensor({s.l(), n, n}, n);
    for (std::size_t a = 0; a < s.l(); ++a) {
        // t(s, p) = psi_{a,js} eta^{jr} h_{rp}
        PolyMatrix t = omega[a] * (s.eta().inverse_matrix() * hh);
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t p = 0; p < n; ++p) rep.residual(a, x, p) = t(x, p) - t(p, x);
    }
    rep.passes = all_zero(rep.residual);
    if (rep.passes) {
        rep.p_densities = lift_density(s, h);
        rep.f_density = next_density(s, *rep.p_densities);
    }
    return rep;
}

namespace detail {

/// Closedness residual (k, l) of sigma_k = (d a / du^i) eta^{ij} (d^2 b / du^j du^k).
inline PolyTensor involution_form_residual(const Poly& a, const Poly& b, const ConstSymMatrix& eta) {
    const std::size_t n = a.n_vars();
    std::vector<Poly> form = contracted_form(hessian(b), eta, gradient(a));
    PolyTensor r = zero_poly_tensor({n, n}, n);
    std::vector<Poly> res = closedness_residuals(form);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) r(k, l) = std::move(res[k * n + l]);
    return r;
}

}  // namespace detail

/// Involution of the integrals of psi_n and psi_m under the constant bracket:
/// closedness residual (k, l) of psi_{n,i} eta^{ij} psi_{m,jk} du^k.
inline PolyTensor involution_residual_constant_bracket(const PsiSystem& s, std::size_t n, std::size_t m) {
    if (n >= s.l() || m >= s.l()) throw std::out_of_range("psi index out of range");
    return detail::involution_form_residual(s.psi()[n], s.psi()[m], s.eta());
}

/// Same closedness residual for the densities dPhi/du^n, indexed (n, m, k, l).
inline PolyTensor involution_wdvv_integrals(const Potential& p) {
    const std::size_t n = p.n();
    std::vector<Poly> g = gradient(p.phi());
    PolyTensor r = zero_poly_tensor({n, n, n, n}, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            PolyTensor one = detail::involution_form_residual(g[a], g[b], p.eta());
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < n; ++l) r(a, b, k, l) = std::move(one(k, l));
        }
    return r;
}

/// Residual (n, k, l) = Phi_{ki} eta^{ij} Phi_{jnl} - Phi_{li} eta^{ij} Phi_{jnk}.
inline PolyTensor check_eq10(const Potential& p) {
    const std::size_t n = p.n();
    PolyMatrix h = hessian(p.phi());
    PolyTensor d3 = p.third_derivatives();
    // t(n, k, l) = Phi_{ki} eta^{ij} Phi_{jnl}
    PolyTensor t = zero_poly_tensor({n, n, n}, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) {
            Poly raised(n);
            for (std::size_t i = 0; i < n; ++i)
                if (p.eta().inv(i, j) != 0) raised += p.eta().inv(i, j) * h(k, i);
            if (raised.is_zero()) continue;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t l = 0; l < n; ++l) t(a, k, l) += raised * d3(j, a, l);
        }
    PolyTensor r = zero_poly_tensor({n, n, n}, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l) r(a, k, l) = t(a, k, l) - t(a, l, k);
    return r;
}

/// Closedness residual (n, k, l) of Phi_i eta^{ij} Phi_{njk} du^k, the
/// involution condition of the functional of Phi with those of dPhi/du^n.
inline PolyTensor functional_involution_residual(const Potential& p) {
    const std::size_t n = p.n();
    std::vector<Poly> g = gradient(p.phi());
    PolyTensor r = zero_poly_tensor({n, n, n}, n);
    for (std::size_t a = 0; a < n; ++a) {
        PolyTensor one = detail::involution_form_residual(p.phi(), g[a], p.eta());
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l) r(a, k, l) = std::move(one(k, l));
    }
    return r;
}

}  // namespace wdvv
