#pragma once

#include "integrate.hpp"
#include "matrix.hpp"
#include "poly.hpp"
#include "residual.hpp"
#include "submanifold.hpp"

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdvv {

/// Coefficients of a nonlocal operator of hydrodynamic type
///   g^{ij} d/dx + b^{ij}_k u^k_x + mu^{mn} (w_m)^i_k u^k_x (d/dx)^{-1} (w_n)^j_s u^s_x.
/// Affinor matrices store (w)^i_j at row i, column j; b(i, j, k) = b^{ij}_k.
struct GeneralHamOpData {
    PolyMatrix g;
    PolyTensor b;
    ConstSymMatrix mu_upper;
    std::vector<PolyMatrix> affinors;

    std::size_t n() const noexcept { return g.rows(); }
};

/// Flat-coordinate operator: constant contravariant metric eta^{ij}, b = 0.
struct FlatHamOp {
    ConstSymMatrix eta_upper;
    ConstSymMatrix mu_upper;
    std::vector<PolyMatrix> affinors;

    std::size_t n() const noexcept { return eta_upper.dim(); }

    GeneralHamOpData to_general() const {
        const std::size_t n = this->n();
        return {PolyMatrix::from_constant(eta_upper.matrix(), n), zero_poly_tensor({n, n, n}, n), mu_upper, affinors};
    }
};

/// u^i_t = A^i_j(u) u^j_x.
struct HydroFlow {
    PolyMatrix a;
    std::size_t n() const noexcept { return a.rows(); }
};

struct RelationResidual {
    std::string name;
    PolyTensor residual;
    bool pass() const { return all_zero(residual); }
};

struct RelationsReport {
    std::vector<RelationResidual> relations;
    bool all_pass() const {
        for (const auto& r : relations)
            if (!r.pass()) return false;
        return true;
    }
    const RelationResidual& operator[](const std::string& name) const {
        for (const auto& r : relations)
            if (r.name == name) return r;
        throw std::out_of_range("no relation named " + name);
    }
};

namespace detail {

inline void validate(const GeneralHamOpData& d) {
    const std::size_t n = d.n();
    if (d.g.cols() != n || d.g.n_vars() != n) throw std::invalid_argument("metric g must be N x N in N variables");
    if (d.b.shape() != std::vector<std::size_t>{n, n, n}) throw std::invalid_argument("b must be N x N x N");
    if (d.affinors.size() != d.mu_upper.dim()) throw std::invalid_argument("number of affinors must equal the size of mu");
    for (const auto& w : d.affinors)
        if (w.rows() != n || w.cols() != n || w.n_vars() != n) throw std::invalid_argument("affinor must be N x N in N variables");
}

/// (07) split into its left side (curvature of g, b) and right side (affinor part),
/// both indexed (i, j, k, r).
inline std::array<PolyTensor, 2> relation07_sides(const GeneralHamOpData& d) {
    const std::size_t n = d.n(), l = d.affinors.size();
    PolyTensor lhs = zero_poly_tensor({n, n, n, n}, n), rhs = zero_poly_tensor({n, n, n, n}, n);
    // gw(m, i, k) = g^{is} (w_m)^k_s
    PolyTensor gw = zero_poly_tensor({l, n, n}, n);
    for (std::size_t m = 0; m < l; ++m)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t s = 0; s < n; ++s)
                    if (!d.g(i, s).is_zero()) gw(m, i, k) += d.g(i, s) * d.affinors[m](k, s);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t r = 0; r < n; ++r) {
                    Poly left(n);
                    for (std::size_t s = 0; s < n; ++s) {
                        if (!d.g(i, s).is_zero())
                            left += d.g(i, s) * (d.b(j, k, s).derivative(r) - d.b(j, k, r).derivative(s));
                        left += d.b(i, j, s) * d.b(s, k, r) - d.b(i, k, s) * d.b(s, j, r);
                    }
                    Poly right(n);
                    for (std::size_t m = 0; m < l; ++m)
                        for (std::size_t q = 0; q < l; ++q) {
                            const Rational& c = d.mu_upper(m, q);
                            if (c == 0) continue;
                            // g^{is} ((w_m)^j_r (w_q)^k_s - (w_m)^j_s (w_q)^k_r)
                            Poly t = d.affinors[m](j, r) * gw(q, i, k);
                            for (std::size_t s = 0; s < n; ++s)
                                if (!d.g(i, s).is_zero()) t -= d.g(i, s) * d.affinors[m](j, s) * d.affinors[q](k, r);
                            right += c * t;
                        }
                    lhs(i, j, k, r) = std::move(left);
                    rhs(i, j, k, r) = std::move(right);
                }
    return {std::move(lhs), std::move(rhs)};
}

/// Relations (01)-(06) with index conventions
/// 01 (i,j); 02 (i,j,k); 03 (i,j,k); 04 (n,i,j); 05 (n,m,i,j); 06 (n,i,j,k).
inline std::vector<RelationResidual> relations_01_to_06(const GeneralHamOpData& d) {
    const std::size_t n = d.n(), l = d.affinors.size();
    const PolyMatrix& g = d.g;
    const PolyTensor& b = d.b;
    std::vector<RelationResidual> out;

    PolyTensor r01 = zero_poly_tensor({n, n}, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) r01(i, j) = g(i, j) - g(j, i);
    out.push_back({"01", std::move(r01)});

    PolyTensor r02 = zero_poly_tensor({n, n, n}, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) r02(i, j, k) = g(i, j).derivative(k) - b(i, j, k) - b(j, i, k);
    out.push_back({"02", std::move(r02)});

    PolyTensor r03 = zero_poly_tensor({n, n, n}, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                Poly s(n);
                for (std::size_t q = 0; q < n; ++q) s += g(i, q) * b(j, k, q) - g(j, q) * b(i, k, q);
                r03(i, j, k) = std::move(s);
            }
    out.push_back({"03", std::move(r03)});

    PolyTensor r04 = zero_poly_tensor({l, n, n}, n);
    for (std::size_t m = 0; m < l; ++m)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                Poly s(n);
                for (std::size_t q = 0; q < n; ++q)
                    s += g(i, q) * d.affinors[m](j, q) - g(j, q) * d.affinors[m](i, q);
                r04(m, i, j) = std::move(s);
            }
    out.push_back({"04", std::move(r04)});

    PolyTensor r05 = zero_poly_tensor({l, l, n, n}, n);
    for (std::size_t a = 0; a < l; ++a)
        for (std::size_t c = a + 1; c < l; ++c) {
            PolyMatrix k = commutator(d.affinors[a], d.affinors[c]);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    r05(a, c, i, j) = k(i, j);
                    r05(c, a, i, j) = -k(i, j);
                }
        }
    out.push_back({"05", std::move(r05)});

    // half(m, i, j, k) = g^{is} g^{jr} d_s (w_m)^k_r - g^{jr} b^{ik}_s (w_m)^s_r
    PolyTensor r06 = zero_poly_tensor({l, n, n, n}, n);
    for (std::size_t m = 0; m < l; ++m) {
        const PolyMatrix& w = d.affinors[m];
        std::vector<PolyMatrix> dw;
        for (std::size_t s = 0; s < n; ++s) dw.push_back(w.derivative(s));
        PolyTensor half = zero_poly_tensor({n, n, n}, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) {
                    Poly h(n);
                    for (std::size_t r = 0; r < n; ++r) {
                        if (g(j, r).is_zero()) continue;
                        Poly inner(n);
                        for (std::size_t s = 0; s < n; ++s) {
                            if (!g(i, s).is_zero()) inner += g(i, s) * dw[s](k, r);
                            inner -= b(i, k, s) * w(s, r);
                        }
                        h += g(j, r) * inner;
                    }
                    half(i, j, k) = std::move(h);
                }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) r06(m, i, j, k) = half(i, j, k) - half(j, i, k);
    }
    out.push_back({"06", std::move(r06)});
    return out;
}

}  // namespace detail

/// Relations (01)-(07) for the Hamiltonian property; (07) residual is
/// left side minus right side, indexed (i, j, k, r).
inline RelationsReport check_relations(const GeneralHamOpData& d) {
    detail::validate(d);
    RelationsReport rep{detail::relations_01_to_06(d)};
    auto sides = detail::relation07_sides(d);
    PolyTensor r07 = sides[0];
    auto out = r07.begin();
    for (auto it = sides[1].begin(); it != sides[1].end(); ++it, ++out) *out -= *it;
    rep.relations.push_back({"07", std::move(r07)});
    return rep;
}

inline RelationsReport check_relations(const FlatHamOp& h) { return check_relations(h.to_general()); }

/// Flat-metric pencil criterion: (01)-(06) and both sides of (07) vanish
/// separately ("07-left" is the curvature part, "07-right" the affinor part).
inline RelationsReport pencil_check(const FlatHamOp& h) {
    GeneralHamOpData d = h.to_general();
    detail::validate(d);
    RelationsReport rep{detail::relations_01_to_06(d)};
    auto sides = detail::relation07_sides(d);
    rep.relations.push_back({"07-left", std::move(sides[0])});
    rep.relations.push_back({"07-right", std::move(sides[1])});
    return rep;
}

/// (w_n)^i_j = eta^{is} d^2 psi_n / du^s du^j.
inline FlatHamOp affinors_from_psi(const PsiSystem& s) {
    std::vector<PolyMatrix> w;
    for (const auto& omega : second_forms(s)) w.push_back(s.eta().inverse_matrix() * omega);
    return {s.eta().inverse(), s.mu().inverse(), std::move(w)};
}

class NotExactError : public std::runtime_error {
public:
    NotExactError(std::string relation, std::size_t affinor, std::vector<std::size_t> indices, Poly residual)
        : std::runtime_error("affinor " + std::to_string(affinor + 1) + " violates exactness condition " + relation),
          relation_(std::move(relation)),
          affinor_(affinor),
          indices_(std::move(indices)),
          residual_(std::move(residual)) {}

    const std::string& relation() const noexcept { return relation_; }
    std::size_t affinor() const noexcept { return affinor_; }
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    const Poly& residual() const noexcept { return residual_; }

private:
    std::string relation_;
    std::size_t affinor_;
    std::vector<std::size_t> indices_;
    Poly residual_;
};

/// Recovers psi_n with Hessian eta_{is} (w_n)^s_j, normalized to vanish with
/// its gradient at the origin. Checks "06a" (d_s (w_n)^k_r symmetric in r, s)
/// and "04a" (eta_{is} (w_n)^s_j symmetric in i, j) first.
inline PsiSystem psi_from_affinors(const FlatHamOp& h) {
    const std::size_t n = h.n();
    ConstSymMatrix eta = h.eta_upper.inverse();
    std::vector<Poly> psi;
    for (std::size_t m = 0; m < h.affinors.size(); ++m) {
        const PolyMatrix& w = h.affinors[m];
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t s = r + 1; s < n; ++s) {
                    Poly res = w(k, r).derivative(s) - w(k, s).derivative(r);
                    if (!res.is_zero()) throw NotExactError("06a", m, {k, r, s}, std::move(res));
                }
        PolyMatrix hess = eta.matrix() * w;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                Poly res = hess(i, j) - hess(j, i);
                if (!res.is_zero()) throw NotExactError("04a", m, {i, j}, std::move(res));
            }
        psi.push_back(integrate_exact_two_form(hess));
    }
    return PsiSystem(std::move(eta), h.mu_upper.inverse(), std::move(psi));
}

inline std::vector<HydroFlow> structural_flows(const FlatHamOp& h) {
    std::vector<HydroFlow> flows;
    for (const auto& w : h.affinors) flows.push_back({w});
    return flows;
}

/// Jet ring for N fields: u^i at index i, u^i_x at N + i, u^i_xx at 2N + i.
inline std::vector<std::string> jet_variable_names(std::size_t n) {
    std::vector<std::string> names;
    for (const char* suffix : {"", "_x", "_xx"})
        for (std::size_t i = 1; i <= n; ++i) names.push_back("u" + std::to_string(i) + suffix);
    return names;
}

namespace detail {

/// Total x-derivative of a jet polynomial that involves only u and u_x.
inline Poly total_x_derivative(const Poly& p, std::size_t n) {
    Poly out(3 * n);
    for (std::size_t k = 0; k < n; ++k) {
        out += p.derivative(k) * Poly::variable(3 * n, n + k);
        out += p.derivative(n + k) * Poly::variable(3 * n, 2 * n + k);
    }
    return out;
}

/// Right-hand side A(u) u_x in the jet ring.
inline std::vector<Poly> flow_rhs(const HydroFlow& f) {
    const std::size_t n = f.n();
    std::vector<Poly> g(n, Poly(3 * n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (!f.a(i, j).is_zero()) g[i] += f.a(i, j).embed(3 * n) * Poly::variable(3 * n, n + j);
    return g;
}

/// Derivative of the evolution G along the evolution F (Frechet derivative of G applied to F).
inline std::vector<Poly> evolve_along(const std::vector<Poly>& g, const std::vector<Poly>& f, std::size_t n) {
    std::vector<Poly> dxf;
    for (const auto& fi : f) dxf.push_back(total_x_derivative(fi, n));
    std::vector<Poly> out(n, Poly(3 * n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            out[i] += g[i].derivative(k) * f[k];
            out[i] += g[i].derivative(n + k) * dxf[k];
        }
    return out;
}

}  // namespace detail

/// u_{t_A t_B} - u_{t_B t_A} in the jet ring (u, u_x, u_xx); shape {N}.
inline PolyTensor flows_commute_residual(const HydroFlow& a, const HydroFlow& b) {
    const std::size_t n = a.n();
    if (b.n() != n || a.a.cols() != n || b.a.cols() != n) throw std::invalid_argument("flows have different dimensions");
    auto ga = detail::flow_rhs(a), gb = detail::flow_rhs(b);
    auto ab = detail::evolve_along(ga, gb, n);
    auto ba = detail::evolve_along(gb, ga, n);
    PolyTensor r = zero_poly_tensor({n}, 3 * n);
    for (std::size_t i = 0; i < n; ++i) r(i) = ab[i] - ba[i];
    return r;
}

}  // namespace wdvv
