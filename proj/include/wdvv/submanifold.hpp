#pragma once

#include "frobenius.hpp"
#include "matrix.hpp"
#include "poly.hpp"
#include "residual.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace wdvv {

/// Flat torsionless submanifold data in flat coordinates: N coordinates,
/// L normal directions, covariant metrics eta_{ij} and mu_{ab} (inverses
/// cached), and one potential psi_a per normal direction.
class PsiSystem {
public:
    PsiSystem(ConstSymMatrix eta, ConstSymMatrix mu, std::vector<Poly> psi)
        : eta_(std::move(eta)), mu_(std::move(mu)), psi_(std::move(psi)) {
        if (psi_.size() != mu_.dim()) throw std::invalid_argument("number of psi functions must equal the size of mu");
        for (const auto& p : psi_)
            if (p.n_vars() != eta_.dim()) throw std::invalid_argument("psi function has the wrong number of variables");
    }

    std::size_t n() const noexcept { return eta_.dim(); }
    std::size_t l() const noexcept { return mu_.dim(); }
    const ConstSymMatrix& eta() const noexcept { return eta_; }
    const ConstSymMatrix& mu() const noexcept { return mu_; }
    const std::vector<Poly>& psi() const noexcept { return psi_; }

private:
    ConstSymMatrix eta_;
    ConstSymMatrix mu_;
    std::vector<Poly> psi_;
};

/// psi functions are identified up to affine terms, which no Hessian sees.
inline Poly normalize_psi(const Poly& psi) { return psi.strip_low_degree(1); }

/// omega_a = Hessian(psi_a).
inline std::vector<PolyMatrix> second_forms(const PsiSystem& s) {
    std::vector<PolyMatrix> out;
    out.reserve(s.l());
    for (const auto& p : s.psi()) out.push_back(hessian(p));
    return out;
}

namespace detail {

/// Entry (x, y, k, l) = sum_{ij} g^{ij} (w_{i,xk} w_{j,yl} - w_{i,xl} w_{j,yk}) in
/// `contract_normal` mode (the g-contraction runs over the normal index), or
/// sum_{ij} g^{ij} (w_{x,ik} w_{y,jl} - w_{x,il} w_{y,jk}) otherwise.
inline PolyTensor quadratic_form_residual(const std::vector<PolyMatrix>& w, const ConstSymMatrix& g, bool contract_normal) {
    const std::size_t n = w.front().rows();
    const std::size_t l = w.size();
    const std::size_t outer = contract_normal ? n : l;
    PolyTensor r = zero_poly_tensor({outer, outer, n, n}, n);
    auto entry = [&](std::size_t a, std::size_t x, std::size_t k) -> const Poly& {
        return contract_normal ? w[a](x, k) : w[x](a, k);
    };
    const std::size_t inner = contract_normal ? l : n;
    for (std::size_t x = 0; x < outer; ++x)
        for (std::size_t y = 0; y < outer; ++y)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t q = k + 1; q < n; ++q) {
                    Poly s(n);
                    for (std::size_t a = 0; a < inner; ++a)
                        for (std::size_t b = 0; b < inner; ++b) {
                            const Rational& c = g.inv(a, b);
                            if (c == 0) continue;
                            s += c * (entry(a, x, k) * entry(b, y, q) - entry(a, x, q) * entry(b, y, k));
                        }
                    r(x, y, q, k) = -s;
                    r(x, y, k, q) = std::move(s);
                }
    return r;
}

}  // namespace detail

/// Entry (i, j, k, l) = mu^{ab} (psi_{a,ik} psi_{b,jl} - psi_{a,il} psi_{b,jk}).
inline PolyTensor gauss_residual(const PsiSystem& s) {
    return detail::quadratic_form_residual(second_forms(s), s.mu(), true);
}

/// Entry (a, b, k, l) = eta^{ij} (psi_{a,ik} psi_{b,jl} - psi_{a,il} psi_{b,jk}).
inline PolyTensor ricci_residual(const PsiSystem& s) {
    return detail::quadratic_form_residual(second_forms(s), s.eta(), false);
}

inline bool solves_gauss_ricci(const PsiSystem& s) { return all_zero(gauss_residual(s)) && all_zero(ricci_residual(s)); }

/// L = N, mu^{ab} = c eta^{ab} (so mu_{ab} = eta_{ab} / c), psi_a = dPhi/du^a.
inline PsiSystem reduce_potential(const Potential& p, const Rational& c) {
    if (c == 0) throw std::invalid_argument("reduction parameter c must be nonzero");
    Rational inv_c = 1;
    inv_c /= c;
    return PsiSystem(p.eta(), p.eta().scaled(inv_c), gradient(p.phi()));
}

/// d omega_{a,ij} / du^k symmetric in (j, k); true identically for Hessians.
inline bool codazzi_check(const PsiSystem& s) {
    const std::size_t n = s.n();
    for (const auto& w : second_forms(s))
        for (std::size_t k = 0; k < n; ++k) {
            PolyMatrix d = w.derivative(k);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (!(d(i, j) == w(i, k).derivative(j))) return false;
        }
    return true;
}

/// Spectral parameters of the linear problem. An absent value keeps the
/// parameter as a polynomial variable.
struct LaxParams {
    std::optional<Rational> lambda;
    std::optional<Rational> rho;
};

/// Connection matrices and curvature of the first-order system for
/// Y = (da/du^1, ..., da/du^N, b_1, ..., b_L):
///   d_i (da/du^j) = lambda mu^{ab} omega_{a,ij} b_b,
///   d_i b_a      = rho eta^{kj} omega_{a,ij} da/du^k.
/// Polynomials live in N + 2 variables; index N is lambda, index N + 1 is rho.
struct LaxCurvature {
    std::size_t n = 0;
    std::vector<PolyMatrix> connection;  // M_i, i = 0..N-1
    std::vector<PolyMatrix> curvature;   // row-major N x N, entry i*N+j

    const PolyMatrix& at(std::size_t i, std::size_t j) const { return curvature.at(i * n + j); }

    bool is_zero() const {
        for (const auto& m : curvature)
            if (!m.is_zero()) return false;
        return true;
    }
};

inline std::vector<PolyMatrix> lax_connection(const PsiSystem& s, const LaxParams& params = {}) {
    const std::size_t n = s.n(), l = s.l(), nv = n + 2, dim = n + l;
    std::vector<PolyMatrix> omega = second_forms(s);
    Poly lambda = params.lambda ? Poly::constant(nv, *params.lambda) : Poly::variable(nv, n);
    Poly rho = params.rho ? Poly::constant(nv, *params.rho) : Poly::variable(nv, n + 1);
    std::vector<PolyMatrix> m;
    for (std::size_t i = 0; i < n; ++i) {
        PolyMatrix mi(dim, dim, nv);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t b = 0; b < l; ++b) {
                Poly e(n);
                for (std::size_t a = 0; a < l; ++a)
                    if (s.mu().inv(a, b) != 0) e += s.mu().inv(a, b) * omega[a](i, j);
                mi(j, n + b) = lambda * e.embed(nv);
            }
        for (std::size_t a = 0; a < l; ++a)
            for (std::size_t k = 0; k < n; ++k) {
                Poly e(n);
                for (std::size_t j = 0; j < n; ++j)
                    if (s.eta().inv(k, j) != 0) e += s.eta().inv(k, j) * omega[a](i, j);
                mi(n + a, k) = rho * e.embed(nv);
            }
        m.push_back(std::move(mi));
    }
    return m;
}

/// Compatibility of Y_i = M_i Y: d_i M_j - d_j M_i + M_j M_i - M_i M_j = 0.
inline LaxCurvature zero_curvature_residual(const PsiSystem& s, const LaxParams& params = {}) {
    LaxCurvature out;
    out.n = s.n();
    out.connection = lax_connection(s, params);
    const std::size_t n = s.n();
    const auto& m = out.connection;
    const PolyMatrix zero(m.front().rows(), m.front().cols(), m.front().n_vars());
    out.curvature.assign(n * n, zero);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            PolyMatrix f = m[j].derivative(i) - m[i].derivative(j) + m[j] * m[i] - m[i] * m[j];
            PolyMatrix neg = Rational(-1) * f;
            out.curvature[i * n + j] = std::move(f);
            out.curvature[j * n + i] = std::move(neg);
        }
    return out;
}

}  // namespace wdvv
