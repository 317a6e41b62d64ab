#pragma once

#include "frobenius.hpp"
#include "matrix.hpp"
#include "poly.hpp"
#include "rational.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdvv {

using Point = Eigen::VectorXd;
/// Vertices of a piecewise-linear path in u-space.
using Path = std::vector<Point>;

/// Raised when the integrated frame overflows; `arc` is the zero-based path segment.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(std::size_t arc, const std::string& what)
        : std::runtime_error("non-finite frame on arc " + std::to_string(arc + 1) + ": " + what), arc_(arc) {}
    std::size_t arc() const noexcept { return arc_; }

private:
    std::size_t arc_;
};

inline Eigen::MatrixXd to_eigen(const RationalMatrix& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = to_double(m(i, j));
    return out;
}

/// G = blockdiag(eta, eta / c) on the 2N-dimensional ambient space.
struct AmbientMetric {
    ConstSymMatrix exact;
    Eigen::MatrixXd numeric;

    static AmbientMetric for_potential(const ConstSymMatrix& eta, const Rational& c) {
        if (c == 0) throw std::invalid_argument("deformation parameter c must be nonzero");
        const std::size_t n = eta.dim();
        Rational inv_c = 1;
        inv_c /= c;
        RationalMatrix g(2 * n, 2 * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                g(i, j) = eta(i, j);
                g(n + i, n + j) = inv_c * eta(i, j);
            }
        ConstSymMatrix exact(std::move(g), "ambient metric");
        Eigen::MatrixXd numeric = to_eigen(exact.matrix());
        return {std::move(exact), std::move(numeric)};
    }

    std::size_t dim() const noexcept { return exact.dim(); }
    Inertia signature() const { return wdvv::signature(exact); }
};

/// Position r, normal-side vector n and their Jacobians R = dr/du, Nn = dn/du (2N x N).
struct Frame {
    Eigen::VectorXd r;
    Eigen::VectorXd n;
    Eigen::MatrixXd R;
    Eigen::MatrixXd Nn;

    double max_abs_difference(const Frame& o) const {
        return std::max({(r - o.r).cwiseAbs().maxCoeff(), (n - o.n).cwiseAbs().maxCoeff(),
                         (R - o.R).cwiseAbs().maxCoeff(), (Nn - o.Nn).cwiseAbs().maxCoeff()});
    }
    bool all_finite() const { return r.allFinite() && n.allFinite() && R.allFinite() && Nn.allFinite(); }
};

/// Max-abs residuals of R^T G R = eta, R^T G Nn = 0 and Nn^T G Nn = eta / c.
struct GramResiduals {
    double a = 0, b = 0, c = 0;
    double max() const { return std::max({a, b, c}); }
};

class EmbeddingProblem {
public:
    /// Validates dimensions and the Gram conditions at u0 (within 1e-12).
    EmbeddingProblem(Potential p, Rational c, Point u0, Frame initial)
        : p_(std::move(p)), c_(std::move(c)), u0_(std::move(u0)), initial_(std::move(initial)),
          metric_(AmbientMetric::for_potential(p_.eta(), c_)) {
        const auto n = static_cast<Eigen::Index>(p_.n());
        if (u0_.size() != n) throw std::invalid_argument("base point has the wrong dimension");
        if (initial_.r.size() != 2 * n || initial_.n.size() != 2 * n || initial_.R.rows() != 2 * n ||
            initial_.R.cols() != n || initial_.Nn.rows() != 2 * n || initial_.Nn.cols() != n)
            throw std::invalid_argument("initial frame has the wrong shape");
        if (!u0_.allFinite() || !initial_.all_finite()) throw std::invalid_argument("initial data must be finite");
        eta_ = to_eigen(p_.eta().matrix());
        if (gram_residuals(initial_).max() > 1e-12) throw std::invalid_argument("initial frame violates the Gram conditions");
    }

    const Potential& potential() const noexcept { return p_; }
    const Rational& c() const noexcept { return c_; }
    const Point& base_point() const noexcept { return u0_; }
    const Frame& initial() const noexcept { return initial_; }
    const AmbientMetric& metric() const noexcept { return metric_; }
    const Eigen::MatrixXd& eta() const noexcept { return eta_; }

    GramResiduals gram_residuals(const Frame& f) const {
        const Eigen::MatrixXd& g = metric_.numeric;
        double inv_c = 1.0 / to_double(c_);
        return {(f.R.transpose() * g * f.R - eta_).cwiseAbs().maxCoeff(),
                (f.R.transpose() * g * f.Nn).cwiseAbs().maxCoeff(),
                (f.Nn.transpose() * g * f.Nn - inv_c * eta_).cwiseAbs().maxCoeff()};
    }

private:
    Potential p_;
    Rational c_;
    Point u0_;
    Frame initial_;
    AmbientMetric metric_;
    Eigen::MatrixXd eta_;
};

/// r = n = 0 at u0, R and Nn the first and last N ambient basis vectors.
inline EmbeddingProblem default_initial_frame(const Potential& p, const Rational& c, const Point& u0) {
    if (c == 0) throw std::invalid_argument("deformation parameter c must be nonzero");
    const auto n = static_cast<Eigen::Index>(p.n());
    Frame f{Eigen::VectorXd::Zero(2 * n), Eigen::VectorXd::Zero(2 * n), Eigen::MatrixXd::Zero(2 * n, n),
            Eigen::MatrixXd::Zero(2 * n, n)};
    f.R.topRows(n).setIdentity();
    f.Nn.bottomRows(n).setIdentity();
    return EmbeddingProblem(p, c, u0, std::move(f));
}

namespace detail {

/// Classical RK4 for the frame equations along straight arcs.
class FrameStepper {
public:
    explicit FrameStepper(const EmbeddingProblem& e) : n_(e.potential().n()), c_(to_double(e.c())) {
        PolyTensor d3 = e.potential().third_derivatives();
        const ConstSymMatrix& eta = e.potential().eta();
        // k(i, j, l) = eta^{kl} Phi_{ijk}
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t l = 0; l < n_; ++l) {
                    Poly s(n_);
                    for (std::size_t k = 0; k < n_; ++k)
                        if (eta.inv(k, l) != 0) s += eta.inv(k, l) * d3(i, j, k);
                    k_.emplace_back(s);
                }
    }

    /// Integrates from `from` to `to` in ceil(|to - from| / step) equal steps.
    Frame arc(const Frame& start, const Point& from, const Point& to, double step, std::size_t arc_index) const {
        const Point du = to - from;
        const double len = du.norm();
        if (len == 0.0) return start;
        const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(len / step - 1e-9)));
        const double h = 1.0 / static_cast<double>(steps);
        Frame x = start;
        for (std::size_t s = 0; s < steps; ++s) {
            const double t = static_cast<double>(s) * h;
            Frame k1 = rhs(from + t * du, du, x);
            Frame k2 = rhs(from + (t + h / 2) * du, du, axpy(x, h / 2, k1));
            Frame k3 = rhs(from + (t + h / 2) * du, du, axpy(x, h / 2, k2));
            Frame k4 = rhs(from + (t + h) * du, du, axpy(x, h, k3));
            x.r += h / 6 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r);
            x.n += h / 6 * (k1.n + 2 * k2.n + 2 * k3.n + k4.n);
            x.R += h / 6 * (k1.R + 2 * k2.R + 2 * k3.R + k4.R);
            x.Nn += h / 6 * (k1.Nn + 2 * k2.Nn + 2 * k3.Nn + k4.Nn);
            if (!x.all_finite()) throw NonFiniteError(arc_index, "overflow after step " + std::to_string(s + 1));
        }
        return x;
    }

    /// Phi_{ijk}-contraction C(l, i) = sum_j du^j eta^{kl} Phi_{ijk}(u).
    Eigen::MatrixXd contraction(const Point& u, const Point& du) const {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n_, n_);
        std::span<const double> x(u.data(), n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) {
                if (du[j] == 0.0) continue;
                for (std::size_t l = 0; l < n_; ++l) c(l, i) += du[j] * k_[(i * n_ + j) * n_ + l](x);
            }
        return c;
    }

private:
    Frame rhs(const Point& u, const Point& du, const Frame& x) const {
        Eigen::MatrixXd c = contraction(u, du);
        return {x.R * du, x.Nn * du, c_ * x.Nn * c, -(x.R * c)};
    }

    static Frame axpy(const Frame& x, double a, const Frame& k) {
        return {x.r + a * k.r, x.n + a * k.n, x.R + a * k.R, x.Nn + a * k.Nn};
    }

    std::size_t n_;
    double c_;
    std::vector<NumericPoly> k_;
};

inline void require_points(const EmbeddingProblem& e, const Path& path, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("step must be positive");
    for (const auto& p : path) {
        if (p.size() != static_cast<Eigen::Index>(e.potential().n())) throw std::invalid_argument("path point has the wrong dimension");
        if (!p.allFinite()) throw std::invalid_argument("path point is not finite");
    }
}

}  // namespace detail

/// Frames at sampled u-points of one integration run. For grid samples,
/// `counts` holds the points per axis (row-major, last axis fastest) and, when
/// `stencil_offset` is set, `stencil[p][2j]` / `stencil[p][2j+1]` hold the frames
/// at u_p + offset e_j / u_p - offset e_j.
struct EmbeddingSample {
    std::vector<Point> points;
    std::vector<Frame> frames;
    double step = 0.0;
    std::vector<std::size_t> counts;
    double spacing = 0.0;
    std::optional<double> stencil_offset;
    std::vector<std::vector<Frame>> stencil;
};

/// Integrates from the base point through every vertex of `path` (the first
/// vertex is reached by a straight arc from the base point). The sample holds
/// the frame at each vertex.
inline EmbeddingSample integrate_along_path(const EmbeddingProblem& e, const Path& path, double step) {
    detail::require_points(e, path, step);
    detail::FrameStepper stepper(e);
    EmbeddingSample out;
    out.step = step;
    Frame x = e.initial();
    Point at = e.base_point();
    for (std::size_t k = 0; k < path.size(); ++k) {
        x = stepper.arc(x, at, path[k], step, k);
        at = path[k];
        out.points.push_back(at);
        out.frames.push_back(x);
    }
    return out;
}

/// Rectangular grid: counts[j] points along axis j, spaced `spacing`, centred at `center`.
struct GridSpec {
    Point center;
    double spacing = 0.05;
    std::vector<std::size_t> counts;
};

/// Samples a rectangular grid in one run along a boustrophedon path, so that
/// consecutive grid points are one spacing apart. With `stencil_offset`, short
/// side arcs from each grid point add the frames used for derivatives in
/// verify_fundamental_forms; otherwise grid neighbours are used.
inline EmbeddingSample sample_grid(const EmbeddingProblem& e, const GridSpec& g, double step,
                                   std::optional<double> stencil_offset = std::nullopt) {
    const std::size_t n = e.potential().n();
    if (g.counts.size() != n || g.center.size() != static_cast<Eigen::Index>(n)) throw std::invalid_argument("grid has the wrong dimension");
    if (!(g.spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
    if (stencil_offset && !(*stencil_offset > 0.0)) throw std::invalid_argument("stencil offset must be positive");
    std::size_t total = 1;
    for (auto c : g.counts) {
        if (c == 0) throw std::invalid_argument("grid axis needs at least one point");
        total *= c;
    }
    auto coordinate = [&](std::size_t axis, std::size_t idx) {
        return g.center[static_cast<Eigen::Index>(axis)] + (static_cast<double>(idx) - (static_cast<double>(g.counts[axis]) - 1) / 2) * g.spacing;
    };
    auto point_of = [&](const std::vector<std::size_t>& idx) {
        Point p(n);
        for (std::size_t j = 0; j < n; ++j) p[static_cast<Eigen::Index>(j)] = coordinate(j, idx[j]);
        return p;
    };
    auto flat = [&](const std::vector<std::size_t>& idx) {
        std::size_t f = 0;
        for (std::size_t j = 0; j < n; ++j) f = f * g.counts[j] + idx[j];
        return f;
    };

    // Reflected mixed-radix counting: each move changes one index by one.
    std::vector<std::vector<std::size_t>> order;
    std::vector<std::size_t> idx(n, 0);
    std::vector<int> dir(n, 1);
    order.push_back(idx);
    while (order.size() < total) {
        for (std::size_t j = n; j-- > 0;) {
            auto next = static_cast<long>(idx[j]) + dir[j];
            if (next >= 0 && next < static_cast<long>(g.counts[j])) {
                idx[j] = static_cast<std::size_t>(next);
                break;
            }
            dir[j] = -dir[j];
        }
        order.push_back(idx);
    }

    Path path;
    for (const auto& o : order) path.push_back(point_of(o));
    EmbeddingSample run = integrate_along_path(e, path, step);

    EmbeddingSample out;
    out.step = step;
    out.counts = g.counts;
    out.spacing = g.spacing;
    out.stencil_offset = stencil_offset;
    out.points.resize(total);
    out.frames.resize(total);
    for (std::size_t k = 0; k < total; ++k) {
        out.points[flat(order[k])] = run.points[k];
        out.frames[flat(order[k])] = run.frames[k];
    }
    if (stencil_offset) {
        detail::FrameStepper stepper(e);
        const double d = *stencil_offset;
        out.stencil.resize(total);
        for (std::size_t p = 0; p < total; ++p)
            for (std::size_t j = 0; j < n; ++j)
                for (double sign : {1.0, -1.0}) {
                    Point to = out.points[p];
                    to[static_cast<Eigen::Index>(j)] += sign * d;
                    out.stencil[p].push_back(stepper.arc(out.frames[p], out.points[p], to, std::min(step, d), p));
                }
    }
    return out;
}

struct FormViolation {
    std::size_t point = 0;
    char check = 'a';
    double residual = 0.0;
};

struct FormsReport {
    double max_a = 0, max_b = 0, max_c = 0, max_d = 0;
    std::vector<FormViolation> violations;
    bool passes() const { return violations.empty(); }
};

/// Checks (a)-(c) Gram conditions at every sampled point and, for grid samples,
/// (d) G(d^2 r / du^i du^j, Nn_beta) = Phi_{beta i j}(u) with d_j R by central
/// differences (stencil frames when present, grid neighbours otherwise).
inline FormsReport verify_fundamental_forms(const EmbeddingProblem& e, const EmbeddingSample& s, double tol) {
    FormsReport rep;
    auto note = [&](std::size_t p, char check, double v, double& max) {
        max = std::max(max, v);
        if (!(v <= tol)) rep.violations.push_back({p, check, v});
    };
    for (std::size_t p = 0; p < s.frames.size(); ++p) {
        GramResiduals g = e.gram_residuals(s.frames[p]);
        note(p, 'a', g.a, rep.max_a);
        note(p, 'b', g.b, rep.max_b);
        note(p, 'c', g.c, rep.max_c);
    }
    if (s.counts.empty()) return rep;

    const std::size_t n = e.potential().n();
    PolyTensor d3 = e.potential().third_derivatives();
    std::vector<NumericPoly> phi3;
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) phi3.emplace_back(d3(b, i, j));
    std::vector<std::size_t> stride(n, 1);
    for (std::size_t j = n - 1; j-- > 0;) stride[j] = stride[j + 1] * s.counts[j + 1];

    for (std::size_t p = 0; p < s.frames.size(); ++p) {
        std::span<const double> u(s.points[p].data(), n);
        for (std::size_t j = 0; j < n; ++j) {
            Eigen::MatrixXd dR;
            if (s.stencil_offset) {
                dR = (s.stencil[p][2 * j].R - s.stencil[p][2 * j + 1].R) / (2 * *s.stencil_offset);
            } else {
                if (s.counts[j] < 3) continue;
                const std::size_t at = (p / stride[j]) % s.counts[j];
                const double h = s.spacing;
                auto R = [&](long off) { return s.frames[static_cast<std::size_t>(static_cast<long>(p) + off * static_cast<long>(stride[j]))].R; };
                if (at == 0)
                    dR = (-3 * R(0) + 4 * R(1) - R(2)) / (2 * h);
                else if (at + 1 == s.counts[j])
                    dR = (3 * R(0) - 4 * R(-1) + R(-2)) / (2 * h);
                else
                    dR = (R(1) - R(-1)) / (2 * h);
            }
            // Column i of dR is d^2 r / du^i du^j.
            Eigen::MatrixXd second = dR.transpose() * e.metric().numeric * s.frames[p].Nn;
            double worst = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t b = 0; b < n; ++b)
                    worst = std::max(worst, std::abs(second(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) -
                                                     phi3[(b * n + i) * n + j](u)));
            note(p, 'd', worst, rep.max_d);
        }
    }
    return rep;
}

/// Largest Gram residual over the frames of a sample.
inline double gram_drift(const EmbeddingProblem& e, const EmbeddingSample& s) {
    double worst = 0.0;
    for (const auto& f : s.frames) worst = std::max(worst, e.gram_residuals(f).max());
    return worst;
}

/// Max-norm of the end-minus-start frame around a closed loop; the start frame
/// is obtained by integrating from the base point to the first loop vertex.
inline double loop_closure_test(const EmbeddingProblem& e, const Path& loop, double step) {
    if (loop.size() < 2) throw std::invalid_argument("loop needs at least two vertices");
    detail::require_points(e, loop, step);
    if ((loop.front() - loop.back()).cwiseAbs().maxCoeff() > 1e-12) throw std::invalid_argument("loop is not closed");
    EmbeddingSample s = integrate_along_path(e, loop, step);
    return s.frames.back().max_abs_difference(s.frames.front());
}

/// Square loop of side `side` in the (axis_a, axis_b) plane with lower corner `corner`.
inline Path square_loop(const Point& corner, std::size_t axis_a, std::size_t axis_b, double side) {
    Point p1 = corner, p2 = corner, p3 = corner;
    p1[static_cast<Eigen::Index>(axis_a)] += side;
    p2[static_cast<Eigen::Index>(axis_a)] += side;
    p2[static_cast<Eigen::Index>(axis_b)] += side;
    p3[static_cast<Eigen::Index>(axis_b)] += side;
    return {corner, p1, p2, p3, corner};
}

/// CSV rows: u components, r, n, then R and Nn flattened row-major.
inline void write_sample_csv(std::ostream& os, const EmbeddingSample& s) {
    if (s.frames.empty()) return;
    const auto n = s.points.front().size();
    const auto m = 2 * n;
    for (Eigen::Index i = 0; i < n; ++i) os << (i ? "," : "") << "u" << i + 1;
    for (Eigen::Index a = 0; a < m; ++a) os << ",r" << a + 1;
    for (Eigen::Index a = 0; a < m; ++a) os << ",n" << a + 1;
    for (const char* name : {"R", "Nn"})
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index i = 0; i < n; ++i) os << "," << name << "_" << a + 1 << "_" << i + 1;
    os << "\n";
    os.precision(17);
    for (std::size_t p = 0; p < s.frames.size(); ++p) {
        const Frame& f = s.frames[p];
        for (Eigen::Index i = 0; i < n; ++i) os << (i ? "," : "") << s.points[p][i];
        for (Eigen::Index a = 0; a < m; ++a) os << "," << f.r[a];
        for (Eigen::Index a = 0; a < m; ++a) os << "," << f.n[a];
        for (const Eigen::MatrixXd* mat : {&f.R, &f.Nn})
            for (Eigen::Index a = 0; a < m; ++a)
                for (Eigen::Index i = 0; i < n; ++i) os << "," << (*mat)(a, i);
        os << "\n";
    }
}

}  // namespace wdvv
