#pragma once

#include "hamop.hpp"
#include "poly.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdvv {

/// Periodic grid of m nodes x_j = j * length / m.
class Grid1D {
public:
    explicit Grid1D(std::size_t m, double length = 2 * std::numbers::pi) : m_(m), length_(length) {
        if (m < 16) throw std::invalid_argument("grid needs at least 16 points");
        if (!(length > 0.0) || !std::isfinite(length)) throw std::invalid_argument("domain length must be positive");
    }
    std::size_t m() const noexcept { return m_; }
    double length() const noexcept { return length_; }
    double dx() const noexcept { return length_ / static_cast<double>(m_); }
    double x(std::size_t j) const noexcept { return static_cast<double>(j) * dx(); }

private:
    std::size_t m_;
    double length_;
};

/// values(j, i) = u^{i+1} at node j.
struct FieldState {
    Eigen::MatrixXd values;
    double time = 0.0;
};

struct SimConfig {
    double dt = 1e-3;
    double t_end = 0.1;
    std::size_t record_every = 1;  // in time steps; first and last states are always kept
    double blowup_threshold = 1e6;
    double filter_strength = 0.0;  // fourth-difference filter applied after each step; 0 disables it
};

class BlowUpError : public std::runtime_error {
public:
    BlowUpError(double time, std::vector<FieldState> partial)
        : std::runtime_error("blow-up at t = " + std::to_string(time)), time_(time), partial_(std::move(partial)) {}
    double time() const noexcept { return time_; }
    const std::vector<FieldState>& partial() const noexcept { return partial_; }

private:
    double time_;
    std::vector<FieldState> partial_;
};

/// u^i = amplitude * sin(x + phase_i) on every component.
inline FieldState sine_state(const Grid1D& g, const std::vector<double>& phases, double amplitude) {
    FieldState s{Eigen::MatrixXd(g.m(), phases.size()), 0.0};
    for (std::size_t j = 0; j < g.m(); ++j)
        for (std::size_t i = 0; i < phases.size(); ++i)
            s.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = amplitude * std::sin(g.x(j) + phases[i]);
    return s;
}

/// Fourth-order central derivative of each column on the periodic grid.
inline Eigen::MatrixXd periodic_derivative(const Eigen::MatrixXd& u, double dx) {
    const Eigen::Index m = u.rows();
    Eigen::MatrixXd d(m, u.cols());
    for (Eigen::Index j = 0; j < m; ++j) {
        auto at = [&](Eigen::Index k) { return u.row((j + k + m) % m); };
        d.row(j) = (8 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12 * dx);
    }
    return d;
}

namespace detail {

class FlowRhs {
public:
    explicit FlowRhs(const HydroFlow& f) : n_(f.a.rows()) {
        if (f.a.rows() != f.a.cols() || f.a.n_vars() != n_) throw std::invalid_argument("flow matrix must be N x N over N variables");
        for (const auto& e : f.a) a_.emplace_back(e);
    }
    std::size_t n() const noexcept { return n_; }

    Eigen::MatrixXd operator()(const Eigen::MatrixXd& u, double dx) const {
        Eigen::MatrixXd ux = periodic_derivative(u, dx);
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.rows(), u.cols());
        std::vector<double> node(n_);
        for (Eigen::Index j = 0; j < u.rows(); ++j) {
            for (std::size_t i = 0; i < n_; ++i) node[i] = u(j, static_cast<Eigen::Index>(i));
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t k = 0; k < n_; ++k) {
                    const NumericPoly& p = a_[i * n_ + k];
                    if (!p.is_zero()) out(j, static_cast<Eigen::Index>(i)) += p(node) * ux(j, static_cast<Eigen::Index>(k));
                }
        }
        return out;
    }

    /// max over nodes of the largest absolute row sum of A(u).
    double max_speed(const Eigen::MatrixXd& u) const {
        double worst = 0.0;
        std::vector<double> node(n_);
        for (Eigen::Index j = 0; j < u.rows(); ++j) {
            for (std::size_t i = 0; i < n_; ++i) node[i] = u(j, static_cast<Eigen::Index>(i));
            for (std::size_t i = 0; i < n_; ++i) {
                double row = 0.0;
                for (std::size_t k = 0; k < n_; ++k) row += std::abs(a_[i * n_ + k](node));
                worst = std::max(worst, row);
            }
        }
        return worst;
    }

private:
    std::size_t n_;
    std::vector<NumericPoly> a_;
};

inline void apply_filter(Eigen::MatrixXd& u, double strength) {
    const Eigen::Index m = u.rows();
    Eigen::MatrixXd d4(m, u.cols());
    for (Eigen::Index j = 0; j < m; ++j) {
        auto at = [&](Eigen::Index k) { return u.row((j + k + m) % m); };
        d4.row(j) = at(-2) - 4 * at(-1) + 6 * at(0) - 4 * at(1) + at(2);
    }
    u -= strength / 16 * d4;
}

}  // namespace detail

/// Advisory step bound dx / (10 max|A|); infinite for the zero flow.
inline double cfl_limit(const HydroFlow& flow, const FieldState& s, const Grid1D& g) {
    double speed = detail::FlowRhs(flow).max_speed(s.values);
    return speed == 0.0 ? INFINITY : g.dx() / (10 * speed);
}

/// RK4 in time with fourth-order central differences in x. The step count is
/// ceil(t_end / dt) and the step is shrunk to land on t_end exactly. Throws
/// BlowUpError, carrying the states recorded so far, once any value exceeds
/// the threshold or stops being finite.
inline std::vector<FieldState> simulate_flow(const HydroFlow& flow, const FieldState& init, const Grid1D& grid, const SimConfig& cfg) {
    detail::FlowRhs rhs(flow);
    if (init.values.rows() != static_cast<Eigen::Index>(grid.m())) throw std::invalid_argument("state does not match the grid");
    if (init.values.cols() != static_cast<Eigen::Index>(rhs.n())) throw std::invalid_argument("state does not match the flow dimension");
    if (!init.values.allFinite()) throw std::invalid_argument("initial state is not finite");
    if (!(cfg.dt > 0.0) || !(cfg.t_end >= 0.0) || cfg.record_every == 0) throw std::invalid_argument("bad time-stepping configuration");
    if (cfg.filter_strength < 0.0 || cfg.filter_strength > 1.0) throw std::invalid_argument("filter strength must lie in [0, 1]");

    const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
    const double dt = steps ? cfg.t_end / static_cast<double>(steps) : 0.0;
    const double dx = grid.dx();
    std::vector<FieldState> out{init};
    Eigen::MatrixXd u = init.values;
    for (std::size_t s = 1; s <= steps; ++s) {
        Eigen::MatrixXd k1 = rhs(u, dx);
        Eigen::MatrixXd k2 = rhs(u + dt / 2 * k1, dx);
        Eigen::MatrixXd k3 = rhs(u + dt / 2 * k2, dx);
        Eigen::MatrixXd k4 = rhs(u + dt * k3, dx);
        u += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (cfg.filter_strength > 0.0) detail::apply_filter(u, cfg.filter_strength);
        const double t = init.time + static_cast<double>(s) * dt;
        if (!u.allFinite() || u.cwiseAbs().maxCoeff() > cfg.blowup_threshold) throw BlowUpError(t, std::move(out));
        if (s % cfg.record_every == 0 || s == steps) out.push_back({u, t});
    }
    return out;
}

/// Rectangle rule (exact trapezoid on a periodic grid) for the integral of density(u(x)).
inline double functional_value(const Poly& density, const FieldState& s, const Grid1D& g) {
    if (density.n_vars() != static_cast<std::size_t>(s.values.cols())) throw std::invalid_argument("density has the wrong number of variables");
    NumericPoly p(density);
    std::vector<double> node(density.n_vars());
    double sum = 0.0;
    for (Eigen::Index j = 0; j < s.values.rows(); ++j) {
        for (std::size_t i = 0; i < node.size(); ++i) node[i] = s.values(j, static_cast<Eigen::Index>(i));
        sum += p(node);
    }
    return sum * g.dx();
}

/// Per density: max over the trajectory of |H(t) - H(0)| / max(1, |H(0)|).
inline std::vector<double> conservation_report(const std::vector<FieldState>& traj, const std::vector<Poly>& densities, const Grid1D& g) {
    std::vector<double> drift(densities.size(), 0.0);
    if (traj.empty()) return drift;
    for (std::size_t d = 0; d < densities.size(); ++d) {
        const double h0 = functional_value(densities[d], traj.front(), g);
        for (const auto& s : traj) drift[d] = std::max(drift[d], std::abs(functional_value(densities[d], s, g) - h0) / std::max(1.0, std::abs(h0)));
    }
    return drift;
}

/// CSV rows: time, node, u components.
inline void write_trajectory_csv(std::ostream& os, const std::vector<FieldState>& traj) {
    if (traj.empty()) return;
    os << "time,node";
    for (Eigen::Index i = 0; i < traj.front().values.cols(); ++i) os << ",u" << i + 1;
    os << "\n";
    os.precision(17);
    for (const auto& s : traj)
        for (Eigen::Index j = 0; j < s.values.rows(); ++j) {
            os << s.time << "," << j;
            for (Eigen::Index i = 0; i < s.values.cols(); ++i) os << "," << s.values(j, i);
            os << "\n";
        }
}

}  // namespace wdvv
