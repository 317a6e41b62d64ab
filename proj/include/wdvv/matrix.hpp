#pragma once

#include "poly.hpp"
#include "rational.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wdvv {

class SingularMatrixError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense matrix of exact rationals.
class RationalMatrix {
public:
    RationalMatrix() = default;
    RationalMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, Rational(0)) {}

    static RationalMatrix identity(std::size_t n) {
        RationalMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    Rational& operator()(std::size_t i, std::size_t j) { return data_.at(i * cols_ + j); }
    const Rational& operator()(std::size_t i, std::size_t j) const { return data_.at(i * cols_ + j); }

    RationalMatrix transpose() const {
        RationalMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool is_symmetric() const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                if ((*this)(i, j) != (*this)(j, i)) return false;
        return true;
    }

    friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product: shape mismatch");
        RationalMatrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                if (a(i, k) == 0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += a(i, k) * b(k, j);
            }
        return c;
    }

    friend RationalMatrix operator*(const Rational& s, RationalMatrix m) {
        for (auto& x : m.data_) x *= s;
        return m;
    }

    friend bool operator==(const RationalMatrix& a, const RationalMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Rational> data_;
};

/// Gauss-Jordan inverse; throws SingularMatrixError naming `what`.
inline RationalMatrix inverse(const RationalMatrix& m, const std::string& what = "matrix") {
    if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument(what + " is not square");
    const std::size_t n = m.rows();
    RationalMatrix a = m;
    RationalMatrix inv = RationalMatrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && a(pivot, col) == 0) ++pivot;
        if (pivot == n) throw SingularMatrixError(what + " is singular");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(pivot, j), a(col, j));
                std::swap(inv(pivot, j), inv(col, j));
            }
        }
        Rational p = a(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            a(col, j) /= p;
            inv(col, j) /= p;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || a(r, col) == 0) continue;
            Rational f = a(r, col);
            for (std::size_t j = 0; j < n; ++j) {
                a(r, j) -= f * a(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

struct Inertia {
    std::size_t positive = 0;
    std::size_t negative = 0;
    friend bool operator==(const Inertia&, const Inertia&) = default;
};

/// Sylvester inertia by exact congruence diagonalization. Zero pivots are
/// repaired by a row/column swap or, when the whole remaining diagonal is
/// zero, by adding a row/column with a nonzero off-diagonal entry.
inline Inertia inertia(const RationalMatrix& m, const std::string& what = "matrix") {
    if (!m.is_symmetric()) throw std::invalid_argument(what + " is not symmetric");
    const std::size_t n = m.rows();
    RationalMatrix a = m;
    Inertia out;
    auto add_row_col = [&](std::size_t dst, std::size_t src) {
        for (std::size_t j = 0; j < n; ++j) a(dst, j) += a(src, j);
        for (std::size_t i = 0; i < n; ++i) a(i, dst) += a(i, src);
    };
    auto swap_row_col = [&](std::size_t x, std::size_t y) {
        for (std::size_t j = 0; j < n; ++j) std::swap(a(x, j), a(y, j));
        for (std::size_t i = 0; i < n; ++i) std::swap(a(i, x), a(i, y));
    };
    for (std::size_t k = 0; k < n; ++k) {
        if (a(k, k) == 0) {
            std::size_t d = k + 1;
            while (d < n && a(d, d) == 0) ++d;
            if (d < n) {
                swap_row_col(k, d);
            } else {
                std::size_t j = k + 1;
                while (j < n && a(k, j) == 0) ++j;
                if (j == n) throw SingularMatrixError(what + " is singular");
                // a(k,k) becomes 2 a(k,j) + a(j,j) = 2 a(k,j) != 0
                add_row_col(k, j);
            }
        }
        const Rational p = a(k, k);
        for (std::size_t r = k + 1; r < n; ++r) {
            if (a(r, k) == 0) continue;
            Rational f = a(r, k) / p;
            for (std::size_t j = k; j < n; ++j) a(r, j) -= f * a(k, j);
            for (std::size_t i = k; i < n; ++i) a(i, r) -= f * a(i, k);
        }
        if (p > 0)
            ++out.positive;
        else
            ++out.negative;
    }
    return out;
}

/// Constant symmetric nondegenerate matrix with its exact inverse cached.
/// Holds a metric in one index position; `inverse()` gives the other.
class ConstSymMatrix {
public:
    explicit ConstSymMatrix(RationalMatrix m, const std::string& what = "matrix") : m_(std::move(m)) {
        if (m_.rows() == 0 || m_.rows() != m_.cols()) throw std::invalid_argument(what + " must be square and nonempty");
        if (!m_.is_symmetric()) throw std::invalid_argument(what + " is not symmetric");
        inv_ = wdvv::inverse(m_, what);
    }

    static ConstSymMatrix identity(std::size_t n) { return ConstSymMatrix(RationalMatrix::identity(n)); }

    static ConstSymMatrix antidiagonal_ones(std::size_t n) {
        RationalMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, n - 1 - i) = 1;
        return ConstSymMatrix(std::move(m));
    }

    std::size_t dim() const noexcept { return m_.rows(); }
    const Rational& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    /// Entry (i, j) of the inverse matrix.
    const Rational& inv(std::size_t i, std::size_t j) const { return inv_(i, j); }
    const RationalMatrix& matrix() const noexcept { return m_; }
    const RationalMatrix& inverse_matrix() const noexcept { return inv_; }

    ConstSymMatrix inverse() const { return ConstSymMatrix(inv_, m_); }

    ConstSymMatrix scaled(const Rational& s) const {
        if (s == 0) throw SingularMatrixError("scaling a metric by zero");
        Rational r = 1;
        r /= s;
        return ConstSymMatrix(s * m_, r * inv_);
    }

    friend bool operator==(const ConstSymMatrix& a, const ConstSymMatrix& b) { return a.m_ == b.m_; }

private:
    ConstSymMatrix(RationalMatrix m, RationalMatrix inv) : m_(std::move(m)), inv_(std::move(inv)) {}

    RationalMatrix m_;
    RationalMatrix inv_;
};

inline ConstSymMatrix matrix_inverse_exact(const ConstSymMatrix& m) { return m.inverse(); }

inline Inertia signature(const ConstSymMatrix& m) { return inertia(m.matrix()); }

/// Solves A x = b over Q. Free variables are set to zero; returns nullopt
/// when the system is inconsistent.
inline std::optional<std::vector<Rational>> solve_linear_system(RationalMatrix a, std::vector<Rational> b) {
    if (b.size() != a.rows()) throw std::invalid_argument("linear system: right-hand side length mismatch");
    const std::size_t rows = a.rows(), cols = a.cols();
    std::vector<std::size_t> pivot_cols;
    std::size_t r = 0;
    for (std::size_t col = 0; col < cols && r < rows; ++col) {
        std::size_t p = r;
        while (p < rows && a(p, col) == 0) ++p;
        if (p == rows) continue;
        if (p != r) {
            for (std::size_t j = 0; j < cols; ++j) std::swap(a(p, j), a(r, j));
            std::swap(b[p], b[r]);
        }
        Rational piv = a(r, col);
        for (std::size_t j = col; j < cols; ++j) a(r, j) /= piv;
        b[r] /= piv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || a(i, col) == 0) continue;
            Rational f = a(i, col);
            for (std::size_t j = col; j < cols; ++j) a(i, j) -= f * a(r, j);
            b[i] -= f * b[r];
        }
        pivot_cols.push_back(col);
        ++r;
    }
    for (std::size_t i = r; i < rows; ++i)
        if (b[i] != 0) return std::nullopt;
    std::vector<Rational> x(cols, Rational(0));
    for (std::size_t i = 0; i < pivot_cols.size(); ++i) x[pivot_cols[i]] = b[i];
    return x;
}

/// Finds rational c with target = sum_k c_k basis[k], if one exists.
inline std::optional<std::vector<Rational>> span_coefficients(const Poly& target, const std::vector<Poly>& basis) {
    std::map<Exponents, std::size_t> row_of;
    auto row = [&](const Exponents& e) { return row_of.try_emplace(e, row_of.size()).first->second; };
    for (const auto& [e, c] : target.terms()) row(e);
    for (const auto& p : basis)
        for (const auto& [e, c] : p.terms()) row(e);
    RationalMatrix a(row_of.size(), basis.size());
    std::vector<Rational> b(row_of.size(), Rational(0));
    for (std::size_t k = 0; k < basis.size(); ++k)
        for (const auto& [e, c] : basis[k].terms()) a(row_of.at(e), k) = c;
    for (const auto& [e, c] : target.terms()) b[row_of.at(e)] = c;
    if (basis.empty()) {
        if (target.is_zero()) return std::vector<Rational>{};
        return std::nullopt;
    }
    return solve_linear_system(std::move(a), std::move(b));
}

/// Matrix of polynomials sharing one variable count.
class PolyMatrix {
public:
    PolyMatrix(std::size_t rows, std::size_t cols, std::size_t n_vars)
        : rows_(rows), cols_(cols), n_vars_(n_vars), data_(rows * cols, Poly(n_vars)) {}

    static PolyMatrix from_constant(const RationalMatrix& m, std::size_t n_vars) {
        PolyMatrix p(m.rows(), m.cols(), n_vars);
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) p(i, j) = Poly::constant(n_vars, m(i, j));
        return p;
    }

    static PolyMatrix identity(std::size_t n, std::size_t n_vars) {
        return from_constant(RationalMatrix::identity(n), n_vars);
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t n_vars() const noexcept { return n_vars_; }

    Poly& operator()(std::size_t i, std::size_t j) { return data_.at(i * cols_ + j); }
    const Poly& operator()(std::size_t i, std::size_t j) const { return data_.at(i * cols_ + j); }

    bool is_zero() const {
        for (const auto& p : data_)
            if (!p.is_zero()) return false;
        return true;
    }

    bool is_symmetric() const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                if (!((*this)(i, j) == (*this)(j, i))) return false;
        return true;
    }

    PolyMatrix transpose() const {
        PolyMatrix t(cols_, rows_, n_vars_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    PolyMatrix derivative(std::size_t var) const {
        PolyMatrix d(rows_, cols_, n_vars_);
        for (std::size_t k = 0; k < data_.size(); ++k) d.data_[k] = data_[k].derivative(var);
        return d;
    }

    PolyMatrix& operator+=(const PolyMatrix& o) {
        require_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    PolyMatrix& operator-=(const PolyMatrix& o) {
        require_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    PolyMatrix& operator*=(const Rational& s) {
        for (auto& p : data_) p *= s;
        return *this;
    }
    PolyMatrix& operator*=(const Poly& s) {
        for (auto& p : data_) p *= s;
        return *this;
    }

    friend PolyMatrix operator+(PolyMatrix a, const PolyMatrix& b) { return a += b; }
    friend PolyMatrix operator-(PolyMatrix a, const PolyMatrix& b) { return a -= b; }
    friend PolyMatrix operator*(const Rational& s, PolyMatrix a) { return a *= s; }
    friend PolyMatrix operator*(const Poly& s, PolyMatrix a) { return a *= s; }

    friend PolyMatrix operator*(const PolyMatrix& a, const PolyMatrix& b) {
        if (a.cols_ != b.rows_ || a.n_vars_ != b.n_vars_) throw std::invalid_argument("matrix product: shape mismatch");
        PolyMatrix c(a.rows_, b.cols_, a.n_vars_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const Poly& aik = a(i, k);
                if (aik.is_zero()) continue;
                for (std::size_t j = 0; j < b.cols_; ++j)
                    if (!b(k, j).is_zero()) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend PolyMatrix operator*(const RationalMatrix& a, const PolyMatrix& b) {
        return PolyMatrix::from_constant(a, b.n_vars_) * b;
    }
    friend PolyMatrix operator*(const PolyMatrix& a, const RationalMatrix& b) {
        return a * PolyMatrix::from_constant(b, a.n_vars_);
    }

    friend bool operator==(const PolyMatrix& a, const PolyMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

private:
    void require_shape(const PolyMatrix& o) const {
        if (o.rows_ != rows_ || o.cols_ != cols_ || o.n_vars_ != n_vars_)
            throw std::invalid_argument("matrix sum: shape mismatch");
    }

    std::size_t rows_, cols_, n_vars_;
    std::vector<Poly> data_;
};

inline PolyMatrix hessian(const Poly& p) {
    const std::size_t n = p.n_vars();
    PolyMatrix h(n, n, n);
    std::vector<Poly> g = gradient(p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            h(i, j) = g[i].derivative(j);
            if (j != i) h(j, i) = h(i, j);
        }
    return h;
}

inline PolyMatrix commutator(const PolyMatrix& a, const PolyMatrix& b) { return a * b - b * a; }

}  // namespace wdvv
