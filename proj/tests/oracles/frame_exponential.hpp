#pragma once

// Closed-form frame transport for the potential 1/2 u1^2 u3 + 1/2 u1 u2^2 with
// antidiagonal eta, whose third derivatives are constant: along a straight arc
// with velocity d the frame equations are x' = A x, so x(1) = exp(A) x(0).
// Third derivatives and eta are hard-coded here, independent of the library.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <array>

namespace frame_oracle {

constexpr int kN = 3;
constexpr int kM = 2 * kN;
constexpr int kState = 2 * kM + 2 * kM * kN;

inline double phi3(int i, int j, int k) {
    std::array<int, 3> c{0, 0, 0};
    ++c[static_cast<std::size_t>(i)];
    ++c[static_cast<std::size_t>(j)];
    ++c[static_cast<std::size_t>(k)];
    // Phi_113 = Phi_122 = 1 in one-based indices.
    return (c == std::array<int, 3>{2, 0, 1} || c == std::array<int, 3>{1, 2, 0}) ? 1.0 : 0.0;
}

inline double eta_inv(int k, int l) { return k + l == kN - 1 ? 1.0 : 0.0; }

inline int r_at(int a) { return a; }
inline int n_at(int a) { return kM + a; }
inline int R_at(int a, int i) { return 2 * kM + a * kN + i; }
inline int Nn_at(int a, int i) { return 2 * kM + kM * kN + a * kN + i; }

inline Eigen::MatrixXd generator(const Eigen::Vector3d& d, double c) {
    double C[kN][kN] = {};  // C[l][i] = sum_j d_j eta^{kl} Phi_ijk
    for (int l = 0; l < kN; ++l)
        for (int i = 0; i < kN; ++i)
            for (int j = 0; j < kN; ++j)
                for (int k = 0; k < kN; ++k) C[l][i] += d[j] * eta_inv(k, l) * phi3(i, j, k);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(kState, kState);
    for (int a = 0; a < kM; ++a)
        for (int i = 0; i < kN; ++i) {
            A(r_at(a), R_at(a, i)) += d[i];
            A(n_at(a), Nn_at(a, i)) += d[i];
            for (int l = 0; l < kN; ++l) {
                A(R_at(a, i), Nn_at(a, l)) += c * C[l][i];
                A(Nn_at(a, i), R_at(a, l)) -= C[l][i];
            }
        }
    return A;
}

/// State after transporting the adapted frame at the origin along the arc 0 -> d.
inline Eigen::VectorXd transport(const Eigen::Vector3d& d, double c) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(kState);
    for (int i = 0; i < kN; ++i) {
        x0(R_at(i, i)) = 1.0;
        x0(Nn_at(kN + i, i)) = 1.0;
    }
    Eigen::MatrixXd e = generator(d, c).exp();
    return e * x0;
}

}  // namespace frame_oracle
