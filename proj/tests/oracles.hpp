#pragma once

// Independent reference calculations shared by the test binaries.

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ybqc/atomic_structure.hpp"

namespace oracle {

// Dense I.J + Zeeman Hamiltonian (Hz) on the 10 uncoupled states |mJ, mI>, J = 2, I = 1/2.
inline Eigen::VectorXd dense_3p2_energies(const ybqc::AtomParams& p, double b) {
    const double j = 2.0, i = 0.5;
    const double mu_j = p.g_j_3p2 * ybqc::constants::bohr_magneton * b / ybqc::constants::planck;
    const double mu_i = p.nuclear_moment_mu_n / i * ybqc::constants::nuclear_magneton * b / ybqc::constants::planck;
    std::vector<std::pair<double, double>> basis;
    for (double mj = -j; mj <= j + 1e-9; mj += 1.0)
        for (double mi : {-0.5, 0.5})
            basis.emplace_back(mj, mi);
    const int n = static_cast<int>(basis.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    auto ladder = [](double jj, double m, int s) { return std::sqrt(jj * (jj + 1) - m * (m + s)); };
    for (int r = 0; r < n; ++r) {
        const auto [mj, mi] = basis[r];
        h(r, r) = p.hyperfine_a_3p2_hz * mj * mi + mu_j * mj - mu_i * mi;
        for (int col = 0; col < n; ++col) {
            const auto [mj2, mi2] = basis[col];
            // (A/2)(J+ I- + J- I+)
            if (std::abs(mj - (mj2 + 1)) < 1e-9 && std::abs(mi - (mi2 - 1)) < 1e-9)
                h(r, col) += 0.5 * p.hyperfine_a_3p2_hz * ladder(j, mj2, 1) * ladder(i, mi2, -1);
            if (std::abs(mj - (mj2 - 1)) < 1e-9 && std::abs(mi - (mi2 + 1)) < 1e-9)
                h(r, col) += 0.5 * p.hyperfine_a_3p2_hz * ladder(j, mj2, -1) * ladder(i, mi2, 1);
        }
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues();
}

// Two-level transition probability under a detuned square drive.
inline double detuned_rabi(double rabi, double detuning, double t) {
    const double w = std::hypot(rabi, detuning);
    const double s = std::sin(w * t / 2);
    return rabi * rabi / (w * w) * s * s;
}

// Secular dipole coupling (Hz) of two z-moments m1, m2 (J/T) at distance r, polar angle theta.
// Constants written out so the check does not share the library's table.
inline double dipole_pair_hz(double m1, double m2, double r, double theta) {
    const double mu0_4pi = 1.00000000055e-7, h = 6.62607015e-34;
    const double ct = std::cos(theta);
    return mu0_4pi * m1 * m2 * (1.0 - 3.0 * ct * ct) / (r * r * r) / h;
}

} // namespace oracle
