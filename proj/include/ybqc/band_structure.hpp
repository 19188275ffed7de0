#pragma once

// 1D lattice V(x) = s E_r sin^2(k x) in a plane-wave basis (Mathieu problem).
// Energies in units of E_r; quasimomentum q in units of the lattice k (|q| <= 1).

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "ybqc/constants.hpp"
#include "ybqc/errors.hpp"

namespace ybqc {

inline Eigen::VectorXd mathieu_band_energies(double depth_recoils, double q, int cutoff = 25) {
    if (depth_recoils < 0.0)
        throw DomainError("lattice depth must be >= 0");
    const int n = 2 * cutoff + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int m = 0; m < n; ++m) {
        const double k = 2.0 * (m - cutoff) + q;
        h(m, m) = k * k + depth_recoils / 2.0;
        if (m + 1 < n)
            h(m, m + 1) = h(m + 1, m) = -depth_recoils / 4.0;
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h, Eigen::EigenvaluesOnly).eigenvalues();
}

/// Width of the lowest band (E_r): E(q = 1) - E(q = 0).
inline double lowest_band_width(double depth_recoils) {
    return mathieu_band_energies(depth_recoils, 1.0)(0) - mathieu_band_energies(depth_recoils, 0.0)(0);
}

/// Nearest-neighbour tunnelling J (E_r) of the lowest band, J = W / 4.
inline double tunneling_energy(double depth_recoils) { return lowest_band_width(depth_recoils) / 4.0; }

/// Deep-lattice asymptote J = (4/sqrt(pi)) s^(3/4) exp(-2 sqrt(s)) (E_r).
inline double tunneling_energy_deep(double depth_recoils) {
    return 4.0 / std::sqrt(constants::pi) * std::pow(depth_recoils, 0.75) * std::exp(-2.0 * std::sqrt(depth_recoils));
}

} // namespace ybqc
