#pragma once

// Secular (Ising) magnetic dipole-dipole coupling between atoms whose moments
// are projected on the global quantisation axis z. Flip-flop terms are dropped:
// for the auxiliary qubit they change a single atom's m_F by 3 and are far off
// resonance under the bias field.

#include <array>
#include <cmath>

#include <Eigen/Core>

#include "ybqc/atomic_structure.hpp"
#include "ybqc/constants.hpp"
#include "ybqc/errors.hpp"

namespace ybqc {

struct DipoleSpec {
    double moment_j_per_t = 0.0; // signed projection on z
    Eigen::Vector3d position_m = Eigen::Vector3d::Zero();
};

/// Geometric coupling (Hz per (J/T)^2): (mu0/4pi)(1 - 3cos^2 theta)/(r^3 h).
inline double dipole_coupling_per_moment2(const Eigen::Vector3d& separation_m) {
    const double r = separation_m.norm();
    if (!(r > 0.0))
        throw DomainError("dipole-dipole energy needs distinct positions (r > 0)");
    const double cos_theta = separation_m.z() / r;
    return constants::mu0_over_4pi * (1.0 - 3.0 * cos_theta * cos_theta) / (r * r * r) /
           constants::planck;
}

inline double dipole_coupling_per_moment2(double spacing_m, double theta_rad) {
    return dipole_coupling_per_moment2(
        Eigen::Vector3d(spacing_m * std::sin(theta_rad), 0.0, spacing_m * std::cos(theta_rad)));
}

inline double ddi_energy_hz(const DipoleSpec& d1, const DipoleSpec& d2) {
    return d1.moment_j_per_t * d2.moment_j_per_t *
           dipole_coupling_per_moment2(d2.position_m - d1.position_m);
}

/// Moments (J/T) of logical 0 (m_F = -3/2) and logical 1 (m_F = +3/2).
struct LogicalMoments {
    double zero = 0.0;
    double one = 0.0;
};

/// F = 3/2 stretched-state moments at `field_tesla` (low-field limit +-(2.7 muB + ...)).
inline LogicalMoments auxiliary_qubit_moments(const AtomParams& p, double field_tesla = 0.0) {
    const auto spec = zeeman_spectrum(p, field_tesla);
    return {level_moment(spec.level(f32_level(p, -3)), p),
            level_moment(spec.level(f32_level(p, 3)), p)};
}

struct PairLevels {
    double spacing_m = 0.0;
    double theta_rad = 0.0;
    std::array<double, 4> levels_hz{}; // |00>, |01>, |10>, |11>
    double shift_10_11_vs_00_01_hz = 0.0;
};

/// Two-atom auxiliary-qubit levels. Both atoms share the same single-atom
/// Zeeman energies `zeeman_hz` = {E(0), E(1)}.
inline PairLevels pair_levels(double spacing_m, double theta_rad, LogicalMoments moments,
                              std::array<double, 2> zeeman_hz = {0.0, 0.0}) {
    if (!(spacing_m > 0.0))
        throw DomainError("pair spacing must be > 0");
    const double k = dipole_coupling_per_moment2(spacing_m, theta_rad);
    const std::array<double, 2> mu{moments.zero, moments.one};
    PairLevels out;
    out.spacing_m = spacing_m;
    out.theta_rad = theta_rad;
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2)
            out.levels_hz[2 * s1 + s2] = zeeman_hz[s1] + zeeman_hz[s2] + k * mu[s1] * mu[s2];
    const auto& e = out.levels_hz;
    out.shift_10_11_vs_00_01_hz = (e[3] - e[2]) - (e[1] - e[0]);
    return out;
}

/// Magnitude of the conditional |10>-|11> vs |00>-|01> shift for a pair stacked
/// along the quantisation axis.
inline double cnot_shift_hz(double spacing_m, const AtomParams& p = AtomParams::yb171(),
                            double field_tesla = 0.0) {
    return std::abs(pair_levels(spacing_m, 0.0, auxiliary_qubit_moments(p, field_tesla))
                        .shift_10_11_vs_00_01_hz);
}

} // namespace ybqc
