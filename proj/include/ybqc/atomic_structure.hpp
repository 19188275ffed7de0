#pragma once

// Zeeman + hyperfine structure of 171Yb: the 1S0 nuclear-spin doublet and the
// 3P2 (J=2, I=1/2) manifold.
//
// Energy conventions
//   excited:  H/h = A (I.J) + (gJ muB mJ - gI muN mI) B / h,   gI = moment / I
//             zero = 3P2 fine-structure centroid
//   ground:   E/h = -gI muN mI B / h, zero = 1S0 at B = 0
// With the positive 171Yb moment the m_I = +1/2 ground state is the lower one.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "ybqc/constants.hpp"
#include "ybqc/errors.hpp"

namespace ybqc {

struct AtomParams {
    double nuclear_spin = 0.5;
    double nuclear_moment_mu_n = 0.49367;
    double electronic_j_3p2 = 2.0;
    double g_j_3p2 = 1.5;
    double hyperfine_a_3p2_hz = 2677.8e6;
    double mass_kg = 170.9363258 * constants::atomic_mass_unit;
    double lifetime_3p2_s = 15.0;
    double linewidth_1s0_3p2_hz = 0.010;
    double lifetime_1p1_s = 5.5e-9;
    double wavelength_1s0_3p2_m = 507.339e-9;
    double wavelength_1s0_1p1_m = 398.911e-9;
    double wavelength_lattice_m = 532.0e-9;
    /// Replace the Breit-Rabi diagonalisation with first-order (linear) Zeeman
    /// shifts of the zero-field F states.
    bool linear_zeeman = false;

    static AtomParams yb171() { return {}; }

    double lattice_constant_m() const { return wavelength_lattice_m / 2.0; }
    double nuclear_g_factor() const { return nuclear_moment_mu_n / nuclear_spin; }

    void validate() const {
        if (nuclear_spin != 0.5)
            throw ConfigError("nuclear_spin must be exactly 1/2 for 171Yb");
        if (electronic_j_3p2 != 2.0)
            throw ConfigError("electronic_J_3P2 must be exactly 2");
        if (!(lifetime_3p2_s > 0) || !(linewidth_1s0_3p2_hz > 0) || !(lifetime_1p1_s > 0))
            throw ConfigError("lifetimes and linewidths must be strictly positive");
        if (!(wavelength_1s0_3p2_m > 0) || !(wavelength_1s0_1p1_m > 0) ||
            !(wavelength_lattice_m > 0))
            throw ConfigError("wavelengths must be strictly positive");
        if (!(mass_kg > 0))
            throw ConfigError("mass must be strictly positive");
        if (!std::isfinite(hyperfine_a_3p2_hz) || !std::isfinite(g_j_3p2) ||
            !std::isfinite(nuclear_moment_mu_n))
            throw ConfigError("non-finite atomic parameter");
        if (hyperfine_a_3p2_hz == 0.0 && !linear_zeeman)
            throw ConfigError("hyperfine_A_3P2 = 0 requires the linear Zeeman model flag");
    }
};

enum class Branch { Lower, Upper };

inline const char* to_string(Branch b) { return b == Branch::Lower ? "lower" : "upper"; }

/// Names one 3P2 sublevel: twice its m_F and the branch of its m_F block.
struct LevelLabel {
    int two_mf = 3;
    Branch branch = Branch::Lower;
    bool operator==(const LevelLabel&) const = default;
};

inline constexpr int kHyperfineBasisSize = 10;

/// Index into the uncoupled |m_J, m_I> basis: m_J = -2..2 major, m_I = -1/2, +1/2 minor.
inline constexpr int uncoupled_index(int two_mj, int two_mi) {
    return (two_mj / 2 + 2) * 2 + (two_mi > 0 ? 1 : 0);
}

struct ZeemanLevel {
    LevelLabel label;
    int two_f = 3; // F of the zero-field state this level connects to
    double energy_hz = 0.0;
    std::array<double, kHyperfineBasisSize> composition{};
};

struct ZeemanSpectrum {
    double field_tesla = 0.0;
    std::vector<ZeemanLevel> levels; // ordered by m_F, then energy

    const ZeemanLevel& level(LevelLabel label) const {
        for (const auto& l : levels)
            if (l.label.two_mf == label.two_mf &&
                (l.label.branch == label.branch || std::abs(label.two_mf) == 5))
                return l;
        throw DomainError("unknown 3P2 level label m_F=" + std::to_string(label.two_mf) + "/2 (" +
                          to_string(label.branch) + ")");
    }
};

/// Branch that continues adiabatically from the F = 3/2 zero-field level.
inline Branch f32_branch(const AtomParams& p) {
    return p.hyperfine_a_3p2_hz >= 0.0 ? Branch::Lower : Branch::Upper;
}

inline Branch other(Branch b) { return b == Branch::Lower ? Branch::Upper : Branch::Lower; }

inline LevelLabel f32_level(const AtomParams& p, int two_mf) { return {two_mf, f32_branch(p)}; }

namespace detail {

inline void check_field(double field_tesla) {
    if (!(field_tesla >= 0.0) || !std::isfinite(field_tesla))
        throw DomainError("magnetic field must be finite and >= 0");
}

// Zeeman energy (Hz) of an uncoupled basis state.
inline double uncoupled_zeeman_hz(const AtomParams& p, double two_mj, double two_mi, double b) {
    using namespace constants;
    return (p.g_j_3p2 * bohr_magneton * two_mj / 2.0 -
            p.nuclear_g_factor() * nuclear_magneton * two_mi / 2.0) *
           b / planck;
}

// Zero-field coupled states of a 2-dim block, in the (|mF-1/2, up>, |mF+1/2, down>) basis.
inline std::array<double, 2> zero_field_state(int two_mf, int two_f) {
    const double j = 2.0, m = two_mf / 2.0;
    if (two_f == 5)
        return {std::sqrt((j + m + 0.5) / (2 * j + 1)), std::sqrt((j - m + 0.5) / (2 * j + 1))};
    return {-std::sqrt((j - m + 0.5) / (2 * j + 1)), std::sqrt((j + m + 0.5) / (2 * j + 1))};
}

inline double zero_field_energy_hz(const AtomParams& p, int two_f) {
    // A/2 [F(F+1) - J(J+1) - I(I+1)]
    const double f = two_f / 2.0;
    return p.hyperfine_a_3p2_hz / 2.0 * (f * (f + 1) - 6.0 - 0.75);
}

} // namespace detail

/// The ten 3P2 eigenpairs at field B, using the m_F block structure:
/// |m_F| = 5/2 blocks are 1x1, the rest closed-form 2x2 problems.
inline ZeemanSpectrum zeeman_spectrum(const AtomParams& p, double field_tesla) {
    p.validate();
    detail::check_field(field_tesla);
    const double a = p.hyperfine_a_3p2_hz;
    const Branch b32 = f32_branch(p);

    ZeemanSpectrum out;
    out.field_tesla = field_tesla;
    out.levels.reserve(kHyperfineBasisSize);

    for (int two_mf = -5; two_mf <= 5; two_mf += 2) {
        if (std::abs(two_mf) == 5) {
            const int two_mi = two_mf > 0 ? 1 : -1;
            const int two_mj = two_mf > 0 ? 4 : -4;
            ZeemanLevel l;
            l.label = {two_mf, other(b32)};
            l.two_f = 5;
            l.energy_hz = a * (two_mj / 2.0) * (two_mi / 2.0) +
                          detail::uncoupled_zeeman_hz(p, two_mj, two_mi, field_tesla);
            l.composition[uncoupled_index(two_mj, two_mi)] = 1.0;
            out.levels.push_back(l);
            continue;
        }
        const int two_mj1 = two_mf - 1; // paired with m_I = +1/2
        const int two_mj2 = two_mf + 1; // paired with m_I = -1/2
        const int i1 = uncoupled_index(two_mj1, 1);
        const int i2 = uncoupled_index(two_mj2, -1);

        if (p.linear_zeeman) {
            for (int two_f : {3, 5}) {
                const auto v = detail::zero_field_state(two_mf, two_f);
                ZeemanLevel l;
                l.two_f = two_f;
                l.label = {two_mf, two_f == 3 ? b32 : other(b32)};
                l.energy_hz = detail::zero_field_energy_hz(p, two_f) +
                              v[0] * v[0] * detail::uncoupled_zeeman_hz(p, two_mj1, 1, field_tesla) +
                              v[1] * v[1] * detail::uncoupled_zeeman_hz(p, two_mj2, -1, field_tesla);
                l.composition[i1] = v[0];
                l.composition[i2] = v[1];
                out.levels.push_back(l);
            }
            std::sort(out.levels.end() - 2, out.levels.end(),
                      [](const ZeemanLevel& x, const ZeemanLevel& y) { return x.energy_hz < y.energy_hz; });
            continue;
        }

        const double mj1 = two_mj1 / 2.0;
        const double d1 = a * mj1 * 0.5 + detail::uncoupled_zeeman_hz(p, two_mj1, 1, field_tesla);
        const double d2 = -a * (two_mj2 / 2.0) * 0.5 + detail::uncoupled_zeeman_hz(p, two_mj2, -1, field_tesla);
        const double off = a / 2.0 * std::sqrt(6.0 - mj1 * (mj1 + 1.0));
        const double mean = 0.5 * (d1 + d2);
        const double half = std::hypot(0.5 * (d1 - d2), off);
        const double theta = 0.5 * std::atan2(2.0 * off, d1 - d2);

        ZeemanLevel lower, upper;
        lower.label = {two_mf, Branch::Lower};
        upper.label = {two_mf, Branch::Upper};
        lower.energy_hz = mean - half;
        upper.energy_hz = mean + half;
        upper.composition[i1] = std::cos(theta);
        upper.composition[i2] = std::sin(theta);
        lower.composition[i1] = -std::sin(theta);
        lower.composition[i2] = std::cos(theta);
        lower.two_f = (b32 == Branch::Lower) ? 3 : 5;
        upper.two_f = (b32 == Branch::Lower) ? 5 : 3;
        out.levels.push_back(lower);
        out.levels.push_back(upper);
    }
    return out;
}

/// Energy (Hz) of the 1S0 nuclear sublevel 2*m_I = two_mi.
inline double ground_energy_hz(const AtomParams& p, int two_mi, double field_tesla) {
    if (two_mi != 1 && two_mi != -1)
        throw DomainError("ground sublevel must be m_I = +-1/2");
    return -p.nuclear_g_factor() * constants::nuclear_magneton * (two_mi / 2.0) * field_tesla /
           constants::planck;
}

/// NMR frequency of the 1S0 memory qubit.
inline double ground_qubit_splitting_hz(const AtomParams& p, double field_tesla) {
    detail::check_field(field_tesla);
    return ground_energy_hz(p, -1, field_tesla) - ground_energy_hz(p, 1, field_tesla);
}

/// Optical offset of 1S0(m_I) -> 3P2(label) from the zero-field line centre.
inline double transition_frequency_hz(const AtomParams& p, int two_mi, LevelLabel excited,
                                      double field_tesla) {
    const auto spec = zeeman_spectrum(p, field_tesla);
    return spec.level(excited).energy_hz - ground_energy_hz(p, two_mi, field_tesla);
}

/// Magnetic-moment projection <mu_z> (J/T) of a 3P2 level, i.e. -dE/dB.
inline double level_moment(const ZeemanLevel& level, const AtomParams& p) {
    using namespace constants;
    double mu = 0.0;
    for (int two_mj = -4; two_mj <= 4; two_mj += 2)
        for (int two_mi : {-1, 1}) {
            const double c = level.composition[uncoupled_index(two_mj, two_mi)];
            mu -= c * c *
                  (p.g_j_3p2 * bohr_magneton * two_mj / 2.0 -
                   p.nuclear_g_factor() * nuclear_magneton * two_mi / 2.0);
        }
    return mu;
}

inline double level_moment(const AtomParams& p, LevelLabel label, double field_tesla) {
    return level_moment(zeeman_spectrum(p, field_tesla).level(label), p);
}

inline double ground_moment(const AtomParams& p, int two_mi) {
    return p.nuclear_g_factor() * constants::nuclear_magneton * (two_mi / 2.0);
}

/// d f / dB (Hz/T) of a 1S0 -> 3P2 line, from Hellmann-Feynman moments.
inline double transition_slope_hz_per_tesla(const AtomParams& p, int two_mi, LevelLabel excited,
                                            double field_tesla) {
    return (ground_moment(p, two_mi) - level_moment(p, excited, field_tesla)) / constants::planck;
}

/// Energies (Hz) of the F = 3/2 ladder a, b, c, d = m_F -3/2 .. +3/2.
inline std::array<double, 4> f32_ladder_hz(const AtomParams& p, double field_tesla) {
    const auto spec = zeeman_spectrum(p, field_tesla);
    std::array<double, 4> e{};
    for (int k = 0; k < 4; ++k)
        e[k] = spec.level(f32_level(p, 2 * k - 3)).energy_hz;
    return e;
}

struct ThreePhotonDetunings {
    double field_tesla = 0.0;
    double omega0_rad_s = 0.0; // one third of the a -> d splitting
    double delta1_rad_s = 0.0; // omega_ab - omega0
    double delta2_rad_s = 0.0; // omega_cd - omega0
    double omega_ab_rad_s = 0.0;
    double omega_bc_rad_s = 0.0;
    double omega_cd_rad_s = 0.0;

    double delta1_hz() const { return delta1_rad_s / constants::two_pi; }
    double delta2_hz() const { return delta2_rad_s / constants::two_pi; }
};

inline ThreePhotonDetunings three_photon_detunings(const AtomParams& p, double field_tesla) {
    if (!(field_tesla > 0.0))
        throw DomainError("three-photon detunings need B > 0: the F=3/2 sublevels are degenerate at B = 0");
    const auto e = f32_ladder_hz(p, field_tesla);
    const double w = constants::two_pi;
    ThreePhotonDetunings d;
    d.field_tesla = field_tesla;
    d.omega_ab_rad_s = w * (e[1] - e[0]);
    d.omega_bc_rad_s = w * (e[2] - e[1]);
    d.omega_cd_rad_s = w * (e[3] - e[2]);
    d.omega0_rad_s = w * (e[3] - e[0]) / 3.0;
    d.delta1_rad_s = d.omega_ab_rad_s - d.omega0_rad_s;
    d.delta2_rad_s = d.omega_cd_rad_s - d.omega0_rad_s;
    return d;
}

/// Returns a copy of `p` whose hyperfine constant puts |Delta1(field)| at
/// `target_delta1_hz`. The sign of A is kept.
inline AtomParams calibrate_hyperfine_a(AtomParams p, double target_delta1_hz,
                                        double field_tesla = 650.0 * constants::gauss) {
    if (!(target_delta1_hz > 0.0))
        throw ConfigError("calibration target must be positive");
    if (p.linear_zeeman)
        throw ConfigError("cannot calibrate A against a linear Zeeman model (detunings vanish)");
    const double sign = p.hyperfine_a_3p2_hz < 0 ? -1.0 : 1.0;
    const double a0 = std::abs(p.hyperfine_a_3p2_hz);
    auto residual = [&](double abs_a) {
        AtomParams q = p;
        q.hyperfine_a_3p2_hz = sign * abs_a;
        return std::abs(three_photon_detunings(q, field_tesla).delta1_hz()) - target_delta1_hz;
    };
    double lo = a0 / 4.0, hi = a0 * 4.0;
    for (int i = 0; i < 20 && residual(lo) < 0; ++i) lo /= 2.0;
    for (int i = 0; i < 20 && residual(hi) > 0; ++i) hi *= 2.0;
    if (residual(lo) < 0 || residual(hi) > 0)
        throw ConfigError("hyperfine calibration target is not bracketed");
    std::uintmax_t iterations = 200;
    const auto root = boost::math::tools::toms748_solve(
        residual, lo, hi, boost::math::tools::eps_tolerance<double>(48), iterations);
    p.hyperfine_a_3p2_hz = sign * 0.5 * (root.first + root.second);
    return p;
}

} // namespace ybqc
