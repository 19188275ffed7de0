// Level structure, dipole couplings, addressing, lattice bands and feasibility.

#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "ybqc/band_structure.hpp"
#include "ybqc/feasibility.hpp"

#include "oracles.hpp"

using namespace ybqc;
namespace c = ybqc::constants;

namespace {

constexpr double G = c::gauss;

std::vector<double> sorted_energies(const ZeemanSpectrum& s) {
    std::vector<double> e;
    for (const auto& l : s.levels)
        e.push_back(l.energy_hz);
    std::sort(e.begin(), e.end());
    return e;
}

} // namespace

// ------------------------------------------------------------ atomic structure

TEST(AtomicStructure, BlockwiseMatchesDenseDiagonalisation) {
    const AtomParams p;
    for (double bg : {0.0, 1.0, 100.0, 650.0, 3000.0, 20000.0}) {
        const auto dense = oracle::dense_3p2_energies(p, bg * G);
        const auto block = sorted_energies(zeeman_spectrum(p, bg * G));
        ASSERT_EQ(block.size(), 10u);
        const double scale = dense.cwiseAbs().maxCoeff();
        for (int k = 0; k < 10; ++k)
            EXPECT_NEAR(block[k], dense(k), 1e-9 * scale) << "B = " << bg << " G, level " << k;
    }
}

TEST(AtomicStructure, ZeroFieldHyperfineIntervals) {
    const AtomParams p;
    const auto s = zeeman_spectrum(p, 0.0);
    for (const auto& l : s.levels) {
        const double expect = l.two_f == 5 ? p.hyperfine_a_3p2_hz : -1.5 * p.hyperfine_a_3p2_hz;
        EXPECT_NEAR(l.energy_hz, expect, 1e-6 * p.hyperfine_a_3p2_hz);
    }
}

TEST(AtomicStructure, MomentsAreMinusEnergySlope) {
    const AtomParams p;
    const double b = 650.0 * G, db = 1e-3 * G;
    for (int two_mf = -3; two_mf <= 3; two_mf += 2) {
        const auto lab = f32_level(p, two_mf);
        const double fd = -(zeeman_spectrum(p, b + db).level(lab).energy_hz -
                            zeeman_spectrum(p, b - db).level(lab).energy_hz) /
                          (2 * db) * c::planck;
        EXPECT_NEAR(level_moment(p, lab, b), fd, 1e-6 * c::bohr_magneton);
    }
}

TEST(AtomicStructure, GroundQubitSplittingAt100G) {
    const AtomParams p;
    const double oracle = 0.49367 / 0.5 * 5.0507837461e-27 * 100e-4 / 6.62607015e-34;
    EXPECT_NEAR(ground_qubit_splitting_hz(p, 100.0 * G), oracle, 1e-9 * oracle);
    EXPECT_NEAR(oracle, 75.26e3, 0.01e3);
    EXPECT_THROW(ground_qubit_splitting_hz(p, -1.0), DomainError);
}

TEST(AtomicStructure, DetuningsFollowLadderEnergies) {
    const AtomParams p;
    const double b = 650.0 * G;
    const auto e = f32_ladder_hz(p, b);
    const auto d = three_photon_detunings(p, b);
    const double w0 = (e[3] - e[0]) / 3.0;
    EXPECT_NEAR(d.delta1_hz(), (e[1] - e[0]) - w0, 1e-3);
    EXPECT_NEAR(d.delta2_hz(), (e[3] - e[2]) - w0, 1e-3);
    // Default A: about -20.5 and +22.2 MHz.
    EXPECT_NEAR(d.delta1_hz(), -20.52e6, 0.05e6);
    EXPECT_NEAR(d.delta2_hz(), 22.21e6, 0.05e6);
}

TEST(AtomicStructure, CalibrationHitsTarget) {
    const auto q = calibrate_hyperfine_a(AtomParams{}, 20e6, 650.0 * G);
    EXPECT_NEAR(std::abs(three_photon_detunings(q, 650.0 * G).delta1_hz()), 20e6, 1.0);
    EXPECT_GT(q.hyperfine_a_3p2_hz, AtomParams{}.hyperfine_a_3p2_hz);
}

TEST(AtomicStructure, LinearZeemanHasNoDetunings) {
    AtomParams p;
    p.linear_zeeman = true;
    const auto d = three_photon_detunings(p, 650.0 * G);
    EXPECT_NEAR(d.delta1_hz(), 0.0, 1e-3);
    EXPECT_NEAR(d.delta2_hz(), 0.0, 1e-3);
}

// ------------------------------------------------------------------ dipoles

TEST(Dipole, ElectronicPairMatchesConstantsArithmetic) {
    const double r = 266e-9, m = 3.0 * 9.2740100783e-24;
    const double oracle = 1.00000000055e-7 * m * m * (1.0 - 3.0) / (r * r * r) / 6.62607015e-34;
    const double got = dipole_coupling_per_moment2(r, 0.0) * m * m;
    EXPECT_NEAR(got, oracle, 1e-10 * std::abs(oracle));
    EXPECT_NEAR(std::abs(got), 12.41, 0.01);
}

TEST(Dipole, AngularDependence) {
    const double r = 266e-9, k0 = std::abs(dipole_coupling_per_moment2(r, 0.0));
    EXPECT_NEAR(dipole_coupling_per_moment2(r, std::acos(1.0 / std::sqrt(3.0))) / k0, 0.0, 1e-12);
    EXPECT_NEAR(dipole_coupling_per_moment2(r, c::pi / 2) / dipole_coupling_per_moment2(r, 0.0), -0.5, 1e-12);
    EXPECT_NEAR(dipole_coupling_per_moment2(r, 0.3) / k0, dipole_coupling_per_moment2(r, c::pi - 0.3) / k0, 1e-12);
    const Eigen::Vector3d v(0.1e-9, 0.2e-9, 0.3e-9);
    DipoleSpec a{2.0, Eigen::Vector3d::Zero()}, b{3.0, v};
    EXPECT_NEAR(ddi_energy_hz(a, b), 6.0 * dipole_coupling_per_moment2(v), 1e-12 * std::abs(ddi_energy_hz(a, b)));
    EXPECT_THROW(ddi_energy_hz(a, DipoleSpec{1.0, Eigen::Vector3d::Zero()}), DomainError);
}

TEST(Dipole, CnotShiftIsCouplingTimesMomentDifferenceSquared) {
    const AtomParams p;
    const auto m = auxiliary_qubit_moments(p);
    const double k = dipole_coupling_per_moment2(266e-9, 0.0);
    const auto pl = pair_levels(266e-9, 0.0, m);
    EXPECT_NEAR(pl.shift_10_11_vs_00_01_hz, k * (m.one - m.zero) * (m.one - m.zero), 1e-10 * 40.0);
    EXPECT_NEAR(cnot_shift_hz(266e-9), 40.2, 0.2);
    EXPECT_NEAR(std::abs(m.one) / c::bohr_magneton, 2.7, 0.01);
    EXPECT_NEAR(m.one, -m.zero, 1e-6 * std::abs(m.one));
}

TEST(Dipole, NuclearPairIsNanohertzScale) {
    const double mn = 0.49367 * c::nuclear_magneton;
    const double v = std::abs(dipole_coupling_per_moment2(266e-9, 0.0) * mn * mn);
    EXPECT_GT(v, 1e-8);
    EXPECT_LT(v, 1e-6);
}

// ---------------------------------------------------------------- addressing

TEST(Addressing, PlanFor10x10) {
    const AtomParams p;
    const LatticeGeometry g{10, 10, 1};
    const auto cfg = plan_gradients(g, 1e3, p);
    EXPECT_NEAR(cfg.gx_tesla_per_m / c::gauss_per_cm, 10.0, 2.5);
    EXPECT_NEAR(cfg.gy_tesla_per_m / c::gauss_per_cm, 100.0, 25.0);
    const auto v = validate_gradients(g, cfg);
    EXPECT_TRUE(v.fields_unique);
    EXPECT_TRUE(v.ordering_condition);
    EXPECT_FALSE(v.ordering_condition_strict);
    EXPECT_GE(resonance_map(g, cfg, p, default_addressed_transition(p)).min_gap_hz, 1e3);
}

TEST(Addressing, SlopeAt100G) {
    const AtomParams p;
    const auto t = default_addressed_transition(p);
    const double b = 100.0 * G, db = 1e-3 * G;
    const double fd = (transition_frequency_hz(p, t.two_mi, t.excited, b + db) -
                       transition_frequency_hz(p, t.two_mi, t.excited, b - db)) /
                      (2 * db);
    EXPECT_NEAR(transition_slope_hz_per_tesla(p, t.two_mi, t.excited, b), fd, 1e-5 * std::abs(fd));
    EXPECT_NEAR(std::abs(fd) * G, 3.76e6, 0.02e6);
}

TEST(Addressing, MinGapAndRangeMatchBruteForce) {
    const AtomParams p;
    const LatticeGeometry g{4, 3, 2};
    GradientConfig cfg;
    cfg.gx_tesla_per_m = 7.0 * c::gauss_per_cm;
    cfg.gy_tesla_per_m = 40.0 * c::gauss_per_cm;
    cfg.gz_tesla_per_m = 150.0 * c::gauss_per_cm;
    const auto t = default_addressed_transition(p);
    const auto map = resonance_map(g, cfg, p, t);
    double best = INFINITY, lo = INFINITY, hi = -INFINITY;
    const auto plane = g.plane(0);
    for (std::size_t a = 0; a < plane.size(); ++a)
        for (std::size_t b = a + 1; b < plane.size(); ++b)
            best = std::min(best, std::abs(transition_frequency_hz(p, t.two_mi, t.excited, site_field(g, cfg, plane[a])) -
                                           transition_frequency_hz(p, t.two_mi, t.excited, site_field(g, cfg, plane[b]))));
    EXPECT_NEAR(map.min_gap_hz, best, 1e-6);
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_y; ++j)
            for (int k = 0; k < g.n_z; ++k) {
                const double b = cfg.bias_tesla + g.spacing_m * (i * cfg.gx_tesla_per_m + j * cfg.gy_tesla_per_m +
                                                                 k * cfg.gz_tesla_per_m);
                EXPECT_NEAR(site_field(g, cfg, {i, j, k}), b, 1e-15);
                lo = std::min(lo, b);
                hi = std::max(hi, b);
            }
    EXPECT_NEAR(field_range_tesla(g, cfg), hi - lo, 1e-12 * cfg.bias_tesla);
}

TEST(Addressing, EqualGradientsCollide) {
    const LatticeGeometry g{3, 3, 1};
    GradientConfig cfg;
    cfg.gx_tesla_per_m = cfg.gy_tesla_per_m = 10.0 * c::gauss_per_cm;
    const auto v = validate_gradients(g, cfg);
    EXPECT_FALSE(v.fields_unique);
    EXPECT_TRUE(v.collision.has_value());
    EXPECT_FALSE(v.ordering_condition);
}

TEST(Addressing, SingleSiteAndErrors) {
    const AtomParams p;
    const LatticeGeometry one{1, 1, 1};
    const auto cfg = plan_gradients(one, 1e3, p);
    const auto map = resonance_map(one, cfg, p, default_addressed_transition(p));
    ASSERT_EQ(map.sites.size(), 1u);
    EXPECT_NEAR(map.sites[0].field_tesla, cfg.bias_tesla, 1e-15);
    EXPECT_THROW(plan_gradients(LatticeGeometry{10, 10, 1}, -1.0, p), std::exception);
    EXPECT_THROW((LatticeGeometry{0, 1, 1}.validate()), std::exception);
}

// ------------------------------------------------------------- lattice bands

TEST(Bands, FreeParticleBandWidthIsOneRecoil) {
    EXPECT_NEAR(lowest_band_width(0.0), 1.0, 1e-9);
}

TEST(Bands, DeepLatticeAsymptote) {
    const double exact = tunneling_energy(50.0), deep = tunneling_energy_deep(50.0);
    EXPECT_NEAR(exact / deep, 1.0, 0.3);
    EXPECT_GT(tunneling_energy(10.0), tunneling_energy(20.0));
    // Plane-wave basis converged.
    EXPECT_NEAR(mathieu_band_energies(50.0, 0.0, 25)(0), mathieu_band_energies(50.0, 0.0, 40)(0), 1e-9);
}

// ---------------------------------------------------------------- feasibility

TEST(Feasibility, PiPulseIntensity) {
    const AtomParams p;
    const double i1 = pi_pulse_intensity(100e-6, p.linewidth_1s0_3p2_hz, p.wavelength_1s0_3p2_m);
    const double i2 = pi_pulse_intensity(200e-6, p.linewidth_1s0_3p2_hz, p.wavelength_1s0_3p2_m);
    EXPECT_NEAR(i1 / i2, 4.0, 1e-12);
    // I = 2 I_sat (pi / (t Gamma))^2, I_sat = pi h c Gamma / (3 lambda^3)
    const double gamma = 2 * M_PI * 0.010, lam = 507.339e-9;
    const double isat = M_PI * 6.62607015e-34 * 299792458.0 * gamma / (3 * lam * lam * lam);
    const double oracle = 2 * isat * std::pow(M_PI / (100e-6 * gamma), 2);
    EXPECT_NEAR(i1, oracle, 1e-10 * oracle);
    EXPECT_NEAR(rabi_from_intensity(i1, p.linewidth_1s0_3p2_hz, p.wavelength_1s0_3p2_m), M_PI / 100e-6, 1e-6);
    EXPECT_THROW(pi_pulse_intensity(0.0, 0.01, lam), DomainError);
}

TEST(Feasibility, LatticeDepthAndScattering) {
    const AtomParams p;
    const double er = 6.62607015e-34 * 6.62607015e-34 / (2 * p.mass_kg * 532e-9 * 532e-9) / 1.380649e-23 * 1e6;
    const auto r = lattice_depth_report(50.0, p);
    EXPECT_NEAR(r.recoil_energy_uk, er, 1e-12 * er);
    EXPECT_NEAR(r.depth_uk, 50 * er, 1e-10);
    EXPECT_FALSE(r.no_lattice);
    EXPECT_TRUE(lattice_depth_report(0.0, p).no_lattice);
    EXPECT_NEAR(scattering_rate(2 * r.depth_uk, p) / scattering_rate(r.depth_uk, p), 2.0, 1e-12);
    EXPECT_NEAR(r.hold_survival, std::exp(-r.tunneling_hz * 5.0), 1e-15);
}

TEST(Feasibility, BiasFieldCheck) {
    const AtomParams p;
    const LatticeGeometry vol{10, 10, 10};
    auto cfg = plan_gradients(vol, 1e3, p);
    EXPECT_TRUE(bias_field_check(vol, cfg).pass);
    cfg.bias_tesla = 0.0;
    EXPECT_FALSE(bias_field_check(vol, cfg).pass);
}

TEST(Feasibility, DecoherenceBudget) {
    NoiseParams n;
    PulseSchedule empty;
    EXPECT_DOUBLE_EQ(decoherence_budget(empty, n).survival, 1.0);

    PulseSchedule s;
    s.n_atoms = 1;
    Segment idle;
    idle.duration_s = 5.0;
    s.segments.push_back(idle);
    EXPECT_NEAR(decoherence_budget(s, n).survival, std::exp(-1.0), 1e-12);

    // Two atoms in 3P2 for 125 ms with scattering switched off.
    n.photon_scattering_rate_hz = 0.0;
    PulseSchedule m;
    m.n_atoms = 2;
    Segment hold;
    hold.duration_s = 0.125;
    hold.metastable_atom_seconds = 2 * 0.125;
    m.segments.push_back(hold);
    EXPECT_NEAR(decoherence_budget(m, n).survival, std::exp(-2 * 0.125 / 15.0), 1e-12);
    EXPECT_NEAR(decoherence_budget(m, n).survival, 0.983, 1e-3);
}

TEST(Feasibility, ReportItems) {
    const auto r = feasibility_report();
    EXPECT_TRUE(r.all_pass());
    EXPECT_NEAR(r.pi_pulse_intensity_w_per_m2, 4.82e4, 0.2 * 4.82e4);
    EXPECT_NEAR(r.lattice.depth_uk, 10.0, 1.5);
    EXPECT_GT(r.scattering_rate_hz, 0.2 / 3);
    EXPECT_LT(r.scattering_rate_hz, 0.2 * 3);
}
