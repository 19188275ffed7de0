// Acceptance checks. Prints one PASS/FAIL line per criterion; `acceptance N`
// runs criterion N only. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "ybqc/report_io.hpp"

#include "oracles.hpp"

using namespace ybqc;
namespace c = ybqc::constants;

namespace {

constexpr double G = c::gauss;

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty())
            detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

std::string num(double x, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

bool within_rel(double x, double target, double tol) { return std::abs(x - target) <= tol * std::abs(target); }
bool within_factor(double x, double target, double f) { return std::abs(x) >= target / f && std::abs(x) <= target * f; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ 1

Outcome nuclear_ddi() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const AtomParams p;
    const double mn = p.nuclear_moment_mu_n * c::nuclear_magneton;
    const double v = std::abs(dipole_coupling_per_moment2(266e-9, 0.0) * mn * mn);
    const double t = seconds_since(t0);
    o.check(within_rel(v, 50e-9, 0.5), "nuclear pair " + num(v * 1e9) + " nHz vs 50 nHz +-50%");
    o.check(t < 1.0, "runtime " + num(t) + " s");
    return o;
}

// ------------------------------------------------------------------ 2

Outcome electronic_ddi() {
    Outcome o;
    const AtomParams p;
    const double m3 = 3.0 * c::bohr_magneton;
    const double v = dipole_coupling_per_moment2(266e-9, 0.0) * m3 * m3;
    const double ref = oracle::dipole_pair_hz(3 * 9.2740100783e-24, 3 * 9.2740100783e-24, 266e-9, 0.0);
    o.check(within_factor(v, 10.0, 1.5), "3 muB pair |" + num(v) + "| Hz vs 10 Hz x/1.5");
    o.check(within_rel(v, ref, 1e-10), "oracle " + num(ref, 12));

    const auto m = auxiliary_qubit_moments(p);
    const double shift = pair_levels(266e-9, 0.0, m).shift_10_11_vs_00_01_hz;
    const double ref_shift = oracle::dipole_pair_hz(m.one, m.one, 266e-9, 0.0) -
                             oracle::dipole_pair_hz(m.one, m.zero, 266e-9, 0.0) -
                             oracle::dipole_pair_hz(m.zero, m.one, 266e-9, 0.0) +
                             oracle::dipole_pair_hz(m.zero, m.zero, 266e-9, 0.0);
    o.check(within_factor(shift, 40.0, 1.5), "CNOT shift |" + num(shift) + "| Hz vs 40 Hz x/1.5");
    o.check(within_rel(shift, ref_shift, 1e-10), "oracle " + num(ref_shift, 12));
    return o;
}

// ------------------------------------------------------------------ 3

Outcome addressing_plan() {
    Outcome o;
    const AtomParams p;
    const LatticeGeometry g{10, 10, 1};
    const auto cfg = plan_gradients(g, 1e3, p);
    const double gx = cfg.gx_tesla_per_m / c::gauss_per_cm, gy = cfg.gy_tesla_per_m / c::gauss_per_cm;
    o.check(within_rel(gx, 10.0, 0.25), "Gx " + num(gx) + " G/cm");
    o.check(within_rel(gy, 100.0, 0.25), "Gy " + num(gy) + " G/cm");
    o.check(validate_gradients(g, cfg).fields_unique, "exhaustive uniqueness");
    // Brute-force smallest line separation over all site pairs.
    const auto t = default_addressed_transition(p);
    const auto sites = g.plane(0);
    double gap = INFINITY;
    for (std::size_t a = 0; a < sites.size(); ++a)
        for (std::size_t b = a + 1; b < sites.size(); ++b)
            gap = std::min(gap, std::abs(transition_frequency_hz(p, t.two_mi, t.excited, site_field(g, cfg, sites[a])) -
                                         transition_frequency_hz(p, t.two_mi, t.excited, site_field(g, cfg, sites[b]))));
    o.check(gap >= 1e3 * (1 - 1e-9), "min gap " + num(gap, 8) + " Hz");
    return o;
}

// ------------------------------------------------------------------ 4

Outcome three_photon_operating_point() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = calibrate_hyperfine_a(AtomParams{}, 20e6, 650 * G);
    const auto d = three_photon_detunings(p, 650 * G);
    o.check(within_rel(std::abs(d.delta1_hz()), 20e6, 0.25) && within_rel(std::abs(d.delta2_hz()), 20e6, 0.25),
            "A = " + num(p.hyperfine_a_3p2_hz / 1e6, 6) + " MHz: Delta1 " + num(d.delta1_hz() / 1e6) +
                " MHz, Delta2 " + num(d.delta2_hz() / 1e6) + " MHz");
    const auto drv = calibrate_three_photon_drive(p, 650 * G, c::two_pi * 985e3);
    const auto osc = simulate_ladder_oscillation(drv);
    o.check(within_rel(osc.pi_time_s, 1e-3, 0.25), "pi time " + num(osc.pi_time_s * 1e3) + " ms");
    o.check(osc.leakage <= 0.015, "leakage " + num(osc.leakage));
    // Same rotation through the register engine.
    auto reg = RegisterState::product(LatticeGeometry{1, 1, 1}, {{0, 0, 0}}, p, 650 * G,
                                      {RegisterState::basis(Level::EMinus3)});
    const auto rep = single_qubit_gate(reg, {0, 0, 0}, c::pi, 0.0, 650 * G, c::two_pi * 985e3, NoiseParams::off());
    o.check(rep.leakage <= 0.015 && reg.population(0, Level::EPlus3) > 0.98,
            "engine leakage " + num(rep.leakage) + ", P(d) " + num(reg.population(0, Level::EPlus3)));
    const double t = seconds_since(t0);
    o.check(t < 60.0, "runtime " + num(t) + " s");
    return o;
}

// ------------------------------------------------------------------ 5

Outcome effective_formula() {
    Outcome o;
    const auto p = calibrate_hyperfine_a(AtomParams{}, 20e6, 650 * G);
    const auto d = three_photon_detunings(p, 650 * G);
    const double dmin = std::min(std::abs(d.delta1_rad_s), std::abs(d.delta2_rad_s));
    int points = 0;
    for (double khz : {100.0, 300.0, 985.0, 1500.0, 2000.0}) {
        const double omega = c::two_pi * khz * 1e3;
        if (omega / dmin > 0.1 + 1e-12)
            continue;
        const auto drv = calibrate_three_photon_drive(p, 650 * G, omega);
        const auto osc = simulate_ladder_oscillation(drv);
        const double sim = c::pi / osc.pi_time_s;
        const double formula = std::pow(omega, 3) / (4.0 * std::abs(d.delta1_rad_s * d.delta2_rad_s));
        ++points;
        o.check(within_rel(sim, formula, 0.15), num(khz) + " kHz: " + num(sim / formula, 5) + "x");
    }
    o.check(points >= 5, std::to_string(points) + " points with Omega/Delta <= 0.1");
    return o;
}

// ------------------------------------------------------------------ 6

Outcome intensity() {
    Outcome o;
    const AtomParams p;
    const double i = pi_pulse_intensity(100e-6, p.linewidth_1s0_3p2_hz, p.wavelength_1s0_3p2_m);
    o.check(within_rel(i, 4.82e4, 0.2), num(i) + " W/m^2 vs 4.82e4");
    return o;
}

// ------------------------------------------------------------------ 7

Outcome lattice() {
    Outcome o;
    const AtomParams p;
    const auto r = lattice_depth_report(50.0, p);
    o.check(within_rel(r.depth_uk, 10.0, 0.15), "depth " + num(r.depth_uk) + " uK");
    const double gsc = scattering_rate(r.depth_uk, p);
    o.check(within_factor(gsc, 0.2, 3.0), "scattering " + num(gsc) + " Hz vs 0.2 x/3");
    return o;
}

// ------------------------------------------------------------------ 8

struct CnotRun {
    double fidelity = 0.0;
    double conditionality = 0.0;
};

CnotRun run_compiled_cnot(double dipole_scale) {
    const LatticeGeometry g{1, 1, 2};
    const AtomParams p;
    const NoiseParams noise;
    CompileOptions opt;
    opt.gradient = plan_gradients(g, 1e3, p);
    std::istringstream in("CNOT 0 0 0 0 0 1\n");
    const auto sched = compile_circuit(parse_circuit(in), g, p, noise, opt);
    const Level lv[2] = {Level::GroundMinus, Level::GroundPlus};
    CnotRun out;
    double flip[2] = {0.0, 0.0};
    for (int input = 0; input < 4; ++input) {
        const int ci = input >> 1, ti = input & 1;
        auto reg = RegisterState::product(g, sched.active_sites, p, sched.reference_field_tesla,
                                          {RegisterState::basis(lv[ci]), RegisterState::basis(lv[ti])});
        reg.dipole_scale = dipole_scale;
        run_schedule(sched, reg, noise, std::nullopt);
        const int ideal_t = ci ? 1 - ti : ti;
        out.fidelity += std::norm(reg.amplitudes()(reg.basis_index({lv[ci], lv[ideal_t]}))) / 4.0;
        flip[ci] += std::norm(reg.amplitudes()(reg.basis_index({lv[ci], lv[1 - ti]}))) / 2.0;
    }
    out.conditionality = flip[1] - flip[0];
    return out;
}

Outcome end_to_end_cnot() {
    Outcome o;
    const auto on = run_compiled_cnot(1.0);
    o.check(on.fidelity > 0.9, "truth-table fidelity " + num(on.fidelity));
    const auto off = run_compiled_cnot(0.0);
    o.check(std::abs(off.conditionality) < 0.05,
            "conditionality " + num(on.conditionality) + " -> " + num(off.conditionality) + " without dipole shift");
    return o;
}

// ------------------------------------------------------------------ 9

Outcome properties() {
    Outcome o;
    const AtomParams p;

    {   // Norm conservation over compiled schedules.
        const char* circuits[] = {"X 0 0 0 3.141592653589793\n", "CNOT 0 0 0 0 0 1\n",
                                  "X 0 0 0 1.5707963267948966\nCNOT 0 0 0 0 0 1\n",
                                  "X 0 0 1 3.141592653589793\nMEAS 0 0 1\n"};
        const LatticeGeometry g{1, 1, 2};
        CompileOptions opt;
        opt.gradient = plan_gradients(g, 1e3, p);
        double worst = 0.0;
        for (const char* text : circuits)
            for (bool noisy : {false, true}) {
                NoiseParams n;
                n.enabled = noisy;
                std::istringstream in(text);
                const auto s = compile_circuit(parse_circuit(in), g, p, n, opt);
                auto reg = initial_register(s, g, p);
                run_schedule(s, reg, n, 5);
                worst = std::max(worst, std::abs((noisy ? reg.accounted_probability() : reg.norm2()) - 1.0));
            }
        o.check(worst < 1e-9, "norm drift " + num(worst, 2));
    }
    {   // Blockwise vs dense diagonalisation.
        double worst = 0.0;
        for (double bg : {0.0, 10.0, 100.0, 650.0, 5000.0, 20000.0}) {
            const auto dense = oracle::dense_3p2_energies(p, bg * G);
            std::vector<double> e;
            for (const auto& l : zeeman_spectrum(p, bg * G).levels)
                e.push_back(l.energy_hz);
            std::sort(e.begin(), e.end());
            for (int k = 0; k < 10; ++k)
                worst = std::max(worst, std::abs(e[k] - dense(k)) / dense.cwiseAbs().maxCoeff());
        }
        o.check(worst < 1e-9, "eigensolver mismatch " + num(worst, 2));
    }
    {   // Detuned Rabi.
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 0.0;
        for (int n = 0; n < 50; ++n) {
            Pulse pl;
            pl.transition = TransitionKind::GroundRf;
            pl.rabi_rad_s = c::two_pi * (1.0 + 2000.0 * u(rng));
            pl.detuning_rad_s = pl.rabi_rad_s * (6.0 * u(rng) - 3.0);
            pl.duration_s = 8.0 * c::pi * u(rng) / pl.rabi_rad_s;
            pl.target_sites = {{0, 0, 0}};
            const double b = (50.0 + 600.0 * u(rng)) * G;
            const auto m = single_atom_propagator(p, pl, b, b, b);
            worst = std::max(worst, std::abs(std::norm(m(idx(Level::GroundMinus), idx(Level::GroundPlus))) -
                                             oracle::detuned_rabi(pl.rabi_rad_s, pl.detuning_rad_s, pl.duration_s)));
        }
        o.check(worst < 1e-8, "detuned Rabi error " + num(worst, 2));
    }
    {   // Measurement statistics.
        const LatticeGeometry g{1, 1, 1};
        const NoiseParams n;
        auto reg = RegisterState::product(g, {{0, 0, 0}}, p, 100 * G,
                                          {RegisterState::qubit(Level::GroundMinus, Level::GroundPlus, M_SQRT1_2,
                                                                M_SQRT1_2)});
        const auto segs = readout_segments(reg.sites(), {0, 0, 0}, n, MeasureOptions{});
        for (const auto& s : segs.prepare)
            evolve(reg, s, n, default_dt(s.pulse, 400));
        Segment idle = segs.detect;
        idle.pulse.transition = TransitionKind::Idle;
        evolve(reg, idle, n, idle.pulse.duration_s);
        std::mt19937_64 rng(20240601);
        int ones = 0;
        const int trials = 10000;
        for (int t = 0; t < trials; ++t) {
            RegisterState r = reg;
            ones += detect_and_collapse(r, {0, 0, 0}, n, rng).outcome;
        }
        const double f = ones / double(trials);
        o.check(std::abs(f - 0.5) <= 0.02, "P(1) " + num(f) + " over 1e4 trials");
    }
    {   // Byte-identical reruns.
        const auto dir = std::filesystem::temp_directory_path() / "ybqc_acceptance";
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "c.circ") << "X 0 0 0 1.5707963267948966\nCNOT 0 0 0 0 0 1\nMEAS 0 0 0\nMEAS 0 0 1\n";
        Scenario s;
        s.pipeline = {"levels", "detunings", "ddi", "address", "plan", "feasibility", "compile"};
        s.geometry = {1, 1, 2};
        s.sweep_steps = 200;
        s.circuit_path = (dir / "c.circ").string();
        s.seed = 42;
        const auto a = run_pipeline(s);
        const auto b = run_pipeline(s);
        write_artifacts((dir / "a").string(), a);
        write_artifacts((dir / "b").string(), b);
        bool same = a == b;
        for (const auto& [name, _] : a) {
            std::ifstream fa(dir / "a" / name, std::ios::binary), fb(dir / "b" / name, std::ios::binary);
            std::stringstream sa, sb;
            sa << fa.rdbuf();
            sb << fb.rdbuf();
            same = same && sa.str() == sb.str();
        }
        o.check(same, std::to_string(a.size()) + " artifacts identical on rerun");
    }
    return o;
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"nuclear dipole-dipole coupling", nuclear_ddi},
        {"electronic dipole-dipole coupling and CNOT shift", electronic_ddi},
        {"10x10 addressing plan", addressing_plan},
        {"three-photon operating point", three_photon_operating_point},
        {"effective three-photon Rabi frequency", effective_formula},
        {"pi-pulse intensity", intensity},
        {"lattice depth and scattering", lattice},
        {"end-to-end CNOT", end_to_end_cnot},
        {"property suites", properties},
    };
    int only = 0;
    if (argc > 1)
        only = std::atoi(argv[1]);
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only && only != static_cast<int>(k + 1))
            continue;
        Outcome res;
        try {
            res = criteria[k].second();
        } catch (const std::exception& e) {
            res.pass = false;
            res.detail = std::string("exception: ") + e.what();
        }
        failed += !res.pass;
        std::printf("%s criterion %zu (%s): %s\n", res.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                    res.detail.c_str());
    }
    return failed;
}
