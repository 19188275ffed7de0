#pragma once

// Register protocols built on evolve(): state transfer, layer selection, the
// three-photon single-qubit gate, the dipole-shift CNOT and readout.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ybqc/atomic_structure.hpp"
#include "ybqc/dipole_interaction.hpp"
#include "ybqc/errors.hpp"
#include "ybqc/lattice_addressing.hpp"
#include "ybqc/propagator.hpp"
#include "ybqc/pulse.hpp"
#include "ybqc/register_state.hpp"
#include "ybqc/three_photon.hpp"

namespace ybqc {

struct GateReport {
    std::string gate;
    double duration_s = 0.0;
    double leakage = 0.0;    // population left outside the target subspace
    double decay_loss = 0.0; // norm lost to noise channels during the gate
    double infidelity = 0.0;
    std::map<std::string, double> values; // unit-suffixed keys
    std::vector<std::vector<double>> truth_table; // [input][output] probabilities
    std::vector<std::string> warnings;
};

inline double pi_pulse_rabi(PulseShape shape, double duration_s) {
    if (!(duration_s > 0.0))
        throw ConfigError("pi pulse needs a positive duration");
    return constants::pi / (envelope_mean(shape) * duration_s);
}

inline double default_dt(const Pulse& p, int substeps) {
    return p.duration_s > 0.0 ? p.duration_s / substeps : 1.0;
}

// ---------------------------------------------------------------- transfer

enum class TransferDirection { ToMetastable, ToGround };

struct TransferOptions {
    double duration_s = 4e-3;
    PulseShape shape = PulseShape::Blackman;
    QubitBranches branches = QubitBranches::Both;
    double resolvability_multiple = 1.0; // required gap in units of the spectral width
    bool check_resolvability = true;
    int substeps = 400;
};

inline Segment transfer_segment(const std::vector<Site>& sites, const GradientConfig& cfg,
                                const TransferOptions& opt, std::string label) {
    Segment s;
    s.gradient = cfg;
    s.label = std::move(label);
    s.pulse.transition = TransitionKind::OpticalTransfer;
    s.pulse.rabi_rad_s = pi_pulse_rabi(opt.shape, opt.duration_s);
    s.pulse.duration_s = opt.duration_s;
    s.pulse.shape = opt.shape;
    s.pulse.branches = opt.branches;
    s.pulse.target_sites = sites;
    return s;
}

/// Smallest gap (Hz) between any tone of a target site and any optical qubit
/// line of an untargeted active atom; +inf when there is none.
inline std::pair<double, std::pair<Site, Site>> transfer_min_gap(const RegisterState& reg, const Segment& seg) {
    std::pair<double, std::pair<Site, Site>> best{std::numeric_limits<double>::infinity(), {}};
    const auto& p = reg.params();
    Pulse both = seg.pulse;
    both.branches = QubitBranches::Both;
    for (const auto& t : seg.pulse.target_sites) {
        const auto tones = site_tones(seg.pulse, level_energies_hz(p, site_field(reg.geometry(), seg.gradient, t)));
        for (const auto& a : reg.sites()) {
            if (std::find(seg.pulse.target_sites.begin(), seg.pulse.target_sites.end(), a) !=
                seg.pulse.target_sites.end())
                continue;
            const auto lines = site_tones(both, level_energies_hz(p, site_field(reg.geometry(), seg.gradient, a)));
            for (const auto& x : tones)
                for (const auto& y : lines) {
                    const double gap = std::abs(x.frequency_hz - y.frequency_hz);
                    if (gap < best.first)
                        best = {gap, {t, a}};
                }
        }
    }
    return best;
}

struct TransferReport {
    TransferDirection direction = TransferDirection::ToMetastable;
    std::vector<Site> sites;
    double duration_s = 0.0;
    double spectral_width_hz = 0.0;
    double min_gap_hz = std::numeric_limits<double>::infinity();
    std::vector<double> relative_phase_rad; // per target: branch(+) phase minus branch(-) phase
    std::vector<double> transfer_probability; // per target: worst driven branch
};

inline TransferReport transfer(RegisterState& reg, const std::vector<Site>& sites, TransferDirection dir,
                               const GradientConfig& cfg, const NoiseParams& noise,
                               const TransferOptions& opt = {}) {
    for (const auto& s : sites)
        if (!reg.geometry().contains(s))
            throw IndexError("transfer target " + to_string(s) + " outside lattice");
    TransferReport rep;
    rep.direction = dir;
    rep.sites = sites;
    if (sites.empty())
        return rep;
    const auto seg = transfer_segment(sites, cfg, opt, dir == TransferDirection::ToMetastable ? "transfer_up"
                                                                                             : "transfer_down");
    rep.spectral_width_hz = spectral_width_hz(opt.shape, opt.duration_s);
    const auto gap = transfer_min_gap(reg, seg);
    rep.min_gap_hz = gap.first;
    if (opt.check_resolvability && gap.first < opt.resolvability_multiple * rep.spectral_width_hz)
        throw AddressingError("sites " + to_string(gap.second.first) + " and " + to_string(gap.second.second) +
                              " are not resolvable: gap " + std::to_string(gap.first) + " Hz < " +
                              std::to_string(opt.resolvability_multiple * rep.spectral_width_hz) + " Hz");

    const auto& p = reg.params();
    for (const auto& s : sites) {
        const double b = site_field(reg.geometry(), cfg, s);
        const AtomMatrix u = single_atom_propagator(p, seg.pulse, b, b, reg.reference_field(), NoiseParams::off(),
                                                    default_dt(seg.pulse, opt.substeps));
        const int gm = idx(Level::GroundMinus), gp = idx(Level::GroundPlus);
        const int a = idx(Level::EMinus3), d = idx(Level::EPlus3);
        cplx minus, plus;
        if (dir == TransferDirection::ToMetastable) {
            minus = u(a, gm);
            plus = u(d, gp);
        } else {
            minus = u(gm, a);
            plus = u(gp, d);
        }
        double prob = 1.0;
        if (opt.branches != QubitBranches::PlusOnly)
            prob = std::min(prob, std::norm(minus));
        if (opt.branches != QubitBranches::MinusOnly)
            prob = std::min(prob, std::norm(plus));
        rep.transfer_probability.push_back(prob);
        rep.relative_phase_rad.push_back(opt.branches == QubitBranches::Both ? std::arg(plus / minus) : 0.0);
    }
    evolve(reg, seg, noise, default_dt(seg.pulse, opt.substeps));
    rep.duration_s = segment_wall_time(reg.geometry(), p, seg);
    return rep;
}

// ---------------------------------------------------------- layer selection

struct LayerSelectionReport {
    int layer = 0;
    double selection_error = 0.0;           // 1 - prod_k P(atom k ends where it should)
    double max_unselected_excitation = 0.0; // 3P2 population of other layers after step 1
    double interlayer_separation_hz = 0.0;  // addressed-line offset between adjacent layers
    std::vector<double> correct_probability;
};

inline TransferOptions layer_selection_defaults() {
    TransferOptions o;
    o.duration_s = 1e-3;
    o.shape = PulseShape::Square;
    o.check_resolvability = false; // off-resonant transfer is measured, not forbidden
    return o;
}

/// Keep the atoms of layer `z_index`: transfer it to 3P2, blow away everything
/// still in 1S0, transfer back. Only the z gradient of `cfg` is applied.
inline LayerSelectionReport select_layer(RegisterState& reg, int z_index, const GradientConfig& cfg,
                                         const NoiseParams& noise,
                                         const TransferOptions& opt = layer_selection_defaults()) {
    const auto& geom = reg.geometry();
    if (z_index < 0 || z_index >= geom.n_z)
        throw IndexError("layer " + std::to_string(z_index) + " outside lattice (n_z = " +
                         std::to_string(geom.n_z) + ")");
    const GradientConfig gz = cfg.z_only();
    LayerSelectionReport rep;
    rep.layer = z_index;
    if (geom.n_z > 1) {
        const auto t = default_addressed_transition(reg.params());
        const int other = z_index + 1 < geom.n_z ? z_index + 1 : z_index - 1;
        rep.interlayer_separation_hz =
            std::abs(transition_frequency_hz(reg.params(), t.two_mi, t.excited, site_field(geom, gz, {0, 0, z_index})) -
                     transition_frequency_hz(reg.params(), t.two_mi, t.excited, site_field(geom, gz, {0, 0, other})));
    }

    TransferOptions o = opt;
    o.check_resolvability = false;
    o.branches = QubitBranches::Both;
    transfer(reg, geom.plane(z_index), TransferDirection::ToMetastable, gz, noise, o);
    for (int a = 0; a < reg.n_atoms(); ++a)
        if (reg.sites()[a].k != z_index)
            rep.max_unselected_excitation = std::max(
                rep.max_unselected_excitation,
                reg.population(a, {Level::EMinus3, Level::EMinus1, Level::EPlus1, Level::EPlus3}));
    blow_away(reg);
    transfer(reg, geom.plane(z_index), TransferDirection::ToGround, gz, noise, o);

    double keep = 1.0;
    for (int a = 0; a < reg.n_atoms(); ++a) {
        const double p = reg.sites()[a].k == z_index ? reg.population(a, {Level::GroundMinus, Level::GroundPlus})
                                                     : reg.population(a, Level::Lost);
        rep.correct_probability.push_back(p);
        keep *= p;
    }
    rep.selection_error = 1.0 - keep;
    return rep;
}

// ------------------------------------------------------- single-qubit gate

struct SingleQubitGateOptions {
    GradientConfig gradient;      // bias replaced by the gate field
    double warn_ratio = 0.1;      // warn when Omega / min|Delta| exceeds this
    double precondition_tol = 1e-3;
};

inline void require_auxiliary(const RegisterState& reg, int atom, double tol, const char* what) {
    const double aux = reg.population(atom, {Level::EMinus3, Level::EPlus3});
    const double lost = reg.population(atom, Level::Lost);
    const double total = reg.norm2() - lost;
    if (total > 0.0 && total - aux > tol * total)
        throw ProtocolError(std::string(what) + ": atom at " + to_string(reg.sites()[atom]) +
                            " is not in the 3P2 auxiliary qubit; transfer it first");
}

/// Segment driving the full a-b-c-d ladder of `site` for a rotation by `angle`
/// about the axis at azimuth `axis_rad`.
inline Segment ladder_segment(const ThreePhotonDrive& drv, const Site& site, double angle, double axis_rad,
                              const GradientConfig& cfg) {
    Segment s;
    s.gradient = cfg;
    s.label = "three_photon_gate";
    s.pulse.transition = TransitionKind::ThreePhotonLadder;
    s.pulse.rabi_rad_s = drv.rabi_rad_s;
    s.pulse.detuning_rad_s = drv.compensation_rad_s;
    s.pulse.phase_rad = (axis_rad - (drv.coupling_sign < 0 ? constants::pi : 0.0)) / 3.0;
    s.pulse.duration_s = angle / drv.dressed_rabi_rad_s;
    s.pulse.shape = PulseShape::Square;
    s.pulse.target_sites = {site};
    return s;
}

inline GateReport single_qubit_gate(RegisterState& reg, const Site& site, double angle, double axis_rad,
                                    double field_tesla, double rabi_rad_s, const NoiseParams& noise,
                                    const SingleQubitGateOptions& opt = {}) {
    const int atom = reg.atom_index(site);
    require_auxiliary(reg, atom, opt.precondition_tol, "single-qubit gate");
    if (angle < 0.0) {
        angle = -angle;
        axis_rad += constants::pi;
    }
    GradientConfig cfg = opt.gradient;
    cfg.bias_tesla = field_tesla;
    const double b = site_field(reg.geometry(), cfg, site);
    const auto drv = calibrate_three_photon_drive(reg.params(), b, rabi_rad_s);

    GateReport rep;
    rep.gate = "three_photon_rotation";
    rep.values["rotation_target_rad"] = angle;
    rep.values["axis_rad"] = axis_rad;
    rep.values["field_gauss"] = b / constants::gauss;
    rep.values["rabi_hz"] = rabi_rad_s / constants::two_pi;
    rep.values["delta1_hz"] = drv.detunings.delta1_hz();
    rep.values["delta2_hz"] = drv.detunings.delta2_hz();
    rep.values["light_shift_compensation_hz"] = drv.compensation_rad_s / constants::two_pi;
    rep.values["effective_rabi_formula_hz"] = drv.effective_formula_rad_s / constants::two_pi;
    rep.values["dressed_rabi_hz"] = drv.dressed_rabi_rad_s / constants::two_pi;
    rep.values["rabi_over_min_delta"] = drv.detuning_ratio();
    if (drv.detuning_ratio() > opt.warn_ratio)
        rep.warnings.push_back("Omega/min|Delta| = " + std::to_string(drv.detuning_ratio()) +
                               " exceeds " + std::to_string(opt.warn_ratio) + "; effective model unreliable");
    if (angle == 0.0)
        return rep;

    const auto seg = ladder_segment(drv, site, angle, axis_rad, cfg);
    rep.duration_s = seg.pulse.duration_s;
    const AtomMatrix u =
        single_atom_propagator(reg.params(), seg.pulse, b, b, reg.reference_field(), NoiseParams::off());
    const int a = idx(Level::EMinus3), d = idx(Level::EPlus3);
    const double from_a = std::norm(u(a, a)) + std::norm(u(d, a));
    const double from_d = std::norm(u(a, d)) + std::norm(u(d, d));
    rep.leakage = std::max(1.0 - from_a, 1.0 - from_d);
    const double achieved = 2.0 * std::atan2(std::abs(u(d, a)), std::abs(u(a, a)));
    rep.values["rotation_achieved_rad"] = achieved;
    rep.values["gate_time_s"] = rep.duration_s;

    const double before = reg.leaked();
    evolve(reg, seg, noise, rep.duration_s);
    rep.decay_loss = reg.leaked() - before;
    const double ideal = std::sin(angle / 2.0);
    const double got = std::abs(u(d, a));
    rep.infidelity = std::min(1.0, rep.leakage + std::abs(got * got - ideal * ideal) + rep.decay_loss);
    return rep;
}

// ---------------------------------------------------------------------- CNOT

struct CnotOptions {
    GradientConfig gradient;
    std::optional<double> pulse_rabi_rad_s; // default: |conditional shift| / 10
    bool allow_non_axial = false;           // pairs not stacked along z
    bool compute_truth_table = true;
    double precondition_tol = 1e-3;
};

inline bool nearest_neighbours(const Site& a, const Site& b) {
    return std::abs(a.i - b.i) + std::abs(a.j - b.j) + std::abs(a.k - b.k) == 1;
}

/// Conditional shift (rad/s) of the target a->d line when the control is in d
/// rather than a, at nominal dipole strength.
struct CnotCalibration {
    double shift_rad_s = 0.0;       // [E11 - E10] - [E01 - E00]
    double drive_detuning_rad_s = 0.0; // tone offset from the bare target a->d line
    double rabi_rad_s = 0.0;
    double duration_s = 0.0;
    double theta_rad = 0.0;
};

inline CnotCalibration calibrate_cnot(const LatticeGeometry& geom, const AtomParams& p, double reference_field,
                                      const Site& control, const Site& target,
                                      std::optional<double> rabi_rad_s) {
    const LevelArray mu = level_moments(p, reference_field);
    const Eigen::Vector3d sep = geom.position(target) - geom.position(control);
    const double k = constants::two_pi * dipole_coupling_per_moment2(sep);
    const int a = idx(Level::EMinus3), d = idx(Level::EPlus3);
    CnotCalibration c;
    c.theta_rad = std::acos(std::abs(sep.z()) / sep.norm());
    c.shift_rad_s = k * (mu[d] - mu[a]) * (mu[d] - mu[a]);
    c.drive_detuning_rad_s = k * mu[d] * (mu[d] - mu[a]);
    c.rabi_rad_s = rabi_rad_s.value_or(std::abs(c.shift_rad_s) / 10.0);
    if (!(c.rabi_rad_s > 0.0))
        throw ConfigError("CNOT pulse Rabi frequency must be > 0");
    c.duration_s = constants::pi / c.rabi_rad_s;
    return c;
}

inline Segment cnot_segment(const CnotCalibration& c, const Site& target, const GradientConfig& cfg) {
    Segment s;
    s.gradient = cfg;
    s.label = "cnot_pi_pulse";
    s.pulse.transition = TransitionKind::EffectiveThreePhoton;
    s.pulse.rabi_rad_s = c.rabi_rad_s;
    s.pulse.detuning_rad_s = c.drive_detuning_rad_s;
    s.pulse.duration_s = c.duration_s;
    s.pulse.shape = PulseShape::Square;
    s.pulse.target_sites = {target};
    return s;
}

inline void check_cnot_geometry(const Site& control, const Site& target, bool allow_non_axial) {
    if (control == target)
        throw GeometryError("CNOT control and target coincide");
    if (!nearest_neighbours(control, target))
        throw GeometryError("CNOT needs nearest-neighbour sites, got " + to_string(control) + " and " +
                            to_string(target));
    if (!allow_non_axial && control.k == target.k)
        throw GeometryError("CNOT sites " + to_string(control) + ", " + to_string(target) +
                            " are not stacked along the quantisation axis (set allow_non_axial to override)");
}

inline double off_resonant_rabi_probability(double rabi, double detuning, double t) {
    const double w2 = rabi * rabi + detuning * detuning;
    if (w2 == 0.0)
        return 0.0;
    const double s = std::sin(std::sqrt(w2) * t / 2.0);
    return rabi * rabi / w2 * s * s;
}

/// CNOT on the auxiliary qubits of `control` and `target` by a pi pulse on the
/// dipole-shifted |10> <-> |11> line.
inline GateReport cnot(RegisterState& reg, const Site& control, const Site& target, const NoiseParams& noise,
                       const CnotOptions& opt = {}) {
    check_cnot_geometry(control, target, opt.allow_non_axial);
    const int ac = reg.atom_index(control), at = reg.atom_index(target);
    require_auxiliary(reg, ac, opt.precondition_tol, "CNOT");
    require_auxiliary(reg, at, opt.precondition_tol, "CNOT");
    const auto cal =
        calibrate_cnot(reg.geometry(), reg.params(), reg.reference_field(), control, target, opt.pulse_rabi_rad_s);
    const auto seg = cnot_segment(cal, target, opt.gradient);

    GateReport rep;
    rep.gate = "cnot";
    rep.duration_s = cal.duration_s;
    rep.values["conditional_shift_hz"] = cal.shift_rad_s / constants::two_pi;
    rep.values["drive_detuning_hz"] = cal.drive_detuning_rad_s / constants::two_pi;
    rep.values["pulse_rabi_hz"] = cal.rabi_rad_s / constants::two_pi;
    rep.values["pair_angle_rad"] = cal.theta_rad;
    rep.values["dipole_scale"] = reg.dipole_scale;
    rep.values["off_resonant_excitation_formula"] =
        off_resonant_rabi_probability(cal.rabi_rad_s, cal.shift_rad_s, cal.duration_s);

    {
        // The tone reaches every atom; the control's own a-d line must sit well away from it.
        const auto tone = site_tones(seg.pulse, level_energies_hz(reg.params(), site_field(reg.geometry(), opt.gradient, target)));
        const auto ec = level_energies_hz(reg.params(), site_field(reg.geometry(), opt.gradient, control));
        const double gap = std::abs(tone.front().frequency_hz - (ec[idx(Level::EPlus3)] - ec[idx(Level::EMinus3)]));
        rep.values["control_line_gap_hz"] = gap;
        if (gap < 10.0 * cal.rabi_rad_s / constants::two_pi)
            rep.warnings.push_back("control atom's a-d line is within 10 Rabi frequencies of the CNOT drive; "
                                   "an addressing gradient is needed");
    }
    if (opt.compute_truth_table) {
        const Level lv[2] = {Level::EMinus3, Level::EPlus3};
        double fid = 0.0, loss = 0.0, leak = 0.0;
        rep.truth_table.assign(4, std::vector<double>(4, 0.0));
        for (int in = 0; in < 4; ++in) {
            auto probe = RegisterState::product(reg.geometry(), {control, target}, reg.params(),
                                                reg.reference_field(),
                                                {RegisterState::basis(lv[in >> 1]), RegisterState::basis(lv[in & 1])});
            probe.dipole_scale = reg.dipole_scale;
            evolve(probe, seg, noise, cal.duration_s);
            double inside = 0.0;
            for (int out = 0; out < 4; ++out) {
                const double p = std::norm(probe.amplitudes()(probe.basis_index({lv[out >> 1], lv[out & 1]})));
                rep.truth_table[in][out] = p;
                inside += p;
            }
            const int ideal = (in >> 1) ? (in ^ 1) : in;
            fid += rep.truth_table[in][ideal] / 4.0;
            loss += probe.leaked() / 4.0;
            leak += (probe.norm2() - inside) / 4.0;
        }
        const double flip_c1 = 0.5 * (rep.truth_table[2][3] + rep.truth_table[3][2]);
        const double flip_c0 = 0.5 * (rep.truth_table[0][1] + rep.truth_table[1][0]);
        rep.values["truth_table_fidelity"] = fid;
        rep.values["flip_probability_control_1"] = flip_c1;
        rep.values["flip_probability_control_0"] = flip_c0;
        rep.values["off_resonant_excitation_simulated"] = rep.truth_table[0][1];
        rep.values["conditionality"] = flip_c1 - flip_c0;
        rep.infidelity = 1.0 - fid;
        rep.decay_loss = loss;
        rep.leakage = leak;
        if (flip_c1 - flip_c0 < 0.5)
            rep.warnings.push_back("conditionality lost: target flipping does not depend on the control");
    }
    evolve(reg, seg, noise, cal.duration_s);
    return rep;
}

// ------------------------------------------------------------- measurement

struct DetectionReport {
    Site site;
    int outcome = 0;              // 1: atom fluoresced (found in 1S0 m_I=+1/2)
    double probability_one = 0.0; // conditional on the atom not being lost already
    double scattered_photons = 0.0;
    double branching_survival = 1.0; // (1 - b)^N
    bool branching_loss_exceeds_1pct = false;
    bool lost_during_detection = false;
};

struct MeasureOptions {
    GradientConfig gradient; // addressing gradient for the selective return
    TransferOptions transfer;
    bool strict_deterministic = true; // seed required
    bool restore = true;              // return all atoms to 1S0 afterwards
};

inline double branching_survival(const NoiseParams& noise) {
    const double n = noise.mot_scattering_rate_hz * noise.detection_time_s;
    return std::pow(1.0 - noise.branching_1p1_to_3d, n);
}

/// Readout segments for `site`: transfer everything up (no gradient), return the
/// m_I = +1/2 branch of `site`, detect, then return everything.
struct ReadoutSegments {
    std::vector<Segment> prepare;
    Segment detect;
    std::vector<Segment> restore;
};

inline ReadoutSegments readout_segments(const std::vector<Site>& active, const Site& site,
                                        const NoiseParams& noise, const MeasureOptions& opt) {
    ReadoutSegments r;
    TransferOptions all = opt.transfer;
    all.branches = QubitBranches::Both;
    r.prepare.push_back(transfer_segment(active, opt.gradient.without_gradients(), all, "readout_transfer_all_up"));
    TransferOptions plus = opt.transfer;
    plus.branches = QubitBranches::PlusOnly;
    r.prepare.push_back(transfer_segment({site}, opt.gradient, plus, "readout_return_plus"));

    r.detect.gradient = opt.gradient;
    r.detect.label = "mot_detection";
    r.detect.pulse.transition = TransitionKind::Detect;
    r.detect.pulse.duration_s = noise.detection_time_s;
    r.detect.pulse.target_sites = {site};

    std::vector<Site> others;
    for (const auto& s : active)
        if (!(s == site))
            others.push_back(s);
    if (!others.empty())
        r.restore.push_back(transfer_segment(others, opt.gradient, all, "readout_return_others"));
    TransferOptions minus = opt.transfer;
    minus.branches = QubitBranches::MinusOnly;
    r.restore.push_back(transfer_segment({site}, opt.gradient, minus, "readout_return_minus"));
    return r;
}

/// Fluorescence detection of the 1S0 population at `site`: samples the
/// outcome, collapses the register and samples branching loss to 3D.
inline DetectionReport detect_and_collapse(RegisterState& reg, const Site& site, const NoiseParams& noise,
                                           std::mt19937_64& rng) {
    const int atom = reg.atom_index(site);
    DetectionReport rep;
    rep.site = site;
    const double total = reg.norm2();
    if (!(total > 0.0))
        throw ProtocolError("cannot measure an empty register");
    const double p_ground = reg.population(atom, {Level::GroundMinus, Level::GroundPlus});
    rep.probability_one = p_ground / total;
    rep.scattered_photons = noise.mot_scattering_rate_hz * noise.detection_time_s;
    rep.branching_survival = noise.enabled ? branching_survival(noise) : 1.0;
    rep.branching_loss_exceeds_1pct = 1.0 - rep.branching_survival > 0.01;

    std::uniform_real_distribution<double> u(0.0, 1.0);
    rep.outcome = u(rng) < rep.probability_one ? 1 : 0;
    auto& psi = reg.amplitudes();
    const Eigen::Index st = reg.stride(atom);
    for (Eigen::Index i = 0; i < reg.dim(); ++i) {
        const bool ground = is_ground(reg.level_of(i, atom));
        if (ground != (rep.outcome == 1))
            psi(i) = 0.0;
    }
    psi *= std::sqrt(total / psi.squaredNorm());
    if (rep.outcome == 1 && u(rng) > rep.branching_survival) {
        rep.lost_during_detection = true;
        for (Eigen::Index i = 0; i < reg.dim(); ++i) {
            const int l = reg.level_of(i, atom);
            if (is_ground(l)) {
                psi(i + (idx(Level::Lost) - l) * st) += psi(i);
                psi(i) = 0.0;
            }
        }
    }
    return rep;
}

/// Detection segment: the register idles for the detection time, then the
/// fluorescence is sampled.
inline DetectionReport run_detection(RegisterState& reg, const Segment& seg, const NoiseParams& noise,
                                     std::mt19937_64& rng) {
    if (seg.pulse.target_sites.size() != 1)
        throw ProtocolError("detection segment must target exactly one site");
    Segment idle = seg;
    idle.pulse.transition = TransitionKind::Idle;
    if (idle.pulse.duration_s > 0.0)
        evolve(reg, idle, noise, idle.pulse.duration_s);
    return detect_and_collapse(reg, seg.pulse.target_sites.front(), noise, rng);
}

inline std::mt19937_64 make_rng(std::optional<std::uint64_t> seed, bool strict) {
    if (seed)
        return std::mt19937_64(*seed);
    if (strict)
        throw ConfigError("measurement needs an explicit seed in strict deterministic mode");
    std::random_device rd;
    return std::mt19937_64((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
}

struct MeasurementResult {
    DetectionReport detection;
    double duration_s = 0.0;
};

inline MeasurementResult measure_qubit(RegisterState& reg, const Site& site, const NoiseParams& noise,
                                       std::optional<std::uint64_t> seed, const MeasureOptions& opt = {}) {
    auto rng = make_rng(seed, opt.strict_deterministic);
    reg.atom_index(site);
    const auto segs = readout_segments(reg.sites(), site, noise, opt);
    MeasurementResult res;
    auto run = [&](const Segment& s) {
        evolve(reg, s, noise, default_dt(s.pulse, opt.transfer.substeps));
        res.duration_s += segment_wall_time(reg.geometry(), reg.params(), s);
    };
    for (const auto& s : segs.prepare)
        run(s);
    res.detection = run_detection(reg, segs.detect, noise, rng);
    res.duration_s += segs.detect.pulse.duration_s;
    if (opt.restore)
        for (const auto& s : segs.restore)
            run(s);
    return res;
}

} // namespace ybqc
