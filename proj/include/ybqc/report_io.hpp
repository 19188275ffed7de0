#pragma once

// CSV/JSON emitters and the scenario pipeline. Artifacts are built in memory
// and written only when every step succeeded; manifest.json lists each file
// with its SHA-256.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "ybqc/atomic_structure.hpp"
#include "ybqc/circuit.hpp"
#include "ybqc/dipole_interaction.hpp"
#include "ybqc/feasibility.hpp"
#include "ybqc/lattice_addressing.hpp"
#include "ybqc/protocols.hpp"
#include "ybqc/scenario.hpp"
#include "ybqc/three_photon.hpp"

namespace ybqc {

using json = nlohmann::json;
using Artifacts = std::map<std::string, std::string>; // file name -> content

inline std::string fmt_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", x);
    return buf;
}

// ------------------------------------------------------------------- CSV

/// Rows at B_min + k (B_max - B_min)/steps, k = 1..steps.
inline std::string emit_detuning_curves(const AtomParams& p, double b_min_gauss, double b_max_gauss, int steps) {
    if (!(b_min_gauss >= 0.0) || !(b_max_gauss > b_min_gauss))
        throw ConfigError("detuning sweep needs 0 <= B_min < B_max");
    if (steps < 1)
        throw ConfigError("detuning sweep needs at least one step");
    std::ostringstream out;
    out << "B_gauss,delta1_hz,delta2_hz\n";
    const double h = (b_max_gauss - b_min_gauss) / steps;
    for (int k = 1; k <= steps; ++k) {
        const double b = b_min_gauss + k * h;
        const auto d = three_photon_detunings(p, b * constants::gauss);
        out << fmt_num(b) << ',' << fmt_num(d.delta1_hz()) << ',' << fmt_num(d.delta2_hz()) << '\n';
    }
    return out.str();
}

/// One row per site of `layer`, sorted by resonance frequency. Offsets are
/// relative to the addressed line at the bias field B0.
inline std::string emit_addressing_spectrum(const LatticeGeometry& geom, const GradientConfig& cfg,
                                            const AtomParams& p, int layer = 0) {
    const auto t = default_addressed_transition(p);
    auto map = resonance_map(geom, cfg, p, t, layer);
    const double f0 = transition_frequency_hz(p, t.two_mi, t.excited, cfg.bias_tesla);
    std::stable_sort(map.sites.begin(), map.sites.end(),
                     [](const SiteResonance& a, const SiteResonance& b) { return a.frequency_hz < b.frequency_hz; });
    std::ostringstream out;
    out << "i,j,B_gauss,f_offset_hz\n";
    for (const auto& s : map.sites)
        out << s.site.i << ',' << s.site.j << ',' << fmt_num(s.field_tesla / constants::gauss) << ','
            << fmt_num(s.frequency_hz - f0) << '\n';
    return out.str();
}

inline std::string emit_levels(const AtomParams& p, double field_gauss) {
    const auto spec = zeeman_spectrum(p, field_gauss * constants::gauss);
    std::ostringstream out;
    out << "m_f,branch,f_zero_field,energy_hz,moment_bohr\n";
    for (const auto& l : spec.levels)
        out << fmt_num(l.label.two_mf / 2.0) << ',' << to_string(l.label.branch) << ',' << fmt_num(l.two_f / 2.0)
            << ',' << fmt_num(l.energy_hz) << ',' << fmt_num(level_moment(l, p) / constants::bohr_magneton)
            << '\n';
    return out.str();
}

// ------------------------------------------------------------------ JSON

inline json to_json(const Site& s) { return json::array({s.i, s.j, s.k}); }

inline json to_json(const GradientConfig& g) {
    return {{"bias_gauss", g.bias_tesla / constants::gauss},
            {"gx_gauss_per_cm", g.gx_tesla_per_m / constants::gauss_per_cm},
            {"gy_gauss_per_cm", g.gy_tesla_per_m / constants::gauss_per_cm},
            {"gz_gauss_per_cm", g.gz_tesla_per_m / constants::gauss_per_cm},
            {"safety_factor", g.safety_factor}};
}

inline json to_json(const GateReport& r) {
    json j;
    j["gate"] = r.gate;
    j["duration_s"] = r.duration_s;
    j["leakage"] = r.leakage;
    j["decay_loss"] = r.decay_loss;
    j["infidelity"] = r.infidelity;
    j["values"] = r.values;
    if (!r.truth_table.empty())
        j["truth_table"] = r.truth_table;
    j["warnings"] = r.warnings;
    return j;
}

inline json to_json(const DetectionReport& d) {
    return {{"site", to_json(d.site)},
            {"outcome", d.outcome},
            {"probability_one", d.probability_one},
            {"scattered_photons", d.scattered_photons},
            {"branching_survival", d.branching_survival},
            {"branching_loss_exceeds_1pct", d.branching_loss_exceeds_1pct},
            {"lost_during_detection", d.lost_during_detection}};
}

inline json to_json(const DecoherenceBudget& b) {
    return {{"survival", b.survival},
            {"channel_survival", b.channel_survival},
            {"total_time_s", b.total_time_s},
            {"metastable_atom_seconds", b.metastable_atom_seconds}};
}

inline json to_json(const PulseSchedule& s, const NoiseParams& noise) {
    json segs = json::array();
    for (const auto& g : s.segments) {
        json targets = json::array();
        for (const auto& t : g.pulse.target_sites)
            targets.push_back(to_json(t));
        segs.push_back({{"label", g.label},
                        {"transition", to_string(g.pulse.transition)},
                        {"gradient", to_json(g.gradient)},
                        {"rabi_hz", g.pulse.rabi_rad_s / constants::two_pi},
                        {"detuning_hz", g.pulse.detuning_rad_s / constants::two_pi},
                        {"phase_rad", g.pulse.phase_rad},
                        {"pulse_duration_s", g.pulse.duration_s},
                        {"segment_duration_s", g.duration_s},
                        {"shape", to_string(g.pulse.shape)},
                        {"branches", to_string(g.pulse.branches)},
                        {"target_sites", targets},
                        {"metastable_atom_seconds", g.metastable_atom_seconds}});
    }
    json sites = json::array();
    for (const auto& a : s.active_sites)
        sites.push_back(to_json(a));
    return {{"n_atoms", s.n_atoms},
            {"active_sites", sites},
            {"reference_field_gauss", s.reference_field_tesla / constants::gauss},
            {"total_duration_s", s.total_duration_s()},
            {"reported_infidelity", s.reported_infidelity},
            {"decoherence_budget", to_json(decoherence_budget(s, noise))},
            {"segments", segs}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// -------------------------------------------------------------- pipeline

/// Gradient used by a scenario: explicit gradients if any were given, else planned.
inline GradientConfig scenario_gradient(const Scenario& s, const AtomParams& p) {
    if (s.gradient_given)
        return s.gradient;
    PlanOptions po;
    po.bias_tesla = s.gradient.bias_tesla;
    po.safety_factor = s.gradient.safety_factor;
    return plan_gradients(s.geometry, s.plan_gap_hz.value_or(1e3), p, po);
}

inline AtomParams scenario_params(const Scenario& s) {
    if (s.calibrate_delta1_hz)
        return calibrate_hyperfine_a(s.params, *s.calibrate_delta1_hz, s.calibrate_field_gauss * constants::gauss);
    return s.params;
}

inline TransferOptions scenario_transfer(const Scenario& s) {
    TransferOptions t;
    t.duration_s = s.transfer_duration_s;
    t.shape = s.transfer_shape;
    return t;
}

inline json plan_json(const LatticeGeometry& geom, const GradientConfig& cfg, const AtomParams& p) {
    const auto v = validate_gradients(geom, cfg);
    const auto map = resonance_map(geom, cfg, p, default_addressed_transition(p));
    const auto t = default_addressed_transition(p);
    json j = to_json(cfg);
    j["n_x"] = geom.n_x;
    j["n_y"] = geom.n_y;
    j["n_z"] = geom.n_z;
    j["ordering_condition"] = v.ordering_condition;
    j["ordering_condition_strict"] = v.ordering_condition_strict;
    j["fields_unique"] = v.fields_unique;
    j["min_field_difference_gauss"] = v.min_field_difference_tesla / constants::gauss;
    j["min_gap_hz"] = map.min_gap_hz;
    j["addressed_slope_hz_per_gauss"] =
        transition_slope_hz_per_tesla(p, t.two_mi, t.excited, cfg.bias_tesla) * constants::gauss;
    j["field_range_gauss"] = field_range_tesla(geom, cfg) / constants::gauss;
    return j;
}

inline json ddi_json(const Scenario& s, const AtomParams& p) {
    const auto moments = auxiliary_qubit_moments(p);
    const auto pl = pair_levels(s.ddi_spacing_m, s.ddi_theta_rad, moments);
    const double mb = 3.0 * constants::bohr_magneton;
    const double mn = p.nuclear_moment_mu_n * constants::nuclear_magneton;
    const double k = dipole_coupling_per_moment2(s.ddi_spacing_m, s.ddi_theta_rad);
    return {{"spacing_m", s.ddi_spacing_m},
            {"theta_rad", s.ddi_theta_rad},
            {"electronic_3_bohr_pair_hz", k * mb * mb},
            {"nuclear_pair_hz", k * mn * mn},
            {"auxiliary_moment_bohr", moments.one / constants::bohr_magneton},
            {"pair_levels_hz", pl.levels_hz},
            {"shift_10_11_vs_00_01_hz", pl.shift_10_11_vs_00_01_hz},
            {"convention", "single pair; secular (Ising) coupling"}};
}

inline Artifacts simulate_artifacts(const Scenario& s, const AtomParams& p, const GradientConfig& cfg) {
    Artifacts out;
    const Site s0{0, 0, 0};
    {
        RegisterState reg(s.geometry, {s0}, p, cfg.bias_tesla);
        reg.amplitudes().setZero();
        reg.amplitudes()(idx(Level::EMinus3)) = 1.0;
        SingleQubitGateOptions o;
        o.gradient = cfg;
        auto rep = single_qubit_gate(reg, s0, s.rotation_angle_rad, 0.0, s.gate_field_gauss * constants::gauss,
                                     constants::two_pi * s.ladder_rabi_hz, s.noise, o);
        GradientConfig gate_cfg = cfg;
        gate_cfg.bias_tesla = s.gate_field_gauss * constants::gauss;
        const auto drv = calibrate_three_photon_drive(p, site_field(s.geometry, gate_cfg, s0),
                                                      constants::two_pi * s.ladder_rabi_hz);
        const auto osc = simulate_ladder_oscillation(drv);
        rep.values["simulated_pi_time_s"] = osc.pi_time_s;
        rep.values["simulated_peak_transfer"] = osc.peak_transfer;
        rep.values["simulated_leakage_at_pi"] = osc.leakage;
        out["gate_report.json"] = dump(to_json(rep));
    }
    std::optional<Site> partner;
    bool axial = false;
    if (s.geometry.n_z > 1) {
        partner = Site{0, 0, 1};
        axial = true;
    } else if (s.geometry.n_x > 1) {
        partner = Site{1, 0, 0};
    }
    if (partner) {
        auto reg = RegisterState::product(s.geometry, {s0, *partner}, p, cfg.bias_tesla,
                                          {RegisterState::basis(Level::EPlus3), RegisterState::basis(Level::EMinus3)});
        CnotOptions o;
        o.gradient = cfg;
        o.allow_non_axial = !axial;
        if (s.cnot_rabi_hz)
            o.pulse_rabi_rad_s = constants::two_pi * *s.cnot_rabi_hz;
        auto rep = cnot(reg, s0, *partner, s.noise, o);
        out["cnot_report.json"] = dump(to_json(rep));
    }
    return out;
}

inline Artifacts compile_artifacts(const Scenario& s, const AtomParams& p, const GradientConfig& cfg) {
    if (s.circuit_path.empty())
        throw ConfigError("compile needs key 'circuit_path'");
    const auto circuit = parse_circuit_file(s.circuit_path);
    CompileOptions co;
    co.gradient = cfg;
    co.gate_field_tesla = s.gate_field_gauss * constants::gauss;
    co.ladder_rabi_rad_s = constants::two_pi * s.ladder_rabi_hz;
    co.transfer = scenario_transfer(s);
    if (s.cnot_rabi_hz)
        co.cnot_rabi_rad_s = constants::two_pi * *s.cnot_rabi_hz;
    const auto sched = compile_circuit(circuit, s.geometry, p, s.noise, co);
    Artifacts out;
    out["schedule.json"] = dump(to_json(sched, s.noise));
    if (sched.n_atoms == 0)
        return out;

    auto reg = initial_register(sched, s.geometry, p);
    const auto run = run_schedule(sched, reg, s.noise, s.seed);
    json atoms = json::array();
    static const char* names[] = {"g_minus", "g_plus", "e_m3", "e_m1", "e_p1", "e_p3", "lost"};
    for (int a = 0; a < reg.n_atoms(); ++a) {
        json pops;
        for (int l = 0; l < kLevels; ++l)
            pops[names[l]] = reg.population(a, static_cast<Level>(l));
        atoms.push_back({{"site", to_json(reg.sites()[a])}, {"populations", pops}});
    }
    json det = json::array();
    for (const auto& d : run.detections)
        det.push_back(to_json(d));
    out["run.json"] = dump({{"duration_s", run.duration_s},
                            {"norm_squared", reg.norm2()},
                            {"leaked", reg.leaked()},
                            {"leaked_by_channel", reg.leaked_by_channel()},
                            {"atoms", atoms},
                            {"detections", det}});
    return out;
}

/// Runs one pipeline step; returns its artifacts.
inline Artifacts run_step(const std::string& step, const Scenario& s) {
    const AtomParams p = scenario_params(s);
    Artifacts out;
    if (step == "levels") {
        out["levels.csv"] = emit_levels(p, s.levels_field_gauss);
    } else if (step == "detunings") {
        out["detunings.csv"] = emit_detuning_curves(p, s.sweep_b_min_gauss, s.sweep_b_max_gauss, s.sweep_steps);
    } else if (step == "ddi") {
        out["ddi.json"] = dump(ddi_json(s, p));
    } else if (step == "address") {
        out["spectrum.csv"] = emit_addressing_spectrum(s.geometry, scenario_gradient(s, p), p);
    } else if (step == "plan") {
        out["plan.json"] = dump(plan_json(s.geometry, scenario_gradient(s, p), p));
    } else if (step == "feasibility") {
        FeasibilityInputs in;
        in.params = p;
        in.pi_time_s = s.pi_time_s;
        in.depth_recoils = s.lattice_depth_recoils;
        in.operation_time_s = s.operation_time_s;
        in.bias_tesla = s.gradient.bias_tesla;
        in.plan_gap_hz = s.plan_gap_hz.value_or(in.plan_gap_hz);
        out["feasibility.json"] = dump(to_json(feasibility_report(in)));
    } else if (step == "simulate") {
        out = simulate_artifacts(s, p, scenario_gradient(s, p));
    } else if (step == "compile") {
        out = compile_artifacts(s, p, scenario_gradient(s, p));
    } else {
        throw ConfigError("unknown pipeline step '" + step + "'");
    }
    return out;
}

inline Artifacts run_pipeline(const Scenario& s) {
    validate_scenario(s);
    if (s.pipeline.empty())
        throw ConfigError("scenario has an empty pipeline");
    Artifacts all;
    for (const auto& step : s.pipeline)
        for (auto& [name, content] : run_step(step, s))
            all[name] = std::move(content);
    return all;
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

inline std::string manifest(const Artifacts& a) {
    json files = json::array();
    for (const auto& [name, content] : a)
        files.push_back({{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    return dump({{"files", files}});
}

/// Writes every artifact plus manifest.json into `dir`.
inline void write_artifacts(const std::string& dir, const Artifacts& a) {
    std::filesystem::create_directories(dir);
    auto put = [&](const std::string& name, const std::string& content) {
        std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
        if (!f)
            throw ConfigError("cannot write '" + name + "' in '" + dir + "'");
        f << content;
    };
    for (const auto& [name, content] : a)
        put(name, content);
    put("manifest.json", manifest(a));
}

/// Loads, runs and writes a scenario. Nothing is written if any step fails.
inline Artifacts run_scenario(const std::string& path, const std::string& output_dir_override = {}) {
    const Scenario s = load_scenario(path);
    const Artifacts a = run_pipeline(s);
    const std::string dir = !output_dir_override.empty() ? output_dir_override : s.output_dir;
    if (dir.empty())
        throw ConfigError("scenario has no 'output_dir'");
    write_artifacts(dir, a);
    return a;
}

} // namespace ybqc
