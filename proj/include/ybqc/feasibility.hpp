#pragma once

// Experimental parameters derived from first principles, checked against the
// published targets.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ybqc/atomic_structure.hpp"
#include "ybqc/band_structure.hpp"
#include "ybqc/constants.hpp"
#include "ybqc/dipole_interaction.hpp"
#include "ybqc/errors.hpp"
#include "ybqc/lattice_addressing.hpp"
#include "ybqc/pulse.hpp"

namespace ybqc {

/// I_sat = pi h c Gamma / (3 lambda^3), Gamma = 2 pi * linewidth.
inline double saturation_intensity(double linewidth_hz, double wavelength_m) {
    const double gamma = constants::two_pi * linewidth_hz;
    return constants::pi * constants::planck * constants::speed_of_light * gamma /
           (3.0 * wavelength_m * wavelength_m * wavelength_m);
}

/// Intensity for a resonant pi pulse of length t_pi: I = 2 I_sat (Omega / Gamma)^2.
inline double pi_pulse_intensity(double t_pi_s, double linewidth_hz, double wavelength_m) {
    if (!(t_pi_s > 0.0) || !(linewidth_hz > 0.0) || !(wavelength_m > 0.0))
        throw DomainError("pi-pulse intensity needs positive t_pi, linewidth and wavelength");
    const double omega = constants::pi / t_pi_s;
    const double gamma = constants::two_pi * linewidth_hz;
    return 2.0 * saturation_intensity(linewidth_hz, wavelength_m) * (omega / gamma) * (omega / gamma);
}

/// Rabi frequency reached at intensity I on a line of the given width.
inline double rabi_from_intensity(double intensity, double linewidth_hz, double wavelength_m) {
    const double gamma = constants::two_pi * linewidth_hz;
    return gamma * std::sqrt(intensity / (2.0 * saturation_intensity(linewidth_hz, wavelength_m)));
}

inline double recoil_energy_j(const AtomParams& p) {
    const double l = p.wavelength_lattice_m;
    return constants::planck * constants::planck / (2.0 * p.mass_kg * l * l);
}

inline double joules_to_microkelvin(double e) { return e / constants::boltzmann * 1e6; }

struct LatticeDepthReport {
    double depth_recoils = 0.0;
    double recoil_energy_j = 0.0;
    double recoil_energy_uk = 0.0;
    double depth_uk = 0.0;
    double band_width_recoils = 0.0;
    double tunneling_hz = 0.0;          // J / h from the band calculation
    double tunneling_deep_hz = 0.0;     // deep-lattice asymptote
    double hold_time_s = 0.0;
    double hold_survival = 1.0;         // exp(-tunneling_hz * hold_time)
    bool no_lattice = false;
};

inline LatticeDepthReport lattice_depth_report(double depth_recoils, const AtomParams& p, double hold_time_s = 5.0) {
    if (depth_recoils < 0.0)
        throw DomainError("lattice depth must be >= 0");
    LatticeDepthReport r;
    r.depth_recoils = depth_recoils;
    r.recoil_energy_j = recoil_energy_j(p);
    r.recoil_energy_uk = joules_to_microkelvin(r.recoil_energy_j);
    r.depth_uk = depth_recoils * r.recoil_energy_uk;
    r.band_width_recoils = lowest_band_width(depth_recoils);
    const double er_hz = r.recoil_energy_j / constants::planck;
    r.tunneling_hz = r.band_width_recoils / 4.0 * er_hz;
    r.tunneling_deep_hz = depth_recoils > 0.0 ? tunneling_energy_deep(depth_recoils) * er_hz : 0.0;
    r.no_lattice = depth_recoils == 0.0;
    r.hold_time_s = hold_time_s;
    r.hold_survival = std::exp(-r.tunneling_hz * hold_time_s);
    return r;
}

/// Photon scattering rate (1/s) of a 1S0 atom in a lattice of the given depth,
/// two-level estimate on the 1S0-1P1 line in the rotating-wave approximation:
/// Gamma_sc = (Gamma / |Delta|) U / hbar.
inline double scattering_rate(double depth_uk, const AtomParams& p) {
    if (!(depth_uk > 0.0))
        throw DomainError("scattering rate needs a positive depth");
    const double gamma = 1.0 / p.lifetime_1p1_s;
    const double w0 = constants::two_pi * constants::speed_of_light / p.wavelength_1s0_1p1_m;
    const double wl = constants::two_pi * constants::speed_of_light / p.wavelength_lattice_m;
    const double u = depth_uk * 1e-6 * constants::boltzmann;
    return gamma / std::abs(wl - w0) * u / constants::hbar;
}

struct BiasFieldVerdict {
    double bias_tesla = 0.0;
    double field_range_tesla = 0.0; // max - min site field over the lattice
    double safety_factor = 0.0;
    double margin = 0.0;            // B0 / (safety * range); > 1 passes
    bool safety_ok = false;
    bool ordering_ok = false;       // n_x Gx <= Gy
    bool pass = false;
};

inline BiasFieldVerdict bias_field_check(const LatticeGeometry& geom, const GradientConfig& cfg) {
    BiasFieldVerdict v;
    v.bias_tesla = cfg.bias_tesla;
    v.safety_factor = cfg.safety_factor;
    v.field_range_tesla = field_range_tesla(geom, cfg);
    const double need = cfg.safety_factor * v.field_range_tesla;
    v.safety_ok = cfg.bias_tesla > 0.0 && cfg.bias_tesla > need;
    v.margin = need > 0.0 ? cfg.bias_tesla / need : (cfg.bias_tesla > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    v.ordering_ok = validate_gradients(geom, cfg).ordering_condition;
    v.pass = v.safety_ok && v.ordering_ok;
    return v;
}

struct DecoherenceBudget {
    double survival = 1.0;
    std::map<std::string, double> channel_survival; // same channel names as the engine
    double total_time_s = 0.0;
    double metastable_atom_seconds = 0.0;
};

/// Survival over a schedule: 3P2 decay over the atom-time spent in 3P2, lattice
/// scattering and tunnelling over the total time for every atom.
inline DecoherenceBudget decoherence_budget(const PulseSchedule& schedule, const NoiseParams& noise) {
    DecoherenceBudget b;
    b.total_time_s = schedule.total_duration_s();
    for (const auto& s : schedule.segments)
        b.metastable_atom_seconds += s.metastable_atom_seconds;
    const double atom_time = schedule.n_atoms * b.total_time_s;
    b.channel_survival["3p2_decay"] = std::exp(-noise.decay_rate_3p2() * b.metastable_atom_seconds);
    b.channel_survival["lattice_scattering"] = std::exp(-noise.scattering_rate() * atom_time);
    b.channel_survival["tunneling"] = std::exp(-noise.tunneling_rate() * atom_time);
    for (const auto& [k, v] : b.channel_survival)
        b.survival *= v;
    return b;
}

// ------------------------------------------------------------------ report

struct FeasibilityItem {
    std::string quantity;
    double computed = 0.0;
    std::optional<double> target;
    double tolerance = 0.0;
    std::string tolerance_kind; // "relative", "factor" or "none"
    std::optional<bool> pass;
    std::string note;
};

inline FeasibilityItem check_item(std::string quantity, double computed, double target, double tol,
                                  std::string kind, std::string note = {}) {
    FeasibilityItem it{std::move(quantity), computed, target, tol, std::move(kind), std::nullopt, std::move(note)};
    if (it.tolerance_kind == "relative")
        it.pass = std::abs(computed - target) <= tol * std::abs(target);
    else if (it.tolerance_kind == "factor")
        it.pass = std::abs(computed) <= tol * std::abs(target) && std::abs(computed) * tol >= std::abs(target);
    return it;
}

inline FeasibilityItem info_item(std::string quantity, double computed, std::string note) {
    return {std::move(quantity), computed, std::nullopt, 0.0, "none", std::nullopt, std::move(note)};
}

struct FeasibilityInputs {
    AtomParams params;
    double pi_time_s = 100e-6;
    double depth_recoils = 50.0;
    double operation_time_s = 5.0;
    double plan_gap_hz = 1e3;
    double bias_tesla = 100.0 * constants::gauss;
    LatticeGeometry plane{10, 10, 1};
    LatticeGeometry volume{10, 10, 10};
};

struct FeasibilityReport {
    double pi_pulse_intensity_w_per_m2 = 0.0;
    LatticeDepthReport lattice;
    double scattering_rate_hz = 0.0;
    BiasFieldVerdict bias;
    GradientConfig plane_gradients;
    std::vector<FeasibilityItem> items;

    bool all_pass() const {
        for (const auto& it : items)
            if (it.pass && !*it.pass)
                return false;
        return true;
    }
};

inline FeasibilityReport feasibility_report(const FeasibilityInputs& in = {}) {
    const auto& p = in.params;
    FeasibilityReport r;
    r.pi_pulse_intensity_w_per_m2 = pi_pulse_intensity(in.pi_time_s, p.linewidth_1s0_3p2_hz, p.wavelength_1s0_3p2_m);
    r.lattice = lattice_depth_report(in.depth_recoils, p, in.operation_time_s);
    r.scattering_rate_hz = r.lattice.depth_uk > 0.0 ? scattering_rate(r.lattice.depth_uk, p) : 0.0;

    PlanOptions po;
    po.bias_tesla = in.bias_tesla;
    r.plane_gradients = plan_gradients(in.plane, in.plan_gap_hz, p, po);
    const auto volume_cfg = plan_gradients(in.volume, in.plan_gap_hz, p, po);
    r.bias = bias_field_check(in.volume, volume_cfg);

    const double gcm = constants::gauss_per_cm;
    r.items.push_back(check_item("pi_pulse_intensity_w_per_m2", r.pi_pulse_intensity_w_per_m2, 4.82e4, 0.2,
                                 "relative"));
    r.items.push_back(info_item("recoil_energy_uk", r.lattice.recoil_energy_uk, "h^2/(2 m lambda_lattice^2)"));
    r.items.push_back(check_item("lattice_depth_uk", r.lattice.depth_uk, 10.0, 0.15, "relative"));
    r.items.push_back(info_item("tunneling_rate_hz", r.lattice.tunneling_hz, "lowest Mathieu band, J = W/4"));
    r.items.push_back(check_item("scattering_rate_hz", r.scattering_rate_hz, 0.2, 3.0, "factor"));
    r.items.push_back(check_item("gradient_x_gauss_per_cm", r.plane_gradients.gx_tesla_per_m / gcm, 10.0, 0.25,
                                 "relative"));
    r.items.push_back(check_item("gradient_y_gauss_per_cm", r.plane_gradients.gy_tesla_per_m / gcm, 100.0, 0.25,
                                 "relative"));
    r.items.push_back(check_item("gradient_z_gauss_per_cm", r.plane_gradients.gz_tesla_per_m / gcm, 100.0, 0.25,
                                 "relative", "single plane: layer-selection gradient"));
    FeasibilityItem bias = info_item("bias_field_margin_1000_sites", r.bias.margin,
                                     "B0 / (safety factor * gradient field range), 10x10x10 plan");
    bias.pass = r.bias.pass;
    r.items.push_back(bias);
    const double survive = std::exp(-r.scattering_rate_hz * in.operation_time_s);
    r.items.push_back(info_item("scattering_survival_over_operation_time", survive,
                                "exp(-rate * " + std::to_string(in.operation_time_s) +
                                    " s); several seconds of operation are claimed available"));
    return r;
}

inline nlohmann::json to_json(const FeasibilityItem& it) {
    nlohmann::json j;
    j["quantity"] = it.quantity;
    j["computed"] = it.computed;
    j["target"] = it.target ? nlohmann::json(*it.target) : nlohmann::json(nullptr);
    j["tolerance"] = it.tolerance;
    j["tolerance_kind"] = it.tolerance_kind;
    j["pass"] = it.pass ? nlohmann::json(*it.pass) : nlohmann::json(nullptr);
    if (!it.note.empty())
        j["note"] = it.note;
    return j;
}

inline nlohmann::json to_json(const FeasibilityReport& r) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : r.items)
        items.push_back(to_json(it));
    return {{"items", items}, {"all_pass", r.all_pass()}};
}

} // namespace ybqc
